//! Mauldin-Williams systems: a validated graph, a box-modeled compact space
//! per vertex, and an affine contraction per edge.
//!
//! The edge map convention runs against the edge direction: edge `e` carries
//! `phi_e` from the space at `r(e)` to the space at `s(e)`, and a path
//! `alpha = e_1 .. e_k` composes as `phi_{e_1} . ... . phi_{e_k}` (innermost
//! map first). Much of the iterated-function-system literature orients maps
//! the other way; all bounds in this crate assume this convention.
//!
//! The unique invariant list is approximated by iterating the Hutchinson
//! operator on point clouds with greedy thinning at radius `eps`; each run
//! reports its final one-step displacement and the certified distance bound
//! `residual/(1-c) + eps/(1-c)` to the true invariant list.

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use serde::Deserialize;

use crate::affine::{geom_pow, AffineMap};
use crate::graph::{EdgeId, Graph, Path, Severity, ValidationReport, VertexId};
use crate::lip::{parse_expr, LipFamily, LipFunction};
use crate::metric::{
    box_contains, box_diameter, box_net, hausdorff_distance, BoundingBox, PointCloud,
};
use crate::rng::Xoshiro256pp;
use crate::{Error, Result};

const BOX_TOL: f64 = 1e-9;

/// The compact space at a vertex: a bounding box and a seed net inside it.
#[derive(Debug, Clone)]
pub struct Space {
    bounds: BoundingBox,
    seed: PointCloud,
}

impl Space {
    /// The bounding box.
    pub fn bounds(&self) -> &BoundingBox {
        &self.bounds
    }

    /// The seed net used to start iterations.
    pub fn seed(&self) -> &PointCloud {
        &self.seed
    }
}

/// A Mauldin-Williams system over a finite directed graph.
#[derive(Debug, Clone)]
pub struct MWGraph {
    graph: Graph,
    spaces: Vec<Space>,
    maps: Vec<AffineMap>,
    ratio: f64,
}

impl MWGraph {
    /// Assembles a system from a graph, per-vertex spaces and per-edge maps.
    ///
    /// Structural requirements (dimension agreement, full coverage) are hard
    /// errors here; admissibility (contraction, box containment, no sinks or
    /// sources) is checked by [`MWGraph::validate`] which reports findings.
    pub fn from_parts(
        graph: Graph,
        spaces: BTreeMap<String, (BoundingBox, Option<f64>)>,
        maps: BTreeMap<String, AffineMap>,
    ) -> Result<Self> {
        let mut space_vec = Vec::with_capacity(graph.vertex_count());
        for v in graph.vertices() {
            let name = graph.vertex_name(v);
            let (bounds, step) = spaces
                .get(name)
                .ok_or_else(|| Error::InvalidSystem(format!("no space for vertex {name}")))?;
            let default_step = bounds.iter().map(|iv| iv[1] - iv[0]).fold(0.0f64, f64::max);
            let seed = box_net(bounds, step.unwrap_or(default_step))?;
            space_vec.push(Space {
                bounds: bounds.clone(),
                seed,
            });
        }
        if spaces.len() != graph.vertex_count() {
            return Err(Error::InvalidSystem(
                "space table names an unknown vertex".into(),
            ));
        }

        let mut map_vec = Vec::with_capacity(graph.edge_count());
        for e in graph.edge_ids() {
            let name = graph.edge_name(e);
            let map = maps
                .get(name)
                .ok_or_else(|| Error::InvalidSystem(format!("no map for edge {name}")))?;
            let dom = &space_vec[graph.range(e).0].bounds;
            let cod = &space_vec[graph.source(e).0].bounds;
            if map.dim_in() != dom.len() {
                return Err(Error::DimensionMismatch(map.dim_in(), dom.len()));
            }
            if map.dim_out() != cod.len() {
                return Err(Error::DimensionMismatch(map.dim_out(), cod.len()));
            }
            map_vec.push(map.clone());
        }
        if maps.len() != graph.edge_count() {
            return Err(Error::InvalidSystem(
                "map table names an unknown edge".into(),
            ));
        }

        let ratio = map_vec
            .iter()
            .map(AffineMap::certified_ratio)
            .fold(0.0, f64::max);
        Ok(MWGraph {
            graph,
            spaces: space_vec,
            maps: map_vec,
            ratio,
        })
    }

    /// Loads a system description from JSON text. Top-level keys: `vertices`,
    /// `edges` (`id`, `s`, `r`, `map {A, b}`), `spaces` (per vertex: `box`,
    /// optional `step`). Unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SystemFile = serde_json::from_str(text)?;
        let graph = Graph::new(
            file.vertices,
            file.edges
                .iter()
                .map(|e| (e.id.clone(), e.s.clone(), e.r.clone()))
                .collect(),
        )?;
        let mut maps = BTreeMap::new();
        for e in file.edges {
            let map = AffineMap::new(e.map.a, e.map.b)?;
            if maps.insert(e.id.clone(), map).is_some() {
                return Err(Error::MalformedGraph(format!("duplicate edge id {}", e.id)));
            }
        }
        let spaces = file
            .spaces
            .into_iter()
            .map(|(v, s)| (v, (s.bounds, s.step)))
            .collect();
        MWGraph::from_parts(graph, spaces, maps)
    }

    /// Loads a system description file.
    pub fn from_file(path: impl AsRef<FsPath>) -> Result<Self> {
        MWGraph::from_json(&std::fs::read_to_string(path)?)
    }

    /// The underlying graph.
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// The space at a vertex.
    pub fn space(&self, v: VertexId) -> &Space {
        &self.spaces[v.0]
    }

    /// The bounding box at a vertex.
    pub fn bounds(&self, v: VertexId) -> &BoundingBox {
        &self.spaces[v.0].bounds
    }

    /// The contraction attached to an edge (from the space at `r(e)` to the
    /// space at `s(e)`).
    pub fn map(&self, e: EdgeId) -> &AffineMap {
        &self.maps[e.0]
    }

    /// Global certified ratio `c`: the maximum per-edge certified ratio.
    pub fn global_ratio(&self) -> f64 {
        self.ratio
    }

    /// `D`: the largest box diameter over the vertices.
    pub fn space_diameter(&self) -> f64 {
        self.spaces
            .iter()
            .map(|s| box_diameter(&s.bounds))
            .fold(0.0, f64::max)
    }

    /// Admissibility check: every edge strictly contracting, every edge image
    /// box inside its codomain box, no sinks and no sources. The certified
    /// global ratio is reported as an informational finding.
    pub fn validate(&self) -> ValidationReport {
        self.validate_inner(true)
    }

    /// Like [`MWGraph::validate`] but tolerating sources. The no-sources
    /// requirement is only needed for the edge-indexed module structure; the
    /// state-space dynamics remain well defined with sources present.
    pub fn validate_relaxed(&self) -> ValidationReport {
        self.validate_inner(false)
    }

    fn validate_inner(&self, require_no_sources: bool) -> ValidationReport {
        let mut report = ValidationReport::default();
        for e in self.graph.edge_ids() {
            let map = &self.maps[e.0];
            if map.certified_ratio() >= 1.0 {
                report.push(
                    Severity::Error,
                    format!(
                        "not a contraction: edge {} has certified ratio {}",
                        self.graph.edge_name(e),
                        map.certified_ratio()
                    ),
                );
            }
            let domain = &self.spaces[self.graph.range(e).0].bounds;
            let codomain = &self.spaces[self.graph.source(e).0].bounds;
            match map.image_box(domain) {
                Ok(image) => {
                    let escapes = image.iter().zip(codomain).any(|(img, target)| {
                        img[0] < target[0] - BOX_TOL || img[1] > target[1] + BOX_TOL
                    });
                    if escapes {
                        report.push(
                            Severity::Error,
                            format!(
                                "edge {}: image escapes the box at {}",
                                self.graph.edge_name(e),
                                self.graph.vertex_name(self.graph.source(e))
                            ),
                        );
                    }
                }
                Err(err) => report.push(
                    Severity::Error,
                    format!("edge {}: {err}", self.graph.edge_name(e)),
                ),
            }
        }
        for finding in self.graph.validate().findings {
            if require_no_sources || !finding.message.starts_with("source") {
                report.findings.push(finding);
            }
        }
        report.push(
            Severity::Info,
            format!("certified contraction ratio c = {}", self.ratio),
        );
        report
    }

    /// Image of a cloud under one edge map. The input must lie in the box at
    /// `r(e)`; the output resolution scales by the certified ratio.
    pub fn apply_map(&self, e: EdgeId, cloud: &PointCloud) -> Result<PointCloud> {
        let domain = &self.spaces[self.graph.range(e).0].bounds;
        if cloud.dim() != domain.len() {
            return Err(Error::DimensionMismatch(cloud.dim(), domain.len()));
        }
        for p in cloud.points() {
            if !box_contains(domain, p, BOX_TOL) {
                return Err(Error::OutOfBox(format!(
                    "{p:?} not in the box at {}",
                    self.graph.vertex_name(self.graph.range(e))
                )));
            }
        }
        let map = &self.maps[e.0];
        let points = cloud
            .points()
            .iter()
            .map(|p| map.apply(p))
            .collect::<Result<Vec<_>>>()?;
        PointCloud::new(
            map.dim_out(),
            points,
            map.certified_ratio() * cloud.resolution(),
        )
    }

    /// The composed affine map of a path, `phi_{e_1} . ... . phi_{e_k}`,
    /// folded innermost-first. Its certified ratio is the product of the
    /// per-edge certified ratios.
    pub fn path_map(&self, path: &Path) -> AffineMap {
        let edges = path.edges();
        let mut acc = self.maps[edges.last().unwrap().0].clone();
        for e in edges[..edges.len() - 1].iter().rev() {
            acc = self.maps[e.0]
                .compose(&acc)
                .expect("path dims agree by construction");
        }
        acc
    }

    /// Precomposes a scalar field at `s(path)` with the path map, yielding a
    /// field on the box at `r(path)` with certified constant
    /// `c_f * prod(ratio(e_i))`.
    pub fn lip_compose(&self, f: &LipFunction, path: &Path) -> Result<LipFunction> {
        let expected = &self.spaces[path.source().0].bounds;
        if f.domain() != expected {
            return Err(Error::InvalidArgument(
                "function must be declared on the box at s(path)".into(),
            ));
        }
        f.precompose(
            &self.path_map(path),
            self.spaces[path.range().0].bounds.clone(),
        )
    }

    /// Evaluates the coding map at a finite path: the image of the anchor at
    /// `r(path)` under the path map, together with the certified bound
    /// `c^k * D` on its distance to the true coding point.
    pub fn coding_point(
        &self,
        path: &Path,
        anchors: &BTreeMap<VertexId, Vec<f64>>,
    ) -> Result<(Vec<f64>, f64)> {
        let v = path.range();
        let anchor = anchors.get(&v).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no anchor for vertex {}",
                self.graph.vertex_name(v)
            ))
        })?;
        if !box_contains(&self.spaces[v.0].bounds, anchor, BOX_TOL) {
            return Err(Error::OutOfBox(format!(
                "anchor {anchor:?} not in the box at {}",
                self.graph.vertex_name(v)
            )));
        }
        let point = self.path_map(path).apply(anchor)?;
        let bound = geom_pow(self.ratio, path.len()) * self.space_diameter();
        Ok((point, bound))
    }

    /// Per-vertex low box corners, a convenient anchor family.
    pub fn anchors_low(&self) -> BTreeMap<VertexId, Vec<f64>> {
        self.graph
            .vertices()
            .map(|v| (v, crate::metric::box_low(&self.spaces[v.0].bounds)))
            .collect()
    }

    /// Per-vertex box centers, a convenient anchor family.
    pub fn anchors_center(&self) -> BTreeMap<VertexId, Vec<f64>> {
        self.graph
            .vertices()
            .map(|v| (v, crate::metric::box_center(&self.spaces[v.0].bounds)))
            .collect()
    }

    /// Fresh approximation seeded by the per-vertex seed nets.
    pub fn seed_approx(&self, eps: f64) -> InvariantListApprox {
        InvariantListApprox {
            clouds: self.spaces.iter().map(|s| s.seed.clone()).collect(),
            residual: f64::INFINITY,
            epsilon: eps,
        }
    }

    /// Fresh approximation seeded by one anchor point per vertex.
    pub fn seed_from_anchors(
        &self,
        anchors: &BTreeMap<VertexId, Vec<f64>>,
        eps: f64,
    ) -> Result<InvariantListApprox> {
        let mut clouds = Vec::with_capacity(self.graph.vertex_count());
        for v in self.graph.vertices() {
            let anchor = anchors.get(&v).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "no anchor for vertex {}",
                    self.graph.vertex_name(v)
                ))
            })?;
            if !box_contains(&self.spaces[v.0].bounds, anchor, BOX_TOL) {
                return Err(Error::OutOfBox(format!(
                    "anchor {anchor:?} outside its box"
                )));
            }
            // A single point covers its box within the box diameter.
            clouds.push(PointCloud::new(
                anchor.len(),
                vec![anchor.clone()],
                box_diameter(&self.spaces[v.0].bounds),
            )?);
        }
        Ok(InvariantListApprox {
            clouds,
            residual: f64::INFINITY,
            epsilon: eps,
        })
    }

    /// One Hutchinson step: at each vertex the union of the edge-map images of
    /// the clouds at the edge ranges, thinned at radius `eps`. The residual is
    /// the largest per-vertex Hausdorff displacement.
    pub fn hutchinson_step(&self, approx: &InvariantListApprox) -> Result<InvariantListApprox> {
        let eps = approx.epsilon;
        let mut clouds = Vec::with_capacity(self.graph.vertex_count());
        let mut residual = 0.0f64;
        for v in self.graph.vertices() {
            let mut points = Vec::new();
            let mut resolution = 0.0f64;
            for &e in self.graph.edges_out(v) {
                let image = self.apply_map(e, &approx.clouds[self.graph.range(e).0])?;
                resolution = resolution.max(image.resolution());
                points.extend_from_slice(image.points());
            }
            if points.is_empty() {
                return Err(Error::InvalidSystem(format!(
                    "sink vertex {} has no incoming images",
                    self.graph.vertex_name(v)
                )));
            }
            let dim = points[0].len();
            let union = PointCloud::new(dim, points, resolution)?;
            let thinned = union.thin_allow_zero(eps)?;
            residual = residual.max(hausdorff_distance(&approx.clouds[v.0], &thinned)?);
            clouds.push(thinned);
        }
        Ok(InvariantListApprox {
            clouds,
            residual,
            epsilon: eps,
        })
    }

    /// Iterates [`MWGraph::hutchinson_step`] from the box-net seeds until the
    /// residual is at most `tol`, at most `max_iter` times.
    pub fn invariant_list(&self, eps: f64, tol: f64, max_iter: usize) -> Result<InvariantRun> {
        self.invariant_list_from(self.seed_approx(eps), tol, max_iter)
    }

    /// Iterates from an explicit starting approximation.
    pub fn invariant_list_from(
        &self,
        seed: InvariantListApprox,
        tol: f64,
        max_iter: usize,
    ) -> Result<InvariantRun> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::InvalidArgument("tolerance must be > 0".into()));
        }
        if max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        let mut approx = seed;
        let mut residuals = Vec::new();
        for iteration in 1..=max_iter {
            approx = self.hutchinson_step(&approx)?;
            residuals.push(approx.residual);
            if approx.residual <= tol {
                let spread = 1.0 - self.ratio;
                let certified_bound = approx.residual / spread + approx.epsilon / spread;
                return Ok(InvariantRun {
                    approx,
                    iterations: iteration,
                    residuals,
                    certified_bound,
                });
            }
        }
        Err(Error::NoConvergence {
            iterations: max_iter,
            residual: approx.residual,
        })
    }

    /// Chaos-game sampler: `n` points of (a `c^depth * D` neighborhood of) the
    /// invariant set at `v`, drawn by walking random admissible paths of depth
    /// `ceil(log tol / log c)` and applying the maps to the box-center anchor
    /// at the far end. Deterministic for a fixed seed. The reported resolution
    /// is the per-sample accuracy `c^depth * D`, not a covering radius.
    pub fn chaos_game(&self, v: VertexId, n: usize, seed: u64, tol: f64) -> Result<PointCloud> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample count must be >= 1".into()));
        }
        if tol.is_nan() || tol <= 0.0 || tol >= 1.0 {
            return Err(Error::InvalidArgument("tol must lie in (0,1)".into()));
        }
        if self.ratio <= 0.0 || self.ratio >= 1.0 {
            return Err(Error::InvalidSystem(
                "system must be strictly contracting".into(),
            ));
        }
        let depth = (tol.ln() / self.ratio.ln()).ceil().max(1.0) as usize;
        let anchors = self.anchors_center();
        let mut rng = Xoshiro256pp::seed_from_u64(seed);
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            let mut path = Vec::with_capacity(depth);
            let mut at = v;
            for _ in 0..depth {
                let out = self.graph.edges_out(at);
                let e = out[rng.next_below(out.len())];
                path.push(e);
                at = self.graph.range(e);
            }
            let mut x = anchors[&at].clone();
            for e in path.iter().rev() {
                x = self.maps[e.0].apply(&x)?;
            }
            points.push(x);
        }
        let accuracy = geom_pow(self.ratio, depth) * self.space_diameter();
        PointCloud::new(self.spaces[v.0].bounds.len(), points, accuracy)
    }

    /// Family with the same constant at every vertex.
    pub fn family_constant(&self, value: f64) -> LipFamily {
        let mut fam = LipFamily::new();
        for v in self.graph.vertices() {
            fam.insert(
                v,
                LipFunction::constant(self.spaces[v.0].bounds.clone(), value),
            );
        }
        fam
    }

    /// Family with coordinate `i` at every vertex.
    pub fn family_coordinate(&self, i: usize) -> Result<LipFamily> {
        let mut fam = LipFamily::new();
        for v in self.graph.vertices() {
            fam.insert(
                v,
                LipFunction::coordinate(self.spaces[v.0].bounds.clone(), i)?,
            );
        }
        Ok(fam)
    }

    /// Family measuring distance to each vertex's box center.
    pub fn family_dist_to_center(&self) -> Result<LipFamily> {
        let mut fam = LipFamily::new();
        for v in self.graph.vertices() {
            let bx = self.spaces[v.0].bounds.clone();
            let center = crate::metric::box_center(&bx);
            fam.insert(v, LipFunction::dist_to(bx, center)?);
        }
        Ok(fam)
    }

    /// Family from one expression applied on every vertex box.
    pub fn family_parse(&self, text: &str) -> Result<LipFamily> {
        let mut fam = LipFamily::new();
        for v in self.graph.vertices() {
            fam.insert(v, parse_expr(text, &self.spaces[v.0].bounds)?);
        }
        Ok(fam)
    }
}

/// A per-vertex family of point clouds approximating the invariant list.
#[derive(Debug, Clone)]
pub struct InvariantListApprox {
    clouds: Vec<PointCloud>,
    residual: f64,
    epsilon: f64,
}

impl InvariantListApprox {
    /// The cloud at a vertex.
    pub fn cloud(&self, v: VertexId) -> &PointCloud {
        &self.clouds[v.0]
    }

    /// All clouds in vertex order.
    pub fn clouds(&self) -> &[PointCloud] {
        &self.clouds
    }

    /// Hausdorff displacement of the last step (infinite before any step).
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Thinning radius in use.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Result of an invariant-list run.
#[derive(Debug, Clone)]
pub struct InvariantRun {
    /// Final approximation.
    pub approx: InvariantListApprox,
    /// Steps taken.
    pub iterations: usize,
    /// Residual after each step, in order.
    pub residuals: Vec<f64>,
    /// Certified Hausdorff bound to the true invariant list:
    /// `residual/(1-c) + eps/(1-c)`.
    pub certified_bound: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    vertices: Vec<String>,
    edges: Vec<EdgeFile>,
    spaces: BTreeMap<String, SpaceFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeFile {
    id: String,
    s: String,
    r: String,
    map: MapFile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    #[serde(rename = "box")]
    bounds: Vec<[f64; 2]>,
    step: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfix::{cantor, double, single_half, twov};

    #[test]
    fn validate_double() {
        let m = double();
        let report = m.validate();
        assert!(report.is_clean());
        assert_eq!(m.global_ratio(), 0.5);
    }

    #[test]
    fn validate_cantor_ratio_is_one_third() {
        let m = cantor();
        assert!(m.validate().is_clean());
        assert_eq!(m.global_ratio(), 1.0 / 3.0);
    }

    #[test]
    fn validate_flags_non_contraction() {
        let graph = Graph::new(vec!["v"], vec![("0", "v", "v")]).unwrap();
        let mut maps = BTreeMap::new();
        maps.insert("0".to_string(), AffineMap::scalar(1.0, 0.0));
        let mut spaces = BTreeMap::new();
        spaces.insert("v".to_string(), (vec![[0.0, 1.0]], None));
        let m = MWGraph::from_parts(graph, spaces, maps).unwrap();
        let report = m.validate();
        assert!(!report.is_clean());
        assert!(report
            .findings
            .iter()
            .any(|f| f.message.starts_with("not a contraction")));
    }

    #[test]
    fn validate_flags_escaping_image() {
        let graph = Graph::new(vec!["v"], vec![("0", "v", "v")]).unwrap();
        let mut maps = BTreeMap::new();
        maps.insert("0".to_string(), AffineMap::scalar(0.5, 0.75));
        let mut spaces = BTreeMap::new();
        spaces.insert("v".to_string(), (vec![[0.0, 1.0]], None));
        let m = MWGraph::from_parts(graph, spaces, maps).unwrap();
        assert!(!m.validate().is_clean());
    }

    #[test]
    fn relaxed_validation_tolerates_sources() {
        let graph = Graph::new(vec!["u", "v"], vec![("a", "u", "v"), ("d", "v", "v")]).unwrap();
        let mut maps = BTreeMap::new();
        maps.insert("a".to_string(), AffineMap::scalar(0.5, 0.0));
        maps.insert("d".to_string(), AffineMap::scalar(0.5, 0.5));
        let mut spaces = BTreeMap::new();
        spaces.insert("u".to_string(), (vec![[0.0, 1.0]], None));
        spaces.insert("v".to_string(), (vec![[0.0, 1.0]], None));
        let m = MWGraph::from_parts(graph, spaces, maps).unwrap();
        assert!(!m.validate().is_clean()); // u is a source
        assert!(m.validate_relaxed().is_clean());
    }

    #[test]
    fn apply_map_examples() {
        let m = double();
        let e0 = m.graph().edge("0").unwrap();
        let cloud = PointCloud::from_scalars(&[0.0, 1.0], 0.0).unwrap();
        let image = m.apply_map(e0, &cloud).unwrap();
        assert_eq!(image.points(), &[vec![0.0], vec![0.5]]);

        let c = cantor();
        let e1 = c.graph().edge("1").unwrap();
        let image = c
            .apply_map(e1, &PointCloud::from_scalars(&[0.0], 0.0).unwrap())
            .unwrap();
        assert_eq!(image.points(), &[vec![2.0 / 3.0]]);
    }

    #[test]
    fn apply_map_rejects_out_of_domain() {
        let m = double();
        let e0 = m.graph().edge("0").unwrap();
        let cloud = PointCloud::from_scalars(&[2.0], 0.0).unwrap();
        assert!(matches!(m.apply_map(e0, &cloud), Err(Error::OutOfBox(_))));
    }

    #[test]
    fn apply_map_scales_resolution() {
        let m = cantor();
        let e0 = m.graph().edge("0").unwrap();
        let cloud = PointCloud::from_scalars(&[0.0, 0.5, 1.0], 0.25).unwrap();
        let image = m.apply_map(e0, &cloud).unwrap();
        assert_eq!(image.resolution(), 0.25 / 3.0);
    }

    #[test]
    fn apply_map_image_covers_true_image_within_resolution() {
        // Dense-grid oracle: phi_e applied to a fine sample of the full box
        // must stay within the scaled resolution of the image of a coarse
        // net whose resolution covers the box.
        let m = cantor();
        let step = 0.125;
        let coarse = crate::metric::box_net(&[[0.0, 1.0]], step).unwrap();
        let dense = crate::metric::box_net(&[[0.0, 1.0]], 1.0 / 4096.0).unwrap();
        for name in ["0", "1"] {
            let e = m.graph().edge(name).unwrap();
            let image = m.apply_map(e, &coarse).unwrap();
            let oracle = m.apply_map(e, &dense).unwrap();
            for p in oracle.points() {
                let nearest = image
                    .points()
                    .iter()
                    .map(|q| (q[0] - p[0]).abs())
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    nearest <= image.resolution() + 1e-12,
                    "point {p:?} at distance {nearest}, resolution {}",
                    image.resolution()
                );
            }
        }
    }

    #[test]
    fn hutchinson_step_lands_in_cantor_arms() {
        let m = cantor();
        let step = m.hutchinson_step(&m.seed_approx(0.0)).unwrap();
        let v = m.graph().vertex("v").unwrap();
        for p in step.cloud(v).points() {
            let x = p[0];
            assert!(
                x <= 1.0 / 3.0 + 1e-12 || x >= 2.0 / 3.0 - 1e-12,
                "point {x} inside the removed middle third"
            );
        }
    }

    #[test]
    fn hutchinson_fixed_point_has_zero_residual() {
        // Single edge x/2 with invariant list {0}.
        let m = single_half();
        let v = m.graph().vertex("v").unwrap();
        let seed = InvariantListApprox {
            clouds: vec![PointCloud::from_scalars(&[0.0], 0.0).unwrap()],
            residual: f64::INFINITY,
            epsilon: 0.0,
        };
        let step = m.hutchinson_step(&seed).unwrap();
        assert_eq!(step.residual(), 0.0);
        assert_eq!(step.cloud(v).points(), &[vec![0.0]]);
    }

    #[test]
    fn hutchinson_from_singleton() {
        let m = single_half();
        let seed = InvariantListApprox {
            clouds: vec![PointCloud::from_scalars(&[1.0], 0.0).unwrap()],
            residual: f64::INFINITY,
            epsilon: 0.0,
        };
        let step = m.hutchinson_step(&seed).unwrap();
        let v = m.graph().vertex("v").unwrap();
        assert_eq!(step.cloud(v).points(), &[vec![0.5]]);
    }

    #[test]
    fn invariant_list_single_contraction_hits_fixed_point() {
        let m = single_half();
        let run = m.invariant_list(1e-6, 1e-9, 100).unwrap();
        let v = m.graph().vertex("v").unwrap();
        assert!(run.approx.residual() <= 1e-9);
        for p in run.approx.cloud(v).points() {
            assert!(p[0].abs() <= 1e-6);
        }
    }

    #[test]
    fn invariant_list_double_covers_interval() {
        let m = double();
        let eps = 1e-3;
        let run = m.invariant_list(eps, 1e-3, 60).unwrap();
        let v = m.graph().vertex("v").unwrap();
        // Dense-grid oracle for the true invariant set [0, 1].
        let n = 1 << 12;
        let dense: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let oracle = PointCloud::from_scalars(&dense, 0.0).unwrap();
        let d = hausdorff_distance(run.approx.cloud(v), &oracle).unwrap();
        let c = m.global_ratio();
        let bound = eps / (1.0 - c) + run.approx.residual() / (1.0 - c) + 2f64.powi(-12);
        assert!(d <= bound, "distance {d} exceeds certified bound {bound}");
    }

    #[test]
    fn invariant_list_residuals_contract() {
        let m = twov();
        let eps = 1e-4;
        let run = m.invariant_list(eps, 1e-6, 200).unwrap();
        let c = m.global_ratio();
        for w in run.residuals.windows(2) {
            assert!(
                w[1] <= c * w[0] + 2.0 * eps + 1e-12,
                "residual step {} -> {} violates contraction",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn invariant_list_reports_non_convergence() {
        let m = double();
        match m.invariant_list(1e-4, 1e-9, 1) {
            Err(Error::NoConvergence {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 1e-9);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn chaos_game_stays_in_box_and_is_deterministic() {
        let m = double();
        let v = m.graph().vertex("v").unwrap();
        let a = m.chaos_game(v, 1000, 7, 1e-6).unwrap();
        for p in a.points() {
            assert!((-1e-12..=1.0 + 1e-12).contains(&p[0]));
        }
        let b = m.chaos_game(v, 1000, 7, 1e-6).unwrap();
        assert_eq!(a.points(), b.points());
        let c = m.chaos_game(v, 1000, 8, 1e-6).unwrap();
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn chaos_game_avoids_middle_third() {
        let m = cantor();
        let v = m.graph().vertex("v").unwrap();
        let cloud = m.chaos_game(v, 1000, 3, 1e-4).unwrap();
        let delta = cloud.resolution();
        for p in cloud.points() {
            let x = p[0];
            assert!(
                !(x > 1.0 / 3.0 + delta && x < 2.0 / 3.0 - delta),
                "sample {x} inside the excluded middle"
            );
        }
    }

    #[test]
    fn chaos_game_rejects_empty_request() {
        let m = double();
        let v = m.graph().vertex("v").unwrap();
        assert!(m.chaos_game(v, 0, 1, 1e-4).is_err());
    }

    #[test]
    fn coding_point_binary_expansion() {
        let m = double();
        let mut edges = vec!["1"];
        edges.extend(std::iter::repeat_n("0", 19));
        let path = m.graph().path_by_names(&edges).unwrap();
        let anchors: BTreeMap<_, _> = m.anchors_low();
        let (point, bound) = m.coding_point(&path, &anchors).unwrap();
        assert_eq!(point, vec![0.5]);
        assert_eq!(bound, 2f64.powi(-20));
    }

    #[test]
    fn coding_point_cantor_fixed_points() {
        let m = cantor();
        let anchors = m.anchors_low();
        for k in [1usize, 5, 12] {
            let zeros = vec!["0"; k];
            let path = m.graph().path_by_names(&zeros).unwrap();
            let (point, _) = m.coding_point(&path, &anchors).unwrap();
            assert_eq!(point, vec![0.0]);

            let ones = vec!["1"; k];
            let path = m.graph().path_by_names(&ones).unwrap();
            let (point, bound) = m.coding_point(&path, &anchors).unwrap();
            // The anchor sits at distance D from the limit, the bound's
            // equality case; 1e-12 absorbs fold rounding.
            assert!((point[0] - 1.0).abs() <= bound + 1e-12);
            assert!(bound <= geom_pow(1.0 / 3.0, k) + 1e-15);
        }
    }

    #[test]
    fn lip_compose_contracts_constant() {
        let m = double();
        let v = m.graph().vertex("v").unwrap();
        let f = LipFunction::coordinate(m.bounds(v).clone(), 0).unwrap();
        for k in 1..=6 {
            let path = m.graph().path_by_names(&vec!["0"; k]).unwrap();
            let composed = m.lip_compose(&f, &path).unwrap();
            assert_eq!(composed.lip(), 2f64.powi(-(k as i32)));
        }
        let konst = LipFunction::constant(m.bounds(v).clone(), 3.0);
        let path = m.graph().path_by_names(&["0", "1"]).unwrap();
        let composed = m.lip_compose(&konst, &path).unwrap();
        assert_eq!(composed.lip(), 0.0);
        assert_eq!(composed.as_const(), Some(3.0));
    }

    #[test]
    fn lip_compose_cantor_edge_one() {
        let m = cantor();
        let v = m.graph().vertex("v").unwrap();
        let f = LipFunction::coordinate(m.bounds(v).clone(), 0).unwrap();
        let path = m.graph().path_by_names(&["1"]).unwrap();
        let g = m.lip_compose(&f, &path).unwrap();
        assert_eq!(g.lip(), 1.0 / 3.0);
        assert_eq!(g.eval(&[0.0]).unwrap(), 2.0 / 3.0);
        assert_eq!(g.eval(&[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn holder_continuity_of_coding() {
        let m = double();
        let anchors = m.anchors_low();
        let g = m.graph();
        let d = m.space_diameter();
        let c = m.global_ratio();
        let mut rng = Xoshiro256pp::seed_from_u64(11);
        for _ in 0..200 {
            let k = 1 + rng.next_below(10);
            let mk = |rng: &mut Xoshiro256pp| {
                let edges: Vec<EdgeId> = (0..k).map(|_| EdgeId(rng.next_below(2))).collect();
                g.path(&edges).unwrap()
            };
            let alpha = mk(&mut rng);
            let beta = mk(&mut rng);
            let lcp = crate::graph::longest_common_prefix(&alpha, &beta).unwrap();
            let (pa, _) = m.coding_point(&alpha, &anchors).unwrap();
            let (pb, _) = m.coding_point(&beta, &anchors).unwrap();
            let dist = (pa[0] - pb[0]).abs();
            assert!(dist <= geom_pow(c, lcp) * d + 1e-12);
        }
    }

    #[test]
    fn coding_points_near_invariant_cloud() {
        let m = cantor();
        let run = m.invariant_list(1e-4, 1e-4, 60).unwrap();
        let anchors = m.anchors_low();
        let g = m.graph();
        let v = m.graph().vertex("v").unwrap();
        let mut rng = Xoshiro256pp::seed_from_u64(5);
        for _ in 0..100 {
            let k = 1 + rng.next_below(12);
            let edges: Vec<EdgeId> = (0..k).map(|_| EdgeId(rng.next_below(2))).collect();
            let path = g.path(&edges).unwrap();
            let (point, bound) = m.coding_point(&path, &anchors).unwrap();
            let nearest = run
                .approx
                .cloud(v)
                .points()
                .iter()
                .map(|p| (p[0] - point[0]).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= bound + run.certified_bound + 1e-12);
        }
    }

    #[test]
    fn json_loader_round_trip() {
        let text = r#"{
            "vertices": ["v"],
            "edges": [
                {"id": "0", "s": "v", "r": "v", "map": {"A": [[0.5]], "b": [0.0]}},
                {"id": "1", "s": "v", "r": "v", "map": {"A": [[0.5]], "b": [0.5]}}
            ],
            "spaces": {"v": {"box": [[0.0, 1.0]], "step": 0.25}}
        }"#;
        let m = MWGraph::from_json(text).unwrap();
        assert!(m.validate().is_clean());
        assert_eq!(m.global_ratio(), 0.5);
        let v = m.graph().vertex("v").unwrap();
        assert_eq!(m.space(v).seed().len(), 5);
    }

    #[test]
    fn json_loader_rejects_unknown_keys() {
        let text = r#"{
            "vertices": ["v"],
            "edges": [{"id": "0", "s": "v", "r": "v", "map": {"A": [[0.5]], "b": [0.0]}}],
            "spaces": {"v": {"box": [[0.0, 1.0]]}},
            "extra": 1
        }"#;
        assert!(MWGraph::from_json(text).is_err());
    }
}
