//! Finite point clouds as computable stand-ins for compact metric spaces.
//!
//! A cloud carries an ambient dimension, its points, and a resolution: a
//! guaranteed covering radius of the compact set it approximates (0 = exact).
//! The ambient metric is Euclidean throughout; distances, diameters and the
//! Hausdorff metric are computed outright in double precision.
//!
//! Brute force is exact and fast enough at desk scale, but the Hutchinson
//! iteration compares clouds of ~1e4 points every step, so nearest-neighbor
//! queries go through a uniform cell grid. The grid only accelerates lookups;
//! results are identical to the brute-force scan.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::{fmt_g17, Error, Result};

/// Axis-aligned box as `[lo, hi]` per dimension.
pub type BoundingBox = Vec<[f64; 2]>;

/// Euclidean distance.
pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean diameter of a box (its main diagonal).
pub fn box_diameter(bx: &[[f64; 2]]) -> f64 {
    bx.iter()
        .map(|iv| (iv[1] - iv[0]) * (iv[1] - iv[0]))
        .sum::<f64>()
        .sqrt()
}

/// Center point of a box.
pub fn box_center(bx: &[[f64; 2]]) -> Vec<f64> {
    bx.iter().map(|iv| 0.5 * (iv[0] + iv[1])).collect()
}

/// Low corner of a box.
pub fn box_low(bx: &[[f64; 2]]) -> Vec<f64> {
    bx.iter().map(|iv| iv[0]).collect()
}

/// Whether `x` lies in the box up to an absolute tolerance per coordinate.
pub fn box_contains(bx: &[[f64; 2]], x: &[f64], tol: f64) -> bool {
    bx.len() == x.len()
        && bx
            .iter()
            .zip(x)
            .all(|(iv, xi)| *xi >= iv[0] - tol && *xi <= iv[1] + tol)
}

/// A nonempty finite set of points with a resolution certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    points: Vec<Vec<f64>>,
    resolution: f64,
}

impl PointCloud {
    /// Builds a cloud, checking dimensions and nonemptiness.
    pub fn new(dim: usize, points: Vec<Vec<f64>>, resolution: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument(
                "point cloud must be nonempty".into(),
            ));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch(points[0].len(), dim));
        }
        if resolution.is_nan() || resolution < 0.0 {
            return Err(Error::InvalidArgument("resolution must be >= 0".into()));
        }
        Ok(PointCloud {
            dim,
            points,
            resolution,
        })
    }

    /// One-dimensional cloud from scalars.
    pub fn from_scalars(xs: &[f64], resolution: f64) -> Result<Self> {
        PointCloud::new(1, xs.iter().map(|&x| vec![x]).collect(), resolution)
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The points, in stored order.
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Clouds are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Guaranteed covering radius of the approximated set.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Maximum pairwise distance (brute force).
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                best = best.max(euclid(p, q));
            }
        }
        best
    }

    /// Greedy epsilon-net in input order: a point is kept iff no previously
    /// kept point lies within `eps`. The result `Q` satisfies
    /// `hausdorff_distance(P, Q) <= eps` and its resolution grows by `eps`.
    pub fn thin(&self, eps: f64) -> Result<PointCloud> {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::InvalidArgument("thinning radius must be > 0".into()));
        }
        self.thin_allow_zero(eps)
    }

    /// Like [`PointCloud::thin`] but also accepts `eps = 0`, which only drops
    /// exact duplicates. Used by the Hutchinson step where `eps = 0` is legal.
    pub fn thin_allow_zero(&self, eps: f64) -> Result<PointCloud> {
        if eps.is_nan() || eps < 0.0 {
            return Err(Error::InvalidArgument(
                "thinning radius must be >= 0".into(),
            ));
        }
        let cell = if eps > 0.0 { eps } else { 1.0 };
        let mut grid = CellGrid::new(self.dim, cell);
        let mut kept: Vec<Vec<f64>> = Vec::new();
        for p in &self.points {
            if !grid.any_within(&kept, p, eps) {
                grid.insert(p, kept.len());
                kept.push(p.clone());
            }
        }
        PointCloud::new(self.dim, kept, self.resolution + eps)
    }

    /// Serializes as CSV: header `x0,..,x{d-1}`, one point per row, every
    /// coordinate with 17 significant digits (round-trips exactly).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "x{i}");
        }
        out.push('\n');
        for p in &self.points {
            for (i, x) in p.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&fmt_g17(*x));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV form produced by [`PointCloud::to_csv`].
    pub fn from_csv(text: &str, resolution: f64) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty csv".into()))?;
        let dim = header.split(',').count();
        let mut points = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let coords = line
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("row {}: {e}", lineno + 2)))
                })
                .collect::<Result<Vec<f64>>>()?;
            points.push(coords);
        }
        PointCloud::new(dim, points, resolution)
    }

    /// Serializes the points as a JSON array of arrays.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.points).expect("serializing f64 arrays cannot fail")
    }

    /// Parses a JSON array of points.
    pub fn from_json(text: &str, resolution: f64) -> Result<Self> {
        let points: Vec<Vec<f64>> = serde_json::from_str(text)?;
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        PointCloud::new(dim, points, resolution)
    }
}

/// Symmetric Hausdorff distance between two clouds of equal dimension.
pub fn hausdorff_distance(e: &PointCloud, f: &PointCloud) -> Result<f64> {
    if e.dim() != f.dim() {
        return Err(Error::DimensionMismatch(e.dim(), f.dim()));
    }
    Ok(directed_hausdorff(e, f).max(directed_hausdorff(f, e)))
}

/// `max_{x in E} min_{y in F} d(x, y)`.
fn directed_hausdorff(e: &PointCloud, f: &PointCloud) -> f64 {
    let index = NearestIndex::build(f.points());
    e.points()
        .iter()
        .map(|p| index.nearest_dist(p))
        .fold(0.0, f64::max)
}

/// Regular grid over a box with spacing at most `step`; interval endpoints are
/// always included so extreme points of seed boxes survive. The resolution is
/// the half-diagonal bound `(step/2) * sqrt(dim)`.
pub fn box_net(bx: &[[f64; 2]], step: f64) -> Result<PointCloud> {
    if bx.is_empty() {
        return Err(Error::InvalidArgument(
            "box must have at least one interval".into(),
        ));
    }
    if step.is_nan() || step <= 0.0 {
        return Err(Error::InvalidArgument("net step must be > 0".into()));
    }
    if bx
        .iter()
        .any(|iv| iv[0].is_nan() || iv[1].is_nan() || iv[0] >= iv[1])
    {
        return Err(Error::InvalidArgument(
            "box intervals must be nondegenerate".into(),
        ));
    }
    let dim = bx.len();
    let axes: Vec<Vec<f64>> = bx
        .iter()
        .map(|iv| {
            let n = ((iv[1] - iv[0]) / step).ceil().max(1.0) as usize;
            (0..=n)
                .map(|i| {
                    if i == n {
                        iv[1]
                    } else {
                        iv[0] + (iv[1] - iv[0]) * (i as f64) / (n as f64)
                    }
                })
                .collect()
        })
        .collect();
    let mut points = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        points.push(idx.iter().enumerate().map(|(d, &i)| axes[d][i]).collect());
        let mut d = dim;
        loop {
            if d == 0 {
                let resolution = 0.5 * step * (dim as f64).sqrt();
                return PointCloud::new(dim, points, resolution);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Incremental uniform cell grid answering "is any inserted point within eps
/// of q". Keys are floor(coord / cell) tuples.
struct CellGrid {
    dim: usize,
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl CellGrid {
    fn new(dim: usize, cell: f64) -> Self {
        CellGrid {
            dim,
            cell,
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|&x| (x / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, p: &[f64], index: usize) {
        self.cells.entry(self.key(p)).or_default().push(index);
    }

    /// Any stored point within Euclidean `eps` of `q`? `store` holds the
    /// coordinates the stored indices refer to.
    fn any_within(&self, store: &[Vec<f64>], q: &[f64], eps: f64) -> bool {
        let radius = (eps / self.cell).ceil() as i64 + 1;
        let center = self.key(q);
        let mut offset = vec![-radius; self.dim];
        loop {
            let key: Vec<i64> = center.iter().zip(&offset).map(|(c, o)| c + o).collect();
            if let Some(bucket) = self.cells.get(&key) {
                if bucket.iter().any(|&i| euclid(&store[i], q) <= eps) {
                    return true;
                }
            }
            let mut d = self.dim;
            loop {
                if d == 0 {
                    return false;
                }
                d -= 1;
                offset[d] += 1;
                if offset[d] <= radius {
                    break;
                }
                offset[d] = -radius;
            }
        }
    }
}

/// Static nearest-neighbor index over a point set.
pub(crate) struct NearestIndex<'a> {
    points: &'a [Vec<f64>],
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl<'a> NearestIndex<'a> {
    pub(crate) fn build(points: &'a [Vec<f64>]) -> Self {
        let dim = points[0].len();
        // Cell size targeting O(1) occupancy: bounding-box edge over n^(1/dim).
        let mut lo_c = points[0].clone();
        let mut hi_c = points[0].clone();
        for p in points {
            for d in 0..dim {
                lo_c[d] = lo_c[d].min(p[d]);
                hi_c[d] = hi_c[d].max(p[d]);
            }
        }
        let extent = lo_c
            .iter()
            .zip(&hi_c)
            .map(|(a, b)| b - a)
            .fold(0.0f64, f64::max);
        let per_axis = (points.len() as f64).powf(1.0 / dim as f64).ceil().max(1.0);
        let mut cell = extent / per_axis;
        if cell.is_nan() || cell <= 0.0 {
            cell = 1.0;
        }
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        let key =
            |p: &[f64]| -> Vec<i64> { p.iter().map(|&x| (x / cell).floor() as i64).collect() };
        let mut lo = key(&lo_c);
        let mut hi = key(&hi_c);
        for d in 0..dim {
            if lo[d] > hi[d] {
                std::mem::swap(&mut lo[d], &mut hi[d]);
            }
        }
        for (i, p) in points.iter().enumerate() {
            cells.entry(key(p)).or_default().push(i);
        }
        NearestIndex {
            points,
            cell,
            cells,
            lo,
            hi,
        }
    }

    /// Distance from `q` to the nearest stored point (exact).
    pub(crate) fn nearest_dist(&self, q: &[f64]) -> f64 {
        let dim = q.len();
        let center: Vec<i64> = q.iter().map(|&x| (x / self.cell).floor() as i64).collect();
        let max_ring = (0..dim)
            .map(|d| {
                (center[d] - self.lo[d])
                    .abs()
                    .max((center[d] - self.hi[d]).abs())
            })
            .fold(0i64, i64::max);
        let mut best = f64::INFINITY;
        for ring in 0..=max_ring {
            // Points in unvisited rings are at Euclidean distance
            // > (ring - 1) * cell from q; stop once that exceeds best.
            if best.is_finite() && (ring as f64 - 1.0) * self.cell > best {
                break;
            }
            self.visit_ring(&center, ring, &mut |bucket| {
                for &i in bucket {
                    let d = euclid(&self.points[i], q);
                    if d < best {
                        best = d;
                    }
                }
            });
        }
        best
    }

    fn visit_ring(&self, center: &[i64], ring: i64, f: &mut impl FnMut(&Vec<usize>)) {
        let dim = center.len();
        let mut offset = vec![-ring; dim];
        loop {
            if offset.iter().map(|o| o.abs()).max() == Some(ring) {
                let key: Vec<i64> = center.iter().zip(&offset).map(|(c, o)| c + o).collect();
                if let Some(bucket) = self.cells.get(&key) {
                    f(bucket);
                }
            }
            let mut d = dim;
            loop {
                if d == 0 {
                    return;
                }
                d -= 1;
                offset[d] += 1;
                if offset[d] <= ring {
                    break;
                }
                offset[d] = -ring;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cloud1(xs: &[f64]) -> PointCloud {
        PointCloud::from_scalars(xs, 0.0).unwrap()
    }

    #[test]
    fn diameter_cases() {
        assert_eq!(cloud1(&[0.0, 1.0]).diameter(), 1.0);
        assert_eq!(cloud1(&[0.3]).diameter(), 0.0);
        let grid = box_net(&[[0.0, 1.0], [0.0, 1.0]], 0.5).unwrap();
        assert_eq!(grid.len(), 9);
        // Brute-force oracle over the 9 grid points: attained at opposite corners.
        assert!((grid.diameter() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hausdorff_cases() {
        let a = cloud1(&[0.0]);
        let b = cloud1(&[1.0]);
        assert_eq!(hausdorff_distance(&a, &b).unwrap(), 1.0);
        let e = cloud1(&[0.0, 0.25, 0.7]);
        assert_eq!(hausdorff_distance(&e, &e).unwrap(), 0.0);
        assert_eq!(
            hausdorff_distance(&cloud1(&[0.0, 1.0]), &cloud1(&[0.0])).unwrap(),
            1.0
        );
    }

    #[test]
    fn hausdorff_rejects_dim_mismatch() {
        let a = cloud1(&[0.0]);
        let b = PointCloud::new(2, vec![vec![0.0, 0.0]], 0.0).unwrap();
        assert!(hausdorff_distance(&a, &b).is_err());
    }

    #[test]
    fn thin_drops_clustered_points() {
        let p = cloud1(&[0.0, 0.001, 1.0]);
        let q = p.thin(0.01).unwrap();
        assert_eq!(q.points(), &[vec![0.0], vec![1.0]]);
        assert_eq!(q.resolution(), 0.01);
    }

    #[test]
    fn thin_keeps_separated_points() {
        let p = cloud1(&[0.0, 0.5, 1.0]);
        let q = p.thin(0.4).unwrap();
        assert_eq!(q.points(), p.points());
        let single = cloud1(&[0.25]);
        assert_eq!(single.thin(10.0).unwrap().points(), single.points());
    }

    #[test]
    fn box_net_cases() {
        let n = box_net(&[[0.0, 1.0]], 0.5).unwrap();
        assert_eq!(n.points(), &[vec![0.0], vec![0.5], vec![1.0]]);
        assert_eq!(n.resolution(), 0.25);

        let corners = box_net(&[[0.0, 1.0], [0.0, 1.0]], 1.0).unwrap();
        assert_eq!(corners.len(), 4);

        let endpoints = box_net(&[[0.0, 1.0]], 2.0).unwrap();
        assert_eq!(endpoints.points(), &[vec![0.0], vec![1.0]]);
    }

    #[test]
    fn csv_round_trip_exact() {
        let p = PointCloud::new(2, vec![vec![0.1, 1.0 / 3.0], vec![-2.5e-13, 7.0]], 0.0).unwrap();
        let q = PointCloud::from_csv(&p.to_csv(), 0.0).unwrap();
        assert_eq!(p.points(), q.points());
    }

    #[test]
    fn json_round_trip_exact() {
        let p = cloud1(&[0.1, 1.0 / 3.0, -2.5e-13]);
        let q = PointCloud::from_json(&p.to_json(), 0.0).unwrap();
        assert_eq!(p.points(), q.points());
    }

    #[test]
    fn grid_nearest_matches_brute_force() {
        // Deterministic pseudo-random 2-D cloud.
        let mut pts = Vec::new();
        let mut x = 0.123f64;
        for _ in 0..400 {
            x = (x * 997.0 + 0.61803).fract();
            let y = (x * 613.0).fract();
            pts.push(vec![x, y]);
        }
        let index = NearestIndex::build(&pts);
        let mut q = 0.777f64;
        for _ in 0..100 {
            q = (q * 31.0 + 0.1).fract();
            let query = vec![q, (q * 7.0).fract()];
            let brute = pts
                .iter()
                .map(|p| euclid(p, &query))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(index.nearest_dist(&query), brute);
        }
    }

    proptest! {
        #[test]
        fn hausdorff_is_symmetric_and_triangular(
            xs in prop::collection::vec(-5.0f64..5.0, 1..12),
            ys in prop::collection::vec(-5.0f64..5.0, 1..12),
            zs in prop::collection::vec(-5.0f64..5.0, 1..12),
        ) {
            let (a, b, c) = (cloud1(&xs), cloud1(&ys), cloud1(&zs));
            let dab = hausdorff_distance(&a, &b).unwrap();
            let dba = hausdorff_distance(&b, &a).unwrap();
            prop_assert_eq!(dab, dba);
            let dac = hausdorff_distance(&a, &c).unwrap();
            let dcb = hausdorff_distance(&c, &b).unwrap();
            prop_assert!(dab <= dac + dcb + 1e-12);
        }

        #[test]
        fn thin_moves_distance_by_at_most_eps(
            xs in prop::collection::vec(-5.0f64..5.0, 1..20),
            ys in prop::collection::vec(-5.0f64..5.0, 1..12),
            eps in 1e-3f64..1.0,
        ) {
            let p = cloud1(&xs);
            let f = cloud1(&ys);
            let thinned = p.thin(eps).unwrap();
            let before = hausdorff_distance(&p, &f).unwrap();
            let after = hausdorff_distance(&thinned, &f).unwrap();
            prop_assert!(after <= before + eps + 1e-12);
        }

        #[test]
        fn thin_shrinks_diameter_by_at_most_2eps(
            xs in prop::collection::vec(-5.0f64..5.0, 1..20),
            eps in 1e-3f64..1.0,
        ) {
            let p = cloud1(&xs);
            let thinned = p.thin(eps).unwrap();
            prop_assert!(thinned.diameter() >= p.diameter() - 2.0 * eps - 1e-12);
        }
    }
}
