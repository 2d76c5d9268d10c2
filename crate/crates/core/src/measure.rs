//! Finitely supported probability measures, modeling states of the function
//! algebra at a vertex.
//!
//! Weights are validated nonnegative and renormalized at construction so that
//! their left-to-right floating-point sum is exactly 1.0: after dividing by
//! the raw sum, the largest weight is replaced by `1 - (sum of the others)`.
//! The residual assignment keeps every "states are unital" identity exact,
//! which the symbolic algebra depends on (constant functions evaluate to
//! their constant, bit for bit).

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use serde::Deserialize;

use crate::graph::VertexId;
use crate::lip::LipFunction;
use crate::metric::{box_contains, euclid, PointCloud};
use crate::system::MWGraph;
use crate::{Error, Result};

const MERGE_TOL: f64 = 1e-12;

/// A finitely supported probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    support: PointCloud,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from support points and nonnegative weights, which are
    /// renormalized to sum to exactly 1.0.
    pub fn new(support: PointCloud, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != support.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} support points",
                weights.len(),
                support.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "weights must be finite and >= 0".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument(
                "weights must have positive sum".into(),
            ));
        }
        let mut weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        fix_up_sum(&mut weights);
        Ok(DiscreteMeasure { support, weights })
    }

    /// The Dirac measure at a point.
    pub fn dirac(point: Vec<f64>) -> Result<Self> {
        let dim = point.len();
        DiscreteMeasure::new(PointCloud::new(dim, vec![point], 0.0)?, vec![1.0])
    }

    /// The uniform measure on the points of a cloud.
    pub fn uniform(support: PointCloud) -> Result<Self> {
        let n = support.len();
        DiscreteMeasure::new(support, vec![1.0; n])
    }

    /// Support points.
    pub fn support(&self) -> &PointCloud {
        &self.support
    }

    /// Weights, summing to exactly 1.0 left to right.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Ambient dimension of the support.
    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    /// Applies the state to a function: `sum_i w_i f(x_i)`. Constant
    /// functions evaluate to their constant exactly, states being unital.
    pub fn eval(&self, f: &LipFunction) -> Result<f64> {
        if let Some(value) = f.as_const() {
            // sum w_i = 1 exactly by construction
            for p in self.support.points() {
                if !box_contains(f.domain(), p, 1e-9) {
                    return Err(Error::OutOfBox(format!("{p:?} not in {:?}", f.domain())));
                }
            }
            return Ok(value);
        }
        let mut acc = 0.0;
        for (p, w) in self.support.points().iter().zip(&self.weights) {
            acc += w * f.eval(p)?;
        }
        Ok(acc)
    }

    /// Image measure under an edge map of the system: the support maps
    /// forward, weights are unchanged, and support points that collide within
    /// 1e-12 merge with their weights summed.
    pub fn pushforward(&self, m: &MWGraph, e: crate::graph::EdgeId) -> Result<DiscreteMeasure> {
        let image = m.apply_map(e, &self.support)?;
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        'next: for (p, &w) in image.points().iter().zip(&self.weights) {
            for (q, existing) in points.iter().zip(weights.iter_mut()) {
                if euclid(p, q) <= MERGE_TOL {
                    *existing += w;
                    continue 'next;
                }
            }
            points.push(p.clone());
            weights.push(w);
        }
        let support = PointCloud::new(image.dim(), points, image.resolution())?;
        DiscreteMeasure::new(support, weights)
    }

    /// Loads a measure from JSON `{"support": [[..]], "weights": [..]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeasureFile = serde_json::from_str(text)?;
        let dim = file.support.first().map(|p| p.len()).unwrap_or(0);
        let support = PointCloud::new(dim, file.support, 0.0)?;
        DiscreteMeasure::new(support, file.weights)
    }

    /// Loads a measure file.
    pub fn from_file(path: impl AsRef<FsPath>) -> Result<Self> {
        DiscreteMeasure::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Replaces the largest weight by the exact residual `1 - sum(others)` so the
/// ordered sum is exactly 1.0. The residual can only go negative for
/// adversarial inputs already rejected at validation; it is left untouched
/// then, and the sum stays within one ulp of 1.
fn fix_up_sum(weights: &mut [f64]) {
    let j = weights
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let others: f64 = weights
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != j)
        .map(|(_, w)| w)
        .sum();
    let residual = 1.0 - others;
    if residual >= 0.0 {
        weights[j] = residual;
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureFile {
    support: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

/// One state per vertex of a system, each supported inside its vertex box.
#[derive(Debug, Clone)]
pub struct StateFamily {
    states: BTreeMap<VertexId, DiscreteMeasure>,
}

impl StateFamily {
    /// Builds a family covering every vertex of the system, checking supports
    /// against the vertex boxes.
    pub fn new(m: &MWGraph, states: BTreeMap<VertexId, DiscreteMeasure>) -> Result<Self> {
        for v in m.graph().vertices() {
            let mu = states.get(&v).ok_or_else(|| {
                Error::InvalidArgument(format!("no state for vertex {}", m.graph().vertex_name(v)))
            })?;
            for p in mu.support().points() {
                if !box_contains(m.bounds(v), p, 1e-9) {
                    return Err(Error::OutOfBox(format!(
                        "state support {p:?} outside the box at {}",
                        m.graph().vertex_name(v)
                    )));
                }
            }
        }
        Ok(StateFamily { states })
    }

    /// Dirac family at the per-vertex low box corners.
    pub fn dirac_low(m: &MWGraph) -> Result<Self> {
        let states = m
            .anchors_low()
            .into_iter()
            .map(|(v, p)| Ok((v, DiscreteMeasure::dirac(p)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        StateFamily::new(m, states)
    }

    /// Dirac family at the per-vertex box centers.
    pub fn dirac_center(m: &MWGraph) -> Result<Self> {
        let states = m
            .anchors_center()
            .into_iter()
            .map(|(v, p)| Ok((v, DiscreteMeasure::dirac(p)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        StateFamily::new(m, states)
    }

    /// Uniform family on the corners of each vertex box.
    pub fn uniform_corners(m: &MWGraph) -> Result<Self> {
        let mut states = BTreeMap::new();
        for v in m.graph().vertices() {
            let longest = m
                .bounds(v)
                .iter()
                .map(|iv| iv[1] - iv[0])
                .fold(0.0f64, f64::max);
            let corners = crate::metric::box_net(m.bounds(v), longest)?;
            states.insert(v, DiscreteMeasure::uniform(corners)?);
        }
        StateFamily::new(m, states)
    }

    /// The state at a vertex.
    pub fn get(&self, v: VertexId) -> Result<&DiscreteMeasure> {
        self.states
            .get(&v)
            .ok_or_else(|| Error::InvalidArgument(format!("no state for vertex #{}", v.0)))
    }

    /// All states in vertex order.
    pub fn entries(&self) -> impl Iterator<Item = (VertexId, &DiscreteMeasure)> {
        self.states.iter().map(|(v, mu)| (*v, mu))
    }
}
