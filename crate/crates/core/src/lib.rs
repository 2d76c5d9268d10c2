//! Mauldin-Williams graphs: a directed graph with a compact metric space per
//! vertex and an affine contraction per edge, uniform ratio `c < 1`.
//!
//! The toolkit computes the unique invariant list of such a system by certified
//! Hutchinson iteration, codes points of the invariant set by finite paths,
//! realizes the Hutchinson/Rieffel metric on states as discrete Wasserstein-1,
//! and drives a symbolic Cuntz-Krieger path calculus in which the canonical
//! representation of `C(T)` inside the graph algebra is built level by level
//! with explicit error bounds.
//!
//! # Modules
//!
//! - [`graph`] - directed multigraphs, path spaces, edge matrix, Condition (L)
//! - [`metric`] - finite point clouds, Hausdorff metric, greedy thinning
//! - [`affine`] - affine contractions with certified ratios
//! - [`lip`] - Lipschitz expression trees with certified constants
//! - [`system`] - Mauldin-Williams systems, invariant lists, coding map
//! - [`measure`] - finitely supported probability measures (states)
//! - [`transport`] - exact Wasserstein-1 and the state-space dynamics
//! - [`algebra`] - Cuntz-Krieger words, diagonal elements, level-k approximants
//! - [`correspondence`] - edge-indexed sections, module actions, Toeplitz checks
//!
//! All values are immutable after construction and every operation is a pure
//! function, so shared inputs can be used concurrently without locking.

pub mod affine;
pub mod algebra;
pub mod correspondence;
pub mod graph;
pub mod lip;
pub mod measure;
pub mod metric;
pub mod rng;
pub mod system;
pub mod transport;

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A vertex identifier that is not part of the graph.
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    /// An edge identifier that is not part of the graph.
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),

    /// A graph failed a structural invariant (duplicate ids, dangling
    /// endpoints, empty vertex set).
    #[error("malformed graph: {0}")]
    MalformedGraph(String),

    /// Consecutive edges do not compose (`r` of one is not `s` of the next).
    #[error("edges do not compose: {0}")]
    NotComposable(String),

    /// Two paths were expected to start at the same vertex.
    #[error("paths start at different vertices")]
    StartMismatch,

    /// A contraction ratio outside the open interval (0, 1).
    #[error("ratio must lie in (0,1), got {0}")]
    RatioOutOfRange(f64),

    /// Ambient dimensions disagree.
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    /// A point lies outside the box it must belong to.
    #[error("point outside declared box: {0}")]
    OutOfBox(String),

    /// A numeric argument violates its precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A system failed validation and the requested operation needs a valid one.
    #[error("system is not valid: {0}")]
    InvalidSystem(String),

    /// Fixed-point iteration did not reach the tolerance in the allowed steps.
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        /// Steps actually taken.
        iterations: usize,
        /// Hausdorff displacement of the last step.
        residual: f64,
    },

    /// Malformed input text (expression grammar or file contents).
    #[error("parse error: {0}")]
    Parse(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON input.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Library-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Formats a float with 17 significant decimal digits, enough to round-trip
/// any `f64` exactly. All emitted tables and reports use this format.
pub fn fmt_g17(x: f64) -> String {
    format!("{:.16e}", x)
}

#[cfg(test)]
pub(crate) mod testfix {
    //! In-code copies of the three fixture systems used across the test
    //! modules. The JSON files under `fixtures/` describe the same systems;
    //! the integration tests exercise the loader against them.

    use std::collections::BTreeMap;

    use crate::affine::AffineMap;
    use crate::graph::Graph;
    use crate::system::MWGraph;

    /// DOUBLE: one vertex, two loops `x/2` and `(x+1)/2` on `[0,1]`.
    /// Invariant set: the full interval.
    pub fn double() -> MWGraph {
        let graph = Graph::new(vec!["v"], vec![("0", "v", "v"), ("1", "v", "v")]).unwrap();
        let mut maps = BTreeMap::new();
        maps.insert("0".to_string(), AffineMap::scalar(0.5, 0.0));
        maps.insert("1".to_string(), AffineMap::scalar(0.5, 0.5));
        let mut spaces = BTreeMap::new();
        spaces.insert("v".to_string(), (vec![[0.0, 1.0]], Some(0.25)));
        MWGraph::from_parts(graph, spaces, maps).unwrap()
    }

    /// CANTOR: one vertex, loops `x/3` and `(x+2)/3` on `[0,1]`.
    /// Invariant set: the middle-thirds Cantor set.
    pub fn cantor() -> MWGraph {
        let graph = Graph::new(vec!["v"], vec![("0", "v", "v"), ("1", "v", "v")]).unwrap();
        let third = 1.0 / 3.0;
        let mut maps = BTreeMap::new();
        maps.insert("0".to_string(), AffineMap::scalar(third, 0.0));
        maps.insert("1".to_string(), AffineMap::scalar(third, 2.0 / 3.0));
        let mut spaces = BTreeMap::new();
        spaces.insert("v".to_string(), (vec![[0.0, 1.0]], Some(0.25)));
        MWGraph::from_parts(graph, spaces, maps).unwrap()
    }

    /// TWOV: two vertices `u`, `v` with edges `a: u->v`, `b: v->u`, `d: v->v`
    /// (source -> range) and maps `x/2`, `x/2 + 1/2`, `x/3`.
    pub fn twov() -> MWGraph {
        let graph = Graph::new(
            vec!["u", "v"],
            vec![("a", "u", "v"), ("b", "v", "u"), ("d", "v", "v")],
        )
        .unwrap();
        let mut maps = BTreeMap::new();
        maps.insert("a".to_string(), AffineMap::scalar(0.5, 0.0));
        maps.insert("b".to_string(), AffineMap::scalar(0.5, 0.5));
        maps.insert("d".to_string(), AffineMap::scalar(1.0 / 3.0, 0.0));
        let mut spaces = BTreeMap::new();
        spaces.insert("u".to_string(), (vec![[0.0, 1.0]], Some(0.25)));
        spaces.insert("v".to_string(), (vec![[0.0, 1.0]], Some(0.25)));
        MWGraph::from_parts(graph, spaces, maps).unwrap()
    }

    /// One vertex, a single loop `x/2`; invariant list `{0}`.
    pub fn single_half() -> MWGraph {
        let graph = Graph::new(vec!["v"], vec![("0", "v", "v")]).unwrap();
        let mut maps = BTreeMap::new();
        maps.insert("0".to_string(), AffineMap::scalar(0.5, 0.0));
        let mut spaces = BTreeMap::new();
        spaces.insert("v".to_string(), (vec![[0.0, 1.0]], Some(0.5)));
        MWGraph::from_parts(graph, spaces, maps).unwrap()
    }
}
