//! Exact discrete Wasserstein-1 and the state-space dynamics of a system.
//!
//! The metric on states is the supremum of `|mu(f) - nu(f)|` over Lipschitz-1
//! test functions. By Kantorovich duality that supremum equals the optimal
//! cost of the finite transportation problem between the two supports with
//! Euclidean ground cost, which is what gets solved here: a transportation
//! simplex with northwest-corner start and Bland's anti-cycling rule, in
//! double precision (pivot threshold 1e-12, acceptance slack 1e-9 downstream).
//!
//! The same metric drives the dual system on state space: pushforwards along
//! edges contract W1 by the certified edge ratio, the per-vertex state-space
//! diameter equals the box diameter (attained by Dirac pairs at a farthest
//! pair of points), and the state-space Hutchinson step mirrors the set-level
//! one with W1 in place of the ambient metric.

use std::collections::BTreeMap;

use crate::affine::geom_pow;
use crate::graph::{Path, VertexId};
use crate::lip::LipFamily;
use crate::measure::{DiscreteMeasure, StateFamily};
use crate::metric::{box_diameter, euclid};
use crate::system::MWGraph;
use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;

/// Exact Wasserstein-1 distance between two discrete measures with Euclidean
/// ground cost.
pub fn w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(mu.dim(), nu.dim()));
    }
    let xs = mu.support().points();
    let ys = nu.support().points();
    if xs.len() == 1 && ys.len() == 1 {
        return Ok(euclid(&xs[0], &ys[0]));
    }
    let costs: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| ys.iter().map(|y| euclid(x, y)).collect())
        .collect();
    transportation_simplex(mu.weights(), nu.weights(), &costs)
}

/// Optimal transportation cost between supply and demand vectors (both
/// summing to the same total) under the given cost matrix.
fn transportation_simplex(supply: &[f64], demand: &[f64], costs: &[Vec<f64>]) -> Result<f64> {
    let m = supply.len();
    let n = demand.len();

    // Northwest corner initial basis: m + n - 1 cells forming a staircase
    // spanning tree (zero flows kept for degenerate steps).
    let mut basis: Vec<(usize, usize, f64)> = Vec::with_capacity(m + n - 1);
    {
        let mut remaining_supply = supply.to_vec();
        let mut remaining_demand = demand.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let flow = remaining_supply[i].min(remaining_demand[j]);
            basis.push((i, j, flow.max(0.0)));
            remaining_supply[i] -= flow;
            remaining_demand[j] -= flow;
            if i == m - 1 && j == n - 1 {
                break;
            }
            // Advance along the row or the column; on ties prefer the row
            // unless exhausted, keeping the staircase connected.
            if remaining_supply[i] <= remaining_demand[j] && i < m - 1 {
                i += 1;
            } else if j < n - 1 {
                j += 1;
            } else {
                i += 1;
            }
        }
    }

    let mut in_basis = vec![vec![false; n]; m];
    for &(i, j, _) in &basis {
        in_basis[i][j] = true;
    }

    let max_pivots = 1000 * (m + n + 1) * (m + n + 1);
    for _ in 0..max_pivots {
        // Potentials from the basis tree: u_i + v_j = c_ij on basic cells.
        let (u, v) = potentials(m, n, &basis, costs)?;

        // Entering cell: Bland's rule, first negative reduced cost in
        // lexicographic (i, j) order.
        let mut entering = None;
        'scan: for i in 0..m {
            for j in 0..n {
                if !in_basis[i][j] && costs[i][j] - u[i] - v[j] < -PIVOT_TOL {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            return Ok(basis.iter().map(|&(i, j, f)| f * costs[i][j]).sum());
        };

        // Unique cycle: tree path from column ej back to row ei, closed by the
        // entering cell. The entering cell receives +theta; path cells
        // alternate starting with a donor at position 0 (it shares column ej).
        let path = tree_path(m, n, &basis, ej, ei)?;
        let mut theta = f64::INFINITY;
        let mut leaving: Option<usize> = None;
        for (pos, &cell) in path.iter().enumerate() {
            if pos % 2 != 0 {
                continue; // receiving cell
            }
            let (bi, bj, flow) = basis[cell];
            if flow < theta - PIVOT_TOL {
                theta = flow;
                leaving = Some(cell);
            } else if (flow - theta).abs() <= PIVOT_TOL {
                // Bland tie-break: smallest (i, j) leaves.
                theta = theta.min(flow);
                let replace = match leaving {
                    None => true,
                    Some(prev) => {
                        let (pi, pj, _) = basis[prev];
                        (bi, bj) < (pi, pj)
                    }
                };
                if replace {
                    leaving = Some(cell);
                }
            }
        }
        let leaving = leaving.ok_or_else(|| {
            Error::InvalidArgument("transportation simplex: degenerate cycle".into())
        })?;

        for (pos, &cell) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis[cell].2 = (basis[cell].2 - theta).max(0.0);
            } else {
                basis[cell].2 += theta;
            }
        }
        let (li, lj, _) = basis[leaving];
        in_basis[li][lj] = false;
        in_basis[ei][ej] = true;
        basis[leaving] = (ei, ej, theta);
    }
    Err(Error::InvalidArgument(
        "transportation simplex exceeded its pivot budget".into(),
    ))
}

/// Solves `u_i + v_j = c_ij` over the basis tree with `u_0 = 0`.
fn potentials(
    m: usize,
    n: usize,
    basis: &[(usize, usize, f64)],
    costs: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    // Node ids: rows 0..m, columns m..m+n.
    let mut adjacency = vec![Vec::new(); m + n];
    for (k, &(i, j, _)) in basis.iter().enumerate() {
        adjacency[i].push((m + j, k));
        adjacency[m + j].push((i, k));
    }
    let mut potential = vec![f64::NAN; m + n];
    potential[0] = 0.0;
    let mut stack = vec![0usize];
    while let Some(node) = stack.pop() {
        for &(next, k) in &adjacency[node] {
            if potential[next].is_nan() {
                let (i, j, _) = basis[k];
                potential[next] = costs[i][j] - potential[node];
                stack.push(next);
            }
        }
    }
    if potential.iter().any(|p| p.is_nan()) {
        return Err(Error::InvalidArgument(
            "transportation simplex: basis is not spanning".into(),
        ));
    }
    let u = potential[..m].to_vec();
    let v = potential[m..].to_vec();
    Ok((u, v))
}

/// Tree path from column node `from_col` to row node `to_row` through basic
/// cells, returned as basis indices in traversal order.
fn tree_path(
    m: usize,
    n: usize,
    basis: &[(usize, usize, f64)],
    from_col: usize,
    to_row: usize,
) -> Result<Vec<usize>> {
    let mut adjacency = vec![Vec::new(); m + n];
    for (k, &(i, j, _)) in basis.iter().enumerate() {
        adjacency[i].push((m + j, k));
        adjacency[m + j].push((i, k));
    }
    let start = m + from_col;
    let goal = to_row;
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; m + n];
    let mut visited = vec![false; m + n];
    visited[start] = true;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == goal {
            break;
        }
        for &(next, k) in &adjacency[node] {
            if !visited[next] {
                visited[next] = true;
                parent[next] = Some((node, k));
                queue.push_back(next);
            }
        }
    }
    if !visited[goal] {
        return Err(Error::InvalidArgument(
            "transportation simplex: disconnected basis".into(),
        ));
    }
    let mut path = Vec::new();
    let mut node = goal;
    while let Some((prev, k)) = parent[node] {
        path.push(k);
        node = prev;
    }
    path.reverse();
    Ok(path)
}

/// Per-vertex diameter of the state space in the W1 metric: the supremum of
/// `W1(mu, nu)` over states supported in the vertex box, attained by Diracs at
/// a farthest pair of points, hence equal to the box diameter.
pub fn state_diameter(m: &MWGraph, v: VertexId) -> f64 {
    box_diameter(m.bounds(v))
}

/// Global state-space diameter: the maximum of [`state_diameter`] over the
/// vertices. This is the constant all path-indexed estimates use.
pub fn state_diameter_max(m: &MWGraph) -> f64 {
    m.graph()
        .vertices()
        .map(|v| state_diameter(m, v))
        .fold(0.0, f64::max)
}

/// One step of the state-space Hutchinson operator: at each vertex, the union
/// over outgoing edges of the pushforwards of the measure sets at the edge
/// ranges, thinned greedily at W1 radius `eps`.
pub fn state_hutchinson_step(
    m: &MWGraph,
    family: &BTreeMap<VertexId, Vec<DiscreteMeasure>>,
    eps: f64,
) -> Result<BTreeMap<VertexId, Vec<DiscreteMeasure>>> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::InvalidArgument(
            "thinning radius must be >= 0".into(),
        ));
    }
    let mut next = BTreeMap::new();
    for v in m.graph().vertices() {
        let mut pool = Vec::new();
        for &e in m.graph().edges_out(v) {
            let at_range = family.get(&m.graph().range(e)).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "no measure set at vertex {}",
                    m.graph().vertex_name(m.graph().range(e))
                ))
            })?;
            for mu in at_range {
                pool.push(mu.pushforward(m, e)?);
            }
        }
        // Greedy W1 net in arrival order, mirroring the point-cloud thinning.
        let mut kept: Vec<DiscreteMeasure> = Vec::new();
        'next: for mu in pool {
            for q in &kept {
                if w1(&mu, q)? <= eps {
                    continue 'next;
                }
            }
            kept.push(mu);
        }
        next.insert(v, kept);
    }
    Ok(next)
}

/// Hausdorff distance between two finite measure sets under W1.
pub fn measure_set_hausdorff(a: &[DiscreteMeasure], b: &[DiscreteMeasure]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "measure sets must be nonempty".into(),
        ));
    }
    let mut worst = 0.0f64;
    for (from, to) in [(a, b), (b, a)] {
        for mu in from {
            let mut best = f64::INFINITY;
            for nu in to {
                best = best.min(w1(mu, nu)?);
            }
            worst = worst.max(best);
        }
    }
    Ok(worst)
}

/// Evaluation of the path representation: applies the state at `r(path)` to
/// the field at `s(path)` composed along the path, and reports the certified
/// deviation bound `c^k * D * c_a` from the limit value at the coded point.
pub fn pi_eval(m: &MWGraph, a: &LipFamily, path: &Path, mu0: &StateFamily) -> Result<(f64, f64)> {
    let Some(field) = a.get(path.source()) else {
        return Ok((0.0, 0.0)); // zero field: exact value, exact bound
    };
    let composed = m.lip_compose(field, path)?;
    let value = mu0.get(path.range())?.eval(&composed)?;
    let bound = geom_pow(m.global_ratio(), path.len()) * state_diameter_max(m) * field.lip();
    Ok((value, bound))
}
