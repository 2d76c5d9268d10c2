//! Finite directed multigraphs and their path spaces.
//!
//! A graph is a system `(V, E, r, s)` with range and source maps `r, s: E -> V`.
//! Vertices and edges are interned: the string identifiers are sorted
//! lexicographically once at construction and every later enumeration (paths,
//! edge matrix rows, cycle search) follows that order, so all outputs are
//! reproducible bit for bit.
//!
//! Paths are composable edge sequences: `r(e_i) = s(e_{i+1})`. Note the
//! convention for edge maps elsewhere in this crate runs *against* the edge
//! direction (an edge `e` carries a map from the space at `r(e)` to the space
//! at `s(e)`), so a path `e_1 .. e_k` composes maps outermost-first. Much of
//! the iterated-function-system literature uses the opposite convention.

use std::fmt;

use crate::{Error, Result};

/// Index of a vertex in a [`Graph`] (ordered lexicographically by identifier).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

/// Index of an edge in a [`Graph`] (ordered lexicographically by identifier).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone)]
struct Edge {
    id: String,
    source: VertexId,
    range: VertexId,
}

/// A finite directed multigraph with string identifiers.
#[derive(Debug, Clone)]
pub struct Graph {
    vertex_ids: Vec<String>,
    edges: Vec<Edge>,
    /// Outgoing edges per vertex, in edge order.
    out_edges: Vec<Vec<EdgeId>>,
    /// Incoming edges per vertex, in edge order.
    in_edges: Vec<Vec<EdgeId>>,
}

impl Graph {
    /// Builds a graph from vertex identifiers and `(edge id, source, range)`
    /// triples. Identifiers are deduplicated-checked and sorted.
    pub fn new<S: Into<String>>(vertices: Vec<S>, edges: Vec<(S, S, S)>) -> Result<Self> {
        let mut vertex_ids: Vec<String> = vertices.into_iter().map(Into::into).collect();
        if vertex_ids.is_empty() {
            return Err(Error::MalformedGraph("no vertices".into()));
        }
        vertex_ids.sort();
        if vertex_ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::MalformedGraph("duplicate vertex id".into()));
        }

        let lookup = |id: &str| -> Result<VertexId> {
            vertex_ids
                .binary_search_by(|v| v.as_str().cmp(id))
                .map(VertexId)
                .map_err(|_| Error::UnknownVertex(id.to_string()))
        };

        let mut named: Vec<(String, String, String)> = edges
            .into_iter()
            .map(|(id, s, r)| (id.into(), s.into(), r.into()))
            .collect();
        named.sort_by(|a, b| a.0.cmp(&b.0));
        if named.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::MalformedGraph("duplicate edge id".into()));
        }
        let mut parsed = Vec::with_capacity(named.len());
        for (id, s, r) in named {
            parsed.push(Edge {
                id,
                source: lookup(&s)?,
                range: lookup(&r)?,
            });
        }

        let mut out_edges = vec![Vec::new(); vertex_ids.len()];
        let mut in_edges = vec![Vec::new(); vertex_ids.len()];
        for (i, e) in parsed.iter().enumerate() {
            out_edges[e.source.0].push(EdgeId(i));
            in_edges[e.range.0].push(EdgeId(i));
        }

        Ok(Graph {
            vertex_ids,
            edges: parsed,
            out_edges,
            in_edges,
        })
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.vertex_ids.len()
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// All vertices in identifier order.
    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_ids.len()).map(VertexId)
    }

    /// All edges in identifier order.
    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).map(EdgeId)
    }

    /// The string identifier of a vertex.
    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_ids[v.0]
    }

    /// The string identifier of an edge.
    pub fn edge_name(&self, e: EdgeId) -> &str {
        &self.edges[e.0].id
    }

    /// Resolves a vertex identifier.
    pub fn vertex(&self, id: &str) -> Result<VertexId> {
        self.vertex_ids
            .binary_search_by(|v| v.as_str().cmp(id))
            .map(VertexId)
            .map_err(|_| Error::UnknownVertex(id.to_string()))
    }

    /// Resolves an edge identifier.
    pub fn edge(&self, id: &str) -> Result<EdgeId> {
        self.edges
            .binary_search_by(|e| e.id.as_str().cmp(id))
            .map(EdgeId)
            .map_err(|_| Error::UnknownEdge(id.to_string()))
    }

    /// Source vertex `s(e)`.
    pub fn source(&self, e: EdgeId) -> VertexId {
        self.edges[e.0].source
    }

    /// Range vertex `r(e)`.
    pub fn range(&self, e: EdgeId) -> VertexId {
        self.edges[e.0].range
    }

    /// Edges with source `v`, in identifier order.
    pub fn edges_out(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[v.0]
    }

    /// Edges with range `v`, in identifier order.
    pub fn edges_in(&self, v: VertexId) -> &[EdgeId] {
        &self.in_edges[v.0]
    }

    /// Builds a composable path from edge identifiers.
    pub fn path_by_names(&self, ids: &[&str]) -> Result<Path> {
        let edges = ids
            .iter()
            .map(|id| self.edge(id))
            .collect::<Result<Vec<_>>>()?;
        self.path(&edges)
    }

    /// Builds a composable path from edges, checking `r(e_i) = s(e_{i+1})`.
    pub fn path(&self, edges: &[EdgeId]) -> Result<Path> {
        if edges.is_empty() {
            return Err(Error::NotComposable("empty edge sequence".into()));
        }
        for w in edges.windows(2) {
            if self.range(w[0]) != self.source(w[1]) {
                return Err(Error::NotComposable(format!(
                    "r({}) != s({})",
                    self.edge_name(w[0]),
                    self.edge_name(w[1]),
                )));
            }
        }
        Ok(Path {
            source: self.source(edges[0]),
            range: self.range(*edges.last().unwrap()),
            edges: edges.to_vec(),
        })
    }

    /// Checks there are no sinks and no sources: `s` and `r` must both be
    /// surjective onto the vertex set. Returns findings, one per offender;
    /// a clean report means the graph is admissible.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for v in self.vertices() {
            if self.out_edges[v.0].is_empty() {
                report.push(Severity::Error, format!("sink: {}", self.vertex_name(v)));
            }
            if self.in_edges[v.0].is_empty() {
                report.push(Severity::Error, format!("source: {}", self.vertex_name(v)));
            }
        }
        report
    }

    /// The `E x E` edge matrix: entry `(e, f)` is 1 iff `r(e) = s(f)`.
    pub fn edge_matrix(&self) -> Vec<Vec<u8>> {
        let n = self.edges.len();
        let mut m = vec![vec![0u8; n]; n];
        for (e, row) in m.iter_mut().enumerate() {
            for (f, cell) in row.iter_mut().enumerate() {
                if self.edges[e].range == self.edges[f].source {
                    *cell = 1;
                }
            }
        }
        m
    }

    /// All composable paths of length `k`, in lexicographic edge order.
    /// With `start` given, only paths with `s(path) = start`.
    pub fn paths_of_length(&self, k: usize, start: Option<VertexId>) -> Result<Vec<Path>> {
        if k == 0 {
            return Err(Error::InvalidArgument("path length must be >= 1".into()));
        }
        if let Some(v) = start {
            if v.0 >= self.vertex_ids.len() {
                return Err(Error::UnknownVertex(format!("#{}", v.0)));
            }
        }
        let mut result = Vec::new();
        let mut stack = Vec::with_capacity(k);
        let first: Vec<EdgeId> = match start {
            Some(v) => self.out_edges[v.0].clone(),
            None => self.edge_ids().collect(),
        };
        for e in first {
            self.extend_paths(e, k, &mut stack, &mut result);
        }
        Ok(result)
    }

    fn extend_paths(&self, e: EdgeId, k: usize, stack: &mut Vec<EdgeId>, out: &mut Vec<Path>) {
        stack.push(e);
        if stack.len() == k {
            out.push(Path {
                source: self.source(stack[0]),
                range: self.range(e),
                edges: stack.clone(),
            });
        } else {
            for &f in self.edges_out(self.range(e)) {
                self.extend_paths(f, k, stack, out);
            }
        }
        stack.pop();
    }

    /// Condition (L): every loop has an exit. A loop (simple cycle) has an
    /// exit when some vertex on it carries an out-edge besides the cycle edge.
    /// On failure returns one offending cycle as a witness.
    pub fn condition_l(&self) -> ConditionL {
        let mut cycles = Vec::new();
        self.simple_cycles(&mut cycles);
        for cycle in &cycles {
            let has_exit = cycle
                .edges
                .iter()
                .any(|&e| self.edges_out(self.source(e)).iter().any(|&f| f != e));
            if !has_exit {
                return ConditionL::Fails {
                    witness: cycle.clone(),
                };
            }
        }
        ConditionL::Holds
    }

    /// Enumerates all simple cycles (no repeated vertices) by bounded DFS from
    /// each vertex, keeping only cycles whose smallest vertex is the root so
    /// each cycle is reported once.
    fn simple_cycles(&self, out: &mut Vec<Path>) {
        for root in self.vertices() {
            let mut stack = Vec::new();
            let mut visited = vec![false; self.vertex_count()];
            self.cycle_dfs(root, root, &mut visited, &mut stack, out);
        }
    }

    fn cycle_dfs(
        &self,
        root: VertexId,
        at: VertexId,
        visited: &mut Vec<bool>,
        stack: &mut Vec<EdgeId>,
        out: &mut Vec<Path>,
    ) {
        visited[at.0] = true;
        for &e in self.edges_out(at) {
            let next = self.range(e);
            if next == root {
                // Closing edge (covers self-loops when the stack is empty).
                stack.push(e);
                out.push(Path {
                    source: root,
                    range: root,
                    edges: stack.clone(),
                });
                stack.pop();
            } else if next.0 > root.0 && !visited[next.0] {
                stack.push(e);
                self.cycle_dfs(root, next, visited, stack, out);
                stack.pop();
            }
        }
        visited[at.0] = false;
    }
}

/// A nonempty composable edge sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    edges: Vec<EdgeId>,
    source: VertexId,
    range: VertexId,
}

impl Path {
    /// The edges of the path.
    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    /// Path length (number of edges).
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    /// Paths are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Start vertex `s(path) = s(first edge)`.
    pub fn source(&self) -> VertexId {
        self.source
    }

    /// End vertex `r(path) = r(last edge)`.
    pub fn range(&self) -> VertexId {
        self.range
    }

    /// Renders the path as dash-joined edge identifiers.
    pub fn display<'a>(&'a self, g: &'a Graph) -> PathDisplay<'a> {
        PathDisplay {
            path: self,
            graph: g,
        }
    }
}

/// Helper for rendering a path with its string edge identifiers.
pub struct PathDisplay<'a> {
    path: &'a Path,
    graph: &'a Graph,
}

impl fmt::Display for PathDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &e) in self.path.edges.iter().enumerate() {
            if i > 0 {
                write!(f, "-")?;
            }
            write!(f, "{}", self.graph.edge_name(e))?;
        }
        Ok(())
    }
}

/// Length of the longest common prefix of two paths with a common start.
pub fn longest_common_prefix(alpha: &Path, beta: &Path) -> Result<usize> {
    if alpha.source() != beta.source() {
        return Err(Error::StartMismatch);
    }
    Ok(alpha
        .edges
        .iter()
        .zip(&beta.edges)
        .take_while(|(a, b)| a == b)
        .count())
}

/// The ultrametric on paths with a common start: 0 if `alpha = beta`, else
/// `c^lcp(alpha, beta)` for a ratio `c` in (0,1).
pub fn path_metric(alpha: &Path, beta: &Path, c: f64) -> Result<f64> {
    if c.is_nan() || c <= 0.0 || c >= 1.0 {
        return Err(Error::RatioOutOfRange(c));
    }
    if alpha == beta {
        return Ok(0.0);
    }
    let lcp = longest_common_prefix(alpha, beta)?;
    Ok(crate::affine::geom_pow(c, lcp))
}

/// Outcome of the Condition (L) check.
#[derive(Debug, Clone)]
pub enum ConditionL {
    /// Every loop has an exit.
    Holds,
    /// Some loop has no exit; `witness` is one such cycle.
    Fails {
        /// An offending cycle.
        witness: Path,
    },
}

impl ConditionL {
    /// True when the condition holds.
    pub fn holds(&self) -> bool {
        matches!(self, ConditionL::Holds)
    }
}

/// Severity of a validation finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// Violates an admissibility requirement.
    Error,
    /// Informational only.
    Info,
}

/// A single validation finding.
#[derive(Debug, Clone)]
pub struct Finding {
    /// How serious the finding is.
    pub severity: Severity,
    /// Human-readable description, stable across runs.
    pub message: String,
}

/// Outcome of a validation pass: a list of findings, empty when clean.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    /// All findings in discovery order.
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub(crate) fn push(&mut self, severity: Severity, message: String) {
        self.findings.push(Finding { severity, message });
    }

    /// True when no error-severity findings are present.
    pub fn is_clean(&self) -> bool {
        !self.findings.iter().any(|f| f.severity == Severity::Error)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.findings.is_empty() {
            return write!(f, "ok");
        }
        for (i, finding) in self.findings.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let tag = match finding.severity {
                Severity::Error => "error",
                Severity::Info => "info",
            };
            write!(f, "{}: {}", tag, finding.message)?;
        }
        Ok(())
    }
}

/// Verifies `|E^k| = sum of all entries of A^(k-1)` for the edge matrix `A`.
/// Exposed for tests and diagnostics.
pub fn path_count_from_matrix(g: &Graph, k: usize) -> u128 {
    let a = g.edge_matrix();
    let n = a.len();
    // power = A^(k-1) over u128
    let mut power = vec![vec![0u128; n]; n];
    for (i, row) in power.iter_mut().enumerate() {
        row[i] = 1;
    }
    for _ in 1..k {
        let mut next = vec![vec![0u128; n]; n];
        for i in 0..n {
            for l in 0..n {
                if power[i][l] == 0 {
                    continue;
                }
                for j in 0..n {
                    next[i][j] += power[i][l] * a[l][j] as u128;
                }
            }
        }
        power = next;
    }
    power.iter().flatten().sum()
}
