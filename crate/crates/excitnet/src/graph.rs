//! Directed graphs, admissibility constraints, cell-role classification and
//! constrained random generation.
//!
//! A graph is admissible for the network construction when it has no
//! one-loops (`a_ii = 1`), no two-loops (`a_ij = a_ji = 1`) and no Δ-cliques
//! (a triple with edges `i→j`, `i→k`, `j→k`). Vertex ids are 1-based
//! everywhere in this module's public surface.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex index {vertex} out of range 1..={n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("graph violates construction constraints: {0}")]
    ConstraintViolation(ConstraintReport),
    #[error("no edge {from}->{to}")]
    NotAnEdge { from: usize, to: usize },
    #[error("cell {cell} has adjacency pattern forbidden by the constraints")]
    Unclassifiable { cell: usize },
    #[error("failed to generate an admissible graph after {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error("invalid graph file: {0}")]
    BadFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Directed graph on `n` vertices stored as a dense adjacency matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    adj: Vec<bool>,
}

impl DirectedGraph {
    /// Empty graph on `n` vertices.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "graph needs at least one vertex");
        DirectedGraph {
            n,
            adj: vec![false; n * n],
        }
    }

    /// Builds a graph from 1-based `(from, to)` edge pairs.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = DirectedGraph::new(n);
        for &(i, j) in edges {
            g.check_vertex(i)?;
            g.check_vertex(j)?;
            g.adj[(i - 1) * n + (j - 1)] = true;
        }
        Ok(g)
    }

    fn check_vertex(&self, v: usize) -> Result<(), GraphError> {
        if v < 1 || v > self.n {
            return Err(GraphError::VertexOutOfRange { vertex: v, n: self.n });
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    /// 1-based vertex ids.
    pub fn vertices(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.n
    }

    /// True iff the edge `i -> j` is present (1-based).
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        debug_assert!(i >= 1 && i <= self.n && j >= 1 && j <= self.n);
        self.adj[(i - 1) * self.n + (j - 1)]
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<(), GraphError> {
        self.check_vertex(i)?;
        self.check_vertex(j)?;
        self.adj[(i - 1) * self.n + (j - 1)] = true;
        Ok(())
    }

    /// All edges in (from, to) lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in self.vertices() {
            for j in self.vertices() {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.vertices().filter(|&j| self.has_edge(i, j)).count()
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.vertices().filter(|&i| self.has_edge(i, j)).count()
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().filter(|&&b| b).count()
    }
}

/// Kinds of constraint violations the validator reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ConstraintViolation {
    /// `a_ii = 1`.
    OneLoop { vertex: usize },
    /// `a_ij = a_ji = 1`, reported once with `a < b`.
    TwoLoop { a: usize, b: usize },
    /// Edges `i→j`, `i→k` and `j→k` all present.
    DeltaClique { i: usize, j: usize, k: usize },
    /// Out-degree zero (only when sink-freedom was requested).
    Sink { vertex: usize },
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintViolation::OneLoop { vertex } => write!(f, "one-loop at {vertex}"),
            ConstraintViolation::TwoLoop { a, b } => write!(f, "two-loop {a}<->{b}"),
            ConstraintViolation::DeltaClique { i, j, k } => {
                write!(f, "delta-clique ({i},{j},{k})")
            }
            ConstraintViolation::Sink { vertex } => write!(f, "sink at {vertex}"),
        }
    }
}

/// Validation outcome; `valid` iff `violations` is empty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub valid: bool,
    pub violations: Vec<ConstraintViolation>,
}

impl fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            write!(f, "valid")
        } else {
            let items: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
            write!(f, "{}", items.join(", "))
        }
    }
}

/// Role of a cell at a vertex equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellRole {
    Active,
    Leading,
    Trailing,
    Disconnected,
}

/// Role change of a cell during a transition from vertex `k` to vertex `l`.
/// The first letter is the role at `ξ_k`, the second the role at `ξ_l`
/// (A = active, L = leading, T = trailing, D = disconnected).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionCellType {
    AT,
    LA,
    DD,
    TD,
    LD,
    TL,
    DT,
    DL,
}

/// Reports every one-loop, two-loop and Δ-clique in `g`; with
/// `require_no_sink` also every vertex of out-degree zero. Validation never
/// fails, it reports.
pub fn validate_constraints(g: &DirectedGraph, require_no_sink: bool) -> ConstraintReport {
    let mut violations = Vec::new();
    for i in g.vertices() {
        if g.has_edge(i, i) {
            violations.push(ConstraintViolation::OneLoop { vertex: i });
        }
    }
    for a in g.vertices() {
        for b in (a + 1)..=g.n_vertices() {
            if g.has_edge(a, b) && g.has_edge(b, a) {
                violations.push(ConstraintViolation::TwoLoop { a, b });
            }
        }
    }
    // Direct O(N^3) scan over ordered distinct triples.
    for i in g.vertices() {
        for j in g.vertices() {
            if j == i || !g.has_edge(i, j) {
                continue;
            }
            for k in g.vertices() {
                if k == i || k == j {
                    continue;
                }
                if g.has_edge(i, k) && g.has_edge(j, k) {
                    violations.push(ConstraintViolation::DeltaClique { i, j, k });
                }
            }
        }
    }
    if require_no_sink {
        for v in g.vertices() {
            if g.out_degree(v) == 0 {
                violations.push(ConstraintViolation::Sink { vertex: v });
            }
        }
    }
    ConstraintReport {
        valid: violations.is_empty(),
        violations,
    }
}

/// Classifies every cell's role at the equilibrium of vertex `k`:
/// `k` is Active, out-neighbours of `k` are Leading, in-neighbours Trailing,
/// the rest Disconnected. Requires an admissible graph, otherwise the
/// labelling would be ambiguous.
pub fn classify_vertex_roles(
    g: &DirectedGraph,
    k: usize,
) -> Result<BTreeMap<usize, CellRole>, GraphError> {
    if k < 1 || k > g.n_vertices() {
        return Err(GraphError::VertexOutOfRange {
            vertex: k,
            n: g.n_vertices(),
        });
    }
    let report = validate_constraints(g, false);
    if !report.valid {
        return Err(GraphError::ConstraintViolation(report));
    }
    let mut roles = BTreeMap::new();
    for j in g.vertices() {
        let role = if j == k {
            CellRole::Active
        } else if g.has_edge(k, j) {
            CellRole::Leading
        } else if g.has_edge(j, k) {
            CellRole::Trailing
        } else {
            CellRole::Disconnected
        };
        roles.insert(j, role);
    }
    Ok(roles)
}

/// Classifies every cell's role change during the transition along the edge
/// `k -> l`. Cells other than `k` (AT) and `l` (LA) fall into six cases
/// determined by `(a_jk, a_kj, a_jl, a_lj)`; any other combination is
/// forbidden by the constraints.
pub fn classify_transition_cells(
    g: &DirectedGraph,
    k: usize,
    l: usize,
) -> Result<BTreeMap<usize, TransitionCellType>, GraphError> {
    if k < 1 || k > g.n_vertices() {
        return Err(GraphError::VertexOutOfRange {
            vertex: k,
            n: g.n_vertices(),
        });
    }
    if l < 1 || l > g.n_vertices() {
        return Err(GraphError::VertexOutOfRange {
            vertex: l,
            n: g.n_vertices(),
        });
    }
    if !g.has_edge(k, l) {
        return Err(GraphError::NotAnEdge { from: k, to: l });
    }
    let mut map = BTreeMap::new();
    map.insert(k, TransitionCellType::AT);
    map.insert(l, TransitionCellType::LA);
    for j in g.vertices() {
        if j == k || j == l {
            continue;
        }
        let pattern = (
            g.has_edge(j, k),
            g.has_edge(k, j),
            g.has_edge(j, l),
            g.has_edge(l, j),
        );
        let ty = match pattern {
            (false, false, false, false) => TransitionCellType::DD,
            (true, false, false, false) => TransitionCellType::TD,
            (false, true, false, false) => TransitionCellType::LD,
            (true, false, false, true) => TransitionCellType::TL,
            (false, false, true, false) => TransitionCellType::DT,
            (false, false, false, true) => TransitionCellType::DL,
            _ => return Err(GraphError::Unclassifiable { cell: j }),
        };
        map.insert(j, ty);
    }
    Ok(map)
}

/// Returns true when adding edge `(i, j)` keeps the graph admissible.
fn edge_is_legal(g: &DirectedGraph, i: usize, j: usize) -> bool {
    if i == j || g.has_edge(j, i) || g.has_edge(i, j) {
        return false;
    }
    for v in g.vertices() {
        if v == i || v == j {
            continue;
        }
        // the new edge as i->j with sibling i->v, closing v: i->j, i->v, j->v or v->j
        if g.has_edge(i, v) && (g.has_edge(j, v) || g.has_edge(v, j)) {
            return false;
        }
        // the new edge closing a triple rooted at v: v->i, v->j plus i->j
        if g.has_edge(v, i) && g.has_edge(v, j) {
            return false;
        }
    }
    true
}

/// Generates a random admissible graph by per-edge rejection: candidate
/// ordered pairs are shuffled and an edge is added iff it keeps all
/// constraints, stopping once the expected edge count `p·n(n-1)` is reached.
/// Only sink violations reject the whole graph (a fresh shuffle is tried).
pub fn random_constrained_graph(
    n: usize,
    edge_prob: f64,
    seed: u64,
    require_no_sink: bool,
) -> Result<DirectedGraph, GraphError> {
    assert!(n >= 2, "need at least two vertices");
    assert!(
        edge_prob > 0.0 && edge_prob < 1.0,
        "edge_prob must lie in (0,1)"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = ((edge_prob * (n * (n - 1)) as f64).round() as usize).max(1);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(n * (n - 1));
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                pairs.push((i, j));
            }
        }
    }
    const MAX_ROUNDS: usize = 64;
    for _ in 0..MAX_ROUNDS {
        pairs.shuffle(&mut rng);
        let mut g = DirectedGraph::new(n);
        let mut added = 0;
        for &(i, j) in &pairs {
            if added >= target {
                break;
            }
            if edge_is_legal(&g, i, j) {
                g.add_edge(i, j).expect("indices in range");
                added += 1;
            }
        }
        if require_no_sink {
            // Top up sinks with any legal out-edge before giving up on the round.
            for v in 1..=n {
                if g.out_degree(v) == 0 {
                    if let Some(&(i, j)) = pairs
                        .iter()
                        .find(|&&(i, j)| i == v && edge_is_legal(&g, i, j))
                    {
                        g.add_edge(i, j).expect("indices in range");
                    }
                }
            }
            if (1..=n).any(|v| g.out_degree(v) == 0) {
                continue;
            }
        }
        debug_assert!(validate_constraints(&g, require_no_sink).valid);
        return Ok(g);
    }
    Err(GraphError::GenerationFailed {
        attempts: MAX_ROUNDS,
    })
}

/// On-disk graph format: `{"n": 4, "edges": [[1,2],[2,3],...]}` (1-based).
#[derive(Debug, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl From<&DirectedGraph> for GraphFile {
    fn from(g: &DirectedGraph) -> Self {
        GraphFile {
            n: g.n_vertices(),
            edges: g.edges().into_iter().map(|(i, j)| [i, j]).collect(),
        }
    }
}

impl TryFrom<GraphFile> for DirectedGraph {
    type Error = GraphError;

    fn try_from(f: GraphFile) -> Result<Self, Self::Error> {
        if f.n < 1 {
            return Err(GraphError::BadFile("n must be at least 1".into()));
        }
        let edges: Vec<(usize, usize)> = f.edges.iter().map(|&[i, j]| (i, j)).collect();
        DirectedGraph::from_edges(f.n, &edges)
    }
}

/// Loads a graph from a JSON file, checking vertex ranges on read.
pub fn load_graph(path: &Path) -> Result<DirectedGraph, GraphError> {
    let text = std::fs::read_to_string(path)?;
    parse_graph_json(&text)
}

pub fn parse_graph_json(text: &str) -> Result<DirectedGraph, GraphError> {
    let file: GraphFile =
        serde_json::from_str(text).map_err(|e| GraphError::BadFile(e.to_string()))?;
    DirectedGraph::try_from(file)
}

pub fn graph_to_json(g: &DirectedGraph) -> String {
    serde_json::to_string_pretty(&GraphFile::from(g)).expect("graph serializes")
}

/// The bundled ten-node demo graph used by the examples, CLI docs and the
/// larger integration tests. Admissible and sink-free; vertex 3 and vertex 7
/// (among others) have two outgoing edges.
pub fn ten_node_demo() -> DirectedGraph {
    DirectedGraph::from_edges(
        10,
        &[
            (1, 4),
            (2, 4),
            (2, 6),
            (3, 8),
            (3, 10),
            (4, 7),
            (5, 8),
            (6, 1),
            (6, 5),
            (7, 3),
            (7, 9),
            (8, 1),
            (9, 2),
            (10, 6),
        ],
    )
    .expect("demo graph is well-formed")
}

/// The four-vertex graph with one double-exit vertex: 1→2, 2→3, 2→4, 3→1, 4→1.
pub fn kirk_silber_graph() -> DirectedGraph {
    DirectedGraph::from_edges(4, &[(1, 2), (2, 3), (2, 4), (3, 1), (4, 1)])
        .expect("graph is well-formed")
}

/// The cycle 1→2→...→n→1.
pub fn cycle_graph(n: usize) -> DirectedGraph {
    let edges: Vec<(usize, usize)> = (1..=n).map(|i| (i, i % n + 1)).collect();
    DirectedGraph::from_edges(n, &edges).expect("cycle is well-formed")
}
