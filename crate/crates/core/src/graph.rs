//! Graphs, hypergraphs, bipartitions and the stochastic edge-selection
//! processes that define a random circuit.
//!
//! Edge sequences are always stored in the order the gates act on the state:
//! the first element is the first gate applied.

use std::collections::HashSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported vertex count (one machine word per [`VertexSet`]).
pub const MAX_VERTICES: usize = 64;

/// Tolerance on row sums of Markov kernels and initial distributions.
const STOCHASTIC_TOL: f64 = 1e-12;

/// A subset of graph vertices stored as a bitmask.
///
/// Doubles as the label of the swap operator `T_A` acting on the vertices in
/// the set.
#[derive(Copy, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexSet(u64);

impl VertexSet {
    pub const EMPTY: Self = Self(0);

    pub const fn from_bits(bits: u64) -> Self {
        Self(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    /// The first `n` vertices, `{0, ..., n-1}`.
    pub fn prefix(n: usize) -> Self {
        assert!(n <= MAX_VERTICES, "prefix length {n} exceeds {MAX_VERTICES}");
        if n == MAX_VERTICES {
            Self(u64::MAX)
        } else {
            Self((1u64 << n) - 1)
        }
    }

    /// The full vertex set of an `n`-vertex graph.
    pub fn full(n: usize) -> Self {
        Self::prefix(n)
    }

    pub fn singleton(v: usize) -> Self {
        assert!(v < MAX_VERTICES, "vertex {v} out of range");
        Self(1u64 << v)
    }

    /// Builds a set from vertex indices, rejecting indices `>= n`.
    pub fn from_indices(indices: &[usize], n: usize) -> Result<Self> {
        let mut bits = 0u64;
        for &v in indices {
            if v >= n || v >= MAX_VERTICES {
                return Err(Error::invalid(format!(
                    "vertex {v} out of range for a graph with {n} vertices"
                )));
            }
            bits |= 1u64 << v;
        }
        Ok(Self(bits))
    }

    pub fn contains(self, v: usize) -> bool {
        v < MAX_VERTICES && self.0 & (1u64 << v) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        Self(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        Self(self.0 & !other.0)
    }

    /// Complement inside the vertex set of an `n`-vertex graph.
    pub fn complement(self, n: usize) -> Self {
        Self::full(n).difference(self)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    /// Vertex indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let v = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(v)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A (hyper)graph with local Hilbert-space dimension `d` on every vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    d: usize,
    edges: Vec<VertexSet>,
}

/// Builds and validates a graph; edge order is preserved.
pub fn build_graph(n: usize, edges: &[Vec<usize>], d: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::invalid("graph needs at least one vertex"));
    }
    if n > MAX_VERTICES {
        return Err(Error::capacity(format!(
            "{n} vertices exceeds the limit of {MAX_VERTICES}"
        )));
    }
    if d < 2 {
        return Err(Error::invalid(format!("local dimension d={d} must be >= 2")));
    }
    if edges.is_empty() {
        return Err(Error::invalid("graph needs at least one edge"));
    }
    let mut seen = HashSet::with_capacity(edges.len());
    let mut sets = Vec::with_capacity(edges.len());
    for (i, edge) in edges.iter().enumerate() {
        let set = VertexSet::from_indices(edge, n)
            .map_err(|e| e.context(format_args!("edge #{i} {edge:?}")))?;
        if set.len() < 2 {
            return Err(Error::invalid(format!(
                "edge #{i} {edge:?} has fewer than two distinct vertices"
            )));
        }
        if !seen.insert(set) {
            return Err(Error::invalid(format!("duplicate edge #{i} {edge:?}")));
        }
        sets.push(set);
    }
    Ok(Graph { n, d, edges: sets })
}

impl Graph {
    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn edges(&self) -> &[VertexSet] {
        &self.edges
    }

    pub fn vertices(&self) -> VertexSet {
        VertexSet::full(self.n)
    }

    pub fn edge_index(&self, edge: VertexSet) -> Option<usize> {
        self.edges.iter().position(|&e| e == edge)
    }

    /// Complete graph `K_n`.
    pub fn complete(n: usize, d: usize) -> Result<Self> {
        let edges: Vec<Vec<usize>> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| vec![i, j]))
            .collect();
        build_graph(n, &edges, d)
    }

    /// Open chain `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize, d: usize) -> Result<Self> {
        let edges: Vec<Vec<usize>> = (0..n.saturating_sub(1)).map(|i| vec![i, i + 1]).collect();
        build_graph(n, &edges, d)
    }
}

/// A bipartition `V = A ∪ B` of the vertices of an `n`-vertex graph.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    a: VertexSet,
    n: usize,
}

impl Bipartition {
    pub fn new(a: VertexSet, n: usize) -> Result<Self> {
        if n > MAX_VERTICES {
            return Err(Error::capacity(format!("{n} vertices exceeds {MAX_VERTICES}")));
        }
        if !a.is_subset(VertexSet::full(n)) {
            return Err(Error::invalid(format!(
                "subsystem {a:?} is not contained in the {n} vertices"
            )));
        }
        Ok(Self { a, n })
    }

    pub fn for_graph(g: &Graph, a: VertexSet) -> Result<Self> {
        Self::new(a, g.n_vertices())
    }

    pub fn a(&self) -> VertexSet {
        self.a
    }

    pub fn b(&self) -> VertexSet {
        self.a.complement(self.n)
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    /// True when `edge` touches both sides of the cut.
    pub fn straddles(&self, edge: VertexSet) -> bool {
        !edge.is_disjoint(self.a) && !edge.is_disjoint(self.b())
    }
}

/// Edges that cross the cut, in graph order.
pub fn boundary_edges(g: &Graph, p: &Bipartition) -> Vec<VertexSet> {
    g.edges().iter().copied().filter(|&e| p.straddles(e)).collect()
}

/// Fraction `q = |∂A| / |E|` of boundary edges.
pub fn boundary_fraction(g: &Graph, p: &Bipartition) -> f64 {
    boundary_edges(g, p).len() as f64 / g.edges().len() as f64
}

/// How the circuit picks the edge acted on at each step.
#[derive(Clone, Debug, PartialEq)]
pub enum ProcessKind {
    /// Independent, flat over the edge list.
    UniformIid,
    /// Explicit list of edge indices, repeated cyclically.
    FixedSequence(Vec<usize>),
    /// Markov chain over edge indices; `kernel[i][j]` is the probability of
    /// drawing edge `j` right after edge `i`.
    MarkovChain { initial: Vec<f64>, kernel: Vec<Vec<f64>> },
}

/// An edge-selection process bound to the edge list of a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProcess {
    edges: Vec<VertexSet>,
    kind: ProcessKind,
}

impl EdgeProcess {
    pub fn uniform(g: &Graph) -> Self {
        Self { edges: g.edges().to_vec(), kind: ProcessKind::UniformIid }
    }

    /// Fixed sequence given as edges; every edge must belong to `g`.
    pub fn fixed(g: &Graph, sequence: &[VertexSet]) -> Result<Self> {
        let idx = sequence
            .iter()
            .map(|&e| {
                g.edge_index(e)
                    .ok_or_else(|| Error::invalid(format!("edge {e:?} is not an edge of the graph")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { edges: g.edges().to_vec(), kind: ProcessKind::FixedSequence(idx) })
    }

    /// Fixed sequence given as indices into the graph's edge list.
    pub fn fixed_indices(g: &Graph, indices: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= g.edges().len()) {
            return Err(Error::invalid(format!(
                "edge index {bad} out of range for {} edges",
                g.edges().len()
            )));
        }
        Ok(Self { edges: g.edges().to_vec(), kind: ProcessKind::FixedSequence(indices) })
    }

    pub fn markov(g: &Graph, initial: Vec<f64>, kernel: Vec<Vec<f64>>) -> Result<Self> {
        let m = g.edges().len();
        check_distribution(&initial, m, "initial distribution")?;
        if kernel.len() != m {
            return Err(Error::invalid(format!(
                "transition matrix has {} rows, expected {m}",
                kernel.len()
            )));
        }
        for (i, row) in kernel.iter().enumerate() {
            check_distribution(row, m, &format!("transition row {i}"))?;
        }
        Ok(Self { edges: g.edges().to_vec(), kind: ProcessKind::MarkovChain { initial, kernel } })
    }

    pub fn kind(&self) -> &ProcessKind {
        &self.kind
    }

    pub fn edges(&self) -> &[VertexSet] {
        &self.edges
    }

    /// Draws `k` edges using `rng`.
    pub fn sample_with<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Vec<VertexSet>> {
        if k == 0 {
            return Ok(Vec::new());
        }
        match &self.kind {
            ProcessKind::UniformIid => {
                if self.edges.is_empty() {
                    return Err(Error::invalid("cannot sample from an empty edge list"));
                }
                Ok((0..k).map(|_| self.edges[rng.random_range(0..self.edges.len())]).collect())
            }
            ProcessKind::FixedSequence(seq) => {
                if seq.is_empty() {
                    return Err(Error::invalid("cannot repeat an empty fixed sequence"));
                }
                Ok(seq.iter().cycle().take(k).map(|&i| self.edges[i]).collect())
            }
            ProcessKind::MarkovChain { initial, kernel } => {
                let mut out = Vec::with_capacity(k);
                let mut cur = draw_index(initial, rng);
                out.push(self.edges[cur]);
                for _ in 1..k {
                    cur = draw_index(&kernel[cur], rng);
                    out.push(self.edges[cur]);
                }
                Ok(out)
            }
        }
    }
}

fn check_distribution(p: &[f64], m: usize, what: &str) -> Result<()> {
    if p.len() != m {
        return Err(Error::invalid(format!("{what} has length {}, expected {m}", p.len())));
    }
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::invalid(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::invalid(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

fn draw_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in p.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // rounding: fall back to the last index with positive weight
    p.iter().rposition(|&w| w > 0.0).unwrap_or(p.len() - 1)
}

/// Draws a length-`k` edge sequence, deterministic in `(proc, k, seed)`.
pub fn sample_sequence(proc: &EdgeProcess, k: usize, seed: u64) -> Result<Vec<VertexSet>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    proc.sample_with(k, &mut rng)
}

/// Best or worst sweep ordering on a bipartite chain.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Best,
    Worst,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::Best => "best",
            SweepKind::Worst => "worst",
        })
    }
}

impl std::str::FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best" => Ok(Self::Best),
            "worst" => Ok(Self::Worst),
            other => Err(Error::invalid(format!("unknown sweep kind '{other}'"))),
        }
    }
}

/// A labelled edge of the bipartite chain.
///
/// The chain has `L = L_A + L_B` vertices with `A = {0, ..., L_A-1}`.
/// `A(j)` joins the vertices `j` and `j+1` steps away from the boundary
/// inside `A`; `B(j)` likewise inside `B`; `Boundary` joins `L_A-1` and `L_A`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ChainEdge {
    A(usize),
    B(usize),
    Boundary,
}

impl ChainEdge {
    /// Left vertex of the edge in the chain layout.
    pub fn left_vertex(self, la: usize) -> usize {
        match self {
            ChainEdge::A(j) => la - j - 1,
            ChainEdge::B(j) => la + j - 1,
            ChainEdge::Boundary => la - 1,
        }
    }

    pub fn to_vertex_set(self, la: usize) -> VertexSet {
        let v = self.left_vertex(la);
        VertexSet::singleton(v).union(VertexSet::singleton(v + 1))
    }
}

/// Labelled sweep of every chain edge, in application order.
///
/// Best: `b_{L_B-1}, ..., b_1, a_{L_A-1}, ..., a_1, e`.
/// Worst: `e, a_1, ..., a_{L_A-1}, b_1, ..., b_{L_B-1}`.
pub fn cem_edge_labels(la: usize, lb: usize, kind: SweepKind) -> Vec<ChainEdge> {
    assert!(la >= 1 && lb >= 1, "chain halves must be non-empty");
    let a = (1..la).map(ChainEdge::A);
    let b = (1..lb).map(ChainEdge::B);
    match kind {
        SweepKind::Best => b.rev().chain(a.rev()).chain(std::iter::once(ChainEdge::Boundary)).collect(),
        SweepKind::Worst => std::iter::once(ChainEdge::Boundary).chain(a).chain(b).collect(),
    }
}

/// Chain sweep as vertex sets over the `L_A + L_B` chain, in application order.
pub fn cem_sequence(la: usize, lb: usize, kind: SweepKind) -> Vec<VertexSet> {
    cem_edge_labels(la, lb, kind).into_iter().map(|e| e.to_vertex_set(la)).collect()
}

/// On-disk graph description: `{"n": .., "d": .., "edges": [[..], ..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    pub d: usize,
    pub edges: Vec<Vec<usize>>,
}

impl GraphFile {
    pub fn parse(json: &str) -> Result<Graph> {
        let file: GraphFile = serde_json::from_str(json)
            .map_err(|e| Error::invalid(format!("malformed graph file: {e}")))?;
        build_graph(file.n, &file.edges, file.d)
    }

    pub fn from_graph(g: &Graph) -> Self {
        Self { n: g.n, d: g.d, edges: g.edges.iter().map(|e| e.to_vec()).collect() }
    }
}

/// On-disk partition description: `{"A": [..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionFile {
    #[serde(rename = "A")]
    pub a: Vec<usize>,
}

impl PartitionFile {
    pub fn parse(json: &str, g: &Graph) -> Result<Bipartition> {
        let file: PartitionFile = serde_json::from_str(json)
            .map_err(|e| Error::invalid(format!("malformed partition file: {e}")))?;
        let a = VertexSet::from_indices(&file.a, g.n_vertices())?;
        Bipartition::for_graph(g, a)
    }
}
