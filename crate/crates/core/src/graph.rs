//! Vertex-labelled undirected graphs, atomic types and corpora.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::num::Rat;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    VertexOutOfRange { edge: (usize, usize), n: usize },
    SelfLoop(usize),
    LabelCount { expected: usize, found: usize },
    LabelLength { vertex: usize, expected: usize, found: usize },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::VertexOutOfRange { edge, n } => {
                write!(f, "edge ({}, {}) references a vertex outside 0..{}", edge.0, edge.1, n)
            }
            GraphError::SelfLoop(v) => write!(f, "self-loop at vertex {v}"),
            GraphError::LabelCount { expected, found } => {
                write!(f, "expected {expected} label vectors, found {found}")
            }
            GraphError::LabelLength { vertex, expected, found } => {
                write!(f, "label of vertex {vertex} has length {found}, expected {expected}")
            }
        }
    }
}

/// An undirected simple graph on `0..n` with one label vector per vertex.
///
/// All label vectors share the length [`Graph::ell`]; `ell == 0` means unlabelled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<bool>,
    nbrs: Vec<Vec<usize>>,
    labels: Vec<Vec<Value>>,
    ell: usize,
}

impl Graph {
    /// Builds a graph. Duplicate edges (in either orientation) collapse.
    pub fn new(n: usize, edges: &[(usize, usize)], labels: Option<Vec<Vec<Value>>>) -> Result<Graph, GraphError> {
        let mut adj = vec![false; n * n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::VertexOutOfRange { edge: (u, v), n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adj[u * n + v] = true;
            adj[v * n + u] = true;
        }
        let (labels, ell) = match labels {
            None => (vec![Vec::new(); n], 0),
            Some(ls) => {
                if ls.len() != n {
                    return Err(GraphError::LabelCount { expected: n, found: ls.len() });
                }
                let ell = ls.first().map_or(0, Vec::len);
                for (v, l) in ls.iter().enumerate() {
                    if l.len() != ell {
                        return Err(GraphError::LabelLength { vertex: v, expected: ell, found: l.len() });
                    }
                }
                (ls, ell)
            }
        };
        let nbrs = (0..n).map(|u| (0..n).filter(|&v| adj[u * n + v]).collect()).collect();
        Ok(Graph { n, adj, nbrs, labels, ell })
    }

    pub fn unlabelled(n: usize, edges: &[(usize, usize)]) -> Result<Graph, GraphError> {
        Graph::new(n, edges, None)
    }

    /// Graph with one rational label per vertex.
    pub fn with_scalar_labels(n: usize, edges: &[(usize, usize)], labels: &[i64]) -> Result<Graph, GraphError> {
        let ls = labels.iter().map(|&x| vec![Value::int(x)]).collect();
        Graph::new(n, edges, Some(ls))
    }

    pub fn path(n: usize) -> Graph {
        let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::unlabelled(n, &e).expect("valid path")
    }

    pub fn cycle(n: usize) -> Graph {
        let mut e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n >= 3 {
            e.push((n - 1, 0));
        }
        Graph::unlabelled(n, &e).expect("valid cycle")
    }

    pub fn complete(n: usize) -> Graph {
        let e: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Graph::unlabelled(n, &e).expect("valid clique")
    }

    /// Disjoint union; vertices of `other` are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Graph) -> Result<Graph, GraphError> {
        let off = self.n;
        let mut e: Vec<_> = self.edges().collect();
        e.extend(other.edges().map(|(u, v)| (u + off, v + off)));
        let labels = if self.ell == 0 && other.ell == 0 {
            None
        } else {
            Some(self.labels.iter().chain(other.labels.iter()).cloned().collect())
        };
        Graph::new(self.n + other.n, &e, labels)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.n + v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.nbrs[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.nbrs[v].len()
    }

    pub fn label(&self, v: usize) -> &[Value] {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[Vec<Value>] {
        &self.labels
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.nbrs[u].iter().copied().filter(move |&v| u < v).map(move |v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// The graph `σ⋆G`: vertex `u` of `self` becomes vertex `sigma[u]`.
    ///
    /// Panics if `sigma` is not a permutation of `0..n`.
    pub fn permute(&self, sigma: &[usize]) -> Graph {
        assert!(is_permutation(sigma, self.n), "not a permutation of 0..{}", self.n);
        let e: Vec<_> = self.edges().map(|(u, v)| (sigma[u], sigma[v])).collect();
        let mut labels = vec![Vec::new(); self.n];
        for (u, l) in self.labels.iter().enumerate() {
            labels[sigma[u]] = l.clone();
        }
        let labels = if self.ell == 0 { None } else { Some(labels) };
        Graph::new(self.n, &e, labels).expect("permutation preserves validity")
    }

    /// Whether every label entry is exact.
    pub fn labels_exact(&self) -> bool {
        self.labels.iter().flatten().all(Value::is_exact)
    }
}

pub fn is_permutation(sigma: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    sigma.len() == n
        && sigma.iter().all(|&s| {
            if s >= n || seen[s] {
                false
            } else {
                seen[s] = true;
                true
            }
        })
}

/// Atomic type of a tuple: `C(k,2)` equality bits, `C(k,2)` adjacency bits
/// (pairs `i<j` in lexicographic order), then the `k` label vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomicType(pub Vec<Value>);

impl AtomicType {
    pub fn canonical_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.0.len() as u32).to_be_bytes());
        for v in &self.0 {
            v.canonical_bytes(out);
        }
    }
}

pub fn atomic_type(g: &Graph, tuple: &[usize]) -> AtomicType {
    let k = tuple.len();
    let mut out = Vec::with_capacity(k * k.saturating_sub(1) + k * g.ell());
    let bit = |b: bool| Value::int(b as i64);
    for i in 0..k {
        for j in i + 1..k {
            out.push(bit(tuple[i] == tuple[j]));
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            out.push(bit(g.has_edge(tuple[i], tuple[j])));
        }
    }
    for &v in tuple {
        out.extend(g.label(v).iter().cloned());
    }
    AtomicType(out)
}

/// Random label assignment for generated corpora.
#[derive(Clone, Debug)]
pub struct LabelSpec {
    pub ell: usize,
    /// Each entry is drawn uniformly from this set.
    pub values: Vec<Rat>,
}

/// How to generate a corpus.
#[derive(Clone, Debug)]
pub enum CorpusMode {
    /// One graph per isomorphism class on exactly `n` vertices (`n <= 7`).
    Exhaustive,
    /// `count` samples of G(n, 1/2) from a seeded stream.
    Random { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusError {
    TooLarge(usize),
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::TooLarge(n) => write!(f, "exhaustive enumeration supports n <= 7, got {n}"),
        }
    }
}

pub fn generate_corpus(n: usize, mode: &CorpusMode, labels: Option<&LabelSpec>) -> Result<Vec<Graph>, CorpusError> {
    match mode {
        CorpusMode::Exhaustive => {
            let gs = exhaustive(n)?;
            Ok(match labels {
                None => gs,
                Some(spec) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(0);
                    gs.into_iter().map(|g| relabel(&g, spec, &mut rng)).collect()
                }
            })
        }
        CorpusMode::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok((0..*count).map(|_| random_graph(n, labels, &mut rng)).collect())
        }
    }
}

/// Exhaustive corpora for every size `1..=n_max`, concatenated.
pub fn exhaustive_up_to(n_max: usize) -> Result<Vec<Graph>, CorpusError> {
    let mut out = Vec::new();
    for n in 1..=n_max {
        out.extend(exhaustive(n)?);
    }
    Ok(out)
}

pub fn random_graph<R: Rng>(n: usize, labels: Option<&LabelSpec>, rng: &mut R) -> Graph {
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(0.5) {
                e.push((u, v));
            }
        }
    }
    let g = Graph::unlabelled(n, &e).expect("valid random graph");
    match labels {
        None => g,
        Some(spec) => relabel(&g, spec, rng),
    }
}

fn relabel<R: Rng>(g: &Graph, spec: &LabelSpec, rng: &mut R) -> Graph {
    let ls = (0..g.n())
        .map(|_| (0..spec.ell).map(|_| Value::Exact(spec.values[rng.gen_range(0..spec.values.len())].clone())).collect())
        .collect();
    let e: Vec<_> = g.edges().collect();
    Graph::new(g.n(), &e, Some(ls)).expect("valid relabel")
}

/// Pairs `(i, j)`, `i < j`, ordered by `j` then `i`, so the pairs among the
/// first `m` vertices form a prefix.
fn pair_order(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|j| (0..j).map(move |i| (i, j))).collect()
}

fn decode(n: usize, code: u64) -> Graph {
    let pairs = pair_order(n);
    let m = pairs.len();
    let e: Vec<_> = pairs.iter().enumerate().filter(|(b, _)| code >> (m - 1 - b) & 1 == 1).map(|(_, &p)| p).collect();
    Graph::unlabelled(n, &e).expect("valid decode")
}

/// Canonical code: the minimum adjacency code over all relabelings that list
/// vertices by non-increasing degree. Isomorphic graphs get equal codes.
/// Labels are ignored. Supports `n <= 11`.
pub fn canonical_code(g: &Graph) -> u64 {
    let n = g.n();
    assert!(n <= 11, "canonical_code supports n <= 11");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| core::cmp::Reverse(g.degree(v)));
    let degs: Vec<usize> = order.iter().map(|&v| g.degree(v)).collect();
    let m = n * n.saturating_sub(1) / 2;
    let mut st = Canon { g, degs, used: vec![false; n], pos: vec![0; n], best: u64::MAX, m };
    st.search(0, 0);
    st.best
}

struct Canon<'a> {
    g: &'a Graph,
    degs: Vec<usize>,
    used: Vec<bool>,
    pos: Vec<usize>,
    best: u64,
    m: usize,
}

impl Canon<'_> {
    /// `code` holds the bits for pairs among positions `< j`, left-aligned to `m` bits.
    fn search(&mut self, j: usize, code: u64) {
        let n = self.g.n();
        if j == n {
            self.best = self.best.min(code);
            return;
        }
        let done = j * j.saturating_sub(1) / 2;
        for v in 0..n {
            if self.used[v] || self.g.degree(v) != self.degs[j] {
                continue;
            }
            let mut c = code;
            for i in 0..j {
                if self.g.has_edge(self.pos[i], v) {
                    c |= 1 << (self.m - 1 - (done + i));
                }
            }
            let fixed = done + j;
            let mask = if fixed == 0 { 0 } else { !0u64 << (self.m - fixed) };
            if self.best != u64::MAX && (c & mask) > (self.best & mask) {
                continue;
            }
            self.used[v] = true;
            self.pos[j] = v;
            self.search(j + 1, c);
            self.used[v] = false;
        }
    }
}

fn exhaustive(n: usize) -> Result<Vec<Graph>, CorpusError> {
    if n > 7 {
        return Err(CorpusError::TooLarge(n));
    }
    let pairs = pair_order(n);
    let m = pairs.len();
    let mut seen = BTreeSet::new();
    for mask in 0u64..(1u64 << m) {
        let e: Vec<_> = pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &p)| p).collect();
        let g = Graph::unlabelled(n, &e).expect("valid");
        seen.insert(canonical_code(&g));
    }
    Ok(seen.into_iter().map(|c| decode(n, c)).collect())
}
