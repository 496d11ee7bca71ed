//! Graphs, edit sets and the exact (enumerative) edit-distance oracles.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Largest vertex count accepted by [`exact_ged`].
pub const EXACT_GED_BUDGET: usize = 9;
/// Largest vertex count accepted by [`exact_ged_ext`].
pub const EXACT_GED_EXT_BUDGET: usize = 8;

/// An unordered vertex pair stored as `(min, max)`.
pub type Pair = (usize, usize);

fn norm_pair(a: usize, b: usize) -> Pair {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A simple, loopless, unlabeled graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<Pair>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicates and out-of-range endpoints.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Pair>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::BadParams(format!("self-loop at vertex {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::BadParams(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if !set.insert(norm_pair(a, b)) {
                return Err(Error::BadParams(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(Self { n, edges: set })
    }

    /// Like [`Graph::new`] but silently collapses duplicate edges.
    pub fn from_edges_dedup(n: usize, edges: impl IntoIterator<Item = Pair>) -> Result<Self> {
        let uniq: BTreeSet<Pair> = edges.into_iter().map(|(a, b)| norm_pair(a, b)).collect();
        Self::new(n, uniq)
    }

    pub fn empty(n: usize) -> Self {
        Self { n, edges: BTreeSet::new() }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        Self { n, edges }
    }

    pub fn path(n: usize) -> Self {
        let edges = (1..n).map(|i| (i - 1, i)).collect();
        Self { n, edges }
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Self::path(n);
        if n >= 3 {
            g.edges.insert((0, n - 1));
        }
        g
    }

    /// Star `K_{1,leaves}` with centre 0.
    pub fn star(leaves: usize) -> Self {
        let edges = (1..=leaves).map(|i| (0, i)).collect();
        Self { n: leaves + 1, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = Pair> + '_ {
        self.edges.iter().copied()
    }

    /// Non-adjacent pairs `(i, j)` with `i < j`, in lexicographic order.
    pub fn non_edges(&self) -> Vec<Pair> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if !self.edges.contains(&(i, j)) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && self.edges.contains(&norm_pair(a, b))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            nb[a].push(b);
            nb[b].push(a);
        }
        nb
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let nb = self.neighbors();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &nb[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Relabels vertex `i` as `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.n);
        let edges = self.edges.iter().map(|&(a, b)| norm_pair(perm[a], perm[b])).collect();
        Graph { n: self.n, edges }
    }

    pub fn complement(&self) -> Graph {
        Graph { n: self.n, edges: self.non_edges().into_iter().collect() }
    }

    /// Zero-diagonal 0/1 adjacency matrix.
    pub fn adjacency(&self) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.n);
        for &(a, b) in &self.edges {
            m.set(a, b, 1.0);
        }
        m
    }

    /// Dense boolean adjacency, used by the enumerative oracles.
    pub(crate) fn bool_adjacency(&self) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; self.n]; self.n];
        for &(a, b) in &self.edges {
            m[a][b] = true;
            m[b][a] = true;
        }
        m
    }
}

/// Symmetric 0/1 matrix whose diagonal marks vertex presence.
///
/// An off-diagonal one at `(i, j)` requires ones at `(i, i)` and `(j, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexIndexedAdjacency {
    entries: SymMatrix,
}

impl VertexIndexedAdjacency {
    /// Embeds `g` into dimension `n >= g.n()`: vertices of `g` occupy the first
    /// indices, padding indices are absent.
    pub fn from_graph(g: &Graph, n: usize) -> Result<Self> {
        if n < g.n() {
            return Err(Error::DimensionMismatch { expected: g.n(), got: n });
        }
        let mut m = SymMatrix::zeros(n);
        for i in 0..g.n() {
            m.set(i, i, 1.0);
        }
        for (a, b) in g.edges() {
            m.set(a, b, 1.0);
        }
        Ok(Self { entries: m })
    }

    pub fn from_matrix(m: SymMatrix) -> Result<Self> {
        let n = m.dim();
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                if v != 0.0 && v != 1.0 {
                    return Err(Error::BadParams(format!("entry ({i}, {j}) = {v} is not 0/1")));
                }
                if i != j && v == 1.0 && (m.get(i, i) != 1.0 || m.get(j, j) != 1.0) {
                    return Err(Error::BadParams(format!(
                        "edge ({i}, {j}) touches an absent vertex"
                    )));
                }
            }
        }
        Ok(Self { entries: m })
    }

    pub fn n(&self) -> usize {
        self.entries.dim()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.entries
    }

    pub fn present_vertices(&self) -> usize {
        (0..self.n()).filter(|&i| self.entries.get(i, i) == 1.0).count()
    }
}

/// A set of edge additions and deletions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EditSet {
    adds: BTreeSet<Pair>,
    deletes: BTreeSet<Pair>,
}

impl EditSet {
    pub fn new(
        adds: impl IntoIterator<Item = Pair>,
        deletes: impl IntoIterator<Item = Pair>,
    ) -> Result<Self> {
        let mut a = BTreeSet::new();
        for (i, j) in adds {
            if i == j {
                return Err(Error::InconsistentEdit(format!("self-loop ({i}, {i})")));
            }
            a.insert(norm_pair(i, j));
        }
        let mut d = BTreeSet::new();
        for (i, j) in deletes {
            if i == j {
                return Err(Error::InconsistentEdit(format!("self-loop ({i}, {i})")));
            }
            d.insert(norm_pair(i, j));
        }
        if let Some(p) = a.intersection(&d).next() {
            return Err(Error::InconsistentEdit(format!("pair {p:?} both added and deleted")));
        }
        Ok(Self { adds: a, deletes: d })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn adds(&self) -> impl Iterator<Item = Pair> + '_ {
        self.adds.iter().copied()
    }

    pub fn deletes(&self) -> impl Iterator<Item = Pair> + '_ {
        self.deletes.iter().copied()
    }

    pub fn add_count(&self) -> usize {
        self.adds.len()
    }

    pub fn delete_count(&self) -> usize {
        self.deletes.len()
    }

    pub fn len(&self) -> usize {
        self.adds.len() + self.deletes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The edit that undoes this one.
    pub fn inverse(&self) -> EditSet {
        EditSet { adds: self.deletes.clone(), deletes: self.adds.clone() }
    }

    /// `E*`: `+1` on additions, `-1` on deletions.
    pub fn matrix(&self, n: usize) -> SymMatrix {
        let mut m = SymMatrix::zeros(n);
        for &(a, b) in &self.adds {
            m.set(a, b, 1.0);
        }
        for &(a, b) in &self.deletes {
            m.set(a, b, -1.0);
        }
        m
    }

    /// Support `Ω` as a boolean mask.
    pub fn support(&self, n: usize) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; n]; n];
        for &(a, b) in self.adds.iter().chain(self.deletes.iter()) {
            m[a][b] = true;
            m[b][a] = true;
        }
        m
    }

    /// `d`: largest number of edited pairs incident to a single vertex.
    pub fn max_degree(&self) -> usize {
        let mut counts = std::collections::BTreeMap::new();
        for &(a, b) in self.adds.iter().chain(self.deletes.iter()) {
            *counts.entry(a).or_insert(0usize) += 1;
            *counts.entry(b).or_insert(0usize) += 1;
        }
        counts.values().copied().max().unwrap_or(0)
    }

    pub fn check_against(&self, g: &Graph) -> Result<()> {
        for &(a, b) in &self.adds {
            if b >= g.n() {
                return Err(Error::InconsistentEdit(format!("pair ({a}, {b}) out of range")));
            }
            if g.has_edge(a, b) {
                return Err(Error::InconsistentEdit(format!("add targets existing edge ({a}, {b})")));
            }
        }
        for &(a, b) in &self.deletes {
            if !g.has_edge(a, b) {
                return Err(Error::InconsistentEdit(format!("delete targets non-edge ({a}, {b})")));
            }
        }
        Ok(())
    }
}

/// Applies `e` to `g`; `adjacency(result) = adjacency(g) + E*`.
pub fn apply_edits(g: &Graph, e: &EditSet) -> Result<Graph> {
    e.check_against(g)?;
    let mut edges = g.edges.clone();
    for p in e.deletes() {
        edges.remove(&p);
    }
    for p in e.adds() {
        edges.insert(p);
    }
    Ok(Graph { n: g.n, edges })
}

/// Number of additions for a requested mix; an exact half rounds toward deletions.
pub fn split_count(count: usize, add_fraction: f64) -> usize {
    let raw = count as f64 * add_fraction;
    let floor = raw.floor();
    let adds = if raw - floor > 0.5 + 1e-12 { floor + 1.0 } else { floor };
    (adds as usize).min(count)
}

/// Samples `count` edits uniformly without replacement with the requested mix.
pub fn random_edits(g: &Graph, count: usize, add_fraction: f64, seed: u64) -> Result<EditSet> {
    if !(0.0..=1.0).contains(&add_fraction) {
        return Err(Error::BadParams(format!("add fraction {add_fraction} outside [0, 1]")));
    }
    let n_add = split_count(count, add_fraction);
    let n_del = count - n_add;
    let mut non_edges = g.non_edges();
    let mut edges: Vec<Pair> = g.edges().collect();
    if n_add > non_edges.len() || n_del > edges.len() {
        return Err(Error::InfeasibleMix(format!(
            "{n_add} additions / {n_del} deletions requested, graph has {} non-edges / {} edges",
            non_edges.len(),
            edges.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (adds, _) = non_edges.partial_shuffle(&mut rng, n_add);
    let adds = adds.to_vec();
    let (dels, _) = edges.partial_shuffle(&mut rng, n_del);
    EditSet::new(adds, dels.to_vec())
}

/// Branch-and-bound search over vertex correspondences minimizing the number of
/// mismatched pairs. `a` and `b` are dense boolean matrices of equal size;
/// diagonal entries are compared too (they encode vertex presence).
fn min_mismatch(a: &[Vec<bool>], b: &[Vec<bool>], with_diagonal: bool) -> usize {
    let n = a.len();
    let identity_cost = {
        let mut c = 0;
        for i in 0..n {
            let start = if with_diagonal { i } else { i + 1 };
            for j in start..n {
                if a[i][j] != b[i][j] {
                    c += 1;
                }
            }
        }
        c
    };

    struct Search<'a> {
        a: &'a [Vec<bool>],
        b: &'a [Vec<bool>],
        diag: bool,
        perm: Vec<usize>,
        used: Vec<bool>,
        best: usize,
    }

    impl Search<'_> {
        fn go(&mut self, depth: usize, cost: usize) {
            let n = self.a.len();
            if cost >= self.best {
                return;
            }
            if depth == n {
                self.best = cost;
                return;
            }
            for t in 0..n {
                if self.used[t] {
                    continue;
                }
                let mut extra = 0;
                if self.diag && self.a[depth][depth] != self.b[t][t] {
                    extra += 1;
                }
                for prev in 0..depth {
                    if self.a[depth][prev] != self.b[t][self.perm[prev]] {
                        extra += 1;
                    }
                }
                self.used[t] = true;
                self.perm[depth] = t;
                self.go(depth + 1, cost + extra);
                self.used[t] = false;
            }
        }
    }

    let mut s = Search {
        a,
        b,
        diag: with_diagonal,
        perm: vec![0; n],
        used: vec![false; n],
        best: identity_cost + 1,
    };
    s.go(0, 0);
    s.best.min(identity_cost)
}

/// Exact edit distance between equal-size graphs (edge edits only).
pub fn exact_ged(g1: &Graph, g2: &Graph) -> Result<usize> {
    exact_ged_with_budget(g1, g2, EXACT_GED_BUDGET)
}

pub fn exact_ged_with_budget(g1: &Graph, g2: &Graph, budget: usize) -> Result<usize> {
    if g1.n() != g2.n() {
        return Err(Error::DimensionMismatch { expected: g1.n(), got: g2.n() });
    }
    if g1.n() > budget {
        return Err(Error::TooLarge { n: g1.n(), budget });
    }
    Ok(min_mismatch(&g1.bool_adjacency(), &g2.bool_adjacency(), false))
}

/// Exact edit distance allowing vertex insertions/deletions (unit costs).
pub fn exact_ged_ext(g1: &Graph, g2: &Graph) -> Result<usize> {
    let n = g1.n().max(g2.n());
    if n > EXACT_GED_EXT_BUDGET {
        return Err(Error::TooLarge { n, budget: EXACT_GED_EXT_BUDGET });
    }
    let to_bool = |g: &Graph| -> Vec<Vec<bool>> {
        let v = VertexIndexedAdjacency::from_graph(g, n).expect("padding dimension is the max");
        (0..n).map(|i| (0..n).map(|j| v.matrix().get(i, j) == 1.0).collect()).collect()
    };
    Ok(min_mismatch(&to_bool(g1), &to_bool(g2), true))
}
