//! Brute-force ground truth for small graphs.
//!
//! Everything here is exhaustive and deliberately naive: canonical forms
//! are minima over vertex orders, recognition tries every induced subgraph
//! and bipartition, and generation closes the single vertex under pendant
//! and twin extensions. The point is independence from the grammars.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::grammars::GraphClass;

/// Storage limit of [`SmallGraph`].
pub const MAX_VERTICES: usize = 16;
/// Largest graph [`canonicalize`] accepts.
pub const CANONICAL_CAP: usize = 12;
/// Largest size for generation, split recognition and automorphisms.
pub const GENERATION_CAP: usize = 8;
/// Largest size for the exhaustive labeled filter.
pub const EXHAUSTIVE_CAP: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{n} vertices exceeds the oracle cap of {cap}")]
    TooLarge { n: usize, cap: usize },
}

fn check_cap(n: usize, cap: usize) -> Result<(), OracleError> {
    if n > cap {
        Err(OracleError::TooLarge { n, cap })
    } else {
        Ok(())
    }
}

/// Simple undirected graph on vertices `0..n`; row `v` holds the
/// neighbourhood of `v` as a bit set.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SmallGraph {
    n: usize,
    adj: Vec<u16>,
}

impl SmallGraph {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_VERTICES, "at most {MAX_VERTICES} vertices");
        SmallGraph { n, adj: vec![0; n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::empty(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Self::path(n);
        if n >= 3 {
            g.add_edge(0, n - 1);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(u != v && u < self.n && v < self.n, "edge {u}-{v} invalid on {} vertices", self.n);
        self.adj[u] |= 1 << v;
        self.adj[v] |= 1 << u;
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u] >> v & 1 == 1
    }

    pub fn neighbours(&self, v: usize) -> u16 {
        self.adj[v]
    }

    pub fn degree(&self, v: usize) -> u32 {
        self.adj[v].count_ones()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.count_ones() as usize).sum::<usize>() / 2
    }

    fn full_mask(&self) -> u16 {
        ((1u32 << self.n) - 1) as u16
    }

    /// Whether the vertices of `mask` induce a connected subgraph.
    pub fn is_connected_within(&self, mask: u16) -> bool {
        if mask == 0 {
            return true;
        }
        let mut seen = mask & mask.wrapping_neg();
        let mut frontier = seen;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = self.adj[v] & mask & !seen;
            seen |= fresh;
            frontier |= fresh;
        }
        seen == mask
    }

    pub fn is_connected(&self) -> bool {
        self.is_connected_within(self.full_mask())
    }

    /// The subgraph induced by `mask`, relabelled in increasing order.
    pub fn induced(&self, mask: u16) -> SmallGraph {
        let keep: Vec<usize> = (0..self.n).filter(|&v| mask >> v & 1 == 1).collect();
        let mut g = SmallGraph::empty(keep.len());
        for (i, &u) in keep.iter().enumerate() {
            for (j, &v) in keep.iter().enumerate().skip(i + 1) {
                if self.has_edge(u, v) {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    /// The graph with `v` removed.
    pub fn without(&self, v: usize) -> SmallGraph {
        self.induced(self.full_mask() & !(1 << v))
    }

    /// The graph with a new vertex `n` adjacent exactly to `neighbours`.
    pub fn with_vertex(&self, neighbours: u16) -> SmallGraph {
        let mut g = self.clone();
        g.n += 1;
        g.adj.push(0);
        let new = self.n;
        for v in 0..self.n {
            if neighbours >> v & 1 == 1 {
                g.add_edge(v, new);
            }
        }
        g
    }

    /// Upper-triangle adjacency bits row by row: `(0,1), (0,2), …, (n-2,n-1)`.
    pub fn upper_triangle(&self) -> String {
        let mut s = String::with_capacity(self.n * self.n / 2);
        for u in 0..self.n {
            for v in u + 1..self.n {
                s.push(if self.has_edge(u, v) { '1' } else { '0' });
            }
        }
        s
    }
}

impl fmt::Debug for SmallGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmallGraph({} {})", self.n, self.upper_triangle())
    }
}

/// Isomorphism invariant: the adjacency bits of the lexicographically
/// smallest vertex order, read column by column
/// `(0,1), (0,2), (1,2), (0,3), …` with the first bit most significant.
/// Keys of different sizes order by size first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey {
    n: u8,
    bits: u128,
}

impl CanonicalKey {
    pub fn n(&self) -> usize {
        self.n as usize
    }

    /// The graph whose vertex order realises the key.
    pub fn graph(&self) -> SmallGraph {
        let n = self.n();
        let m = pair_count(n);
        let mut g = SmallGraph::empty(n);
        let mut idx = 0;
        for k in 1..n {
            for i in 0..k {
                if self.bits >> (m - 1 - idx) & 1 == 1 {
                    g.add_edge(i, k);
                }
                idx += 1;
            }
        }
        g
    }
}

fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Vertex order constraint shared by the canonical search and the
/// automorphism filter: position `p` takes a vertex of degree `slots[p]`,
/// degrees nondecreasing.
fn degree_slots(g: &SmallGraph) -> Vec<u32> {
    let mut d: Vec<u32> = (0..g.n).map(|v| g.degree(v)).collect();
    d.sort_unstable();
    d
}

struct CanonicalSearch<'a> {
    g: &'a SmallGraph,
    slots: Vec<u32>,
    order: Vec<usize>,
    best: Option<u128>,
    ties: u64,
    m: usize,
}

impl CanonicalSearch<'_> {
    /// `prefix` holds the first `bits_done` key bits of the current order.
    fn place(&mut self, used: u16, prefix: u128, bits_done: usize) {
        let pos = self.order.len();
        if pos == self.g.n {
            match self.best {
                Some(b) if prefix > b => {}
                Some(b) if prefix == b => self.ties += 1,
                _ => {
                    self.best = Some(prefix);
                    self.ties = 1;
                }
            }
            return;
        }
        for v in 0..self.g.n {
            if used >> v & 1 == 1 || self.g.degree(v) != self.slots[pos] {
                continue;
            }
            let mut next = prefix;
            for &u in &self.order {
                next = next << 1 | self.g.has_edge(u, v) as u128;
            }
            let done = bits_done + pos;
            if let Some(b) = self.best {
                if next > b >> (self.m - done) {
                    continue;
                }
            }
            self.order.push(v);
            self.place(used | 1 << v, next, done);
            self.order.pop();
        }
    }
}

fn canonical_search(g: &SmallGraph) -> (CanonicalKey, u64) {
    let mut s =
        CanonicalSearch { g, slots: degree_slots(g), order: Vec::new(), best: None, ties: 0, m: pair_count(g.n) };
    s.place(0, 0, 0);
    (CanonicalKey { n: g.n as u8, bits: s.best.unwrap_or(0) }, s.ties)
}

pub fn canonicalize(g: &SmallGraph) -> Result<CanonicalKey, OracleError> {
    check_cap(g.n, CANONICAL_CAP)?;
    Ok(canonical_search(g).0)
}

/// `|Aut(g)|` by building permutations vertex by vertex, keeping only
/// degree-preserving assignments consistent with every adjacency so far.
pub fn automorphism_count(g: &SmallGraph) -> Result<u64, OracleError> {
    check_cap(g.n, GENERATION_CAP)?;
    fn extend(g: &SmallGraph, image: &mut Vec<usize>, used: u16) -> u64 {
        let v = image.len();
        if v == g.n {
            return 1;
        }
        let mut total = 0;
        for w in 0..g.n {
            if used >> w & 1 == 1 || g.degree(w) != g.degree(v) {
                continue;
            }
            if (0..v).all(|u| g.has_edge(u, v) == g.has_edge(image[u], w)) {
                image.push(w);
                total += extend(g, image, used | 1 << w);
                image.pop();
            }
        }
        total
    }
    Ok(extend(g, &mut Vec::with_capacity(g.n), 0))
}

/// Whether `(v1, mask & !v1)` is a split of the subgraph induced by `mask`:
/// both sides have at least two vertices and every vertex of one side with a
/// neighbour across sees the whole frontier of the other side.
fn is_split(g: &SmallGraph, mask: u16, v1: u16) -> bool {
    let v2 = mask & !v1;
    if v1.count_ones() < 2 || v2.count_ones() < 2 {
        return false;
    }
    let frontier2 = (0..g.n).filter(|&v| v1 >> v & 1 == 1).fold(0u16, |acc, v| acc | (g.adj[v] & v2));
    (0..g.n).filter(|&v| v1 >> v & 1 == 1).all(|v| {
        let across = g.adj[v] & v2;
        across == 0 || across == frontier2
    })
}

fn has_split(g: &SmallGraph, mask: u16) -> bool {
    // fix the lowest vertex in V1 so each bipartition is tried once
    let low = mask & mask.wrapping_neg();
    let rest = mask & !low;
    let mut sub = rest;
    loop {
        if is_split(g, mask, low | sub) {
            return true;
        }
        if sub == 0 {
            return false;
        }
        sub = (sub - 1) & rest;
    }
}

/// Distance-hereditary test from the definition: every connected induced
/// subgraph on at least four vertices has a split.
pub fn is_dh_by_splits(g: &SmallGraph) -> Result<bool, OracleError> {
    check_cap(g.n, GENERATION_CAP)?;
    let full = g.full_mask();
    let mut mask = full;
    loop {
        if mask.count_ones() >= 4 && g.is_connected_within(mask) && !has_split(g, mask) {
            return Ok(false);
        }
        if mask == 0 {
            return Ok(true);
        }
        mask = (mask - 1) & full;
    }
}

/// A vertex that is pendant or has a true or false twin, if any.
fn prunable_vertex(g: &SmallGraph) -> Option<usize> {
    for u in 0..g.n {
        if g.degree(u) == 1 {
            return Some(u);
        }
        for v in u + 1..g.n {
            let (nu, nv) = (g.adj[u] & !(1 << v), g.adj[v] & !(1 << u));
            if nu == nv {
                return Some(u);
            }
        }
    }
    None
}

/// Distance-hereditary test by elimination: a connected graph is
/// distance-hereditary iff it shrinks to one vertex by deleting pendant
/// vertices and twins.
pub fn is_dh_by_pruning(g: &SmallGraph) -> bool {
    let mut g = g.clone();
    while g.n > 1 {
        match prunable_vertex(&g) {
            Some(v) => g = g.without(v),
            None => return false,
        }
    }
    true
}

/// Every connected graph on `n` vertices, one per isomorphism class.
pub fn connected_graphs(n: usize) -> Result<BTreeSet<CanonicalKey>, OracleError> {
    check_cap(n, GENERATION_CAP)?;
    let mut out = BTreeSet::new();
    if n == 0 {
        return Ok(out);
    }
    // every connected graph has a vertex whose removal keeps it connected,
    // so extending connected graphs by one vertex reaches them all
    let mut level = BTreeSet::from([canonical_search(&SmallGraph::empty(1)).0]);
    for _ in 1..n {
        let mut next = BTreeSet::new();
        for key in &level {
            let g = key.graph();
            for nbrs in 1..=g.full_mask() {
                next.insert(canonical_search(&g.with_vertex(nbrs)).0);
            }
        }
        level = next;
    }
    out.extend(level);
    Ok(out)
}

/// Connected distance-hereditary graphs on `n` vertices, from the single
/// vertex by adding pendant vertices, true twins and false twins.
pub fn generate_all_dh(n: usize) -> Result<BTreeSet<CanonicalKey>, OracleError> {
    check_cap(n, GENERATION_CAP)?;
    if n == 0 {
        return Ok(BTreeSet::new());
    }
    let mut level = BTreeSet::from([canonical_search(&SmallGraph::empty(1)).0]);
    for _ in 1..n {
        let mut next = BTreeSet::new();
        for key in &level {
            let g = key.graph();
            for v in 0..g.n {
                let pendant = 1u16 << v;
                let false_twin = g.adj[v];
                let true_twin = g.adj[v] | 1 << v;
                // a false twin of an isolated vertex would disconnect
                for nbrs in [pendant, false_twin, true_twin].into_iter().filter(|&x| x != 0) {
                    next.insert(canonical_search(&g.with_vertex(nbrs)).0);
                }
            }
        }
        level = next;
    }
    Ok(level)
}

/// Decodes a Prüfer sequence over `0..k` into the edges of a labelled tree.
fn prufer_tree(seq: &[usize], k: usize) -> SmallGraph {
    let mut degree = vec![1usize; k];
    for &s in seq {
        degree[s] += 1;
    }
    let mut g = SmallGraph::empty(k);
    for &s in seq {
        let leaf = (0..k).find(|&v| degree[v] == 1).expect("a leaf remains");
        g.add_edge(leaf, s);
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let last: Vec<usize> = (0..k).filter(|&v| degree[v] == 1).collect();
    if let [u, v] = last[..] {
        g.add_edge(u, v);
    }
    g
}

/// Unlabelled trees on `k` vertices, from all labelled ones.
pub fn unlabeled_trees(k: usize) -> Result<BTreeSet<CanonicalKey>, OracleError> {
    check_cap(k, GENERATION_CAP)?;
    let mut out = BTreeSet::new();
    match k {
        0 => return Ok(out),
        1 | 2 => {
            out.insert(canonical_search(&SmallGraph::complete(k)).0);
            return Ok(out);
        }
        _ => {}
    }
    let len = k - 2;
    let mut seq = vec![0usize; len];
    loop {
        out.insert(canonical_search(&prufer_tree(&seq, k)).0);
        // odometer over 0..k in each position
        let mut i = 0;
        while i < len && seq[i] == k - 1 {
            seq[i] = 0;
            i += 1;
        }
        if i == len {
            break;
        }
        seq[i] += 1;
    }
    Ok(out)
}

/// Every way of writing `n` as an ordered sum of `k` positive parts.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=n.saturating_sub(k - 1) {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Replaces vertex `t` of `tree` by a clique of `sizes[t]` vertices, fully
/// joined to the cliques of its tree neighbours.
pub fn substitute_cliques(tree: &SmallGraph, sizes: &[usize]) -> SmallGraph {
    let mut start = Vec::with_capacity(sizes.len());
    let mut total = 0;
    for &s in sizes {
        start.push(total);
        total += s;
    }
    let mut g = SmallGraph::empty(total);
    let block = |t: usize| start[t]..start[t] + sizes[t];
    for t in 0..tree.n {
        for u in block(t) {
            for v in block(t).filter(|&v| v > u) {
                g.add_edge(u, v);
            }
        }
        for s in (t + 1..tree.n).filter(|&s| tree.has_edge(t, s)) {
            for u in block(t) {
                for v in block(s) {
                    g.add_edge(u, v);
                }
            }
        }
    }
    g
}

/// Connected 3-leaf powers on `n` vertices: trees with every vertex
/// replaced by a nonempty clique.
pub fn generate_all_3lp(n: usize) -> Result<BTreeSet<CanonicalKey>, OracleError> {
    check_cap(n, GENERATION_CAP)?;
    let mut out = BTreeSet::new();
    for k in 1..=n {
        for tree in unlabeled_trees(k)? {
            let t = tree.graph();
            for sizes in compositions(n, k) {
                out.insert(canonical_search(&substitute_cliques(&t, &sizes)).0);
            }
        }
    }
    Ok(out)
}

pub fn generate_all(class: GraphClass, n: usize) -> Result<BTreeSet<CanonicalKey>, OracleError> {
    match class {
        GraphClass::DistanceHereditary => generate_all_dh(n),
        GraphClass::ThreeLeafPower => generate_all_3lp(n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabeledMode {
    /// Filter all `2^(n(n-1)/2)` labelled graphs through the unlabelled
    /// class members.
    Exhaustive,
    /// Sum `n!/|Aut(g)|` over the unlabelled class members.
    Orbit,
}

pub fn count_labeled(class: GraphClass, n: usize, mode: LabeledMode) -> Result<BigInt, OracleError> {
    let members = generate_all(class, n)?;
    match mode {
        LabeledMode::Exhaustive => {
            check_cap(n, EXHAUSTIVE_CAP)?;
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            let mut count = 0u64;
            for bits in 0u64..1 << pairs.len() {
                let mut g = SmallGraph::empty(n);
                for (i, &(u, v)) in pairs.iter().enumerate() {
                    if bits >> i & 1 == 1 {
                        g.add_edge(u, v);
                    }
                }
                if g.is_connected() && members.contains(&canonical_search(&g).0) {
                    count += 1;
                }
            }
            Ok(BigInt::from(count))
        }
        LabeledMode::Orbit => {
            let fact: u64 = (1..=n as u64).product();
            let mut total = BigInt::zero();
            for key in &members {
                total += fact / automorphism_count(&key.graph())?;
            }
            Ok(total)
        }
    }
}

/// One line per graph, `n` followed by the upper-triangle bits of the
/// canonical vertex order, in key order.
pub fn export_graphs(keys: &BTreeSet<CanonicalKey>) -> String {
    let mut out = String::new();
    for key in keys {
        out.push_str(&format!("{} {}\n", key.n(), key.graph().upper_triangle()));
    }
    out
}

/// Per-size summary of the oracle against the grammar counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecognizerAgreement {
    /// Number of connected graphs examined per size.
    pub graphs: BTreeMap<usize, usize>,
    /// Graphs on which the two recognizers disagree.
    pub disagreements: Vec<SmallGraph>,
}

/// Runs both distance-hereditary recognizers on every connected graph with
/// at most `max_n` vertices.
pub fn recognizer_agreement(max_n: usize) -> Result<RecognizerAgreement, OracleError> {
    let mut graphs = BTreeMap::new();
    let mut disagreements = Vec::new();
    for n in 1..=max_n {
        let all = connected_graphs(n)?;
        graphs.insert(n, all.len());
        for key in all {
            let g = key.graph();
            if is_dh_by_splits(&g)? != is_dh_by_pruning(&g) {
                disagreements.push(g);
            }
        }
    }
    Ok(RecognizerAgreement { graphs, disagreements })
}

/// `n!` as a big integer.
pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}
