//! Finite k-uniform hypergraphs, homomorphism counts and the fixed enumeration
//! of labeled hypergraphs used by the truncated density metric.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{ratio, Rational};
use crate::subsets::{binomial, k_subsets, MAX_ARITY};

/// Default cap on `|V(H)|^{|V(F)|}` for [`density_finite`].
pub const FINITE_WORK_BOUND: u128 = 10_000_000_000;

/// A k-uniform hypergraph on vertices `1..=n`. Edges are sorted k-sets, which
/// stand for all `k!` orderings of the same tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteHypergraph {
    k: usize,
    n: usize,
    edges: BTreeSet<Vec<usize>>,
}

impl FiniteHypergraph {
    pub fn new<I, E>(k: usize, n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: AsRef<[usize]>,
    {
        if k == 0 {
            return Err(Error::ZeroArity);
        }
        if k > MAX_ARITY {
            return Err(Error::ArityTooLarge(k));
        }
        let mut set = BTreeSet::new();
        for e in edges {
            let mut e = e.as_ref().to_vec();
            if e.len() != k {
                return Err(Error::InvalidEdge(format!("{e:?} does not have {k} vertices")));
            }
            e.sort_unstable();
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidEdge(format!("{e:?} repeats a vertex")));
            }
            if e[0] == 0 || e[k - 1] > n {
                return Err(Error::InvalidEdge(format!("{e:?} is outside 1..={n}")));
            }
            set.insert(e);
        }
        Ok(FiniteHypergraph { k, n, edges: set })
    }

    pub fn edgeless(k: usize, n: usize) -> Result<Self> {
        Self::new(k, n, Vec::<Vec<usize>>::new())
    }

    /// The complete k-uniform hypergraph on `n` vertices.
    pub fn complete(k: usize, n: usize) -> Result<Self> {
        Self::new(k, n, k_subsets(n, k))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = &[usize]> {
        self.edges.iter().map(|e| e.as_slice())
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, e: &[usize]) -> bool {
        let mut e = e.to_vec();
        e.sort_unstable();
        self.edges.contains(&e)
    }

    /// Disjoint union; the vertices of `other` are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Self) -> Result<Self> {
        if self.k != other.k {
            return Err(Error::ArityMismatch {
                left: self.k,
                right: other.k,
            });
        }
        let shifted = other
            .edges
            .iter()
            .map(|e| e.iter().map(|v| v + self.n).collect::<Vec<_>>());
        Self::new(self.k, self.n + other.n, self.edges.iter().cloned().chain(shifted))
    }

    /// Relabels vertex `v` as `perm[v - 1] + 1` (`perm` is 0-based one-line notation).
    pub fn relabel(&self, perm: &[u32]) -> Result<Self> {
        if perm.len() != self.n || !crate::perm::is_permutation(perm) {
            return Err(Error::InvalidPermutation(format!(
                "{perm:?} is not a permutation of {} vertices",
                self.n
            )));
        }
        Self::new(
            self.k,
            self.n,
            self.edges
                .iter()
                .map(|e| e.iter().map(|&v| perm[v - 1] as usize + 1).collect::<Vec<_>>()),
        )
    }

    pub fn to_json(&self) -> String {
        let file = HypergraphFile {
            k: self.k,
            n: self.n,
            edges: self.edges.iter().cloned().collect(),
        };
        serde_json::to_string(&file).expect("hypergraph serialization") + "\n"
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: HypergraphFile = serde_json::from_str(s)?;
        for e in &file.edges {
            if e.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Format(format!("edge {e:?} is not strictly ascending")));
            }
        }
        Self::new(file.k, file.n, file.edges)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HypergraphFile {
    k: usize,
    n: usize,
    edges: Vec<Vec<usize>>,
}

/// Edge lookup keyed by the sorted 0-based vertex tuple in base `n`.
struct EdgeLookup {
    n: u128,
    keys: HashSet<u128>,
}

impl EdgeLookup {
    fn new(h: &FiniteHypergraph) -> Self {
        let n = h.n as u128;
        let keys = h
            .edges
            .iter()
            .map(|e| e.iter().fold(0u128, |acc, &v| acc * n + (v as u128 - 1)))
            .collect();
        EdgeLookup { n, keys }
    }

    /// Whether the images (0-based, unsorted) are distinct and form an edge.
    fn hit(&self, images: &mut [usize]) -> bool {
        images.sort_unstable();
        if images.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        let key = images.iter().fold(0u128, |acc, &v| acc * self.n + v as u128);
        self.keys.contains(&key)
    }
}

/// Number of vertex maps `V(F) → V(H)` sending every edge of `F` onto an edge of `H`.
///
/// Maps need not be injective, but each edge must land on `k` distinct vertices.
/// The count is the same as scanning all `|V(H)|^{|V(F)|}` maps; edges are checked
/// as soon as their last vertex is placed, which prunes dead branches early.
pub fn hom_count(f: &FiniteHypergraph, h: &FiniteHypergraph) -> Result<u128> {
    if f.k != h.k {
        return Err(Error::ArityMismatch { left: f.k, right: h.k });
    }
    if f.n == 0 {
        return Ok(1);
    }
    if h.n == 0 {
        return Ok(0);
    }
    if f.edges.is_empty() {
        return Ok((h.n as u128).saturating_pow(f.n as u32));
    }
    // checks[v] = edges of F (0-based) whose largest vertex is v.
    let mut checks: Vec<Vec<Vec<usize>>> = vec![Vec::new(); f.n];
    for e in &f.edges {
        let e0: Vec<usize> = e.iter().map(|v| v - 1).collect();
        checks[*e0.last().unwrap()].push(e0);
    }
    let lookup = EdgeLookup::new(h);
    let count = (0..h.n)
        .into_par_iter()
        .map(|first| {
            let mut assign = vec![0usize; f.n];
            assign[0] = first;
            if !edges_ok(&checks[0], &assign, &lookup) {
                return 0;
            }
            extend(1, &mut assign, &checks, &lookup, h.n)
        })
        .sum();
    Ok(count)
}

fn edges_ok(edges: &[Vec<usize>], assign: &[usize], lookup: &EdgeLookup) -> bool {
    let mut buf = [0usize; MAX_ARITY];
    edges.iter().all(|e| {
        for (slot, &v) in buf.iter_mut().zip(e) {
            *slot = assign[v];
        }
        lookup.hit(&mut buf[..e.len()])
    })
}

fn extend(v: usize, assign: &mut [usize], checks: &[Vec<Vec<usize>>], lookup: &EdgeLookup, hn: usize) -> u128 {
    if v == assign.len() {
        return 1;
    }
    let mut total = 0;
    for x in 0..hn {
        assign[v] = x;
        if edges_ok(&checks[v], assign, lookup) {
            total += extend(v + 1, assign, checks, lookup, hn);
        }
    }
    total
}

/// `t(F, H) = hom(F, H) / |V(H)|^{|V(F)|}`.
pub fn density_finite(f: &FiniteHypergraph, h: &FiniteHypergraph) -> Result<Rational> {
    density_finite_bounded(f, h, FINITE_WORK_BOUND)
}

pub fn density_finite_bounded(f: &FiniteHypergraph, h: &FiniteHypergraph, bound: u128) -> Result<Rational> {
    if f.k != h.k {
        return Err(Error::ArityMismatch { left: f.k, right: h.k });
    }
    if h.n == 0 {
        return Err(Error::EmptyTarget);
    }
    let total = (h.n as u128).checked_pow(f.n as u32).unwrap_or(u128::MAX);
    if total > bound {
        return Err(Error::WorkBound {
            work: total,
            bound,
            index: None,
        });
    }
    Ok(ratio(hom_count(f, h)?, total))
}

/// The `index`-th (1-based) labeled k-uniform hypergraph: ordered by vertex
/// count `n = 1, 2, …` and then by edge bitmask, where bit `j` selects the
/// `j`-th k-subset of `[n]` in lexicographic order.
pub fn enumerate_hypergraphs(k: usize, index: u64) -> Result<FiniteHypergraph> {
    if k == 0 {
        return Err(Error::ZeroArity);
    }
    if index == 0 {
        return Err(Error::InvalidArgument("enumeration index starts at 1".into()));
    }
    let mut rest = (index - 1) as u128;
    let mut n = 1usize;
    loop {
        let slots = binomial(n, k);
        let block = if slots >= 127 { u128::MAX } else { 1u128 << slots };
        if rest < block {
            let subsets = k_subsets(n, k);
            let edges = subsets
                .into_iter()
                .enumerate()
                .filter(|(j, _)| rest >> j & 1 == 1)
                .map(|(_, e)| e);
            return FiniteHypergraph::new(k, n, edges);
        }
        rest -= block;
        n += 1;
    }
}

/// Number of enumeration entries with at most `n` vertices.
pub fn enumeration_prefix_len(k: usize, n: usize) -> u128 {
    (1..=n)
        .map(|v| {
            let slots = binomial(v, k);
            if slots >= 127 {
                u128::MAX
            } else {
                1u128 << slots
            }
        })
        .fold(0u128, |a, b| a.saturating_add(b))
}
