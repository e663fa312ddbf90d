//! Canonical representatives of discrete-group orbits.
//!
//! The selector walks a fixed enumeration `V_1, V_2, …` of all symmetric
//! boolean tensors. At step `n` it picks `f_n`, the first `V_l` whose exact
//! `δ_1` distance to `W` is below `2^{-(n+1)}`. Then `h_n` is the first group
//! element with `d_1(f_n, h_n·f_{n+1}) < 2^{-n}`. The triangle inequality bounds
//! that gap by `3·2^{-(n+2)}`, so `h_n` always exists. The walk stops once
//! `f_n` is in the orbit of `W`, and the representative is
//! `h_0 · h_1 ⋯ h_{n-1} · f_n`, with `h_0` applied last.

use std::collections::HashSet;

use num_traits::Zero;
use petgraph::unionfind::UnionFind;
use rayon::prelude::*;

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::hypergraphon::{distance_d1, Grid, StepHypergraphon};
use crate::metrics::Alignment;
use crate::perm;
use crate::rational::{self, abs_diff, pow2_inv, ratio, Rational};
use crate::symmetry::{DiscreteGroup, GroupEnumeration, StructureMap};

const SCAN_BATCH: usize = 64;

/// The symmetric tensors at one resolution. Bit `b` of a local index sets the
/// `b`-th cell orbit, orbits ordered by their largest cell. This is ascending
/// order of the flattened bitmask with cell `i` as bit `i`.
#[derive(Debug, Clone)]
pub struct DenseBlock {
    pub m: usize,
    pub cells: usize,
    pub orbits: Vec<Vec<usize>>,
}

impl DenseBlock {
    fn new(k: usize, m: usize) -> Result<Self> {
        let grid = Grid::new(k, m)?;
        let mut orbits = grid.cell_orbits();
        orbits.sort_by_key(|o| *o.last().expect("orbits are nonempty"));
        Ok(DenseBlock {
            m,
            cells: grid.cells,
            orbits,
        })
    }

    /// `2^{#orbits}`, saturating.
    pub fn size(&self) -> u128 {
        1u128.checked_shl(self.orbits.len() as u32).unwrap_or(u128::MAX)
    }

    fn tensor(&self, k: usize, local: u128) -> Result<StepHypergraphon> {
        let mut cells = vec![false; self.cells];
        for (b, orbit) in self.orbits.iter().enumerate().take(128) {
            if local >> b & 1 == 1 {
                for &c in orbit {
                    cells[c] = true;
                }
            }
        }
        StepHypergraphon::new(k, self.m, cells)
    }
}

/// The fixed enumeration `V_1, V_2, …` of symmetric boolean tensors:
/// resolutions `m = 1, 2, …` in order, each in ascending bitmask order.
#[derive(Debug, Clone)]
pub struct DenseEnumeration {
    k: usize,
    blocks: Vec<DenseBlock>,
}

impl DenseEnumeration {
    pub fn new(k: usize) -> Result<Self> {
        Grid::new(k, 1)?;
        Ok(DenseEnumeration { k, blocks: Vec::new() })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn block(&mut self, m: usize) -> Result<&DenseBlock> {
        while self.blocks.len() < m {
            let next = DenseBlock::new(self.k, self.blocks.len() + 1)?;
            self.blocks.push(next);
        }
        Ok(&self.blocks[m - 1])
    }

    /// 1-based index of the first tensor at resolution `m`.
    pub fn block_start(&mut self, m: usize) -> Result<u128> {
        let mut start = 1u128;
        for r in 1..m {
            start = start.saturating_add(self.block(r)?.size());
        }
        Ok(start)
    }

    pub fn locate(&mut self, index: u128) -> Result<(usize, u128)> {
        if index == 0 {
            return Err(Error::InvalidArgument("dense enumeration starts at 1".into()));
        }
        let mut rest = index - 1;
        let mut m = 1;
        loop {
            let size = self.block(m)?.size();
            if rest < size {
                return Ok((m, rest));
            }
            rest -= size;
            m += 1;
        }
    }

    pub fn get(&mut self, index: u128) -> Result<StepHypergraphon> {
        let (m, local) = self.locate(index)?;
        let k = self.k;
        self.block(m)?.tensor(k, local)
    }

    /// Index of `w` itself (at its own resolution).
    pub fn index_of(&mut self, w: &StepHypergraphon) -> Result<u128> {
        if w.k() != self.k {
            return Err(Error::ArityMismatch {
                left: self.k,
                right: w.k(),
            });
        }
        if !w.is_symmetric() {
            return Err(Error::InvalidArgument("tensor is not symmetric".into()));
        }
        let start = self.block_start(w.m())?;
        let block = self.block(w.m())?;
        if block.orbits.len() > 127 {
            return Err(Error::CapExceeded {
                what: "dense index",
                cap: u128::MAX,
                detail: Some(format!("resolution {} has {} cell orbits", w.m(), block.orbits.len())),
            });
        }
        let local = block
            .orbits
            .iter()
            .enumerate()
            .filter(|(_, o)| w.cells()[o[0]])
            .fold(0u128, |acc, (b, _)| acc | 1 << b);
        Ok(start + local)
    }
}

/// The `index`-th (1-based) symmetric tensor of arity `k`.
pub fn enumerate_dense(k: usize, index: u128) -> Result<StepHypergraphon> {
    DenseEnumeration::new(k)?.get(index)
}

/// Inverse of [`enumerate_dense`].
pub fn dense_index(w: &StepHypergraphon) -> Result<u128> {
    DenseEnumeration::new(w.k())?.index_of(w)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FChoice {
    pub index: u128,
    pub candidate: StepHypergraphon,
    /// Exact `δ_1(V_l, W)` over the group at the common resolution.
    pub upper: Rational,
}

/// Scans the dense enumeration from a given index. Candidates are tested in
/// parallel batches but the first accepting index wins.
struct FScanner<'a> {
    w: &'a StepHypergraphon,
    measure: Rational,
    dense: DenseEnumeration,
    caps: &'a Caps,
}

impl<'a> FScanner<'a> {
    fn new(w: &'a StepHypergraphon, caps: &'a Caps) -> Result<Self> {
        Ok(FScanner {
            w,
            measure: w.measure(),
            dense: DenseEnumeration::new(w.k())?,
            caps,
        })
    }

    /// Exact `δ_1(v, W)`, or `None` when the measures alone rule out `< threshold`.
    fn test(&self, v: &StepHypergraphon, threshold: &Rational) -> Result<Option<Rational>> {
        // Pullbacks preserve measure, so |μ(V) − μ(W)| ≤ δ_1(V, W).
        if &abs_diff(&v.measure(), &self.measure) >= threshold {
            return Ok(None);
        }
        let align = Alignment::new(v, self.w)?;
        let (_, cost, _) = align.exhaustive(self.caps.max_permutations)?;
        let cells = Grid::new(v.k(), align.resolution())?.cells;
        Ok(Some(ratio(cost as u128, cells as u128)))
    }

    fn first_below(&mut self, exp: u32, start: u128) -> Result<FChoice> {
        let threshold = pow2_inv(exp);
        let mut best: Option<(u128, Rational)> = None;
        let mut next = start;
        while next <= self.caps.index {
            let end = (next + SCAN_BATCH as u128 - 1).min(self.caps.index);
            let batch = (next..=end)
                .map(|l| Ok((l, self.dense.get(l)?)))
                .collect::<Result<Vec<_>>>()?;
            let results: Vec<_> = batch.par_iter().map(|(_, v)| self.test(v, &threshold)).collect();
            for ((l, v), r) in batch.into_iter().zip(results) {
                if let Some(upper) = r? {
                    if upper < threshold {
                        return Ok(FChoice {
                            index: l,
                            candidate: v,
                            upper,
                        });
                    }
                    if best.as_ref().is_none_or(|b| upper < b.1) {
                        best = Some((l, upper));
                    }
                }
            }
            next = end + 1;
        }
        Err(Error::CapExceeded {
            what: "dense index",
            cap: self.caps.index,
            detail: Some(match best {
                Some((l, u)) => format!("best candidate V_{l} at δ_1 {}", rational::format(&u)),
                None => "no candidate came within the threshold".into(),
            }),
        })
    }
}

/// `f_n(W)`: the first `V_l` with `δ_1(V_l, W) < 2^{-n}`.
pub fn f_map(w: &StepHypergraphon, n: u32, caps: &Caps) -> Result<FChoice> {
    FScanner::new(w, caps)?.first_below(n, 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HChoice {
    pub index: u128,
    pub element: StructureMap,
    /// `d_1(F_n, g_p · F_{n+1})`.
    pub gap: Rational,
}

/// `h_n`: the first enumerated group element `g_p` with
/// `d_1(F_n, g_p · F_{n+1}) < 2^{-n}`.
pub fn h_map(fn0: &StepHypergraphon, fn1: &StepHypergraphon, n: u32, caps: &Caps) -> Result<HChoice> {
    if fn0.k() != fn1.k() {
        return Err(Error::ArityMismatch {
            left: fn0.k(),
            right: fn1.k(),
        });
    }
    let threshold = pow2_inv(n);
    let mut groups = GroupEnumeration::new(fn0.k())?;
    let mut next = 1u128;
    while next <= caps.scan {
        let end = (next + SCAN_BATCH as u128 - 1).min(caps.scan);
        let batch = (next..=end)
            .map(|p| Ok((p, groups.element(p)?)))
            .collect::<Result<Vec<_>>>()?;
        let gaps: Vec<_> = batch
            .par_iter()
            .map(|(_, g)| distance_d1(fn0, &g.pullback(fn1)?))
            .collect();
        for ((p, g), gap) in batch.into_iter().zip(gaps) {
            let gap = gap?;
            if gap < threshold {
                return Ok(HChoice {
                    index: p,
                    element: g,
                    gap,
                });
            }
        }
        next = end + 1;
    }
    Err(Error::CapExceeded {
        what: "group scan",
        cap: caps.scan,
        detail: Some(format!("no element brings the step-{n} pair within 2^-{n}")),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectorStep {
    pub n: usize,
    /// Index of `f_n`, accepted at threshold `2^{-(n+1)}`.
    pub f_index: u128,
    pub f_upper: Rational,
    pub h_index: u128,
    /// `d_1(f_n, h_n · f_{n+1})`, always below `2^{-n}`.
    pub gap: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectorTrace {
    pub k: usize,
    pub steps: Vec<SelectorStep>,
    pub result: StepHypergraphon,
    /// First step whose `f_n` lies in the orbit of the input.
    pub stabilized_at: Option<usize>,
    pub complete: bool,
}

/// Runs the selector until `f_n` reaches the orbit of `w` or `caps.max_steps`
/// steps pass. An unfinished run returns the partial product, flagged incomplete.
pub fn select(w: &StepHypergraphon, caps: &Caps) -> Result<SelectorTrace> {
    w.validate()
        .map_err(|v| Error::InvalidArgument(format!("input is not symmetric: {v}")))?;
    let mut scanner = FScanner::new(w, caps)?;
    let mut steps = Vec::new();
    let mut hs = Vec::new();
    let mut cur = scanner.first_below(1, 1)?;
    let mut stabilized_at = None;
    for n in 0..caps.max_steps {
        let done = cur.upper.is_zero();
        // Acceptance sets shrink as n grows, so the scan resumes at the last index.
        let next = if done {
            cur.clone()
        } else {
            scanner.first_below(n as u32 + 2, cur.index)?
        };
        let h = h_map(&cur.candidate, &next.candidate, n as u32, caps)?;
        steps.push(SelectorStep {
            n,
            f_index: cur.index,
            f_upper: cur.upper.clone(),
            h_index: h.index,
            gap: h.gap,
        });
        if done {
            stabilized_at = Some(n);
            break;
        }
        hs.push(h.element);
        cur = next;
    }
    let mut result = cur.candidate;
    for h in hs.iter().rev() {
        result = h.pullback(&result)?;
    }
    Ok(SelectorTrace {
        k: w.k(),
        steps,
        result,
        complete: stabilized_at.is_some(),
        stabilized_at,
    })
}

/// All symmetric tensors at `(k, m)` in enumeration order.
pub fn universe(k: usize, m: usize, caps: &Caps) -> Result<Vec<StepHypergraphon>> {
    let mut dense = DenseEnumeration::new(k)?;
    let block = dense.block(m)?.clone();
    let size = block.size();
    if size > caps.universe {
        return Err(Error::CapExceeded {
            what: "universe",
            cap: caps.universe,
            detail: Some(format!("{} cell orbits at k={k}, m={m}", block.orbits.len())),
        });
    }
    (0..size).map(|j| block.tensor(k, j)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transversal {
    pub universe: usize,
    pub representatives: Vec<StepHypergraphon>,
    /// Selector traces that did not stabilize (their inputs are not represented).
    pub incomplete: usize,
}

/// `{select(W) : W symmetric at (k, m)}` in order of first appearance.
pub fn transversal(k: usize, m: usize, caps: &Caps) -> Result<Transversal> {
    let all = universe(k, m, caps)?;
    let traces = all.par_iter().map(|w| select(w, caps)).collect::<Result<Vec<_>>>()?;
    let mut seen = HashSet::new();
    let mut representatives = Vec::new();
    let mut incomplete = 0;
    for t in traces {
        if !t.complete {
            incomplete += 1;
            continue;
        }
        if seen.insert(t.result.clone()) {
            representatives.push(t.result);
        }
    }
    Ok(Transversal {
        universe: all.len(),
        representatives,
        incomplete,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitPartition {
    /// For every universe member, the smallest local index in its orbit.
    pub labels: Vec<usize>,
    pub count: usize,
}

/// Orbits of the group at resolution `m` acting on the universe at `(k, m)`,
/// found by union-find over generator moves. Uses only pullbacks and the
/// enumeration, never a distance search.
pub fn orbit_partition(k: usize, m: usize, caps: &Caps) -> Result<OrbitPartition> {
    let all = universe(k, m, caps)?;
    let group = DiscreteGroup::new(k, m)?;
    let mut dense = DenseEnumeration::new(k)?;
    let start = dense.block_start(m)?;
    let id = perm::identity(m);
    let ids = vec![id.clone(); group.orbit_count()];
    let mut generators = Vec::new();
    for a in 0..m.saturating_sub(1) {
        let mut t = id.clone();
        t.swap(a, a + 1);
        generators.push(group.from_parts(&t, &ids)?);
        for o in 0..group.orbit_count() {
            let mut tops = ids.clone();
            tops[o] = t.clone();
            generators.push(group.from_parts(&id, &tops)?);
        }
    }
    let moved = all
        .par_iter()
        .map(|w| {
            let mut dense = DenseEnumeration::new(k)?;
            generators
                .iter()
                .map(|g| Ok((dense.index_of(&g.pullback(w)?)? - start) as usize))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut uf = UnionFind::<usize>::new(all.len());
    for (i, targets) in moved.iter().enumerate() {
        for &j in targets {
            uf.union(i, j);
        }
    }
    let mut smallest = vec![usize::MAX; all.len()];
    for i in 0..all.len() {
        let r = uf.find(i);
        smallest[r] = smallest[r].min(i);
    }
    let labels: Vec<usize> = (0..all.len()).map(|i| smallest[uf.find(i)]).collect();
    let count = labels.iter().enumerate().filter(|(i, l)| i == *l).count();
    Ok(OrbitPartition { labels, count })
}
