//! The pseudometrics `δ` (truncated), `δ_w` (certified lower bound) and `δ_1`
//! (search upper bound with a witness map).
//!
//! `δ_1` is searched one-sided over the discrete group at the common
//! resolution `L`: `min_g d_1(U, W^g)`. For `g = (π, T)` the distance splits
//! over lower fibers `u`:
//!
//! ```text
//! L^{|r([k])|} · d_1(U, W^g) = Σ_u #{ j : U(u, j) ≠ W(π·u, T(u)(j)) }
//! ```
//!
//! and for a fixed `π` the best `T(u)` simply matches set cells to set cells,
//! leaving `|#U(u, ·) − #W(π·u, ·)|` mismatches. Columns are constant along
//! `S_k`-orbits of fibers, so the matching is orbit-invariant and the optimum is
//! a genuine group element. The exhaustive strategy therefore enumerates the
//! `L!` choices of `π` and is exact over the whole group.

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::caps::Caps;
use crate::density::{density_vector, DensityVector};
use crate::error::{Error, Result};
use crate::hypergraph::enumerate_hypergraphs;
use crate::hypergraphon::{distance_d1, Grid, StepHypergraphon};
use crate::perm;
use crate::rational::{self, abs_diff, pow2_inv, ratio, Rational};
use crate::symmetry::{DiscreteGroup, StructureMap};

/// Initial temperature of the annealer, in units of `d_1`.
pub const ANNEAL_T0: f64 = 0.05;
/// Geometric cooling factor per iteration. The schedule does not depend on the
/// budget, so a longer run replays a shorter one and then continues.
pub const ANNEAL_COOLING: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Exhaustive,
    Greedy,
    Anneal,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Strategy::Exhaustive),
            "greedy" => Ok(Strategy::Greedy),
            "anneal" => Ok(Strategy::Anneal),
            other => Err(Error::InvalidArgument(format!("unknown strategy {other:?}"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Exhaustive => "exhaustive",
            Strategy::Greedy => "greedy",
            Strategy::Anneal => "anneal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedDelta {
    pub value: Rational,
    /// `2^{1-N}`; the untruncated `δ` lies in `[value, value + tail_bound]`.
    pub tail_bound: Rational,
}

fn check_pair(u: &StepHypergraphon, w: &StepHypergraphon) -> Result<()> {
    if u.k() != w.k() {
        return Err(Error::ArityMismatch {
            left: u.k(),
            right: w.k(),
        });
    }
    Ok(())
}

/// `Σ_{n ≤ N} |t(F_n, U) − t(F_n, W)| / 2^n`.
pub fn delta_truncated(u: &StepHypergraphon, w: &StepHypergraphon, n: u64) -> Result<TruncatedDelta> {
    check_pair(u, w)?;
    delta_truncated_from_vectors(&density_vector(u, n)?, &density_vector(w, n)?)
}

pub fn delta_truncated_from_vectors(du: &DensityVector, dw: &DensityVector) -> Result<TruncatedDelta> {
    if du.len() != dw.len() || du.k != dw.k {
        return Err(Error::InvalidArgument("density vectors differ in shape".into()));
    }
    let value = du
        .values
        .iter()
        .zip(&dw.values)
        .enumerate()
        .map(|(i, (a, b))| abs_diff(a, b) * pow2_inv(i as u32 + 1))
        .sum();
    let tail_bound = pow2_inv(du.len() as u32) * ratio(2, 1);
    Ok(TruncatedDelta { value, tail_bound })
}

/// `max_{n ≤ N, E(F_n) ≠ ∅} |t(F_n, U) − t(F_n, W)| / |E(F_n)|`, a lower bound
/// for `δ_w` and hence for `δ_1`.
pub fn delta_w_lower(u: &StepHypergraphon, w: &StepHypergraphon, n: u64) -> Result<Rational> {
    check_pair(u, w)?;
    delta_w_lower_from_vectors(&density_vector(u, n)?, &density_vector(w, n)?)
}

pub fn delta_w_lower_from_vectors(du: &DensityVector, dw: &DensityVector) -> Result<Rational> {
    if du.len() != dw.len() || du.k != dw.k {
        return Err(Error::InvalidArgument("density vectors differ in shape".into()));
    }
    let mut best = rational::zero();
    for (i, (a, b)) in du.values.iter().zip(&dw.values).enumerate() {
        let e = enumerate_hypergraphs(du.k, i as u64 + 1)?.edge_count();
        if e == 0 {
            continue;
        }
        let r = abs_diff(a, b) / Rational::from_integer(e.into());
        if r > best {
            best = r;
        }
    }
    Ok(best)
}

/// Result of a `δ_1` search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delta1Search {
    /// `d_1(U, W^witness)`, recomputed exactly from the witness.
    pub upper: Rational,
    pub witness: StructureMap,
    /// Candidate level-one permutations (or annealing states) evaluated.
    pub visited: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaOneBracket {
    pub lower: Rational,
    pub upper: Rational,
    pub witness: StructureMap,
}

/// The pair `(U, W)` brought to the common resolution, reduced to what the
/// alignment objective needs.
pub struct Alignment {
    k: usize,
    l: usize,
    lower_width: usize,
    singletons: usize,
    lower_cells: usize,
    total_cells: usize,
    target: StepHypergraphon,
    source: StepHypergraphon,
    target_counts: Vec<u32>,
    source_counts: Vec<u32>,
    /// Digits of every lower fiber.
    digits: Vec<Vec<usize>>,
    strides: Vec<usize>,
}

impl Alignment {
    pub fn new(u: &StepHypergraphon, w: &StepHypergraphon) -> Result<Self> {
        check_pair(u, w)?;
        let l = u.m().lcm(&w.m());
        let target = u.refine_to(l)?;
        let source = w.refine_to(l)?;
        let grid = Grid::new(u.k(), l)?;
        let lower_width = grid.dims - 1;
        let mut digits = Vec::with_capacity(grid.lower_cells);
        let mut buf = vec![0usize; grid.dims];
        for i in 0..grid.lower_cells {
            grid.decode_lower(i, &mut buf);
            digits.push(buf[..lower_width].to_vec());
        }
        let strides = (0..lower_width).map(|p| l.pow((lower_width - 1 - p) as u32)).collect();
        Ok(Alignment {
            k: u.k(),
            l,
            lower_width,
            singletons: u.k().min(lower_width),
            lower_cells: grid.lower_cells,
            total_cells: grid.cells,
            target_counts: target.column_counts(),
            source_counts: source.column_counts(),
            target,
            source,
            digits,
            strides,
        })
    }

    pub fn resolution(&self) -> usize {
        self.l
    }

    /// Index of `π·u`: `π` moves the singleton digits, the rest stay.
    fn mapped(&self, pi: &[u32], u: usize) -> usize {
        let d = &self.digits[u];
        let mut idx = 0;
        for p in 0..self.lower_width {
            let x = if p < self.singletons { pi[d[p]] as usize } else { d[p] };
            idx += x * self.strides[p];
        }
        idx
    }

    /// Mismatching cells for `π` with optimal top tables.
    pub fn cost(&self, pi: &[u32]) -> u64 {
        (0..self.lower_cells)
            .map(|u| {
                let a = self.target_counts[u] as i64;
                let b = self.source_counts[self.mapped(pi, u)] as i64;
                (a - b).unsigned_abs()
            })
            .sum()
    }

    /// Mismatching cells for `π` and explicit top tables (one per lower fiber).
    fn cost_with_tops(&self, pi: &[u32], orbit_of: &[usize], tops: &[Vec<u32>]) -> u64 {
        let l = self.l;
        let t = self.target.cells();
        let s = self.source.cells();
        (0..self.lower_cells)
            .map(|u| {
                let v = self.mapped(pi, u);
                let top = &tops[orbit_of[u]];
                (0..l).filter(|&j| t[u * l + j] != s[v * l + top[j] as usize]).count() as u64
            })
            .sum()
    }

    /// Top table over `u` sending set cells of `U`'s column onto set cells of
    /// `W`'s column at `π·u`, then unset onto unset, both in ascending order.
    fn matching(&self, u: usize, v: usize) -> Vec<u32> {
        let l = self.l;
        let t = &self.target.cells()[u * l..(u + 1) * l];
        let s = &self.source.cells()[v * l..(v + 1) * l];
        let from: Vec<usize> = (0..l).filter(|&j| t[j]).chain((0..l).filter(|&j| !t[j])).collect();
        let to: Vec<usize> = (0..l).filter(|&j| s[j]).chain((0..l).filter(|&j| !s[j])).collect();
        let mut table = vec![0u32; l];
        for (a, b) in from.into_iter().zip(to) {
            table[a] = b as u32;
        }
        table
    }

    /// The group element `(π, optimal T)`.
    pub fn witness(&self, pi: &[u32]) -> Result<StructureMap> {
        let top = (0..self.lower_cells)
            .map(|u| self.matching(u, self.mapped(pi, u)))
            .collect();
        let pi = if self.k == 1 {
            perm::identity(self.l)
        } else {
            pi.to_vec()
        };
        StructureMap::level_one_and_top(self.k, self.l, &pi, top)
    }

    fn to_rational(&self, cost: u64) -> Rational {
        ratio(cost as u128, self.total_cells as u128)
    }

    /// Exact minimum over the group. Ties go to the smallest rank of `π`.
    pub fn exhaustive(&self, max_permutations: u128) -> Result<(Vec<u32>, u64, u64)> {
        let total = perm::factorial(self.l);
        if total > max_permutations {
            return Err(Error::CapExceeded {
                what: "exhaustive permutation",
                cap: max_permutations,
                detail: Some(format!("resolution {} has {total} level-one permutations", self.l)),
            });
        }
        const CHUNK: u128 = 2048;
        let mut best: Option<(u64, u128)> = None;
        let mut visited = 0u64;
        let mut start = 0u128;
        while start < total {
            let end = (start + CHUNK).min(total);
            let local = (start..end)
                .into_par_iter()
                .map(|r| (self.cost(&perm::unrank(self.l, r)), r))
                .min()
                .expect("nonempty chunk");
            visited += (end - start) as u64;
            if best.is_none_or(|b| local < b) {
                best = Some(local);
            }
            if best.is_some_and(|b| b.0 == 0) {
                break;
            }
            start = end;
        }
        let (cost, r) = best.expect("at least one permutation");
        Ok((perm::unrank(self.l, r), cost, visited))
    }

    /// Best-improvement transposition search on `π`, starting at the identity.
    pub fn greedy(&self, budget: u64) -> (Vec<u32>, u64, u64) {
        let mut pi = perm::identity(self.l);
        let mut cost = self.cost(&pi);
        let mut visited = 1u64;
        for _ in 0..budget {
            let mut best: Option<(u64, usize, usize)> = None;
            for a in 0..self.l {
                for b in a + 1..self.l {
                    pi.swap(a, b);
                    let c = self.cost(&pi);
                    pi.swap(a, b);
                    visited += 1;
                    if best.is_none_or(|x| c < x.0) {
                        best = Some((c, a, b));
                    }
                }
            }
            match best {
                Some((c, a, b)) if c < cost => {
                    pi.swap(a, b);
                    cost = c;
                }
                _ => break,
            }
        }
        (pi, cost, visited)
    }

    /// Seeded simulated annealing over `π` and the per-orbit top tables.
    /// Returns the best state seen.
    pub fn anneal(&self, budget: u64, seed: u64) -> Result<(StructureMap, u64, u64)> {
        let group = DiscreteGroup::new(self.k, self.l)?;
        let orbit_of = group.orbit_of().to_vec();
        let mut pi = perm::identity(self.l);
        let mut tops = vec![perm::identity(self.l); group.orbit_count()];
        let mut cost = self.cost_with_tops(&pi, &orbit_of, &tops);
        let mut best = (cost, pi.clone(), tops.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut temp = ANNEAL_T0;
        let scale = self.total_cells as f64;
        if self.l >= 2 {
            for _ in 0..budget {
                let a = rng.gen_range(0..self.l);
                let mut b = rng.gen_range(0..self.l - 1);
                if b >= a {
                    b += 1;
                }
                let move_pi = self.k > 1 && rng.gen_bool(0.5);
                let orbit = rng.gen_range(0..tops.len());
                if move_pi {
                    pi.swap(a, b);
                } else {
                    tops[orbit].swap(a, b);
                }
                let next = self.cost_with_tops(&pi, &orbit_of, &tops);
                let delta = next as i64 - cost as i64;
                let accept = delta <= 0 || rng.gen::<f64>() < (-(delta as f64) / scale / temp).exp();
                if accept {
                    cost = next;
                    if cost < best.0 {
                        best = (cost, pi.clone(), tops.clone());
                    }
                } else if move_pi {
                    pi.swap(a, b);
                } else {
                    tops[orbit].swap(a, b);
                }
                temp *= ANNEAL_COOLING;
            }
        }
        let (cost, pi, tops) = best;
        let pi = if self.k == 1 { perm::identity(self.l) } else { pi };
        Ok((group.from_parts(&pi, &tops)?, cost, budget + 1))
    }
}

/// Upper bound for `δ_1(U, W)` with a witness `g` such that `d_1(U, W^g)` equals it.
pub fn delta1_upper(
    u: &StepHypergraphon,
    w: &StepHypergraphon,
    strategy: Strategy,
    budget: u64,
    seed: u64,
    caps: &Caps,
) -> Result<Delta1Search> {
    let align = Alignment::new(u, w)?;
    let (witness, cost, visited) = match strategy {
        Strategy::Exhaustive => {
            let (pi, cost, visited) = align.exhaustive(caps.max_permutations)?;
            (align.witness(&pi)?, cost, visited)
        }
        Strategy::Greedy => {
            let (pi, cost, visited) = align.greedy(budget);
            (align.witness(&pi)?, cost, visited)
        }
        Strategy::Anneal => align.anneal(budget, seed)?,
    };
    let upper = distance_d1(u, &witness.pullback(w)?)?;
    if upper != align.to_rational(cost) {
        return Err(Error::Internal(format!(
            "witness distance {} disagrees with search cost {}",
            rational::format(&upper),
            rational::format(&align.to_rational(cost))
        )));
    }
    Ok(Delta1Search {
        upper,
        witness,
        visited,
    })
}

/// `[δ_w lower bound, δ_1 search upper bound]` with the witness of the upper side.
pub fn delta1_bracket(
    u: &StepHypergraphon,
    w: &StepHypergraphon,
    n: u64,
    strategy: Strategy,
    budget: u64,
    seed: u64,
    caps: &Caps,
) -> Result<DeltaOneBracket> {
    let lower = delta_w_lower(u, w, n)?;
    let search = delta1_upper(u, w, strategy, budget, seed, caps)?;
    if lower > search.upper {
        return Err(Error::Internal(format!(
            "bracket inverted: lower {} > upper {}",
            rational::format(&lower),
            rational::format(&search.upper)
        )));
    }
    Ok(DeltaOneBracket {
        lower,
        upper: search.upper,
        witness: search.witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::enumeration_prefix_len;
    use crate::symmetry::GroupEnumeration;
    use num_traits::Zero;

    fn universe_k2m2() -> Vec<StepHypergraphon> {
        (0u32..256)
            .map(|mask| StepHypergraphon::new(2, 2, (0..8).map(|i| mask >> i & 1 == 1).collect()).unwrap())
            .filter(|w| w.is_symmetric())
            .collect()
    }

    /// Literal minimum over all 16 group elements at m = 2.
    fn brute_delta1(u: &StepHypergraphon, w: &StepHypergraphon) -> Rational {
        let g = DiscreteGroup::new(2, 2).unwrap();
        (0..g.size())
            .map(|j| distance_d1(u, &g.element(j).unwrap().pullback(w).unwrap()).unwrap())
            .min()
            .unwrap()
    }

    #[test]
    fn exhaustive_matches_group_bruteforce() {
        let uni = universe_k2m2();
        assert_eq!(uni.len(), 64);
        let caps = Caps::default();
        let mut greedy_equal = 0;
        for u in &uni {
            for w in &uni {
                let ex = delta1_upper(u, w, Strategy::Exhaustive, 0, 0, &caps).unwrap();
                assert_eq!(ex.upper, brute_delta1(u, w));
                assert!(ex.witness.commute_check().is_ok());
                let gr = delta1_upper(u, w, Strategy::Greedy, 10, 0, &caps).unwrap();
                assert!(gr.upper >= ex.upper);
                greedy_equal += (gr.upper == ex.upper) as usize;
            }
        }
        // One transposition covers Sym(2), so greedy is exact here.
        assert_eq!(greedy_equal, 64 * 64);
    }

    #[test]
    fn identical_and_orbit_pairs() {
        let caps = Caps::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut groups = GroupEnumeration::new(2).unwrap();
        for _ in 0..10 {
            let w = StepHypergraphon::random_symmetric(2, 2, 0.5, &mut rng).unwrap();
            let same = delta1_bracket(&w, &w, 11, Strategy::Exhaustive, 0, 0, &caps).unwrap();
            assert!(same.lower.is_zero() && same.upper.is_zero());
            assert!(same.witness.is_identity());
            let g = groups.element(rng.gen_range(1..=17)).unwrap();
            let moved = g.pullback(&w).unwrap();
            let b = delta1_bracket(&w, &moved, 11, Strategy::Exhaustive, 0, 0, &caps).unwrap();
            assert!(b.upper.is_zero() && b.lower.is_zero());
            assert_eq!(b.witness.pullback(&moved).unwrap(), w);
        }
    }

    #[test]
    fn upper_never_exceeds_d1_and_matches_witness() {
        let caps = Caps::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (k, mu, mw) in [(2, 2, 3), (2, 3, 3), (3, 2, 2), (3, 1, 2), (1, 2, 3)] {
            for _ in 0..4 {
                let u = StepHypergraphon::random_symmetric(k, mu, 0.5, &mut rng).unwrap();
                let w = StepHypergraphon::random_symmetric(k, mw, 0.5, &mut rng).unwrap();
                let d = distance_d1(&u, &w).unwrap();
                for s in [Strategy::Exhaustive, Strategy::Greedy, Strategy::Anneal] {
                    let r = delta1_upper(&u, &w, s, 200, 3, &caps).unwrap();
                    assert!(r.upper <= d || s == Strategy::Anneal && r.upper <= d);
                    assert_eq!(distance_d1(&u, &r.witness.pullback(&w).unwrap()).unwrap(), r.upper);
                    assert!(r.witness.commute_check().is_ok());
                }
            }
        }
    }

    #[test]
    fn anneal_best_so_far_is_monotone_in_budget() {
        let caps = Caps::default();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let u = StepHypergraphon::random_symmetric(2, 3, 0.5, &mut rng).unwrap();
        let w = StepHypergraphon::random_symmetric(2, 3, 0.5, &mut rng).unwrap();
        let mut last = rational::one();
        for budget in [0, 10, 50, 200, 1000] {
            let r = delta1_upper(&u, &w, Strategy::Anneal, budget, 77, &caps).unwrap();
            assert!(r.upper <= last);
            last = r.upper;
        }
        let ex = delta1_upper(&u, &w, Strategy::Exhaustive, 0, 0, &caps).unwrap();
        assert!(ex.upper <= last);
    }

    #[test]
    fn exhaustive_cap() {
        let caps = Caps {
            max_permutations: 5,
            ..Caps::default()
        };
        let u = StepHypergraphon::zeros(2, 3).unwrap();
        assert!(matches!(
            delta1_upper(&u, &u, Strategy::Exhaustive, 0, 0, &caps),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn truncated_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = StepHypergraphon::random_symmetric(2, 2, 0.5, &mut rng).unwrap();
        for n in [1, 4, 8] {
            assert!(delta_truncated(&w, &w, n).unwrap().value.is_zero());
        }
        // zeros vs ones: t(F, 0) = [F edgeless], t(F, 1) = 1. Among the first
        // three labeled graphs only F_3 (a single edge) has an edge: 1/8.
        let z = StepHypergraphon::zeros(2, 2).unwrap();
        let o = StepHypergraphon::ones(2, 2).unwrap();
        let d = delta_truncated(&z, &o, 3).unwrap();
        assert_eq!(d.value, ratio(1, 8));
        assert_eq!(d.tail_bound, ratio(1, 4));
        let lw = delta_w_lower(&z, &o, 3).unwrap();
        assert_eq!(lw, rational::one());
        assert_eq!(enumeration_prefix_len(2, 3), 11);
    }
}
