//! Homomorphism densities `t(F, W)` of finite hypergraphs in step hypergraphons.
//!
//! For an edge `A = {v_1 < … < v_k}` of `F` and an assignment `a` of grid
//! intervals to the sets in `r(V(F), k)`, the edge reads the cell
//! `c_A(S) = a({v_i : i ∈ S})`. The top variable `a(A)` is read by edge `A`
//! alone, so it can be summed out: for fixed lower variables the edge
//! contributes `Q(W)(c_A|r_<([k]))`. The exact evaluator therefore enumerates
//! only the variables of size below `k` that some edge touches, and multiplies
//! column counts. Unused variables integrate to one and are dropped.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hypergraph::{enumerate_hypergraphs, FiniteHypergraph};
use crate::hypergraphon::{Grid, StepHypergraphon};
use crate::rational::{ratio, Rational};
use crate::subsets::members;

/// Default cap on `assignments × edges` for [`density_exact`].
pub const EXACT_WORK_BOUND: u128 = 100_000_000;

/// Samples per independently seeded Monte Carlo chunk. Chunk `i` draws from
/// `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, so the estimate does not
/// depend on how chunks are spread over workers.
pub const MC_CHUNK: u64 = 4096;

/// Confidence level of the reported half-width.
pub const MC_CONFIDENCE: f64 = 0.99;

/// How each edge reads the variables of an assignment.
struct EdgeReader {
    /// Number of distinct variables.
    vars: usize,
    /// Per edge, the variable feeding each coordinate in `SubsetIndex` order.
    edges: Vec<Vec<usize>>,
}

impl EdgeReader {
    /// `include_top` decides whether the size-`k` variables (the edges
    /// themselves) are part of the assignment.
    fn new(f: &FiniteHypergraph, grid: &Grid, include_top: bool) -> Self {
        let width = if include_top { grid.dims } else { grid.dims - 1 };
        let mut index = std::collections::BTreeMap::<Vec<usize>, usize>::new();
        let edges = f
            .edges()
            .map(|e| {
                (0..width)
                    .map(|pos| {
                        let set: Vec<usize> = members(grid.subsets.subset(pos)).into_iter().map(|i| e[i]).collect();
                        let next = index.len();
                        *index.entry(set).or_insert(next)
                    })
                    .collect()
            })
            .collect();
        EdgeReader {
            vars: index.len(),
            edges,
        }
    }
}

fn check_arity(f: &FiniteHypergraph, w: &StepHypergraphon) -> Result<()> {
    if f.k() != w.k() {
        return Err(Error::ArityMismatch {
            left: f.k(),
            right: w.k(),
        });
    }
    Ok(())
}

/// Exact `t(F, W)`.
pub fn density_exact(f: &FiniteHypergraph, w: &StepHypergraphon) -> Result<Rational> {
    density_exact_bounded(f, w, EXACT_WORK_BOUND)
}

pub fn density_exact_bounded(f: &FiniteHypergraph, w: &StepHypergraphon, bound: u128) -> Result<Rational> {
    check_arity(f, w)?;
    let e = f.edge_count();
    if e == 0 {
        return Ok(ratio(1, 1));
    }
    let grid = w.grid();
    let m = grid.m;
    let reader = EdgeReader::new(f, &grid, false);
    let assignments = (m as u128).checked_pow(reader.vars as u32).unwrap_or(u128::MAX);
    let work = assignments.saturating_mul(e as u128);
    if work > bound {
        return Err(Error::WorkBound {
            work,
            bound,
            index: None,
        });
    }
    let counts = w.column_counts();
    debug_assert!(
        w.quotient_q().validate().is_ok(),
        "edge ordering matters only for asymmetric tensors"
    );
    let denom = (m as u128)
        .checked_pow((reader.vars + e) as u32)
        .ok_or(Error::WorkBound {
            work: u128::MAX,
            bound,
            index: None,
        })?;
    if reader.vars == 0 {
        // k = 1: every edge is a bare top variable.
        let p = counts[0] as u128;
        return Ok(ratio(p.pow(e as u32), denom));
    }
    // Split on the first variable; integer sums are order-independent.
    let numer: u128 = (0..m)
        .into_par_iter()
        .map(|first| {
            let mut a = vec![0usize; reader.vars];
            a[0] = first;
            let mut total = 0u128;
            loop {
                let mut prod = 1u128;
                for edge in &reader.edges {
                    let u = edge.iter().fold(0, |acc, &v| acc * m + a[v]);
                    let c = counts[u] as u128;
                    if c == 0 {
                        prod = 0;
                        break;
                    }
                    prod *= c;
                }
                total += prod;
                // odometer over a[1..]
                let mut i = reader.vars - 1;
                loop {
                    if i == 0 {
                        return total;
                    }
                    a[i] += 1;
                    if a[i] < m {
                        break;
                    }
                    a[i] = 0;
                    i -= 1;
                }
            }
        })
        .sum();
    Ok(ratio(numer, denom))
}

/// A Monte Carlo estimate with its Hoeffding half-width at [`MC_CONFIDENCE`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub hits: u64,
    pub samples: u64,
}

/// `sqrt(ln(2/α) / (2n))` with `α = 1 - MC_CONFIDENCE`.
pub fn hoeffding_half_width(samples: u64) -> f64 {
    let alpha = 1.0 - MC_CONFIDENCE;
    ((2.0 / alpha).ln() / (2.0 * samples as f64)).sqrt()
}

/// Estimates `t(F, W)` by drawing `samples` uniform assignments of all variables
/// touched by edges and averaging the product of cell indicators.
pub fn density_mc(f: &FiniteHypergraph, w: &StepHypergraphon, samples: u64, seed: u64) -> Result<McEstimate> {
    check_arity(f, w)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let grid = w.grid();
    let reader = EdgeReader::new(f, &grid, true);
    let cells = w.cells();
    let m = grid.m;
    let chunks = samples.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let n = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let mut a = vec![0usize; reader.vars];
            let mut hits = 0u64;
            for _ in 0..n {
                for x in a.iter_mut() {
                    *x = rng.gen_range(0..m);
                }
                let all = reader
                    .edges
                    .iter()
                    .all(|edge| cells[edge.iter().fold(0, |acc, &v| acc * m + a[v])]);
                hits += all as u64;
            }
            hits
        })
        .sum();
    Ok(McEstimate {
        mean: hits as f64 / samples as f64,
        half_width: hoeffding_half_width(samples),
        hits,
        samples,
    })
}

/// `(t(F_1, W), …, t(F_N, W))` along the fixed hypergraph enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityVector {
    pub k: usize,
    pub values: Vec<Rational>,
}

impl DensityVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn density_vector(w: &StepHypergraphon, n: u64) -> Result<DensityVector> {
    density_vector_bounded(w, n, EXACT_WORK_BOUND)
}

pub fn density_vector_bounded(w: &StepHypergraphon, n: u64, bound: u128) -> Result<DensityVector> {
    if n == 0 {
        return Err(Error::InvalidArgument("truncation length must be at least 1".into()));
    }
    let values = (1..=n)
        .map(|i| {
            let f = enumerate_hypergraphs(w.k(), i)?;
            density_exact_bounded(&f, w, bound).map_err(|e| match e {
                Error::WorkBound { work, bound, .. } => Error::WorkBound {
                    work,
                    bound,
                    index: Some(i),
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityVector { k: w.k(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::density_finite;
    use crate::rational::{to_f64, zero};
    use num_traits::{One, Zero};

    /// Literal evaluation of the integral: every variable in `r(V(F), k)` is
    /// enumerated and every edge reads its cell of `W` directly.
    fn density_bruteforce(f: &FiniteHypergraph, w: &StepHypergraphon) -> Rational {
        let grid = w.grid();
        let k = f.k();
        let m = grid.m;
        let mut vars: Vec<Vec<usize>> = Vec::new();
        for size in 1..=k {
            vars.extend(crate::subsets::k_subsets(f.n(), size));
        }
        let total = m.pow(vars.len() as u32);
        let mut hits = 0u128;
        let mut a = vec![0usize; vars.len()];
        for code in 0..total {
            let mut c = code;
            for x in a.iter_mut() {
                *x = c % m;
                c /= m;
            }
            let ok = f.edges().all(|e| {
                let cell: Vec<usize> = (0..grid.dims)
                    .map(|pos| {
                        let set: Vec<usize> = members(grid.subsets.subset(pos)).into_iter().map(|i| e[i]).collect();
                        a[vars.iter().position(|v| v == &set).unwrap()]
                    })
                    .collect();
                w.get(&cell)
            });
            hits += ok as u128;
        }
        ratio(hits, total as u128)
    }

    fn triangle() -> FiniteHypergraph {
        FiniteHypergraph::new(2, 3, [[1, 2], [1, 3], [2, 3]]).unwrap()
    }

    #[test]
    fn exact_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = StepHypergraphon::random_symmetric(2, 3, 0.5, &mut rng).unwrap();
        let edgeless = FiniteHypergraph::edgeless(2, 3).unwrap();
        assert!(density_exact(&edgeless, &w).unwrap().is_one());
        for (m, t) in [(2, 1), (3, 1), (3, 2), (4, 3)] {
            let slab = StepHypergraphon::slab(2, m, t).unwrap();
            let edge = FiniteHypergraph::new(2, 2, [[1, 2]]).unwrap();
            assert_eq!(density_exact(&edge, &slab).unwrap(), ratio(t as u128, m as u128));
            let slab3 = StepHypergraphon::slab(3, m, t).unwrap();
            let edge3 = FiniteHypergraph::new(3, 3, [[1, 2, 3]]).unwrap();
            assert_eq!(density_exact(&edge3, &slab3).unwrap(), ratio(t as u128, m as u128));
        }
        let half = StepHypergraphon::slab(2, 2, 1).unwrap();
        assert_eq!(density_exact(&triangle(), &half).unwrap(), ratio(1, 8));
        assert_eq!(density_bruteforce(&triangle(), &half), ratio(1, 8));
    }

    #[test]
    fn exact_matches_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (k, m, nmax) in [(2, 2, 11u64), (2, 3, 11), (3, 2, 8), (1, 3, 6)] {
            for _ in 0..3 {
                let w = StepHypergraphon::random_symmetric(k, m, 0.5, &mut rng).unwrap();
                for i in 1..=nmax {
                    let f = enumerate_hypergraphs(k, i).unwrap();
                    assert_eq!(
                        density_exact(&f, &w).unwrap(),
                        density_bruteforce(&f, &w),
                        "k={k} m={m} F#{i}"
                    );
                }
            }
        }
    }

    #[test]
    fn matches_finite_density_on_block_steps() {
        // With W_H the vertex-block step set of H, t(F, W_H) = t(F, H): the
        // singleton coordinates play the role of the vertex map and an edge
        // only counts when its images are distinct and adjacent.
        for hi in 1..=11 {
            let h = enumerate_hypergraphs(2, hi).unwrap();
            let wh = StepHypergraphon::from_hypergraph(&h).unwrap();
            for fi in 1..=11 {
                let f = enumerate_hypergraphs(2, fi).unwrap();
                assert_eq!(density_exact(&f, &wh).unwrap(), density_finite(&f, &h).unwrap());
            }
        }
    }

    #[test]
    fn work_bound_and_arity() {
        let w = StepHypergraphon::ones(2, 3).unwrap();
        let f = FiniteHypergraph::complete(2, 6).unwrap();
        assert!(matches!(
            density_exact_bounded(&f, &w, 100),
            Err(Error::WorkBound { .. })
        ));
        let w3 = StepHypergraphon::ones(3, 1).unwrap();
        assert!(density_exact(&f, &w3).is_err());
    }

    #[test]
    fn mc_examples() {
        let f = triangle();
        let ones = StepHypergraphon::ones(2, 3).unwrap();
        let est = density_mc(&f, &ones, 1000, 9).unwrap();
        assert_eq!(est.mean, 1.0);
        assert!((est.half_width - ((2.0f64 / 0.01).ln() / 2000.0).sqrt()).abs() < 1e-15);
        let zeros = StepHypergraphon::zeros(2, 3).unwrap();
        assert_eq!(density_mc(&f, &zeros, 1000, 9).unwrap().mean, 0.0);
        assert!(density_mc(&f, &zeros, 0, 9).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = StepHypergraphon::random_symmetric(2, 3, 0.6, &mut rng).unwrap();
        let est = density_mc(&f, &w, 100_000, 4).unwrap();
        let exact = to_f64(&density_exact(&f, &w).unwrap());
        assert!((est.mean - exact).abs() <= 0.01);
        assert_eq!(density_mc(&f, &w, 100_000, 4).unwrap(), est);
    }

    #[test]
    fn vector_examples() {
        let ones = StepHypergraphon::ones(2, 2).unwrap();
        assert!(density_vector(&ones, 12).unwrap().values.iter().all(|v| v.is_one()));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = StepHypergraphon::random_symmetric(2, 2, 0.5, &mut rng).unwrap();
        assert_eq!(density_vector(&w, 1).unwrap().values, vec![ratio(1, 1)]);
        // For the top-coordinate slab every edge is an independent coin: p^{|E|}.
        let half = StepHypergraphon::slab(2, 2, 1).unwrap();
        let v = density_vector(&half, 8).unwrap();
        for (i, t) in v.values.iter().enumerate() {
            let f = enumerate_hypergraphs(2, i as u64 + 1).unwrap();
            assert_eq!(t, &ratio(1, 1u128 << f.edge_count()));
        }
        assert!(!v.values.iter().any(|x| x < &zero()));
        assert!(!density_vector(&half, 3).unwrap().values[0].is_zero());
        assert!(density_vector(&half, 0).is_err());
    }
}
