//! Random hypergraphs `G(n, W)` and the convergence harness.
//!
//! Every subset `A ⊆ [n]` with `1 ≤ |A| ≤ k` gets an independent uniform label
//! `x_A`, drawn as a 64-bit fixed-point fraction, so `x_A < 1` always and the
//! cell digit is `⌊m·x_A⌋`. Labels are drawn size by size, and within a size in
//! colexicographic order of the subsets. A `k`-subset `B = {b_1 < … < b_k}` is
//! an edge iff `W` is set at the cell `(⌊m·x_{B_S}⌋)_S`, where `B_S = {b_i : i ∈ S}`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::density::density_exact_bounded;
use crate::error::{Error, Result};
use crate::hypergraph::{density_finite_bounded, FiniteHypergraph};
use crate::hypergraphon::StepHypergraphon;
use crate::rational::{abs_diff, to_f64};
use crate::subsets::{binomial, k_subsets, members};

/// Largest number of labels a single sample may draw.
pub const MAX_LABELS: u128 = 200_000_000;

#[derive(Debug, Clone, Copy)]
pub struct SampleConfig<'a> {
    pub w: &'a StepHypergraphon,
    pub n: usize,
    pub seed: u64,
}

fn colex_rank(vertices: &[usize]) -> usize {
    vertices
        .iter()
        .enumerate()
        .map(|(i, &v)| binomial(v, i + 1) as usize)
        .sum()
}

/// Draws `G(n, W)`. Vertices in the result are `1..=n`.
pub fn sample(cfg: SampleConfig<'_>) -> Result<FiniteHypergraph> {
    let w = cfg.w;
    let (k, n, m) = (w.k(), cfg.n, w.m() as u128);
    if n < k {
        return Err(Error::InvalidArgument(format!("sample needs n ≥ k, got n={n}, k={k}")));
    }
    let total: u128 = (1..=k).map(|j| binomial(n, j)).sum();
    if total > MAX_LABELS {
        return Err(Error::CapExceeded {
            what: "sample label",
            cap: MAX_LABELS,
            detail: Some(format!("{total} labels for n={n}, k={k}")),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let digits: Vec<Vec<u8>> = (1..=k)
        .map(|j| {
            (0..binomial(n, j))
                .map(|_| ((rng.next_u64() as u128 * m) >> 64) as u8)
                .collect()
        })
        .collect();
    let grid = w.grid();
    let order: Vec<Vec<usize>> = grid.subsets.order().iter().map(|&s| members(s)).collect();
    let mut cell = vec![0usize; grid.dims];
    let mut sub = Vec::with_capacity(k);
    let mut edges = Vec::new();
    for b in k_subsets(n, k) {
        for (p, s) in order.iter().enumerate() {
            sub.clear();
            sub.extend(s.iter().map(|&i| b[i] - 1));
            cell[p] = digits[s.len() - 1][colex_rank(&sub)] as usize;
        }
        if w.get(&cell) {
            edges.push(b);
        }
    }
    FiniteHypergraph::new(k, n, edges)
}

/// Seed of repeat `r` at size `n`: the first output of ChaCha8 seeded with
/// `seed` on stream `(n << 16) | r`.
pub fn derive_seed(seed: u64, n: usize, r: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 16) | (r & 0xffff));
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    /// Enumeration index (or caller-chosen label) of the test hypergraph.
    pub f_index: u64,
    pub n: usize,
    /// Mean over repeats of `|t(F, G_n) − t(F, W)|`.
    pub mean: f64,
    /// Sample standard deviation over repeats (0 for a single repeat).
    pub std: f64,
}

/// One row per `(F, n)`, `n` varying fastest. Samples are shared across the
/// test hypergraphs of a given `(n, repeat)`.
pub fn convergence_report(
    w: &StepHypergraphon,
    fs: &[(u64, FiniteHypergraph)],
    schedule: &[usize],
    repeats: u64,
    seed: u64,
    work_bound: u128,
) -> Result<Vec<ConvergenceRow>> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be positive".into()));
    }
    let exact = fs
        .iter()
        .map(|(_, f)| density_exact_bounded(f, w, work_bound))
        .collect::<Result<Vec<_>>>()?;
    // discrepancy[s][r][f]
    let discrepancy = schedule
        .iter()
        .map(|&n| {
            (0..repeats)
                .into_par_iter()
                .map(|r| {
                    let g = sample(SampleConfig {
                        w,
                        n,
                        seed: derive_seed(seed, n, r),
                    })?;
                    fs.iter()
                        .zip(&exact)
                        .map(|((_, f), t)| Ok(to_f64(&abs_diff(&density_finite_bounded(f, &g, work_bound)?, t))))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (fi, (index, _)) in fs.iter().enumerate() {
        for (si, &n) in schedule.iter().enumerate() {
            let xs: Vec<f64> = discrepancy[si].iter().map(|d| d[fi]).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let std = if xs.len() > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            rows.push(ConvergenceRow {
                f_index: *index,
                n,
                mean,
                std,
            });
        }
    }
    Ok(rows)
}
