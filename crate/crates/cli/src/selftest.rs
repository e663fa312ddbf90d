//! The built-in invariant suite.

use num_traits::Zero;
use rayon::prelude::*;
use serde_json::{json, Value};

use hypergraphon::density::density_vector;
use hypergraphon::metrics::{delta1_upper, delta_w_lower_from_vectors, Strategy};
use hypergraphon::rational::pow2_inv;
use hypergraphon::sampler::{sample, SampleConfig};
use hypergraphon::selector::{enumerate_dense, orbit_partition, select, transversal, universe};
use hypergraphon::symmetry::{DiscreteGroup, GroupEnumeration, StructureMap};
use hypergraphon::{distance_d1, Caps, FiniteHypergraph, StepHypergraphon};

use crate::report::{Failure, Manifest};
use crate::Outcome;

type Check = Result<String, String>;
type CheckFn = fn(&Caps) -> Check;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn elements(k: usize, m: usize) -> Result<Vec<StructureMap>, String> {
    let g = DiscreteGroup::new(k, m).map_err(err)?;
    (0..g.size()).map(|j| g.element(j).map_err(err)).collect()
}

fn group_k2(_: &Caps) -> Check {
    let all = elements(2, 2)?;
    ensure(all.len() == 16, || format!("group has {} elements", all.len()))?;
    for (j, g) in all.iter().enumerate() {
        g.commute_check()
            .map_err(|v| format!("element {j} breaks equivariance at {v}"))?;
    }
    let uni = universe(2, 2, &Caps::default()).map_err(err)?;
    for g in &all {
        for (u, w) in uni.iter().zip(uni.iter().rev()) {
            let before = distance_d1(u, w).map_err(err)?;
            let after = distance_d1(&g.pullback(u).map_err(err)?, &g.pullback(w).map_err(err)?).map_err(err)?;
            ensure(before == after, || "pullback is not a d_1 isometry".into())?;
        }
    }
    Ok("16 elements, equivariant, isometric".into())
}

fn orbits_k2(caps: &Caps) -> Check {
    let part = orbit_partition(2, 2, caps).map_err(err)?;
    let uni = universe(2, 2, caps).map_err(err)?;
    let fixed: usize = elements(2, 2)?
        .iter()
        .map(|g| {
            uni.iter()
                .filter(|w| g.pullback(w).map(|x| &x == *w).unwrap_or(false))
                .count()
        })
        .sum();
    ensure(fixed == 16 * part.count, || {
        format!("union-find found {} orbits, Burnside {}/16", part.count, fixed)
    })?;
    Ok(format!("{} orbits", part.count))
}

fn transversal_k2(caps: &Caps) -> Check {
    let t = transversal(2, 2, caps).map_err(err)?;
    let orbits = orbit_partition(2, 2, caps).map_err(err)?.count;
    ensure(t.incomplete == 0, || {
        format!("{} selector runs did not stabilize", t.incomplete)
    })?;
    ensure(t.representatives.len() == orbits, || {
        format!("{} representatives for {orbits} orbits", t.representatives.len())
    })?;
    for r in &t.representatives {
        let again = select(r, caps).map_err(err)?.result;
        ensure(&again == r, || "a representative is not a fixed point".into())?;
    }
    Ok(format!("{} representatives, all fixed points", t.representatives.len()))
}

fn orbit_constancy_k2(caps: &Caps) -> Check {
    let group = elements(2, 2)?;
    let uni = universe(2, 2, caps).map_err(err)?;
    uni.par_iter()
        .enumerate()
        .map(|(i, w)| {
            let base = select(w, caps).map_err(err)?;
            for s in &base.steps {
                ensure(s.gap < pow2_inv(s.n as u32), || {
                    format!("tensor {i}: gap bound fails at step {}", s.n)
                })?;
            }
            for (j, g) in group.iter().enumerate() {
                let moved = select(&g.pullback(w).map_err(err)?, caps).map_err(err)?;
                ensure(moved.result == base.result, || {
                    format!("tensor {i}, element {j}: representative differs")
                })?;
            }
            Ok(())
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(format!("{} tensors x 16 elements", uni.len()))
}

fn bracket_k2(caps: &Caps) -> Check {
    let uni = universe(2, 2, caps).map_err(err)?;
    let part = orbit_partition(2, 2, caps).map_err(err)?;
    let vectors = uni
        .iter()
        .map(|w| density_vector(w, 11).map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    (0..uni.len())
        .into_par_iter()
        .map(|i| {
            for j in 0..uni.len() {
                let lower = delta_w_lower_from_vectors(&vectors[i], &vectors[j]).map_err(err)?;
                let upper = delta1_upper(&uni[i], &uni[j], Strategy::Exhaustive, 0, 0, caps)
                    .map_err(err)?
                    .upper;
                ensure(lower <= upper, || format!("pair ({i}, {j}): lower exceeds upper"))?;
                let same = part.labels[i] == part.labels[j];
                ensure(upper.is_zero() == same, || {
                    format!("pair ({i}, {j}): zero set disagrees with orbits")
                })?;
            }
            Ok(())
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(format!("{} pairs", uni.len() * uni.len()))
}

fn densities_k2(caps: &Caps) -> Check {
    let group = elements(2, 2)?;
    for w in universe(2, 2, caps).map_err(err)? {
        let base = density_vector(&w, 11).map_err(err)?;
        for g in &group {
            let moved = g.pullback(&w).map_err(err)?;
            ensure(moved.measure() == w.measure(), || "measure changed".into())?;
            ensure(density_vector(&moved, 11).map_err(err)? == base, || {
                "densities changed".into()
            })?;
        }
    }
    Ok("pullbacks preserve measure and 11 densities".into())
}

fn q_map(caps: &Caps) -> Check {
    for (k, m) in [(2, 2), (3, 2)] {
        let sample: Vec<StepHypergraphon> = if k == 2 {
            universe(k, m, caps).map_err(err)?
        } else {
            (3..40u128)
                .map(|i| enumerate_dense(3, i).map_err(err))
                .collect::<Result<_, _>>()?
        };
        for w in sample {
            let q = w.quotient_q();
            ensure(q.mean() == w.measure(), || {
                format!("k={k}: mean of Q differs from the measure")
            })?;
            q.validate().map_err(|v| format!("k={k}: Q is not symmetric at {v}"))?;
        }
    }
    Ok("mean Q = measure, Q symmetric".into())
}

fn smoke_k3(caps: &Caps) -> Check {
    let mut groups = GroupEnumeration::new(3).map_err(err)?;
    let first: Vec<StructureMap> = (1..=50u128)
        .map(|p| groups.element(p).map_err(err))
        .collect::<Result<_, _>>()?;
    for (p, g) in first.iter().enumerate() {
        g.commute_check().map_err(|v| format!("element {}: {v}", p + 1))?;
    }
    for index in [3u128, 17, 90] {
        let w = enumerate_dense(3, index).map_err(err)?;
        let base = select(&w, caps).map_err(err)?;
        ensure(base.complete, || format!("V_{index}: selector did not stabilize"))?;
        let upper = delta1_upper(&base.result, &w, Strategy::Exhaustive, 0, 0, caps)
            .map_err(err)?
            .upper;
        ensure(upper.is_zero(), || format!("V_{index}: representative left the orbit"))?;
        let dv = density_vector(&w, 4).map_err(err)?;
        for g in first.iter().step_by(7) {
            let moved = g.pullback(&w).map_err(err)?;
            ensure(density_vector(&moved, 4).map_err(err)? == dv, || {
                "densities changed".into()
            })?;
            if moved.m() == w.m() {
                let again = select(&moved, caps).map_err(err)?.result;
                ensure(again == base.result, || {
                    format!("V_{index}: representative is not orbit-constant")
                })?;
            }
        }
    }
    let ones = StepHypergraphon::ones(3, 2).map_err(err)?;
    let g = sample(SampleConfig {
        w: &ones,
        n: 7,
        seed: 1,
    })
    .map_err(err)?;
    ensure(g == FiniteHypergraph::complete(3, 7).map_err(err)?, || {
        "all-ones sample is not complete".into()
    })?;
    Ok("50 group elements, 3 canonical forms, sampling".into())
}

pub fn run(caps: &Caps) -> Result<Outcome, Failure> {
    let mut manifest = Manifest::new("selftest", &[]);
    manifest.param("caps", crate::caps_value(caps));
    let checks: [(&str, CheckFn); 8] = [
        ("group_k2_m2", group_k2),
        ("orbit_count_k2_m2", orbits_k2),
        ("transversal_k2_m2", transversal_k2),
        ("orbit_constancy_k2_m2", orbit_constancy_k2),
        ("bracket_k2_m2", bracket_k2),
        ("pullback_densities_k2_m2", densities_k2),
        ("quotient_map", q_map),
        ("smoke_k3", smoke_k3),
    ];
    let mut passed = true;
    let rows: Vec<Value> = checks
        .iter()
        .map(|(name, check)| {
            let r = check(caps);
            passed &= r.is_ok();
            match r {
                Ok(detail) => json!({"name": name, "passed": true, "detail": detail}),
                Err(detail) => json!({"name": name, "passed": false, "detail": detail}),
            }
        })
        .collect();
    Ok(Outcome {
        manifest,
        result: json!({"passed": passed, "checks": rows}),
        artifact: crate::report::Artifact::None,
        code: if passed { 0 } else { 5 },
    })
}
