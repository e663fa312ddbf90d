use hypergraphon::density::{density_exact, density_vector};
use hypergraphon::hypergraph::{density_finite, hom_count, FiniteHypergraph};
use hypergraphon::metrics::{delta1_upper, delta_truncated, delta_w_lower, Strategy as Search};
use hypergraphon::perm;
use hypergraphon::rational::{abs_diff, ratio, Rational};
use hypergraphon::subsets::k_subsets;
use hypergraphon::symmetry::GroupEnumeration;
use hypergraphon::{distance_d1, Caps, StepHypergraphon};
use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graphon(k: usize, m: usize, seed: u64) -> StepHypergraphon {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    StepHypergraphon::random_symmetric(k, m, 0.5, &mut rng).unwrap()
}

fn hypergraph(k: usize, n: usize, mask: u64) -> FiniteHypergraph {
    let edges: Vec<_> = k_subsets(n, k)
        .into_iter()
        .enumerate()
        .filter(|(i, _)| mask >> (i % 64) & 1 == 1)
        .map(|(_, e)| e)
        .collect();
    FiniteHypergraph::new(k, n, edges).unwrap()
}

fn arb_graphon() -> impl Strategy<Value = StepHypergraphon> {
    (2usize..=3, 1usize..=3, any::<u64>()).prop_map(|(k, m, s)| graphon(k, m.min(if k == 3 { 2 } else { 3 }), s))
}

fn element(k: usize, index: u128) -> hypergraphon::StructureMap {
    GroupEnumeration::new(k).unwrap().element(index).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn d1_is_a_metric(k in 2usize..=3, m1 in 1usize..=2, m2 in 1usize..=3, s in any::<[u64; 3]>()) {
        let (a, b, c) = (graphon(k, m1, s[0]), graphon(k, m2, s[1]), graphon(k, 2, s[2]));
        let ab = distance_d1(&a, &b).unwrap();
        prop_assert_eq!(&ab, &distance_d1(&b, &a).unwrap());
        prop_assert!(distance_d1(&a, &a).unwrap().is_zero());
        prop_assert!(ab <= distance_d1(&a, &c).unwrap() + distance_d1(&c, &b).unwrap());
        prop_assert!(ab <= ratio(1, 1));
    }

    #[test]
    fn hom_is_multiplicative(k in 2usize..=3, n1 in 1usize..=3, n2 in 1usize..=3, nh in 3usize..=4, masks in any::<[u64; 3]>()) {
        let f1 = hypergraph(k, n1.max(k - 1), masks[0]);
        let f2 = hypergraph(k, n2, masks[1]);
        let h = hypergraph(k, nh, masks[2]);
        let u = f1.disjoint_union(&f2).unwrap();
        prop_assert_eq!(hom_count(&u, &h).unwrap(), hom_count(&f1, &h).unwrap() * hom_count(&f2, &h).unwrap());
    }

    #[test]
    fn relabeling_preserves_densities(k in 2usize..=3, n in 3usize..=4, mask in any::<u64>(), rank in 0u128..24, s in any::<u64>()) {
        let f = hypergraph(k, n, mask);
        let p = perm::unrank(n, rank % perm::factorial(n));
        let g = f.relabel(&p).unwrap();
        let h = hypergraph(k, 4, s);
        prop_assert_eq!(hom_count(&f, &h).unwrap(), hom_count(&g, &h).unwrap());
        let w = graphon(k, 2, s);
        prop_assert_eq!(density_exact(&f, &w).unwrap(), density_exact(&g, &w).unwrap());
    }

    #[test]
    fn densities_are_lipschitz_in_d1(k in 2usize..=3, n in 2usize..=4, mask in any::<u64>(), s in any::<[u64; 2]>()) {
        let f = hypergraph(k, n.max(k), mask);
        let (u, w) = (graph_for(k, s[0]), graph_for(k, s[1]));
        let lhs = abs_diff(&density_exact(&f, &u).unwrap(), &density_exact(&f, &w).unwrap());
        let e = Rational::from_integer(f.edge_count().into());
        prop_assert!(lhs <= e * distance_d1(&u, &w).unwrap());
    }

    #[test]
    fn density_is_monotone_in_w(k in 2usize..=3, n in 2usize..=4, mask in any::<u64>(), s in any::<u64>()) {
        let f = hypergraph(k, n.max(k), mask);
        let small = graph_for(k, s);
        let cells: Vec<bool> = small.cells().iter().zip(graphon(k, small.m(), s ^ 0xabc).cells()).map(|(a, b)| *a || *b).collect();
        let bigger = StepHypergraphon::new(k, small.m(), cells).unwrap();
        prop_assert!(density_exact(&f, &small).unwrap() <= density_exact(&f, &bigger).unwrap());
    }

    #[test]
    fn pullback_preserves_densities(w in arb_graphon(), idx in 1u128..=40, mask in any::<u64>()) {
        let g = element(w.k(), idx);
        let moved = g.pullback(&w).unwrap();
        prop_assert_eq!(moved.measure(), w.measure());
        let f = hypergraph(w.k(), 3, mask);
        prop_assert_eq!(density_exact(&f, &moved).unwrap(), density_exact(&f, &w).unwrap());
    }

    #[test]
    fn delta_is_a_pseudometric(s in any::<[u64; 3]>(), m in 1usize..=3) {
        let (a, b, c) = (graphon(2, m, s[0]), graphon(2, 2, s[1]), graphon(2, 3, s[2]));
        let ab = delta_truncated(&a, &b, 8).unwrap().value;
        prop_assert_eq!(&ab, &delta_truncated(&b, &a, 8).unwrap().value);
        prop_assert!(ab <= delta_truncated(&a, &c, 8).unwrap().value + delta_truncated(&c, &b, 8).unwrap().value);
    }

    #[test]
    fn bracket_is_ordered(s in any::<[u64; 2]>(), m1 in 1usize..=3, m2 in 1usize..=3) {
        let (u, w) = (graphon(2, m1, s[0]), graphon(2, m2, s[1]));
        let caps = Caps::default();
        let lower = delta_w_lower(&u, &w, 11).unwrap();
        let ex = delta1_upper(&u, &w, Search::Exhaustive, 0, 0, &caps).unwrap();
        let gr = delta1_upper(&u, &w, Search::Greedy, 20, 0, &caps).unwrap();
        prop_assert!(lower <= ex.upper);
        prop_assert!(ex.upper <= gr.upper);
        prop_assert!(gr.upper <= distance_d1(&u, &w).unwrap());
    }

    #[test]
    fn anneal_improves_with_budget(s in any::<[u64; 3]>()) {
        let (u, w) = (graphon(2, 3, s[0]), graphon(2, 3, s[1]));
        let caps = Caps::default();
        let short = delta1_upper(&u, &w, Search::Anneal, 30, s[2], &caps).unwrap();
        let long = delta1_upper(&u, &w, Search::Anneal, 300, s[2], &caps).unwrap();
        prop_assert!(long.upper <= short.upper);
    }

    #[test]
    fn refinement_is_invisible(w in arb_graphon(), f in 2usize..=3) {
        let fine = w.refine(f).unwrap();
        prop_assert!(distance_d1(&w, &fine).unwrap().is_zero());
        prop_assert_eq!(density_vector(&w, 6).unwrap(), density_vector(&fine, 6).unwrap());
    }
}

fn graph_for(k: usize, s: u64) -> StepHypergraphon {
    graphon(
        k,
        if k == 2 {
            1 + (s % 3) as usize
        } else {
            1 + (s % 2) as usize
        },
        s,
    )
}

#[test]
fn block_graphons_reproduce_finite_densities() {
    for (k, n, mask) in [(2, 4, 0b101101u64), (3, 4, 0b1011), (2, 3, 0b111)] {
        let h = hypergraph(k, n, mask);
        let w = StepHypergraphon::from_hypergraph(&h).unwrap();
        for fmask in [0u64, 1, 0b11, 0b1111] {
            let f = hypergraph(k, 3.max(k), fmask);
            assert_eq!(density_exact(&f, &w).unwrap(), density_finite(&f, &h).unwrap());
        }
    }
}
