mod common;

use proptest::prelude::*;

use common::{corpus, enumerate_opt, random_spec, Family, TOL};
use matchoid_stream::baselines::{brute_force_opt, offline_greedy};
use matchoid_stream::generate::generate_instance;
use matchoid_stream::matroid::{Matroid, MatroidKind};
use matchoid_stream::multipass::{balance_delta, certified_gamma, progress_branch, Schedule};
use matchoid_stream::oracle::{subset_from_mask, ElementId, SubmodularOracle};
use matchoid_stream::pass::{streaming_pass, PassOptions, PassParams};
use matchoid_stream::state::SolutionState;

fn ids(n: usize) -> Vec<ElementId> {
    (0..n).map(ElementId::from).collect()
}

fn coverage_strategy() -> impl Strategy<Value = SubmodularOracle> {
    (1usize..=10, 1usize..=8).prop_flat_map(|(n, items)| {
        (
            prop::collection::vec(prop::collection::vec(0..items, 0..=3), n),
            prop::collection::vec(0u32..=8, items),
        )
            .prop_map(|(sets, w)| {
                SubmodularOracle::coverage(sets, w.into_iter().map(|x| x as f64 / 2.0).collect()).unwrap()
            })
    })
}

fn cut_strategy() -> impl Strategy<Value = SubmodularOracle> {
    (2usize..=10).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 1u32..=6), 0..=3 * n).prop_map(move |arcs| {
            let arcs = arcs.into_iter().filter(|(u, v, _)| u != v).map(|(u, v, w)| (u, v, w as f64)).collect();
            SubmodularOracle::directed_cut(n, arcs).unwrap()
        })
    })
}

fn matroid_strategy(n: usize) -> impl Strategy<Value = Matroid> {
    let ground = ids(n);
    prop_oneof![
        (0..=n).prop_map({
            let g = ground.clone();
            move |c| Matroid::uniform(g.clone(), c)
        }),
        (prop::collection::vec(0usize..3, n), prop::collection::vec(0usize..=2, 3)).prop_map({
            let g = ground.clone();
            move |(assign, caps)| {
                let parts = (0..3)
                    .map(|q| g.iter().zip(&assign).filter(|(_, &a)| a == q).map(|(&e, _)| e).collect())
                    .collect();
                Matroid::partition(parts, caps).unwrap()
            }
        }),
        prop::collection::vec((0usize..5, 0usize..5), n).prop_map({
            let g = ground.clone();
            move |edges| Matroid::new(g.clone(), MatroidKind::Graphic { edges }).unwrap()
        }),
        prop::collection::vec(prop::collection::vec(0usize..4, 0..=3), n).prop_map({
            let g = ground;
            move |adjacency| Matroid::new(g.clone(), MatroidKind::Transversal { adjacency }).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coverage_is_submodular_nonnegative_monotone(f in coverage_strategy()) {
        prop_assert!(f.brute_force_check_submodular().unwrap());
        prop_assert!(f.brute_force_check_monotone().unwrap());
        let n = f.ground_size();
        for mask in 0..(1u64 << n) {
            prop_assert!(f.value(&subset_from_mask(mask, n)).unwrap() >= 0.0);
        }
    }

    #[test]
    fn cut_is_submodular_nonnegative(f in cut_strategy()) {
        prop_assert!(f.brute_force_check_submodular().unwrap());
        let n = f.ground_size();
        for mask in 0..(1u64 << n) {
            prop_assert!(f.value(&subset_from_mask(mask, n)).unwrap() >= 0.0);
        }
    }

    #[test]
    fn matroid_axioms(m in (1usize..=8).prop_flat_map(matroid_strategy)) {
        let n = m.ground().len();
        let indep: Vec<bool> = (0..1u64 << n).map(|mask| m.independent(&subset_from_mask(mask, n))).collect();
        prop_assert!(indep[0]);
        for mask in 0..1u64 << n {
            if !indep[mask as usize] {
                continue;
            }
            for j in 0..n {
                if mask & (1 << j) != 0 {
                    prop_assert!(indep[(mask & !(1 << j)) as usize], "not downward closed");
                }
            }
            for other in 0..1u64 << n {
                if indep[other as usize] && other.count_ones() > mask.count_ones() {
                    let extends = (0..n).any(|j| other & !mask & (1 << j) != 0 && indep[(mask | 1 << j) as usize]);
                    prop_assert!(extends, "exchange axiom fails for {mask:b} and {other:b}");
                }
            }
        }
    }

    #[test]
    fn exchange_restores_feasibility(seed in 0u64..10_000, fam in 0usize..3, order in any::<u64>()) {
        let family = [Family::CoverageUniform, Family::Bipartite, Family::Hypergraph][fam];
        let inst = generate_instance(&random_spec(family, seed)).unwrap();
        let (f, mp) = inst.build().unwrap();
        // random feasible S built by trying elements in a shuffled order
        let mut cand = ids(inst.n);
        let len = cand.len();
        for j in 0..len {
            cand.swap(j, (order.rotate_left(j as u32) as usize) % len);
        }
        let mut s: Vec<ElementId> = Vec::new();
        for &e in &cand[..len / 2] {
            s.push(e);
            if !mp.feasible(&s) {
                s.pop();
            }
        }
        let state = SolutionState::from_elements(&f, &s).unwrap();
        for &x in &cand[len / 2..] {
            let c = mp.exchange_set(x, &state).unwrap();
            let mut after: Vec<ElementId> = s.iter().copied().filter(|e| !c.contains(e)).collect();
            after.push(x);
            prop_assert!(mp.feasible(&after));
            prop_assert!(c.len() <= mp.p());
        }
    }

    #[test]
    fn pass_keeps_incremental_value_identities(
        seed in 0u64..10_000,
        fam in 0usize..4,
        beta in 0.0f64..2.0,
        alpha in 0.0f64..1.0,
        passes in 1usize..4,
    ) {
        let family = [Family::CoverageUniform, Family::Bipartite, Family::Hypergraph, Family::DirectedCut][fam];
        let inst = generate_instance(&random_spec(family, seed)).unwrap();
        let (f, mp) = inst.build().unwrap();
        let opts = PassOptions { audit: true, trace: false };
        let mut s = SolutionState::from_elements(&f, &[]).unwrap();
        for _ in 0..passes {
            let r = streaming_pass(&f, &mp, &f.ground(), s, PassParams { alpha, beta }, opts).unwrap();
            prop_assert!(r.audit.is_clean(), "{:?}", r.audit.violations);
            prop_assert!(mp.feasible(&r.s_tilde.elements()));
            if f.is_monotone() && alpha == 0.0 {
                prop_assert!(r.f_final >= r.f_init - TOL);
            }
            s = r.s_tilde;
        }
    }

    #[test]
    fn balance_point_equalizes_branches(p in 1usize..=8, excess in 0.01f64..50.0, beta in 0.01f64..2.0) {
        let gamma = p as f64 + 1.0 + excess;
        let delta = balance_delta(gamma, beta, p);
        let left = gamma * delta;
        let right = progress_branch(beta, delta, p);
        prop_assert!((left - right).abs() <= 1e-9 * left.max(1.0), "{left} vs {right}");
    }

    #[test]
    fn certificate_never_exceeds_previous(p in 1usize..=6, g in 2.0f64..40.0, beta in 0.01f64..2.0, delta in 0.0f64..=1.0) {
        prop_assert!(certified_gamma(g, beta, delta, p) <= g * delta + 1e-12);
    }

    #[test]
    fn brute_force_matches_unpruned(seed in 0u64..10_000, fam in 0usize..4) {
        let family = [Family::CoverageUniform, Family::Bipartite, Family::Hypergraph, Family::DirectedCut][fam];
        let inst = generate_instance(&random_spec(family, seed)).unwrap();
        prop_assume!(inst.n <= 10);
        let (f, mp) = inst.build().unwrap();
        let r = brute_force_opt(&f, &mp).unwrap();
        prop_assert!(mp.feasible(&r.opt_set));
        prop_assert!((r.opt_value - enumerate_opt(&f, &mp, &f.ground())).abs() <= TOL);
        prop_assert!((f.value(&r.opt_set).unwrap() - r.opt_value).abs() <= TOL);
    }
}

#[test]
fn matchoid_recurrence_sanity() {
    for p in 1..=8usize {
        let plan = Schedule::matchoid(p).plan(10_000);
        let floor = p as f64 + 1.0;
        for (i, w) in plan.windows(2).enumerate() {
            assert!(w[1].gamma <= w[0].gamma + 1e-12, "p={p} pass {} increases", i + 2);
        }
        for (i, row) in plan.iter().enumerate() {
            assert!(row.gamma >= floor - 1e-12, "p={p} pass {} below p+1", i + 1);
            assert!(row.beta > 0.0);
            let closed = floor + 4.0 * p as f64 / (i + 1) as f64;
            assert!(row.gamma <= closed + 1e-9, "p={p} pass {}: {} > {closed}", i + 1, row.gamma);
        }
    }
}

#[test]
fn greedy_within_p_plus_one() {
    for (family, p) in [(Family::CoverageUniform, 1.0), (Family::Bipartite, 2.0), (Family::Hypergraph, 3.0)] {
        for inst in corpus(family, 100, 7_000) {
            let (f, mp) = inst.build().unwrap();
            let g = offline_greedy(&f, &mp).unwrap();
            assert!(mp.feasible(&g));
            let gv = f.value(&g).unwrap();
            let opt = brute_force_opt(&f, &mp).unwrap().opt_value;
            assert!(gv <= opt + TOL);
            assert!((p + 1.0) * gv + TOL >= opt, "{family:?}: greedy {gv}, opt {opt}");
        }
    }
}
