use proptest::prelude::*;
use risnoma_core::channels::CompositeMethod;
use risnoma_core::environment::{generate_scenario, EnvironmentParams, ScenarioConfig};
use risnoma_core::noma::{is_feasible, PowerAllocation};
use risnoma_core::ruom::{evaluate_candidates, evaluate_candidates_serial, pgs, ruom, OutageModel, RuomParams};
use risnoma_core::system::{resolve_system, FadingOverrides, SystemModel};

fn system(seed: u64) -> SystemModel {
    let scn = generate_scenario(&ScenarioConfig::default(), seed).unwrap();
    resolve_system(&EnvironmentParams::default(), &scn, &FadingOverrides::default(), CompositeMethod::Quadrature).unwrap()
}

fn valid(beta: &[f64], rates: &[f64]) -> bool {
    let sum: f64 = beta.iter().sum();
    let alloc = PowerAllocation::new(beta.to_vec());
    (sum - 1.0).abs() <= 1e-9 * beta.len() as f64
        && beta.windows(2).all(|w| w[0] > w[1])
        && alloc.is_ok_and(|a| is_feasible(&a, rates))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn global_grid_candidates_are_valid(
        n_uavs in 1usize..5,
        eps in prop::sample::select(vec![0.5, 0.25, 0.2, 0.1, 0.05]),
        rate in 0.1f64..2.0,
    ) {
        let rates = vec![rate; n_uavs];
        let cands = pgs(None, eps, &rates, n_uavs).unwrap();
        for c in &cands {
            prop_assert!(valid(c.beta(), &rates), "{:?}", c.beta());
        }
        prop_assert!(cands.windows(2).all(|w| w[0].beta() < w[1].beta()));
    }

    #[test]
    fn local_grid_keeps_the_incumbent(
        w in prop::collection::vec(0.001f64..1.0, 3),
        eps in prop::sample::select(vec![0.1, 0.01, 0.001]),
    ) {
        let mut w = w;
        w.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(w[0] > w[1] && w[1] > w[2]);
        let alloc = PowerAllocation::normalized(&w).unwrap();
        let rates = [0.05; 3];
        prop_assume!(is_feasible(&alloc, &rates));
        let cands = pgs(Some(&alloc), eps, &rates, 3).unwrap();
        prop_assert!(cands.contains(&alloc));
        for c in &cands {
            prop_assert!(valid(c.beta(), &rates));
            for (x, y) in c.beta().iter().zip(alloc.beta()) {
                prop_assert!((x - y).abs() <= eps + 1e-9);
            }
        }
    }
}

#[test]
fn parallel_and_serial_selection_agree() {
    let model = system(2);
    let cands = pgs(None, 0.05, model.rates(), 3).unwrap();
    for n in [[0, 0, 0], [18, 0, 0], [64, 64, 64]] {
        assert_eq!(
            evaluate_candidates(&cands, &model, &n).unwrap(),
            evaluate_candidates_serial(&cands, &model, &n).unwrap()
        );
    }
}

#[test]
fn optimizer_invariants_on_generated_scenarios() {
    let params = RuomParams::default();
    let refinements = params.refinements();
    assert_eq!(refinements, 7);
    for seed in 0..8 {
        let model = system(seed);
        let res = ruom(&model, &params).unwrap();
        assert!(res.trace.iterations.len() <= params.max_iter);
        for it in &res.trace.iterations {
            assert_eq!(it.search_max_outage.len(), refinements, "seed {seed}");
            assert!(
                it.search_max_outage.windows(2).all(|w| w[1] <= w[0]),
                "seed {seed}: fairness search got worse {:?}",
                it.search_max_outage
            );
            assert!(valid(&it.beta, model.rates()));
        }
        let last = res.trace.iterations.last().unwrap();
        let used = |k: usize| res.assignment.used(k);
        for rank in 1..=3 {
            let n = last.n_elements[rank - 1];
            let k = model.ris_of(rank);
            let p = model.outage(rank, &res.beta, n).unwrap();
            assert_eq!(p, last.outage[rank - 1]);
            let cap_binding = used(k) == res.assignment.caps[k];
            if n > 0 && !cap_binding {
                let below = model.outage(rank, &res.beta, n - 1).unwrap();
                assert!(p < params.delta && params.delta <= below, "seed {seed} rank {rank}");
            }
            if cap_binding && p >= params.delta {
                assert!(last.capacity_exhausted.contains(&rank));
            }
            // Outage never increases with more elements on the optimizer's own evaluations.
            let mut prev = model.outage(rank, &res.beta, 0).unwrap();
            for m in [1, 2, 4, 8, 16, 32, 64, 128] {
                let q = model.outage(rank, &res.beta, m).unwrap();
                assert!(q <= prev + 1e-12, "seed {seed} rank {rank} N={m}");
                prev = q;
            }
        }
        assert!(res.assignment.within_caps());
    }
}

#[test]
fn optimizer_is_deterministic() {
    let model = system(5);
    let params = RuomParams::default();
    assert_eq!(ruom(&model, &params).unwrap(), ruom(&model, &params).unwrap());
}
