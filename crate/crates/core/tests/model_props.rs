use proptest::prelude::*;
use risnoma_core::channels::{
    fit_laguerre, CompositeLink, CompositeMethod, DirectLink, LinkBudget, NakagamiParams, RisLink, RisLinkParams,
    SnrCdf,
};
use risnoma_core::environment::{
    generate_scenario, los_probability, nakagami_shape, path_loss_exponent, EnvironmentParams, Position3D,
    ScenarioConfig,
};
use risnoma_core::noma::{ordered_cdf, outage_probability, sic_thresholds, OutageQuery, PowerAllocation};
use risnoma_core::special::binomial;

fn env() -> EnvironmentParams {
    EnvironmentParams::default()
}

fn pos() -> impl Strategy<Value = Position3D> {
    (-2000.0f64..2000.0, -2000.0f64..2000.0, 0.0f64..200.0).prop_map(|(x, y, z)| Position3D { x, y, z })
}

fn shape() -> impl Strategy<Value = f64> {
    0.5f64..6.0
}

fn ris_params(m1: f64, m2: f64, n: u32) -> RisLinkParams {
    RisLinkParams::new(
        NakagamiParams::unit(m1).unwrap(),
        NakagamiParams::unit(m2).unwrap(),
        n,
        1e-3,
        1e-3,
    )
    .unwrap()
}

/// Check the CDF axioms on a geometric grid spanning `scale`.
fn check_cdf(link: &dyn SnrCdf, scale: f64) -> Result<(), TestCaseError> {
    prop_assert_eq!(link.cdf(0.0).unwrap(), 0.0);
    let mut prev = 0.0;
    for k in -40..=40 {
        let g = scale * 10f64.powf(k as f64 / 10.0);
        let f = link.cdf(g).unwrap();
        prop_assert!((0.0..=1.0).contains(&f), "F({g}) = {f}");
        prop_assert!(f >= prev - 1e-12, "F dropped from {prev} to {f} at {g}");
        prev = f;
    }
    prop_assert!(link.cdf(scale * 1e8).unwrap() > 1.0 - 1e-9);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn los_probability_is_a_probability(a in pos(), b in pos()) {
        let p = los_probability(&env(), &a, &b);
        prop_assert!((0.0..=1.0).contains(&p));
        let alpha = path_loss_exponent(&env(), p).unwrap();
        prop_assert!(alpha >= env().alpha_los && alpha <= env().alpha_nlos);
    }

    #[test]
    fn equal_altitudes_take_the_equal_altitude_branch(a in pos(), dx in 1.0f64..500.0) {
        let b = Position3D { x: a.x + dx, ..a };
        let e = env();
        let base = 1.0 - (-a.z * a.z / (2.0 * e.zeta * e.zeta)).exp();
        let expected = base.powf(dx * (e.v * e.mu).sqrt()).clamp(0.0, 1.0);
        let p = los_probability(&e, &a, &b);
        prop_assert!((p - expected).abs() <= 1e-12 * expected.max(1e-300), "{p} vs {expected}");
    }

    #[test]
    fn shape_grows_with_los(p in 0.0f64..0.999, dp in 0.001f64..0.5) {
        let lo = nakagami_shape(p).unwrap();
        let hi = nakagami_shape((p + dp).min(1.0)).unwrap();
        prop_assert!(lo >= 0.5 && hi > lo);
    }

    #[test]
    fn scenario_generation_is_reproducible(seed in any::<u64>()) {
        let cfg = ScenarioConfig::default();
        prop_assert_eq!(generate_scenario(&cfg, seed).unwrap(), generate_scenario(&cfg, seed).unwrap());
    }

    #[test]
    fn laguerre_shape_is_linear_in_n(m1 in shape(), m2 in shape(), n in 1u32..2000) {
        let one = fit_laguerre(&ris_params(m1, m2, 1)).unwrap();
        let many = fit_laguerre(&ris_params(m1, m2, n)).unwrap();
        prop_assert!((many.a - n as f64 * one.a).abs() <= 1e-12 * many.a);
        prop_assert_eq!(many.b, one.b);
    }

    #[test]
    fn direct_and_ris_cdfs_are_distributions(m in shape(), m1 in shape(), m2 in shape(), n in 1u32..256, gbar in 1e-3f64..1e6) {
        check_cdf(&DirectLink { fading: NakagamiParams::unit(m).unwrap(), gamma_bar_d: gbar }, gbar)?;
        let fit = fit_laguerre(&ris_params(m1, m2, n)).unwrap();
        check_cdf(&RisLink { fit: Some(fit), gamma_bar_r: gbar }, gbar * fit.mean_sum * fit.mean_sum)?;
    }

    #[test]
    fn rayleigh_direct_link_is_exponential(gbar in 1e-3f64..1e6, omega in 0.2f64..5.0, x in 0.0f64..20.0) {
        let link = DirectLink { fading: NakagamiParams::new(1.0, omega).unwrap(), gamma_bar_d: gbar };
        let g = x * omega * gbar;
        prop_assert!((link.cdf(g).unwrap() - (1.0 - (-g / (omega * gbar)).exp())).abs() <= 1e-12);
    }

    #[test]
    fn ordered_cdfs_average_to_the_parent(f in 0.0f64..=1.0, total in 1usize..8) {
        let mean: f64 = (1..=total).map(|m| ordered_cdf(f, m, total).unwrap()).sum::<f64>() / total as f64;
        prop_assert!((mean - f).abs() <= 1e-12);
    }

    #[test]
    fn ordered_cdf_equals_the_alternating_sum(f in 0.0f64..=1.0, total in 1usize..7, m_raw in 0usize..7) {
        let m = m_raw % total + 1;
        let mut alt = 0.0;
        for k in m..=total {
            for l in 0..=(total - k) {
                let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                alt += sign
                    * binomial(total as u64, k as u64).unwrap() as f64
                    * binomial((total - k) as u64, l as u64).unwrap() as f64
                    * f.powi((k + l) as i32);
            }
        }
        prop_assert!((ordered_cdf(f, m, total).unwrap() - alt).abs() <= 1e-12);
    }

    #[test]
    fn feasible_allocations_never_fail(raw in prop::collection::vec(0.01f64..1.0, 1..6), rate in 0.05f64..4.0) {
        let mut w = raw.clone();
        w.sort_by(|a, b| b.total_cmp(a));
        w.dedup();
        let alloc = PowerAllocation::normalized(&w).unwrap();
        let rates = vec![rate; alloc.len()];
        let stage_ok = |j: usize| (2f64.powf(rate) - 1.0) * alloc.residual(j) < alloc.beta()[j - 1];
        prop_assume!((1..=alloc.len()).all(stage_ok));
        for m in 1..=alloc.len() {
            let th = sic_thresholds(&alloc, &rates, m).unwrap();
            prop_assert!(th.gamma_lbs.iter().all(|g| *g > 0.0));
        }
    }

    #[test]
    fn outage_falls_with_snr_and_rises_with_rate(
        m in shape(),
        gbar in 0.1f64..1e4,
        boost in 1.0f64..100.0,
        rate in 0.1f64..1.0,
        extra in 0.0f64..0.5,
    ) {
        let alloc = PowerAllocation::normalized(&[0.9, 0.09, 0.01]).unwrap();
        let outage = |gbar: f64, rate: f64, rank: usize| {
            let link = DirectLink { fading: NakagamiParams::unit(m).unwrap(), gamma_bar_d: gbar };
            let rates = [rate; 3];
            outage_probability(&OutageQuery { rank_m: rank, total_m: 3, parent_cdf: &link, target_rates: &rates }, &alloc)
        };
        for rank in 1..=3 {
            let base = outage(gbar, rate, rank).unwrap();
            prop_assert!(outage(gbar * boost, rate, rank).unwrap() <= base + 1e-15);
            if let Ok(higher) = outage(gbar, rate + extra, rank) {
                prop_assert!(higher >= base - 1e-15);
            }
        }
    }

    #[test]
    fn single_uav_outage_is_the_parent_cdf(m in shape(), gbar in 0.1f64..1e4, rate in 0.1f64..4.0) {
        let alloc = PowerAllocation::new(vec![1.0]).unwrap();
        let link = DirectLink { fading: NakagamiParams::unit(m).unwrap(), gamma_bar_d: gbar };
        let th = sic_thresholds(&alloc, &[rate], 1).unwrap();
        prop_assert!((th.gamma_mlb - (2f64.powf(rate) - 1.0)).abs() <= 1e-12 * th.gamma_mlb);
        let out = outage_probability(&OutageQuery { rank_m: 1, total_m: 1, parent_cdf: &link, target_rates: &[rate] }, &alloc).unwrap();
        prop_assert_eq!(out, link.cdf(th.gamma_mlb).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn composite_cdfs_are_distributions(
        m3 in shape(),
        m1 in shape(),
        m2 in shape(),
        n in 1u32..256,
        ratio in 1e-4f64..1.0,
    ) {
        let fit = fit_laguerre(&ris_params(m1, m2, n)).unwrap();
        let budget = LinkBudget::new(1e6, 1e-3, 1e-3 * ratio).unwrap();
        let direct = NakagamiParams::unit(m3).unwrap();
        let link = |method| CompositeLink { direct, fit: Some(fit), budget, method };
        let scale = budget.gamma_bar_d + budget.gamma_bar_r * fit.mean_sum * fit.mean_sum;
        check_cdf(&link(CompositeMethod::Quadrature), scale)?;
        let half = NakagamiParams::unit((2.0 * m3).round() / 2.0).unwrap();
        check_cdf(&CompositeLink { direct: half, ..link(CompositeMethod::Closed) }, scale)?;
    }

    #[test]
    fn composite_outage_is_nonincreasing_in_elements(m3 in shape(), m1 in shape(), m2 in shape(), g in 0.01f64..10.0) {
        let budget = LinkBudget::new(1e6, 1e-3, 1e-5).unwrap();
        let direct = NakagamiParams::unit(m3).unwrap();
        let gamma = g * budget.gamma_bar_d;
        let mut prev = CompositeLink { direct, fit: None, budget, method: CompositeMethod::Quadrature }.cdf(gamma).unwrap();
        for n in [1u32, 2, 4, 16, 64, 256] {
            let fit = Some(fit_laguerre(&ris_params(m1, m2, n)).unwrap());
            let f = CompositeLink { direct, fit, budget, method: CompositeMethod::Quadrature }.cdf(gamma).unwrap();
            prop_assert!(f <= prev + 1e-9, "N={n}: {f} > {prev}");
            prev = f;
        }
    }
}
