use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sustain_core::bounds::{horizon_moments, schedule, survival_lower_bound, Horizon, OrderCap};
use sustain_core::regimes::classify;
use sustain_core::shock::sample_inverse;
use sustain_core::{finite_moments, infinite_moments, match_inverse_moments, Family, ShockSpec};

fn any_spec() -> impl Strategy<Value = ShockSpec> {
    prop_oneof![
        (-3.0f64..3.0, 0.01f64..3.0).prop_map(|(mu, sigma2)| ShockSpec::Lognormal { mu, sigma2 }),
        (0.05f64..10.0, 0.05f64..5.0).prop_map(|(beta, k)| ShockSpec::Pareto { beta, k }),
        (0.2f64..30.0, 0.05f64..30.0).prop_map(|(alpha, theta)| ShockSpec::Gamma { alpha, theta }),
        (0.1f64..5.0).prop_map(|a| ShockSpec::Constant { a }),
    ]
}

/// Laws with `E ln eps > 0` and at least three finite perpetuity moments.
fn light_spec() -> impl Strategy<Value = ShockSpec> {
    prop_oneof![
        (0.2f64..1.5, 0.01f64..0.1).prop_map(|(mu, sigma2)| ShockSpec::Lognormal { mu, sigma2 }),
        (2.0f64..6.0, 0.85f64..1.5).prop_map(|(beta, k)| ShockSpec::Pareto { beta, k }),
        (12.0f64..30.0, 4.0f64..12.0).prop_map(|(alpha, theta)| ShockSpec::Gamma { alpha, theta }),
    ]
    .prop_filter("needs three finite moments", |s| {
        s.expected_log() > 0.0 && s.inverse_moment(3) < 1.0
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn regime_bounds_are_ordered(spec in any_spec()) {
        let r = classify(&spec);
        let sb = spec.support_bounds();
        prop_assert!(r.d1 <= r.d2);
        if sb.big_m.is_infinite() {
            prop_assert_eq!(r.d1, 0.0);
        }
        if sb.m <= 1.0 {
            prop_assert!(r.d2.is_infinite());
        }
        prop_assert_eq!(r.ruin_certain, spec.expected_log() <= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn inverse_moments_are_log_convex(spec in any_spec(), r in 1u32..12) {
        let (a, b, c) = (
            spec.ln_inverse_moment(r - 1),
            spec.ln_inverse_moment(r),
            spec.ln_inverse_moment(r + 1),
        );
        if c.is_finite() {
            prop_assert!(2.0 * b <= a + c + 1e-9 * (1.0 + a.abs() + c.abs()));
        }
    }

    #[test]
    fn matching_round_trips(beta in 2.5f64..20.0, k in 0.3f64..3.0) {
        let pareto = ShockSpec::Pareto { beta, k };
        let (g1, g2) = (pareto.inverse_moment(1), pareto.inverse_moment(2));
        for family in [Family::Lognormal, Family::Gamma, Family::Pareto] {
            let m = match_inverse_moments(family, g1, g2).unwrap();
            prop_assert!((m.inverse_moment(1) / g1 - 1.0).abs() < 1e-10);
            prop_assert!((m.inverse_moment(2) / g2 - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn inverse_draws_stay_in_support(spec in any_spec(), seed in any::<u64>()) {
        let sb = spec.support_bounds();
        let (lo, hi) = (1.0 / sb.big_m, 1.0 / sb.m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..64 {
            let w = sample_inverse(&spec, &mut rng);
            prop_assert!(w >= lo * (1.0 - 1e-12) && w <= hi * (1.0 + 1e-12), "{w} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn normalised_moments_are_nondecreasing(spec in light_spec()) {
        let t = infinite_moments(&spec, 30).unwrap();
        let k = t.moments().finite_prefix();
        for r in 1..k {
            let a = t.ln_beta(r) / r as f64;
            let b = t.ln_beta(r + 1) / (r + 1) as f64;
            prop_assert!(a <= b + 1e-10, "r={r}: {a} > {b}");
        }
    }

    #[test]
    fn finite_moments_grow_with_horizon(spec in light_spec(), r in 1u32..4) {
        let grid = finite_moments(&spec, 3, 40).unwrap();
        let limit = infinite_moments(&spec, 3).unwrap().beta(r);
        for n in 1..40 {
            prop_assert!(grid.beta(r, n) <= grid.beta(r, n + 1) * (1.0 + 1e-12));
        }
        prop_assert!(grid.beta(r, 40) <= limit * (1.0 + 1e-12));
    }

    #[test]
    fn selected_order_is_optimal(spec in light_spec(), x in 1.01f64..40.0) {
        let m = horizon_moments(&spec, Horizon::Infinite, 40, OrderCap::SubunitGamma).unwrap();
        let sch = schedule(&m, 1.0).unwrap();
        let chosen = sch.order_at(x).unwrap();
        let best = (1..=sch.max_order)
            .map(|r| sch.ln_ruin_term(r, x))
            .fold(f64::INFINITY, f64::min);
        let got = sch.ln_ruin_term(chosen, x);
        prop_assert!(got <= best + 1e-9 * (1.0 + best.abs()), "order {chosen}: {got} vs {best}");
    }

    #[test]
    fn bound_is_monotone_in_x(spec in light_spec(), x in 1.01f64..40.0, dx in 0.0f64..5.0, n in prop_oneof![Just(None), (1u32..30).prop_map(Some)]) {
        let h = n.map_or(Horizon::Infinite, Horizon::Finite);
        let m = horizon_moments(&spec, h, 40, OrderCap::SubunitGamma).unwrap();
        let sch = schedule(&m, 1.0).unwrap();
        let lo = survival_lower_bound(&sch, x).survival;
        let hi = survival_lower_bound(&sch, x + dx).survival;
        prop_assert!(lo <= hi + 1e-12);
        prop_assert!((0.0..=1.0).contains(&lo));
    }

    #[test]
    fn finite_horizon_bound_dominates(spec in light_spec(), x in 1.01f64..40.0, n in 1u32..40) {
        let rmax = 40;
        let inf = infinite_moments(&spec, rmax).unwrap();
        let orders = inf.moments().finite_prefix();
        let fin = horizon_moments(&spec, Horizon::Finite(n), orders, OrderCap::Rmax).unwrap();
        let b_fin = survival_lower_bound(&schedule(&fin, 1.0).unwrap(), x).survival;
        let b_inf = survival_lower_bound(&schedule(inf.moments(), 1.0).unwrap(), x).survival;
        prop_assert!(b_fin >= b_inf - 1e-12, "{b_fin} < {b_inf}");
    }
}
