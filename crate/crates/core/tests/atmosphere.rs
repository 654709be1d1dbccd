use proptest::prelude::*;
use tfstar::atmosphere::{critical_slope, integrate_atmosphere, reference_constant, AtmosphereKind, AtmosphereOptions};
use tfstar::{derive_coefficients, ConstantSet};

fn d_values() -> [f64; 2] {
    let c = derive_coefficients(&ConstantSet::desk()).unwrap();
    [c.d_e(), c.d_p()]
}

fn kind_name(k: &AtmosphereKind) -> &'static str {
    match k {
        AtmosphereKind::Compact { .. } => "compact",
        AtmosphereKind::CriticalDecay => "critical",
        AtmosphereKind::Unbounded { .. } => "unbounded",
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn no_oscillation_after_a_stationary_point(
        r0 in 0.3f64..5.0, a in 0.05f64..3.0, slope in -0.5f64..0.0, which in 0usize..2,
    ) {
        let opts = AtmosphereOptions { continue_unbounded: true, ..Default::default() };
        let d = d_values()[which];
        let out = integrate_atmosphere(r0, a, slope * a / r0, d, &opts).unwrap();
        let mut turned = false;
        for s in &out.samples {
            if turned {
                prop_assert!(s.du >= 0.0, "slope turned negative again at r = {}", s.r);
            }
            turned |= s.du >= 0.0 && s.u > 0.0;
        }
        if let AtmosphereKind::Unbounded { .. } = out.kind {
            prop_assert!(turned || out.samples.last().unwrap().u > opts.blowup_cap * a);
        }
    }

    #[test]
    fn steeper_descent_closes_sooner(r0 in 0.3f64..5.0, a in 0.05f64..3.0, which in 0usize..2, gap in 0.01f64..0.5) {
        let d = d_values()[which];
        let b_hat = critical_slope(r0, a, d, 1e-10).unwrap();
        let opts = AtmosphereOptions::default();
        let b1 = b_hat * (1.0 + gap);
        let b2 = b_hat * (1.0 + 2.0 * gap);
        let (o1, o2) = (
            integrate_atmosphere(r0, a, b1, d, &opts).unwrap(),
            integrate_atmosphere(r0, a, b2, d, &opts).unwrap(),
        );
        match (o1.kind, o2.kind) {
            (AtmosphereKind::Compact { r1: big }, AtmosphereKind::Compact { r1: small }) => prop_assert!(big > small),
            other => prop_assert!(false, "expected two compact outcomes, got {other:?}"),
        }
    }

    #[test]
    fn compact_outcomes_decrease_strictly(r0 in 0.3f64..5.0, a in 0.05f64..3.0, steep in 1.01f64..20.0) {
        let d = d_values()[0];
        let b_hat = critical_slope(r0, a, d, 1e-10).unwrap();
        let out = integrate_atmosphere(r0, a, steep * b_hat, d, &AtmosphereOptions::default()).unwrap();
        let AtmosphereKind::Compact { r1 } = out.kind else {
            return Err(TestCaseError::fail(format!("not compact: {:?}", out.kind)));
        };
        prop_assert_eq!(out.outer_radius(), r1);
        prop_assert_eq!(out.samples.last().unwrap().u, 0.0);
        for w in out.samples.windows(2) {
            prop_assert!(w[1].u < w[0].u);
        }
    }
}

#[test]
fn critical_trajectories_follow_the_inverse_fourth_power() {
    for d in d_values() {
        for (r0, a) in [(0.5, 1.0), (1.0, 0.2), (3.0, 0.01), (2.0, 2.0), (1.0, 0.5)] {
            let b_hat = critical_slope(r0, a, d, 1e-12).unwrap();
            let out = integrate_atmosphere(r0, a, b_hat, d, &AtmosphereOptions::default()).unwrap();
            assert_eq!(kind_name(&out.kind), "critical", "r0 {r0}, a {a}: {:?}", out.kind);
            assert!(out.samples.iter().all(|s| s.u > 0.0));
            let r_end = out.outer_radius();
            assert!(r_end > 10.0 * r0, "trusted range ends at {r_end}");
            let env = out.envelope.expect("critical outcomes carry an envelope");
            assert_eq!(env.constant(), reference_constant(d));
            let worst = out
                .samples
                .iter()
                .filter(|s| s.r >= r_end / 10.0)
                .map(|s| (s.u * s.r.powi(4) - env.value(s.r)).abs() / env.constant())
                .fold(0.0, f64::max);
            assert!(worst < 1e-3, "r0 {r0}, a {a}: envelope misfit {worst:e} on the last decade");
            // Beyond the samples the envelope keeps closing in on the constant.
            assert!(
                (env.value(1e3 * r_end) / env.constant() - 1.0).abs() < (env.value(r_end) / env.constant() - 1.0).abs()
            );
        }
    }
}

#[test]
fn slopes_either_side_of_critical_split_the_outcomes() {
    let d = d_values()[1];
    let b_hat = critical_slope(1.0, 0.5, d, 1e-12).unwrap();
    let opts = AtmosphereOptions::default();
    for eps in [1e-2, 1e-4, 1e-6] {
        let below = integrate_atmosphere(1.0, 0.5, b_hat * (1.0 + eps), d, &opts).unwrap();
        let above = integrate_atmosphere(1.0, 0.5, b_hat * (1.0 - eps), d, &opts).unwrap();
        assert_eq!(kind_name(&below.kind), "compact");
        assert_eq!(kind_name(&above.kind), "unbounded");
    }
}
