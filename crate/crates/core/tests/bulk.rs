use proptest::prelude::*;
use tfstar::bulk::{integrate_bulk, BulkOptions, BulkOutcome};
use tfstar::ode::Tolerances;
use tfstar::{derive_coefficients, ratio_window, CoefficientSet, ConstantSet, Species};

fn desk() -> CoefficientSet {
    derive_coefficients(&ConstantSet::desk()).unwrap()
}

/// Random point strictly inside the open central window at `alpha`.
fn interior(alpha: f64, f: f64) -> f64 {
    let (lo, hi) = ratio_window(&ConstantSet::desk()).unwrap().beta_range(alpha);
    lo + f * (hi - lo)
}

fn run(alpha: f64, beta: f64, opts: &BulkOptions) -> BulkOutcome {
    integrate_bulk(alpha, beta, &desk(), opts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn densities_stay_nonnegative(alpha in 0.1f64..10.0, f in 0.01f64..0.99) {
        let out = run(alpha, interior(alpha, f), &BulkOptions::default());
        prop_assert!(out.event_radius > 0.0);
        for s in &out.profile.samples {
            prop_assert!(s.r >= 0.0 && s.u_e >= 0.0 && s.u_p >= 0.0);
        }
    }

    #[test]
    fn both_densities_never_increase_together(alpha in 0.1f64..10.0, f in 0.01f64..0.99) {
        let out = run(alpha, interior(alpha, f), &BulkOptions::default());
        for s in &out.profile.samples {
            prop_assert!(!(s.du_e > 0.0 && s.du_p > 0.0), "both increasing at r = {}", s.r);
        }
    }

    #[test]
    fn turned_density_keeps_increasing_and_stays_bounded(alpha in 0.1f64..10.0, f in 0.01f64..0.99) {
        let opts = BulkOptions::default();
        let out = run(alpha, interior(alpha, f), &opts);
        if let Some((r_turn, sp)) = out.turning {
            let u_turn = out.profile.u_at(sp, r_turn);
            let scale = out.profile.samples[0].u(sp);
            for s in out.profile.samples.iter().filter(|s| s.r > r_turn && s.u_e > 0.0 && s.u_p > 0.0) {
                prop_assert!(s.du(sp) >= -1e-9 * scale, "{sp:?} slope {} at r = {}", s.du(sp), s.r);
                prop_assert!(s.u(sp) <= opts.growth_cap * u_turn);
            }
        }
    }

    #[test]
    fn electron_curves_do_not_cross(f1 in 0.02f64..0.98, gap in 0.001f64..0.5) {
        let f2 = (f1 + gap).min(0.99);
        let (lo, hi) = (run(1.0, interior(1.0, f1), &BulkOptions::default()), run(1.0, interior(1.0, f2), &BulkOptions::default()));
        let r_end = lo.event_radius.min(hi.event_radius);
        for s in hi.profile.samples.iter().filter(|s| s.r < r_end) {
            let below = lo.profile.u_at(Species::Electron, s.r);
            prop_assert!(s.u_e >= below - 1e-9, "crossing at r = {}: {} < {}", s.r, s.u_e, below);
        }
    }
}

#[test]
fn halving_the_tolerance_moves_profiles_by_less_than_ten_times_it() {
    let coarse_tol = Tolerances::with_rtol(1e-8);
    let fine_tol = Tolerances::with_rtol(5e-9);
    for (alpha, f) in [(1.0, 0.2), (1.0, 0.5), (3.0, 0.8), (0.4, 0.05)] {
        let beta = interior(alpha, f);
        let r_event = run(alpha, beta, &BulkOptions::default()).event_radius;
        let scale = alpha.max(beta);
        // Stopping both runs at the same cap compares them at exactly matched radii.
        for frac in [0.25, 0.5, 0.75, 0.95] {
            let end = |tol| run(alpha, beta, &BulkOptions { tol, r_max: Some(frac * r_event), ..Default::default() });
            let (coarse, fine) = (end(coarse_tol).state_at_event, end(fine_tol).state_at_event);
            for sp in [Species::Electron, Species::Proton] {
                let d = (fine.u(sp) - coarse.u(sp)).abs() / scale;
                assert!(d < 10.0 * fine_tol.rtol, "alpha {alpha}, f {f}: {sp:?} moved {d:e} at r = {}", fine.r);
            }
        }
    }
}

#[test]
fn vanishing_event_leaves_the_other_species_positive() {
    for f in [0.05, 0.3, 0.7, 0.95] {
        let out = run(1.0, interior(1.0, f), &BulkOptions::default());
        let s = out.state_at_event;
        if let Some(survivor) = out.event.survivor() {
            assert_eq!(s.u(survivor.other()), 0.0);
            assert!(s.u(survivor) > 0.0);
        }
    }
}
