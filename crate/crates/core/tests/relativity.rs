use std::f64::consts::PI;

use tfstar::bulk::{integrate_bulk, BulkOptions};
use tfstar::ode::Tolerances;
use tfstar::relativity::{
    ball_kinetic_coefficient, chandra_single_fluid, integrate_rel_profile, proportional_fit, rel_kinetic_energy,
    rel_kinetic_energy_integral, uniform_ball_energy, RelOptions, RelSolution,
};
use tfstar::special::{lane_emden, LaneEmdenOptions};
use tfstar::{derive_coefficients, ConstantSet, Species};

fn bulk(rho_p: f64, rho_e: f64) -> Option<RelSolution> {
    integrate_rel_profile(rho_p, rho_e, &ConstantSet::desk(), &RelOptions { bulk_only: true, ..Default::default() })
        .ok()
}

/// Smallest proportional misfit over the central ratio `ρ_p(0)/ρ_e(0)`.
fn best_proportional_misfit(rho_e: f64) -> f64 {
    let misfit = |ratio: f64| bulk(ratio * rho_e, rho_e).map_or(f64::INFINITY, |s| proportional_fit(&s.profile).1);
    let (mut a, mut b) = (1.0, 1.35);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if misfit(c) < misfit(d) {
            b = d;
        } else {
            a = c;
        }
    }
    misfit(0.5 * (a + b))
}

fn first_zero(n: f64) -> f64 {
    lane_emden(n, &LaneEmdenOptions::default()).unwrap().first_zero.unwrap()
}

#[test]
fn fermi_momenta_stay_above_rest_mass_on_the_support() {
    let k = ConstantSet::desk();
    for (rho_p, rho_e) in [(1e-4, 8.66e-5), (1.0, 0.87), (30.0, 27.0)] {
        let sol =
            integrate_rel_profile(rho_p, rho_e, &k, &RelOptions { bulk_only: true, ..Default::default() }).unwrap();
        for s in &sol.states {
            assert!(s.y_e >= 1.0 - 1e-12 && s.y_p >= 1.0 - 1e-12, "y below one at r = {}", s.r);
        }
        let end = sol.states.last().unwrap();
        assert!((end.y_e - 1.0).abs().min((end.y_p - 1.0).abs()) < 1e-10, "{end:?}");
        assert_eq!(end.r, sol.bulk_radius);
    }
}

#[test]
fn kinetic_energy_forms_agree_on_relativistic_profiles() {
    let k = ConstantSet::desk();
    for (rho_p, rho_e) in [(1e-4, 8.66e-5), (1.0, 0.87), (30.0, 27.0)] {
        let sol = bulk(rho_p, rho_e).unwrap();
        for sp in [Species::Electron, Species::Proton] {
            let (a, b) = (
                rel_kinetic_energy(&sol.profile, sp, &k).unwrap(),
                rel_kinetic_energy_integral(&sol.profile, sp, &k).unwrap(),
            );
            assert!((a / b - 1.0).abs() < 1e-8, "{sp:?}: {a} vs {b}");
        }
    }
}

#[test]
fn proportional_solutions_exist_only_without_relativity() {
    assert!(best_proportional_misfit(1e-4) < 1e-5);
    assert!(best_proportional_misfit(100.0) > 1e-3);
}

#[test]
fn chandrasekhar_equation_interpolates_between_polytropes() {
    let tol = Tolerances::default();
    let (xi_3, xi_32) = (first_zero(3.0), first_zero(1.5));
    let mut last = f64::INFINITY;
    for y0 in [10.0, 100.0, 1e4] {
        let gap = (chandra_single_fluid(y0, &tol).unwrap().first_zero - xi_3).abs();
        assert!(gap < last, "y0 = {y0}: gap {gap}");
        last = gap;
    }
    assert!(last < 1e-2 * xi_3);
    // Near y0 = 1 the source is (2/y0)^{3/2} (y − 1/y0)^{3/2}: index 3/2 after rescaling.
    for (y0, tol_rel) in [(1.01, 5e-3), (1.001, 5e-4)] {
        let eps: f64 = 1.0 - 1.0 / y0;
        let scale = ((2.0 / y0).powf(1.5) * eps.sqrt()).sqrt();
        let r1 = chandra_single_fluid(y0, &Tolerances::default()).unwrap().first_zero;
        assert!((r1 * scale / xi_32 - 1.0).abs() < tol_rel, "y0 = {y0}: {}", r1 * scale);
    }
}

#[test]
fn ball_coefficient_is_the_ultrarelativistic_fermi_gas() {
    // ε = (3/4)(3/8π)^{1/3} h c n^{4/3} for a spin-½ gas with p_F ≫ m c.
    let k = ConstantSet::desk();
    let n = 300.0;
    let uniform = |radius: f64| {
        let vol = 4.0 / 3.0 * PI * radius.powi(3);
        vol * 0.75 * (3.0 / (8.0 * PI)).cbrt() * k.h * k.c * (n / vol).powf(4.0 / 3.0)
    };
    let expected = 2.0 * uniform(1.0);
    let ours = ball_kinetic_coefficient(n, n, &k);
    assert!((ours / expected - 1.0).abs() < 1e-12);
    // The stated closed form is smaller by exactly 3/2^{1/3}.
    let stated =
        3f64.powf(2.0 / 3.0) / 2f64.powf(10.0 / 3.0) * k.h * k.c / PI.powf(2.0 / 3.0) * 2.0 * n.powf(4.0 / 3.0);
    assert!((ours / stated - 3.0 / 2f64.cbrt()).abs() < 1e-12);
    // And the exact ball energy approaches it at small radii (neutral: no electric term).
    let r: f64 = 1e-7;
    let m = k.m_p * n + k.m_e * n;
    let kinetic = uniform_ball_energy(n, n, r, &k) + 0.6 * k.g * m * m / r;
    assert!((kinetic * r / ours - 1.0).abs() < 1e-4);
}

#[test]
fn tiny_central_densities_reproduce_the_nonrelativistic_bulk() {
    let k = ConstantSet::desk();
    let c = derive_coefficients(&k).unwrap();
    let (alpha, beta) = (1e-4, 0.9086e-4);
    let nr = integrate_bulk(alpha, beta, &c, &BulkOptions::default()).unwrap();
    let rel = bulk(alpha.powf(1.5), beta.powf(1.5)).unwrap();
    let r_cut = 0.9 * nr.event_radius.min(rel.bulk_radius);
    for p in rel.profile.samples.iter().filter(|p| p.r <= r_cut) {
        for sp in [Species::Electron, Species::Proton] {
            let reference = nr.profile.u_at(sp, p.r);
            assert!((p.u(sp) / reference - 1.0).abs() < 1e-3, "{sp:?} at r = {}", p.r);
        }
    }
    assert!((rel.bulk_radius / nr.event_radius - 1.0).abs() < 1e-3);
}
