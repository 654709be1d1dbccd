//! Special-relativistic kinetic energy, the two-fluid system in the
//! relativity factors `y_f = √(1 + z_f²)`, Chandrasekhar's single-fluid
//! equation and uniform-ball critical-mass diagnostics.
//!
//! `z_f = (h / 2m_f c) (3ρ_f/π)^{1/3}` is the Fermi momentum over `m_f c`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bulk::blowup;
use crate::constants::{ConstantSet, Species};
use crate::error::{Error, Result};
use crate::ode::{self, Control, Step, Tolerances};
use crate::profile::{ProfileSample, RadialProfile};
use crate::quadrature::GaussRule;
use crate::roots::bisect_predicate;
use crate::shoot::ParticleCounts;

/// Below this argument `A(z)` is summed from its Taylor series.
const SERIES_SWITCH: f64 = 0.5;

/// `A(z) = 8z³(√(z²+1) − 1) − z(2z² − 3)√(z²+1) − 3 asinh z`,
/// equal to `24∫₀^z t²(√(1+t²) − 1) dt`.
pub fn chandrasekhar_a(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z < SERIES_SWITCH {
        // 24 Σ_{j≥1} C(1/2, j) z^{2j+3} / (2j+3)
        let z2 = z * z;
        let mut binom = 1.0;
        let mut pow = z * z2;
        let mut sum = 0.0;
        for j in 1..=28 {
            binom *= (0.5 - (j as f64 - 1.0)) / j as f64;
            pow *= z2;
            sum += binom * pow / (2 * j + 3) as f64;
        }
        return 24.0 * sum;
    }
    let s = (z * z + 1.0).sqrt();
    8.0 * z.powi(3) * (s - 1.0) - z * (2.0 * z * z - 3.0) * s - 3.0 * z.asinh()
}

/// `κ_f` in `z_f² = κ_f ρ_f^{2/3}`.
pub fn z_coefficient(consts: &ConstantSet, species: Species) -> f64 {
    let m = consts.mass(species);
    (consts.h / (2.0 * m * consts.c)).powi(2) * (3.0 / PI).powf(2.0 / 3.0)
}

/// Kinetic energy density `(π m⁴c⁵/3h³) A(z(ρ))`.
pub fn rel_energy_density(rho: f64, consts: &ConstantSet, species: Species) -> f64 {
    let m = consts.mass(species);
    let z = (z_coefficient(consts, species) * rho.max(0.0).powf(2.0 / 3.0)).sqrt();
    PI * m.powi(4) * consts.c.powi(5) / (3.0 * consts.h.powi(3)) * chandrasekhar_a(z)
}

/// Same density from the momentum-space form
/// `3 m c² ρ ∫₀¹ s² (√(1 + z² s²) − 1) ds`.
pub fn rel_energy_density_integral(rho: f64, consts: &ConstantSet, species: Species, rule: &GaussRule) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let m = consts.mass(species);
    let z2 = z_coefficient(consts, species) * rho.powf(2.0 / 3.0);
    // √(1+x) − 1 = x / (√(1+x) + 1) avoids cancellation.
    let inner = rule.integrate(0.0, 1.0, |s| {
        let x = z2 * s * s;
        s * s * x / ((1.0 + x).sqrt() + 1.0)
    });
    3.0 * m * consts.c * consts.c * rho * inner
}

fn species_rho(species: Species, re: f64, rp: f64) -> f64 {
    if species == Species::Electron {
        re
    } else {
        rp
    }
}

fn converged_total<F: Fn(usize) -> f64>(total: F) -> Result<f64> {
    let (one, two) = (total(1), total(2));
    let change = (two - one).abs() / two.abs().max(f64::MIN_POSITIVE);
    if change > 1e-8 {
        return Err(Error::QuadratureNotConverged { change });
    }
    Ok(two)
}

/// `∫ e(ρ_f) d³x` on a radial profile with the closed-form density.
pub fn rel_kinetic_energy(profile: &RadialProfile, species: Species, consts: &ConstantSet) -> Result<f64> {
    let rule = GaussRule::new(5);
    converged_total(|splits| {
        let cum = profile.cumulative_integral(
            |_, re, rp| rel_energy_density(species_rho(species, re, rp), consts, species),
            &rule,
            splits,
        );
        cum.last().copied().unwrap_or(0.0)
    })
}

/// Same integral with the momentum-space density.
pub fn rel_kinetic_energy_integral(profile: &RadialProfile, species: Species, consts: &ConstantSet) -> Result<f64> {
    let rule = GaussRule::new(5);
    let inner = GaussRule::new(16);
    converged_total(|splits| {
        let cum = profile.cumulative_integral(
            |_, re, rp| rel_energy_density_integral(species_rho(species, re, rp), consts, species, &inner),
            &rule,
            splits,
        );
        cum.last().copied().unwrap_or(0.0)
    })
}

/// Point state of the relativistic system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelState {
    pub r: f64,
    pub y_e: f64,
    pub y_p: f64,
    pub dy_e: f64,
    pub dy_p: f64,
}

/// Relativity factor of a density.
pub fn y_of_rho(rho: f64, consts: &ConstantSet, species: Species) -> f64 {
    (1.0 + z_coefficient(consts, species) * rho.max(0.0).powf(2.0 / 3.0)).sqrt()
}

/// `ρ = (π/3)(2mc/h)³ (y² − 1)^{3/2}`, zero for `y ≤ 1`.
pub fn rho_of_y(y: f64, consts: &ConstantSet, species: Species) -> f64 {
    let m = consts.mass(species);
    let x = y * y - 1.0;
    if x <= 0.0 {
        return 0.0;
    }
    PI / 3.0 * (2.0 * m * consts.c / consts.h).powi(3) * x * x.sqrt()
}

#[derive(Debug, Clone, Copy)]
struct RelCoeffs {
    pe: f64,
    pp: f64,
    self_e: f64,
    self_p: f64,
    cross: f64,
}

impl RelCoeffs {
    fn new(k: &ConstantSet) -> Self {
        let q2 = k.q * k.q;
        RelCoeffs {
            pe: 4.0 * PI / (k.m_e * k.c * k.c),
            pp: 4.0 * PI / (k.m_p * k.c * k.c),
            self_e: q2 - k.g * k.m_e * k.m_e,
            self_p: q2 - k.g * k.m_p * k.m_p,
            cross: q2 + k.g * k.m_p * k.m_e,
        }
    }

    /// `(Δy_e, Δy_p)` for given densities.
    fn laplacians(&self, rho_e: f64, rho_p: f64) -> (f64, f64) {
        (self.pe * (self.self_e * rho_e - self.cross * rho_p), self.pp * (self.self_p * rho_p - self.cross * rho_e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelOptions {
    pub tol: Tolerances,
    /// Radius cap in units of the central length.
    pub r_max_factor: f64,
    pub simultaneous_rel: f64,
    /// Stop after the bulk phase (first vanishing).
    pub bulk_only: bool,
    /// Lions constant for reporting the existence-bound margin.
    pub k_lions: Option<f64>,
}

impl Default for RelOptions {
    fn default() -> Self {
        RelOptions {
            tol: Tolerances::default(),
            r_max_factor: 1e4,
            simultaneous_rel: 1e-6,
            bulk_only: false,
            k_lions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelSolution {
    pub states: Vec<RelState>,
    /// Radius of the first vanishing (zero if a species was absent).
    pub bulk_radius: f64,
    pub outer_radius: f64,
    pub survivor: Option<Species>,
    /// Converted to `u_f = ρ_f^{2/3}`.
    pub profile: RadialProfile,
    pub counts: ParticleCounts,
    /// `bound − (m_p N_p + m_e N_e)^{2/3}` when `k_lions` was given.
    pub existence_margin: Option<f64>,
}

fn to_sample(s: &RelState, consts: &ConstantSet) -> ProfileSample {
    let conv = |y: f64, dy: f64, sp: Species| {
        let k = z_coefficient(consts, sp);
        if y > 1.0 {
            ((y * y - 1.0) / k, 2.0 * y * dy / k)
        } else {
            (0.0, 0.0)
        }
    };
    let (u_e, du_e) = conv(s.y_e, s.dy_e, Species::Electron);
    let (u_p, du_p) = conv(s.y_p, s.dy_p, Species::Proton);
    ProfileSample { r: s.r, u_e, u_p, du_e, du_p }
}

/// Integrates the relativistic two-fluid system from central densities
/// `ρ_p(0)`, `ρ_e(0)` through the bulk and the surviving atmosphere.
pub fn integrate_rel_profile(rho_p0: f64, rho_e0: f64, consts: &ConstantSet, opts: &RelOptions) -> Result<RelSolution> {
    consts.validate()?;
    if !(rho_p0 >= 0.0 && rho_e0 >= 0.0) || rho_p0 + rho_e0 == 0.0 {
        return Err(Error::NonPositiveInput { alpha: rho_p0, beta: rho_e0 });
    }
    let rc = RelCoeffs::new(consts);
    let rho = |y: f64, sp: Species| rho_of_y(y, consts, sp);
    let rhs = |r: f64, y: &[f64; 4]| {
        let (le, lp) = rc.laplacians(rho(y[0], Species::Electron), rho(y[1], Species::Proton));
        [y[2], y[3], le - 2.0 / r * y[2], lp - 2.0 / r * y[3]]
    };
    let ye0 = y_of_rho(rho_e0, consts, Species::Electron);
    let yp0 = y_of_rho(rho_p0, consts, Species::Proton);
    let (le0, lp0) = rc.laplacians(rho_e0, rho_p0);
    let present_e = rho_e0 > 0.0;
    let present_p = rho_p0 > 0.0;
    if (present_e && le0 >= 0.0) || (present_p && lp0 >= 0.0) {
        let reason = format!("central curvature not negative (Δy_e = {le0:e}, Δy_p = {lp0:e})");
        return Err(Error::Inadmissible { alpha: rho_p0, beta: rho_e0, reason });
    }
    let scale = {
        let mut l = f64::INFINITY;
        if present_e {
            l = l.min((ye0 - 1.0) / le0.abs());
        }
        if present_p {
            l = l.min((yp0 - 1.0) / lp0.abs());
        }
        l.sqrt()
    };
    let h0 = 1e-6 * scale;
    let r_max = opts.r_max_factor * scale;
    let start = [ye0 + le0 * h0 * h0 / 6.0, yp0 + lp0 * h0 * h0 / 6.0, le0 * h0 / 3.0, lp0 * h0 / 3.0];
    let mut states = vec![
        RelState { r: 0.0, y_e: ye0, y_p: yp0, dy_e: 0.0, dy_p: 0.0 },
        RelState { r: h0, y_e: start[0], y_p: start[1], dy_e: start[2], dy_p: start[3] },
    ];
    let st = |r: f64, y: &[f64; 4]| RelState { r, y_e: y[0], y_p: y[1], dy_e: y[2], dy_p: y[3] };

    // Bulk phase: both species present until one factor reaches 1.
    let (bulk_radius, survivor, y_hand) = if present_e && present_p {
        let mut crossing: Option<Step<4>> = None;
        let fin = ode::integrate(&rhs, h0, start, r_max, &opts.tol, |s| {
            if s.y1[0] <= 1.0 || s.y1[1] <= 1.0 {
                crossing = Some(s.clone());
                return Control::Stop;
            }
            states.push(st(s.t1, &s.y1));
            Control::Continue
        })
        .map_err(blowup)?;
        let Some(step) = crossing else {
            return Err(Error::NumericalBlowup {
                radius: fin.t,
                detail: "no density vanished below the radius cap".into(),
            });
        };
        let mut first: Option<(f64, [f64; 4], usize)> = None;
        for idx in 0..2 {
            if step.y1[idx] <= 1.0 {
                let (t, y) = ode::locate_event(&rhs, &step, |y| y[idx] - 1.0, 0.0);
                if first.as_ref().is_none_or(|f| t < f.0) {
                    first = Some((t, y, idx));
                }
            }
        }
        let (r_ev, mut y_ev, gone) = first.expect("crossing step has a vanishing component");
        y_ev[gone] = 1.0;
        let other = 1 - gone;
        let other_zero =
            if y_ev[other + 2] < 0.0 { r_ev - (y_ev[other] - 1.0) / y_ev[other + 2] } else { f64::INFINITY };
        states.push(st(r_ev, &y_ev));
        let survivor = if (other_zero - r_ev).abs() < opts.simultaneous_rel * r_ev {
            None
        } else if gone == 0 {
            Some(Species::Proton)
        } else {
            Some(Species::Electron)
        };
        (r_ev, survivor, y_ev)
    } else {
        let sp = if present_p { Species::Proton } else { Species::Electron };
        (0.0, Some(sp), start)
    };

    if let (Some(sp), false) = (survivor, opts.bulk_only) {
        // Single-species atmosphere; the other factor is frozen at its value.
        let (idx, r_start) =
            (if sp == Species::Electron { 0 } else { 1 }, if bulk_radius > 0.0 { bulk_radius } else { h0 });
        let (pre, self_c) = if sp == Species::Electron { (rc.pe, rc.self_e) } else { (rc.pp, rc.self_p) };
        let rhs1 = |r: f64, y: &[f64; 2]| [y[1], pre * self_c * rho(y[0], sp) - 2.0 / r * y[1]];
        let frozen = *states.last().expect("states are never empty");
        let mut hit: Option<(Step<2>, bool)> = None;
        let y1 = [y_hand[idx], y_hand[idx + 2]];
        if y1[1] >= 0.0 {
            return Err(Error::NonIntegrable { species: sp, slope: y1[1] });
        }
        let put = |r: f64, y: &[f64; 2]| {
            let mut s = frozen;
            s.r = r;
            if sp == Species::Electron {
                (s.y_e, s.dy_e) = (y[0], y[1]);
            } else {
                (s.y_p, s.dy_p) = (y[0], y[1]);
            }
            s
        };
        let fin = ode::integrate(&rhs1, r_start, y1, r_max.max(10.0 * r_start), &opts.tol, |s| {
            if s.y1[0] <= 1.0 {
                hit = Some((s.clone(), true));
                return Control::Stop;
            }
            if s.y1[1] >= 0.0 {
                hit = Some((s.clone(), false));
                return Control::Stop;
            }
            states.push(put(s.t1, &s.y1));
            Control::Continue
        })
        .map_err(blowup)?;
        match hit {
            Some((step, true)) => {
                let (t, mut y) = ode::locate_event(&rhs1, &step, |y| y[0] - 1.0, 0.0);
                y[0] = 1.0;
                states.push(put(t, &y));
            }
            Some((_, false)) => return Err(Error::NonIntegrable { species: sp, slope: y1[1] }),
            None => {
                return Err(Error::NumericalBlowup { radius: fin.t, detail: "atmosphere did not close".into() });
            }
        }
    }

    // Vanished species carry y ≤ 1 beyond their event.
    let samples: Vec<ProfileSample> = states.iter().map(|s| to_sample(s, consts)).collect();
    let profile = RadialProfile::new(samples);
    let counts = ParticleCounts::new(profile.count(Species::Electron), profile.count(Species::Proton));
    let existence_margin = opts.k_lions.map(|kl| {
        rel_existence_bound(consts, kl) - (consts.m_p * counts.n_p + consts.m_e * counts.n_e).powf(2.0 / 3.0)
    });
    Ok(RelSolution {
        outer_radius: profile.outer_radius(),
        states,
        bulk_radius,
        survivor,
        profile,
        counts,
        existence_margin,
    })
}

/// Volume-weighted least-squares `k` in `ρ_e ≈ k ρ_p` over the common
/// support, with the relative misfit `‖ρ_e − kρ_p‖ / ‖ρ_e‖`.
pub fn proportional_fit(profile: &RadialProfile) -> (f64, f64) {
    let s = &profile.samples;
    let (mut sep, mut spp, mut see) = (0.0, 0.0, 0.0);
    for i in 1..s.len() {
        let (a, b) = (&s[i - 1], &s[i]);
        if !(a.u_e > 0.0 && a.u_p > 0.0) {
            continue;
        }
        let w = 0.5 * (b.r - a.r) * (a.r * a.r + b.r * b.r);
        let (e, p) = (a.rho(Species::Electron), a.rho(Species::Proton));
        sep += w * e * p;
        spp += w * p * p;
        see += w * e * e;
    }
    let k = sep / spp;
    let misfit = ((see - 2.0 * k * sep + k * k * spp).max(0.0) / see).sqrt();
    (k, misfit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChandraSolution {
    pub y0: f64,
    pub radii: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
    /// First radius where `y = 1/y₀`.
    pub first_zero: f64,
}

/// `(1/r²)(r² y')' = −(y² − 1/y₀²)^{3/2}`, `y(0) = 1`, `y'(0) = 0`,
/// integrated to its first crossing of `y = 1/y₀`.
pub fn chandra_single_fluid(y0: f64, tol: &Tolerances) -> Result<ChandraSolution> {
    if !(y0 > 1.0) {
        return Err(Error::NonPositiveInput { alpha: y0, beta: f64::NAN });
    }
    let floor = 1.0 / (y0 * y0);
    let src = move |y: f64| {
        let x = y * y - floor;
        if x > 0.0 {
            x * x.sqrt()
        } else {
            0.0
        }
    };
    let rhs = |r: f64, y: &[f64; 2]| [y[1], -src(y[0]) - 2.0 / r * y[1]];
    let c0 = src(1.0);
    let eps = 1.0 - 1.0 / y0;
    let h0 = 1e-6 * (eps / c0).sqrt();
    let start = [1.0 - c0 * h0 * h0 / 6.0, -c0 * h0 / 3.0];
    let (mut radii, mut y, mut dy) = (vec![0.0, h0], vec![1.0, start[0]], vec![0.0, start[1]]);
    let mut crossing: Option<Step<2>> = None;
    let target = 1.0 / y0;
    let r_max = 1e6 * (eps / c0).sqrt();
    ode::integrate(&rhs, h0, start, r_max, tol, |s| {
        if s.y1[0] <= target {
            crossing = Some(s.clone());
            return Control::Stop;
        }
        radii.push(s.t1);
        y.push(s.y1[0]);
        dy.push(s.y1[1]);
        Control::Continue
    })
    .map_err(blowup)?;
    let step = crossing.ok_or(Error::NumericalBlowup { radius: r_max, detail: "no crossing of 1/y0".into() })?;
    let (r1, s) = ode::locate_event(&rhs, &step, |v| v[0] - target, 0.0);
    radii.push(r1);
    y.push(target);
    dy.push(s[1]);
    Ok(ChandraSolution { y0, radii, y, dy, first_zero: r1 })
}

/// Exact energy of uniform balls of radius `R` holding `N_e`, `N_p`
/// particles: relativistic kinetic energy plus `(3/5R)(Q² − G M²)`.
pub fn uniform_ball_energy(n_e: f64, n_p: f64, radius: f64, consts: &ConstantSet) -> f64 {
    let vol = 4.0 / 3.0 * PI * radius.powi(3);
    let kin = |n: f64, sp: Species| vol * rel_energy_density(n / vol, consts, sp);
    let q = consts.q * (n_p - n_e);
    let m = consts.m_p * n_p + consts.m_e * n_e;
    kin(n_e, Species::Electron) + kin(n_p, Species::Proton) + 3.0 / (5.0 * radius) * (q * q - consts.g * m * m)
}

/// Small-radius kinetic coefficient `K` in `E_kin ~ K/R`:
/// `(π²/6) h c (9/4π²)^{4/3} (N_e^{4/3} + N_p^{4/3})`.
pub fn ball_kinetic_coefficient(n_e: f64, n_p: f64, consts: &ConstantSet) -> f64 {
    PI * PI / 6.0
        * consts.h
        * consts.c
        * (9.0 / (4.0 * PI * PI)).powf(4.0 / 3.0)
        * (n_e.powf(4.0 / 3.0) + n_p.powf(4.0 / 3.0))
}

/// Coefficient of `1/R` in the `R → 0` expansion of the ball energy.
pub fn ball_slope_coefficient(n_e: f64, n_p: f64, consts: &ConstantSet) -> f64 {
    let q = consts.q * (n_p - n_e);
    let m = consts.m_p * n_p + consts.m_e * n_e;
    ball_kinetic_coefficient(n_e, n_p, consts) + 0.6 * (q * q - consts.g * m * m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    BoundedBelow,
    UnboundedBelow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallEnergyReport {
    pub n_e: f64,
    pub n_p: f64,
    pub radii: Vec<f64>,
    pub energies: Vec<f64>,
    /// Fitted `lim_{R→0} R·E(R)`.
    pub fitted_slope: f64,
    /// Closed-form value of the same limit.
    pub exact_slope: f64,
    /// Grid radius of the lowest energy.
    pub crossover_radius: f64,
    pub min_energy: f64,
    pub verdict: Verdict,
}

/// Default radius grid: 60 log-spaced radii spanning eight decades around
/// the radius where the electrons become relativistic.
pub fn default_ball_grid(n_e: f64, consts: &ConstantSet) -> Vec<f64> {
    let r_rel = consts.h / (2.0 * consts.m_e * consts.c) * (9.0 * n_e.max(1e-300) / (4.0 * PI * PI)).cbrt();
    (0..60).map(|i| r_rel * 10f64.powf(2.0 - 8.0 * i as f64 / 59.0)).collect()
}

/// Scans `E^S(R)` and classifies by the sign of the fitted `1/R` slope.
pub fn ball_scan(n_e: f64, n_p: f64, radii: &[f64], consts: &ConstantSet) -> BallEnergyReport {
    let energies: Vec<f64> = radii.iter().map(|&r| uniform_ball_energy(n_e, n_p, r, consts)).collect();
    // R·E(R) = K_eff + c₁R + …; fit a line on the five smallest radii.
    let mut idx: Vec<usize> = (0..radii.len()).collect();
    idx.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let pts: Vec<(f64, f64)> = idx.iter().take(5).map(|&i| (radii[i], radii[i] * energies[i])).collect();
    let n = pts.len() as f64;
    let (sx, sy) = (pts.iter().map(|p| p.0).sum::<f64>(), pts.iter().map(|p| p.1).sum::<f64>());
    let sxx = pts.iter().map(|p| p.0 * p.0).sum::<f64>();
    let sxy = pts.iter().map(|p| p.0 * p.1).sum::<f64>();
    let denom = n * sxx - sx * sx;
    let fitted_slope = if denom.abs() > 0.0 { (sy * sxx - sx * sxy) / denom } else { sy / n };
    let verdict = if fitted_slope < 0.0 { Verdict::UnboundedBelow } else { Verdict::BoundedBelow };
    let lowest = (0..radii.len()).min_by(|&a, &b| energies[a].total_cmp(&energies[b])).unwrap_or(0);
    BallEnergyReport {
        n_e,
        n_p,
        radii: radii.to_vec(),
        fitted_slope,
        exact_slope: ball_slope_coefficient(n_e, n_p, consts),
        crossover_radius: radii.get(lowest).copied().unwrap_or(f64::NAN),
        min_energy: energies.get(lowest).copied().unwrap_or(f64::NAN),
        energies,
        verdict,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalMassReport {
    /// `N_p / N_e`.
    pub ratio: f64,
    pub threshold_n_e: f64,
    pub below: BallEnergyReport,
    pub above: BallEnergyReport,
}

/// Threshold `N_e*` (at fixed `N_p/N_e = ratio`) beyond which uniform balls
/// have energy unbounded below, found by bisection on the sign of the `1/R`
/// coefficient; scans at `N_e*/2` and `2N_e*` accompany it.
pub fn critical_mass_scan(ratio: f64, consts: &ConstantSet, radii: Option<&[f64]>) -> Result<CriticalMassReport> {
    consts.validate()?;
    let coeff = |n_e: f64| ball_slope_coefficient(n_e, ratio * n_e, consts);
    let pull = consts.g * (consts.m_p * ratio + consts.m_e).powi(2) - consts.q * consts.q * (ratio - 1.0).powi(2);
    if !(pull > 0.0) {
        return Err(Error::RootNotBracketed(format!(
            "gravity never dominates at N_p/N_e = {ratio}; the ball energy stays bounded below"
        )));
    }
    let (mut lo, mut hi) = (1e-12, 1.0);
    while coeff(hi) >= 0.0 {
        hi *= 10.0;
    }
    while coeff(lo) < 0.0 {
        lo *= 0.1;
    }
    let (a, b) = bisect_predicate(|x| coeff(x.exp()) < 0.0, lo.ln(), hi.ln(), 0.0, 400);
    let threshold = (0.5 * (a + b)).exp();
    let scan = |n_e: f64| {
        let grid = radii.map(|r| r.to_vec()).unwrap_or_else(|| default_ball_grid(n_e, consts));
        ball_scan(n_e, ratio * n_e, &grid, consts)
    };
    Ok(CriticalMassReport {
        ratio,
        threshold_n_e: threshold,
        below: scan(0.5 * threshold),
        above: scan(2.0 * threshold),
    })
}

/// Bound on `(m_p N_p + m_e N_e)^{2/3}` below which the relativistic
/// functional has a minimiser, for a given Lions constant `K`.
pub fn rel_existence_bound(consts: &ConstantSet, k_lions: f64) -> f64 {
    PI * 2f64.powf(2.0 / 3.0) * consts.h * consts.c * (3.0 / (8.0 * PI)).powf(4.0 / 3.0)
        / (consts.g * k_lions * consts.m_p.powf(4.0 / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_vanishes_at_zero() {
        assert_eq!(chandrasekhar_a(0.0), 0.0);
    }

    #[test]
    fn a_matches_its_integral_representation() {
        let rule = GaussRule::new(40);
        for z in [0.05, 0.1, 0.3, 0.499, 0.5, 2.0, 7.0] {
            let direct = 24.0 * rule.integrate(0.0, z, |t| t * t * t * t / ((1.0 + t * t).sqrt() + 1.0));
            let got = chandrasekhar_a(z);
            assert!((got - direct).abs() < 1e-12 * direct, "z = {z}: {got} vs {direct}");
        }
    }

    #[test]
    fn series_and_closed_form_meet() {
        let z = SERIES_SWITCH;
        let s = z * z + 1.0;
        let closed = 8.0 * z.powi(3) * (s.sqrt() - 1.0) - z * (2.0 * z * z - 3.0) * s.sqrt() - 3.0 * z.asinh();
        assert!((chandrasekhar_a(z * (1.0 - 1e-15)) - closed).abs() < 1e-12 * closed);
    }

    #[test]
    fn y_rho_round_trip() {
        let k = ConstantSet::desk();
        for rho in [1e-6, 0.3, 40.0] {
            for sp in [Species::Electron, Species::Proton] {
                let back = rho_of_y(y_of_rho(rho, &k, sp), &k, sp);
                assert!((back - rho).abs() < 1e-9 * rho);
            }
        }
    }

    #[test]
    fn existence_bound_dependencies() {
        let k = ConstantSet::desk();
        let b = rel_existence_bound(&k, 1.0);
        let g2 = rel_existence_bound(&ConstantSet { g: 2.0 * k.g, ..k }, 1.0);
        assert!((g2 - 0.5 * b).abs() < 1e-14 * b);
        let heavier = rel_existence_bound(&ConstantSet { m_p: 3.0, ..k }, 1.0);
        assert!(heavier < b);
        let direct =
            PI * 2f64.powf(2.0 / 3.0) * k.h * 10.0 * (3.0 / (8.0 * PI)).powf(4.0 / 3.0) / (0.05 * 2f64.powf(4.0 / 3.0));
        assert!((b - direct).abs() < 1e-14 * b);
    }

    #[test]
    fn a_limits() {
        assert!((chandrasekhar_a(1e3) / 1e12 / 6.0 - 1.0).abs() < 0.01);
        assert!((chandrasekhar_a(1e-3) / 1e-15 / 2.4 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn a_monotone_and_convex() {
        let vals: Vec<f64> = (0..=2000).map(|i| chandrasekhar_a(i as f64 * 0.005)).collect();
        for w in vals.windows(3) {
            assert!(w[1] > w[0]);
            assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-12 * w[2].abs());
        }
    }

    fn gaussian_bump(amp: f64) -> RadialProfile {
        let samples = (0..=600)
            .map(|i| {
                let r = i as f64 * 0.01;
                let g = amp * (-r * r).exp();
                ProfileSample { r, u_e: g, u_p: 0.5 * g, du_e: -2.0 * r * g, du_p: -r * g }
            })
            .collect();
        RadialProfile::new(samples)
    }

    #[test]
    fn dual_kinetic_forms_agree() {
        let k = ConstantSet::desk();
        for amp in [0.01, 1.0, 30.0] {
            let p = gaussian_bump(amp);
            for sp in [Species::Electron, Species::Proton] {
                let a = rel_kinetic_energy(&p, sp, &k).unwrap();
                let b = rel_kinetic_energy_integral(&p, sp, &k).unwrap();
                assert!((a - b).abs() < 1e-8 * a, "{amp} {sp:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_density_has_zero_energy() {
        let k = ConstantSet::desk();
        assert_eq!(rel_energy_density(0.0, &k, Species::Electron), 0.0);
        assert_eq!(rel_kinetic_energy(&gaussian_bump(0.0), Species::Proton, &k).unwrap(), 0.0);
    }

    #[test]
    fn nonrelativistic_limit_of_kinetic_energy() {
        let k = ConstantSet::desk();
        let amp: f64 = 1e-6;
        // ∫ (amp e^{−r²})^{5/2} d³x
        let moment = amp.powf(2.5) * std::f64::consts::PI.powf(1.5) * 0.4f64.powf(1.5);
        let e = rel_kinetic_energy(&gaussian_bump(amp), Species::Electron, &k).unwrap();
        assert!((e / (k.k_e() * moment) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn chandra_profile_decreases() {
        let s = chandra_single_fluid(3.0, &Tolerances::default()).unwrap();
        assert!(s.y.windows(2).all(|w| w[1] < w[0]));
        assert!((s.y.last().unwrap() - 1.0 / 3.0).abs() < 1e-14);
        assert!(chandra_single_fluid(1.0, &Tolerances::default()).is_err());
    }

    #[test]
    fn neutral_ball_potential_is_gravitational() {
        let k = ConstantSet::desk();
        let free = ConstantSet { g: 0.0, ..k };
        let (n, r) = (2.0, 0.7);
        let diff = uniform_ball_energy(n, n, r, &k) - uniform_ball_energy(n, n, r, &free);
        let m = n * (k.m_e + k.m_p);
        assert!((diff + 0.6 * k.g * m * m / r).abs() < 1e-12 * diff.abs());
    }

    #[test]
    fn ball_kinetic_coefficient_from_small_radii() {
        let k = ConstantSet { g: 0.0, q: 0.0, ..ConstantSet::desk() };
        let (ne, np) = (3.0, 1.5);
        let radii: Vec<f64> = (0..5).map(|i| 1e-6 * (1.0 + i as f64)).collect();
        let rep = ball_scan(ne, np, &radii, &k);
        let kc = ball_kinetic_coefficient(ne, np, &k);
        assert!((rep.fitted_slope / kc - 1.0).abs() < 1e-3);
    }

    #[test]
    fn threshold_matches_closed_form() {
        let k = ConstantSet::desk();
        for ratio in [0.9f64, 1.0, 1.2] {
            let rep = critical_mass_scan(ratio, &k, None).unwrap();
            let kt = ball_kinetic_coefficient(1.0, ratio, &k);
            let d = 0.6 * (k.g * (k.m_p * ratio + k.m_e).powi(2) - k.q * k.q * (ratio - 1.0).powi(2));
            let exact = (kt / d).powf(1.5);
            assert!((rep.threshold_n_e / exact - 1.0).abs() < 1e-10);
            assert_eq!(rep.below.verdict, Verdict::BoundedBelow);
            assert_eq!(rep.above.verdict, Verdict::UnboundedBelow);
        }
    }

    #[test]
    fn no_threshold_when_charge_dominates() {
        assert!(critical_mass_scan(10.0, &ConstantSet::desk(), None).is_err());
    }
}
