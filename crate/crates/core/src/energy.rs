//! Energy functional, Newtonian potentials of radial densities and
//! Euler-Lagrange multipliers.
//!
//! Double integrals `½∫∫σ(x)σ(y)/|x−y|` are reduced to one-dimensional
//! nested quadratures with Newton's theorem: the potential of a radial
//! density is `Bσ(r) = m(r)/r + P(r)` with enclosed charge
//! `m(r) = 4π∫₀^r s²σ` and outer part `P(r) = 4π∫_r^∞ sσ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{ConstantSet, Species};
use crate::error::{Error, Result};
use crate::profile::{Envelope, RadialProfile};
use crate::quadrature::GaussRule;

/// Linear combination `σ = w_e ρ_e + w_p ρ_p` of the two densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub e: f64,
    pub p: f64,
}

impl Weights {
    pub fn charge() -> Self {
        Weights { e: -1.0, p: 1.0 }
    }

    pub fn mass(consts: &ConstantSet) -> Self {
        Weights { e: consts.m_e, p: consts.m_p }
    }

    pub fn of(self, species: Species) -> f64 {
        match species {
            Species::Electron => self.e,
            Species::Proton => self.p,
        }
    }
}

fn sigma_in(profile: &RadialProfile, w: Weights, i: usize, r: f64) -> f64 {
    let mut s = 0.0;
    if w.e != 0.0 {
        s += w.e * profile.rho_in(Species::Electron, i, r);
    }
    if w.p != 0.0 {
        s += w.p * profile.rho_in(Species::Proton, i, r);
    }
    s
}

/// Tail part of `σ`, if the profile carries one.
fn tail_sigma(profile: &RadialProfile, w: Weights) -> Option<(Envelope, f64)> {
    profile.tail.map(|t| (t.envelope, w.of(t.species))).filter(|(_, wt)| *wt != 0.0)
}

/// Potential `Bσ` of a radial density, tabulated at the profile samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPotential {
    pub radii: Vec<f64>,
    /// `m(r_i) = 4π∫₀^{r_i} s²σ ds`.
    pub enclosed: Vec<f64>,
    /// `P(r_i) = 4π∫_{r_i}^∞ sσ ds`.
    pub outer: Vec<f64>,
    /// Total charge, tail included.
    pub total: f64,
}

impl RadialPotential {
    pub fn at_sample(&self, i: usize) -> f64 {
        let r = self.radii[i];
        if r == 0.0 {
            self.outer[i]
        } else {
            self.enclosed[i] / r + self.outer[i]
        }
    }

    /// Value outside all matter.
    pub fn exterior(&self, r: f64) -> f64 {
        self.total / r
    }
}

pub fn radial_potential(profile: &RadialProfile, w: Weights) -> RadialPotential {
    let rule = GaussRule::new(5);
    let radii = profile.radii();
    let nodes = &radii;
    let enclosed = crate::quadrature::cumulative(nodes, |i, r| 4.0 * PI * r * r * sigma_in(profile, w, i, r), &rule, 1);
    let first = crate::quadrature::cumulative(nodes, |i, r| 4.0 * PI * r * sigma_in(profile, w, i, r), &rule, 1);
    let (tail_m, tail_p) = match tail_sigma(profile, w) {
        Some((env, wt)) => (wt * env.integrate(|_, rho| rho), wt * env.integrate(|r, rho| rho / r)),
        None => (0.0, 0.0),
    };
    let inner_total = *first.last().unwrap_or(&0.0);
    let outer = first.iter().map(|c| inner_total - c + tail_p).collect();
    let total = enclosed.last().copied().unwrap_or(0.0) + tail_m;
    RadialPotential { radii, enclosed, outer, total }
}

/// Self-energy `½∫σBσ d³x`, evaluated with the enclosed charge inside
/// (`∫4π r σ m dr`) and with the outer potential inside (`∫4π r² σ P dr`).
pub fn self_energy_both(profile: &RadialProfile, w: Weights, splits: usize) -> (f64, f64) {
    let rule = GaussRule::new(5);
    let tail_rule = GaussRule::new(24);
    let pot = radial_potential(profile, w);
    let s = &profile.samples;
    let (mut inner_first, mut outer_first) = (0.0, 0.0);
    for i in 0..s.len().saturating_sub(1) {
        let (a, b) = (s[i].r, s[i + 1].r);
        if b <= a {
            continue;
        }
        let width = (b - a) / splits as f64;
        for k in 0..splits {
            let lo = a + width * k as f64;
            let hi = if k + 1 == splits { b } else { lo + width };
            for (r, wq) in rule.mapped(lo, hi) {
                let sig = sigma_in(profile, w, i, r);
                if sig == 0.0 {
                    continue;
                }
                let m = pot.enclosed[i] + rule.integrate(a, r, |x| 4.0 * PI * x * x * sigma_in(profile, w, i, x));
                let p = pot.outer[i + 1] + rule.integrate(r, b, |x| 4.0 * PI * x * sigma_in(profile, w, i, x));
                inner_first += wq * 4.0 * PI * r * sig * m;
                outer_first += wq * 4.0 * PI * r * r * sig * p;
            }
        }
    }
    if let Some((env, wt)) = tail_sigma(profile, w) {
        let big_r = env.cutoff;
        let m_r = pot.enclosed.last().copied().unwrap_or(0.0);
        // r = R/x; inner integrals use the same substitution.
        let sig = |r: f64| wt * env.rho(r);
        let half = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| tail_rule.integrate(lo, hi, f);
        let body = |x: f64| {
            let r = big_r / x;
            let jac = big_r / (x * x);
            let m = m_r + half(&|y: f64| 4.0 * PI * (big_r / y).powi(2) * sig(big_r / y) * big_r / (y * y), x, 1.0);
            let p = half(&|y: f64| 4.0 * PI * (big_r / y) * sig(big_r / y) * big_r / (y * y), 1e-300, x);
            (jac * 4.0 * PI * r * sig(r) * m, jac * 4.0 * PI * r * r * sig(r) * p)
        };
        for (x, wq) in tail_rule.mapped(0.0, 1.0) {
            let (fi, fo) = body(x);
            inner_first += wq * fi;
            outer_first += wq * fo;
        }
    }
    (inner_first, outer_first)
}

pub fn self_energy(profile: &RadialProfile, w: Weights) -> f64 {
    self_energy_both(profile, w, 1).0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic_e: f64,
    pub kinetic_p: f64,
    pub electric: f64,
    pub gravitational: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn kinetic(&self) -> f64 {
        self.kinetic_e + self.kinetic_p
    }

    pub fn potential(&self) -> f64 {
        self.electric + self.gravitational
    }
}

/// `k_f ∫ρ_f^{5/3} d³x`, tail included.
pub fn kinetic_energy(profile: &RadialProfile, species: Species, k_f: f64, splits: usize) -> f64 {
    let rule = GaussRule::new(5);
    let cum = profile.cumulative_integral(
        |_, re, rp| {
            let rho = if species == Species::Electron { re } else { rp };
            rho.powf(5.0 / 3.0)
        },
        &rule,
        splits,
    );
    let tail = profile
        .tail
        .filter(|t| t.species == species)
        .map_or(0.0, |t| t.envelope.integrate(|_, rho| rho.powf(5.0 / 3.0)));
    k_f * (cum.last().copied().unwrap_or(0.0) + tail)
}

fn breakdown(profile: &RadialProfile, consts: &ConstantSet, splits: usize) -> EnergyBreakdown {
    let kinetic_e = kinetic_energy(profile, Species::Electron, consts.k_e(), splits);
    let kinetic_p = kinetic_energy(profile, Species::Proton, consts.k_p(), splits);
    let electric = consts.q * consts.q * self_energy_both(profile, Weights::charge(), splits).0;
    let gravitational = -consts.g * self_energy_both(profile, Weights::mass(consts), splits).0;
    EnergyBreakdown {
        kinetic_e,
        kinetic_p,
        electric,
        gravitational,
        total: kinetic_e + kinetic_p + electric + gravitational,
    }
}

/// Energy of a profile; panels are halved once to confirm convergence.
pub fn evaluate_energy(profile: &RadialProfile, consts: &ConstantSet) -> Result<EnergyBreakdown> {
    let coarse = breakdown(profile, consts, 1);
    let fine = breakdown(profile, consts, 2);
    let scale = fine.kinetic().abs() + fine.electric.abs() + fine.gravitational.abs();
    let change = (fine.total - coarse.total).abs() / scale.max(f64::MIN_POSITIVE);
    if change > 1e-8 {
        return Err(Error::QuadratureNotConverged { change });
    }
    Ok(fine)
}

/// Energies of the dilations `ρ^λ(x) = ρ(x/λ)/λ³`.
pub fn dilation_scan(
    profile: &RadialProfile,
    lambdas: &[f64],
    consts: &ConstantSet,
) -> Result<Vec<(f64, EnergyBreakdown)>> {
    lambdas.iter().map(|&l| Ok((l, evaluate_energy(&dilate(profile, l), consts)?))).collect()
}

/// `u^λ(r) = u(r/λ)/λ²`.
pub fn dilate(profile: &RadialProfile, lambda: f64) -> RadialProfile {
    profile.rescaled(lambda, 1.0 / (lambda * lambda))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierEstimate {
    pub radii_e: Vec<f64>,
    pub lambda_e: Vec<f64>,
    pub radii_p: Vec<f64>,
    pub lambda_p: Vec<f64>,
    pub mean_e: f64,
    pub mean_p: f64,
    pub rel_std_e: f64,
    pub rel_std_p: f64,
}

fn mean_and_rel_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt() / mean.abs())
}

/// Euler-Lagrange multipliers
/// `λ_p = (5/3)k_p ρ_p^{2/3} + q²B(ρ_p−ρ_e) − G m_p B(m_pρ_p + m_eρ_e)` and
/// `λ_e = (5/3)k_e ρ_e^{2/3} − q²B(ρ_p−ρ_e) − G m_e B(m_pρ_p + m_eρ_e)`
/// at every sample inside the respective support.
pub fn el_residual(profile: &RadialProfile, consts: &ConstantSet) -> MultiplierEstimate {
    let charge = radial_potential(profile, Weights::charge());
    let mass = radial_potential(profile, Weights::mass(consts));
    let q2 = consts.q * consts.q;
    let mut out = MultiplierEstimate {
        radii_e: vec![],
        lambda_e: vec![],
        radii_p: vec![],
        lambda_p: vec![],
        mean_e: 0.0,
        mean_p: 0.0,
        rel_std_e: 0.0,
        rel_std_p: 0.0,
    };
    for (i, s) in profile.samples.iter().enumerate() {
        let (bc, bm) = (charge.at_sample(i), mass.at_sample(i));
        if s.u_e > 0.0 {
            out.radii_e.push(s.r);
            out.lambda_e.push(5.0 / 3.0 * consts.k_e() * s.u_e - q2 * bc - consts.g * consts.m_e * bm);
        }
        if s.u_p > 0.0 {
            out.radii_p.push(s.r);
            out.lambda_p.push(5.0 / 3.0 * consts.k_p() * s.u_p + q2 * bc - consts.g * consts.m_p * bm);
        }
    }
    (out.mean_e, out.rel_std_e) = mean_and_rel_std(&out.lambda_e);
    (out.mean_p, out.rel_std_p) = mean_and_rel_std(&out.lambda_p);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialCheck {
    /// `K + (5/3)V`.
    pub direct: f64,
    /// Central difference of `E(σ)` at `σ = 1`.
    pub numerical: f64,
}

/// Derivative of the energy along `ρ^σ(x) = ρ(x/σ^{1/3})` at `σ = 1`.
pub fn virial_check(profile: &RadialProfile, consts: &ConstantSet, h: f64) -> Result<VirialCheck> {
    let e0 = evaluate_energy(profile, consts)?;
    let at = |s: f64| evaluate_energy(&profile.rescaled(s.cbrt(), 1.0), consts).map(|e| e.total);
    let numerical = (at(1.0 + h)? - at(1.0 - h)?) / (2.0 * h);
    Ok(VirialCheck { direct: e0.kinetic() + 5.0 / 3.0 * e0.potential(), numerical })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ProfileSample;

    fn ball(radius: f64, rho_e: f64, rho_p: f64, n: usize) -> RadialProfile {
        let (ue, up) = (rho_e.powf(2.0 / 3.0), rho_p.powf(2.0 / 3.0));
        RadialProfile::new(
            (0..=n)
                .map(|i| ProfileSample { r: radius * i as f64 / n as f64, u_e: ue, u_p: up, du_e: 0.0, du_p: 0.0 })
                .collect(),
        )
    }

    #[test]
    fn uniform_ball_potential() {
        let (c, big_r) = (0.8, 1.7);
        let p = ball(big_r, c, 0.0, 30);
        let pot = radial_potential(&p, Weights { e: 1.0, p: 0.0 });
        assert!((pot.at_sample(0) - 2.0 * PI * c * big_r * big_r).abs() < 1e-12);
        let mass = 4.0 / 3.0 * PI * c * big_r.powi(3);
        assert!((pot.exterior(2.0 * big_r) - mass / (2.0 * big_r)).abs() < 1e-12);
        let last = pot.radii.len() - 1;
        assert!((pot.at_sample(last) - mass / big_r).abs() < 1e-12);
    }

    #[test]
    fn uniform_ball_self_energy() {
        let (c, big_r) = (0.8, 1.7);
        let p = ball(big_r, c, 0.0, 30);
        let (a, b) = self_energy_both(&p, Weights { e: 1.0, p: 0.0 }, 1);
        let q = 4.0 / 3.0 * PI * c * big_r.powi(3);
        let exact = 3.0 / 5.0 * q * q / big_r;
        assert!((a - exact).abs() < 1e-12 * exact && (b - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn neutral_ball_has_no_electric_energy() {
        let p = ball(1.0, 0.5, 0.5, 10);
        let e = evaluate_energy(&p, &ConstantSet::desk()).unwrap();
        assert_eq!(e.electric, 0.0);
        assert!(e.gravitational < 0.0);
    }

    #[test]
    fn dilation_identity() {
        let p = ball(1.0, 0.5, 0.3, 10);
        assert_eq!(dilate(&p, 1.0), p);
    }
}
