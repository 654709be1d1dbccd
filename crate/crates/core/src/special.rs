//! Proportional solutions `ρ_p = k_d ρ_e` and the Lane-Emden equation they
//! reduce to.

use serde::{Deserialize, Serialize};

use crate::bulk::blowup;
use crate::constants::CoefficientSet;
use crate::error::{Error, Result};
use crate::ode::{self, Control, Step, Tolerances};
use crate::profile::{ProfileSample, RadialProfile};
use crate::roots::brent;

/// `H_d(k) = A k^{d/3} + F k − B k^{(d−3)/3} − E`.
///
/// Its root is the ratio `ρ_p/ρ_e` of a proportional bulk solution.
pub fn h_d(k: f64, d: f64, c: &CoefficientSet) -> f64 {
    c.a * k.powf(d / 3.0) + c.f * k - c.b * k.powf((d - 3.0) / 3.0) - c.e
}

pub fn solve_kd(d: f64, coeffs: &CoefficientSet, tol: f64) -> Result<f64> {
    if !(d > 3.0 && d < 6.0) {
        return Err(Error::NoRootInBracket { d });
    }
    let hi = coeffs.e / coeffs.f;
    let (h0, h1) = (h_d(0.0, d, coeffs), h_d(hi, d, coeffs));
    if h1 == 0.0 {
        return Ok(hi);
    }
    if !(h0 < 0.0 && h1 > 0.0) {
        return Err(Error::NoRootInBracket { d });
    }
    brent(|k| h_d(k, d, coeffs), 0.0, hi, tol, 0.0, 200)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneEmdenOptions {
    pub tol: Tolerances,
    /// Integration stops here if no zero was found.
    pub xi_max: f64,
}

impl Default for LaneEmdenOptions {
    fn default() -> Self {
        LaneEmdenOptions { tol: Tolerances { rtol: 1e-13, atol: 1e-16, ..Default::default() }, xi_max: 50.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneEmdenSample {
    pub xi: f64,
    pub theta: f64,
    pub dtheta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneEmdenSolution {
    pub n: f64,
    pub samples: Vec<LaneEmdenSample>,
    pub first_zero: Option<f64>,
    pub slope_at_zero: Option<f64>,
}

fn theta_pow(theta: f64, n: f64) -> f64 {
    if theta > 0.0 {
        theta.powf(n)
    } else {
        0.0
    }
}

impl LaneEmdenSolution {
    fn second(&self, s: &LaneEmdenSample) -> f64 {
        if s.xi == 0.0 {
            -1.0 / 3.0
        } else {
            -theta_pow(s.theta, self.n) - 2.0 * s.dtheta / s.xi
        }
    }

    /// `θ(ξ)` from quintic Hermite interpolation of the samples.
    pub fn theta_at(&self, xi: f64) -> f64 {
        let s = &self.samples;
        let last = s.len() - 1;
        if xi >= s[last].xi {
            return s[last].theta;
        }
        let i = s.partition_point(|p| p.xi <= xi).saturating_sub(1).min(last - 1);
        let (p, q) = (&s[i], &s[i + 1]);
        let h = q.xi - p.xi;
        let t = (xi - p.xi) / h;
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h21 = 0.5 * (t3 - 2.0 * t4 + t5);
        h00 * p.theta
            + h10 * h * p.dtheta
            + h20 * h * h * self.second(p)
            + h01 * q.theta
            + h11 * h * q.dtheta
            + h21 * h * h * self.second(q)
    }
}

/// Solves `θ'' + (2/ξ)θ' = −θⁿ`, `θ(0) = 1`, `θ'(0) = 0` to its first zero.
pub fn lane_emden(n: f64, opts: &LaneEmdenOptions) -> Result<LaneEmdenSolution> {
    let rhs = |xi: f64, y: &[f64; 2]| [y[1], -theta_pow(y[0], n) - 2.0 * y[1] / xi];
    // θ = 1 − ξ²/6 + nξ⁴/120 − …
    let xi0: f64 = 1e-4;
    let start = [1.0 - xi0 * xi0 / 6.0 + n * xi0.powi(4) / 120.0, -xi0 / 3.0 + n * xi0.powi(3) / 30.0];
    let mut samples = vec![
        LaneEmdenSample { xi: 0.0, theta: 1.0, dtheta: 0.0 },
        LaneEmdenSample { xi: xi0, theta: start[0], dtheta: start[1] },
    ];
    let mut crossing: Option<Step<2>> = None;
    ode::integrate(&rhs, xi0, start, opts.xi_max, &opts.tol, |st| {
        if st.y1[0] <= 0.0 {
            crossing = Some(st.clone());
            return Control::Stop;
        }
        samples.push(LaneEmdenSample { xi: st.t1, theta: st.y1[0], dtheta: st.y1[1] });
        Control::Continue
    })
    .map_err(blowup)?;
    let (first_zero, slope_at_zero) = match crossing {
        Some(step) => {
            let (xi, y) = ode::locate_event(&rhs, &step, |y| y[0], 0.0);
            samples.push(LaneEmdenSample { xi, theta: 0.0, dtheta: y[1] });
            (Some(xi), Some(y[1]))
        }
        None => (None, None),
    };
    Ok(LaneEmdenSolution { n, samples, first_zero, slope_at_zero })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialSolution {
    pub d: f64,
    /// Ratio `ρ_p/ρ_e`.
    pub k_d: f64,
    pub lane_emden_index: f64,
    /// Central values `u_p(0) = α`, `u_e(0) = β = α k_d^{−2/3}`.
    pub alpha: f64,
    pub beta: f64,
    /// `r = ξ / xi_scale`.
    pub xi_scale: f64,
    pub first_zero: f64,
    /// Common vanishing radius of both species.
    pub radius: f64,
}

/// Proportional solution with proton centre `u_p(0) = α` (model case `d = 5`).
///
/// With `ρ_p = k ρ_e` the electron equation reads `Δu_e = −(A k − B) u_e^{3/2}`,
/// so `u_e(r) = β θ(s r)` with `θ` the `n = 3/2` Lane-Emden function and
/// `s² = (A k − B) β^{1/2}`.
pub fn special_profile(alpha: f64, coeffs: &CoefficientSet) -> Result<(SpecialSolution, RadialProfile)> {
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveInput { alpha, beta: f64::NAN });
    }
    let d = 5.0;
    let k = solve_kd(d, coeffs, 1e-15)?;
    let n = 3.0 / (d - 3.0);
    let beta = alpha / k.powf(2.0 / 3.0);
    let strength = coeffs.a * k - coeffs.b;
    let s = (strength * beta.sqrt()).sqrt();
    let le = lane_emden(n, &LaneEmdenOptions::default())?;
    let xi1 = le.first_zero.expect("n = 3/2 has a finite zero");
    let samples = le
        .samples
        .iter()
        .map(|p| ProfileSample {
            r: p.xi / s,
            u_e: beta * p.theta,
            u_p: alpha * p.theta,
            du_e: beta * s * p.dtheta,
            du_p: alpha * s * p.dtheta,
        })
        .collect();
    let sol =
        SpecialSolution { d, k_d: k, lane_emden_index: n, alpha, beta, xi_scale: s, first_zero: xi1, radius: xi1 / s };
    Ok((sol, RadialProfile::new(samples)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{derive_coefficients, ratio_window, ConstantSet};

    fn desk() -> CoefficientSet {
        derive_coefficients(&ConstantSet::desk()).unwrap()
    }

    #[test]
    fn symmetric_zero_gravity_root_is_one() {
        let c = derive_coefficients(&ConstantSet { g: 0.0, k_p: Some(1.0), ..ConstantSet::desk() }).unwrap();
        assert!((solve_kd(5.0, &c, 1e-15).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn bracket_end_signs() {
        let c = desk();
        assert_eq!(h_d(0.0, 5.0, &c), -c.e);
        assert!(h_d(c.e / c.f, 5.0, &c) > 0.0);
    }

    #[test]
    fn desk_root_by_independent_bisection() {
        let c = desk();
        let (mut lo, mut hi) = (0.0, c.e / c.f);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h_d(mid, 5.0, &c) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let k = solve_kd(5.0, &c, 1e-15).unwrap();
        assert!((k - lo).abs() < 1e-13, "{k} vs {lo}");
        assert!(k > 0.0 && k < c.e / c.f);
    }

    #[test]
    fn single_sign_change_on_log_grid() {
        let c = desk();
        for d in [3.3, 4.0, 5.0, 5.9] {
            let hi = c.e / c.f;
            let vals: Vec<f64> = (0..400).map(|i| h_d(hi * 10f64.powf(-6.0 + 6.0 * i as f64 / 399.0), d, &c)).collect();
            let changes = vals.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
            assert_eq!(changes, 1, "d = {d}");
        }
    }

    #[test]
    fn out_of_range_exponent() {
        assert!(solve_kd(6.5, &desk(), 1e-12).is_err());
    }

    #[test]
    fn lane_emden_index_one() {
        let le = lane_emden(1.0, &LaneEmdenOptions::default()).unwrap();
        assert!((le.first_zero.unwrap() - std::f64::consts::PI).abs() < 1e-10);
        for i in 1..300 {
            let xi = 3.0 * i as f64 / 300.0;
            assert!((le.theta_at(xi) - xi.sin() / xi).abs() < 1e-10);
        }
    }

    #[test]
    fn lane_emden_index_five_has_no_zero() {
        let le = lane_emden(5.0, &LaneEmdenOptions { xi_max: 20.0, ..Default::default() }).unwrap();
        assert!(le.first_zero.is_none());
        let exact = |xi: f64| (1.0 + xi * xi / 3.0).powf(-0.5);
        assert!((le.theta_at(10.0) - exact(10.0)).abs() < 1e-10);
    }

    #[test]
    fn special_ratio_is_inside_the_central_window() {
        let (sol, p) = special_profile(1.0, &desk()).unwrap();
        let w = ratio_window(&ConstantSet::desk()).unwrap();
        let central = sol.alpha / sol.beta;
        assert!(central > w.central_lo && central < w.central_hi);
        assert!((p.outer_radius() - sol.radius).abs() < 1e-14);
    }
}
