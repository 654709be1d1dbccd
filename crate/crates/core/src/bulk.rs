//! Centre-outward integration of the coupled bulk system
//!
//! ```text
//! u_p'' = −(2/r) u_p' + F u_p^{3/2} − E u_e^{3/2}
//! u_e'' = −(2/r) u_e' + B u_e^{3/2} − A u_p^{3/2}
//! ```
//!
//! with `u_p(0) = α`, `u_e(0) = β`, up to the first radius where one of the
//! densities vanishes.

use serde::{Deserialize, Serialize};

use crate::constants::{CoefficientSet, Species};
use crate::error::{Error, Result};
use crate::ode::{self, Control, IntegrationError, Step, Tolerances};
use crate::profile::{pow32, ProfileSample, RadialProfile};

/// Point state of the bulk system; identical layout to a profile sample.
pub type BulkState = ProfileSample;

/// State vector layout used by the integrator.
const UE: usize = 0;
const UP: usize = 1;
const DUE: usize = 2;
const DUP: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialSigns {
    BothNegative { phi0: f64, psi0: f64 },
    Rejected(String),
}

/// Central curvatures `(φ(0), ψ(0))` of the proton and electron equations.
pub fn central_forces(alpha: f64, beta: f64, coeffs: &CoefficientSet) -> (f64, f64) {
    let (a32, b32) = (pow32(alpha), pow32(beta));
    (-coeffs.e * b32 + coeffs.f * a32, -coeffs.a * a32 + coeffs.b * b32)
}

pub fn initial_signs(alpha: f64, beta: f64, coeffs: &CoefficientSet) -> InitialSigns {
    let (phi0, psi0) = central_forces(alpha, beta, coeffs);
    let mut failing = Vec::new();
    if phi0 >= 0.0 {
        failing.push(format!("phi(0) = {phi0:e} >= 0"));
    }
    if psi0 >= 0.0 {
        failing.push(format!("psi(0) = {psi0:e} >= 0"));
    }
    if failing.is_empty() {
        InitialSigns::BothNegative { phi0, psi0 }
    } else {
        InitialSigns::Rejected(failing.join(", "))
    }
}

/// Natural length scale of the central region.
pub fn central_length(alpha: f64, beta: f64, coeffs: &CoefficientSet) -> f64 {
    let (phi0, psi0) = central_forces(alpha, beta, coeffs);
    (alpha.max(beta) / phi0.abs().max(psi0.abs())).sqrt()
}

/// Second-order Taylor state at `r = h`.
pub fn series_start(alpha: f64, beta: f64, h: f64, coeffs: &CoefficientSet) -> BulkState {
    let (phi0, psi0) = central_forces(alpha, beta, coeffs);
    BulkState {
        r: h,
        u_e: beta + psi0 * h * h / 6.0,
        u_p: alpha + phi0 * h * h / 6.0,
        du_e: psi0 * h / 3.0,
        du_p: phi0 * h / 3.0,
    }
}

#[inline]
fn rhs_vec(r: f64, y: &[f64; 4], c: &CoefficientSet) -> [f64; 4] {
    let (re, rp) = (pow32(y[UE]), pow32(y[UP]));
    [y[DUE], y[DUP], -2.0 / r * y[DUE] + c.b * re - c.a * rp, -2.0 / r * y[DUP] + c.f * rp - c.e * re]
}

/// Derivative `(u_e', u_p', u_e'', u_p'')` of the bulk system at `state`.
pub fn bulk_rhs(state: &BulkState, coeffs: &CoefficientSet) -> [f64; 4] {
    rhs_vec(state.r, &to_vec(state), coeffs)
}

fn to_vec(s: &BulkState) -> [f64; 4] {
    [s.u_e, s.u_p, s.du_e, s.du_p]
}

fn to_state(r: f64, y: &[f64; 4]) -> BulkState {
    BulkState { r, u_e: y[UE], u_p: y[UP], du_e: y[DUE], du_p: y[DUP] }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BulkEvent {
    VanishE,
    VanishP,
    SimultaneousVanish,
    RadiusCap,
}

impl BulkEvent {
    /// Species left with positive density after the event.
    pub fn survivor(self) -> Option<Species> {
        match self {
            BulkEvent::VanishE => Some(Species::Proton),
            BulkEvent::VanishP => Some(Species::Electron),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkOptions {
    /// Radius cap; `None` picks `10⁴` central lengths.
    pub r_max: Option<f64>,
    pub tol: Tolerances,
    pub vanish_tol: f64,
    /// Relative gap between vanishing radii treated as simultaneous.
    pub simultaneous_rel: f64,
    /// Bound on `u_f / u_f(turning radius)` for the increasing density.
    pub growth_cap: f64,
}

impl Default for BulkOptions {
    fn default() -> Self {
        BulkOptions {
            r_max: None,
            tol: Tolerances::default(),
            vanish_tol: 1e-10,
            simultaneous_rel: 1e-6,
            growth_cap: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BulkOutcome {
    pub event: BulkEvent,
    pub event_radius: f64,
    pub state_at_event: BulkState,
    pub profile: RadialProfile,
    /// First radius where a derivative became positive, with that species.
    pub turning: Option<(f64, Species)>,
}

impl BulkOutcome {
    pub fn turning_radius(&self) -> Option<f64> {
        self.turning.map(|t| t.0)
    }
}

pub(crate) fn blowup(e: IntegrationError) -> Error {
    match e {
        IntegrationError::StepUnderflow { t, h } => {
            Error::NumericalBlowup { radius: t, detail: format!("step size underflow (h = {h:e})") }
        }
        IntegrationError::NonFinite { t } => Error::NumericalBlowup { radius: t, detail: "non-finite state".into() },
        IntegrationError::TooManySteps { t } => {
            Error::NumericalBlowup { radius: t, detail: "step budget exhausted".into() }
        }
    }
}

pub fn integrate_bulk(alpha: f64, beta: f64, coeffs: &CoefficientSet, opts: &BulkOptions) -> Result<BulkOutcome> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::NonPositiveInput { alpha, beta });
    }
    if let InitialSigns::Rejected(reason) = initial_signs(alpha, beta, coeffs) {
        return Err(Error::Inadmissible { alpha, beta, reason });
    }
    let scale = central_length(alpha, beta, coeffs);
    let h0 = 1e-6 * scale;
    let r_max = opts.r_max.unwrap_or(1e4 * scale);
    let start = series_start(alpha, beta, h0, coeffs);
    let rhs = |r: f64, y: &[f64; 4]| rhs_vec(r, y, coeffs);

    let mut samples = vec![BulkState { r: 0.0, u_e: beta, u_p: alpha, du_e: 0.0, du_p: 0.0 }, start];
    let mut crossing: Option<Step<4>> = None;
    let mut turning: Option<(f64, Species, f64)> = None;
    let mut runaway: Option<f64> = None;

    let fin = ode::integrate(&rhs, h0, to_vec(&start), r_max, &opts.tol, |st| {
        if st.y1[UE] <= 0.0 || st.y1[UP] <= 0.0 {
            crossing = Some(st.clone());
            return Control::Stop;
        }
        samples.push(to_state(st.t1, &st.y1));
        if turning.is_none() {
            for (idx, sp, du) in [(UE, Species::Electron, DUE), (UP, Species::Proton, DUP)] {
                if st.y1[du] > 0.0 {
                    turning = Some((st.t1, sp, st.y1[idx]));
                    break;
                }
            }
        } else if let Some((_, sp, u_turn)) = turning {
            let u = if sp == Species::Electron { st.y1[UE] } else { st.y1[UP] };
            if u > opts.growth_cap * u_turn {
                runaway = Some(st.t1);
                return Control::Stop;
            }
        }
        Control::Continue
    })
    .map_err(blowup)?;

    if let Some(r) = runaway {
        return Err(Error::NumericalBlowup {
            radius: r,
            detail: format!("increasing density exceeded {} times its turning value", opts.growth_cap),
        });
    }
    let turning = turning.map(|(r, sp, _)| (r, sp));

    let Some(step) = crossing else {
        let state = to_state(fin.t, &fin.y);
        return Ok(BulkOutcome {
            event: BulkEvent::RadiusCap,
            event_radius: fin.t,
            state_at_event: state,
            profile: RadialProfile::new(samples),
            turning,
        });
    };

    let mut first: Option<(f64, [f64; 4], Species)> = None;
    for (idx, sp) in [(UE, Species::Electron), (UP, Species::Proton)] {
        if step.y1[idx] <= 0.0 {
            let (t, y) = ode::locate_event(&rhs, &step, |y| y[idx], 0.0);
            if first.as_ref().is_none_or(|f| t < f.0) {
                first = Some((t, y, sp));
            }
        }
    }
    let (r_ev, y_ev, gone) = first.expect("crossing step has a vanishing component");
    let (other_u, other_du) = match gone {
        Species::Electron => (y_ev[UP], y_ev[DUP]),
        Species::Proton => (y_ev[UE], y_ev[DUE]),
    };
    // Linear extrapolation of the surviving density to its own zero.
    let other_zero = if other_du < 0.0 { r_ev - other_u / other_du } else { f64::INFINITY };
    let event = if other_u <= opts.vanish_tol || (other_zero - r_ev).abs() < opts.simultaneous_rel * r_ev {
        BulkEvent::SimultaneousVanish
    } else {
        match gone {
            Species::Electron => BulkEvent::VanishE,
            Species::Proton => BulkEvent::VanishP,
        }
    };
    let mut state = to_state(r_ev, &y_ev);
    match gone {
        Species::Electron => state.u_e = 0.0,
        Species::Proton => state.u_p = 0.0,
    }
    if event == BulkEvent::SimultaneousVanish {
        state.u_e = 0.0;
        state.u_p = 0.0;
    }
    if r_ev > samples.last().map_or(0.0, |s| s.r) {
        samples.push(state);
    }
    Ok(BulkOutcome { event, event_radius: r_ev, state_at_event: state, profile: RadialProfile::new(samples), turning })
}

/// Sup-norm one-step defect of a sampled profile against the bulk system.
///
/// Every interval whose end points both carry positive densities is
/// re-integrated from its left sample; the mismatch at the right sample is
/// normalised by the largest `|u|` and `|u'|` found on the profile.
pub fn bulk_residual(profile: &RadialProfile, coeffs: &CoefficientSet) -> f64 {
    let rhs = |r: f64, y: &[f64; 4]| rhs_vec(r, y, coeffs);
    let s = &profile.samples;
    let u_scale = s.iter().map(|p| p.u_e.abs().max(p.u_p.abs())).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let d_scale = s.iter().map(|p| p.du_e.abs().max(p.du_p.abs())).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = Tolerances { rtol: 1e-12, atol: 1e-15 * u_scale, ..Default::default() };
    let positive = |p: &BulkState| p.u_e > 0.0 && p.u_p > 0.0;
    let mut worst: f64 = 0.0;
    for w in s.windows(2) {
        if w[0].r <= 0.0 || w[1].r <= w[0].r || !positive(&w[0]) || !positive(&w[1]) {
            continue;
        }
        let Ok(fin) = ode::integrate(&rhs, w[0].r, to_vec(&w[0]), w[1].r, &tol, |_| Control::Continue) else {
            return f64::INFINITY;
        };
        let y1 = to_vec(&w[1]);
        for i in 0..4 {
            let sc = if i < 2 { u_scale } else { d_scale };
            worst = worst.max((fin.y[i] - y1[i]).abs() / sc);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{derive_coefficients, ratio_window, ConstantSet};

    fn desk() -> CoefficientSet {
        derive_coefficients(&ConstantSet::desk()).unwrap()
    }

    #[test]
    fn vacuum_is_stationary() {
        let s = BulkState { r: 1.3, u_e: 0.0, u_p: 0.0, du_e: 0.0, du_p: 0.0 };
        assert_eq!(bulk_rhs(&s, &desk()), [0.0; 4]);
    }

    #[test]
    fn desk_unit_state_pulls_protons_inward() {
        let c = desk();
        let s = BulkState { r: 1.0, u_e: 1.0, u_p: 1.0, du_e: 0.0, du_p: 0.0 };
        let d = bulk_rhs(&s, &c);
        assert!((d[3] - (c.f - c.e)).abs() < 1e-14 && d[3] < 0.0);
        assert!((d[2] - (c.b - c.a)).abs() < 1e-14);
    }

    #[test]
    fn negative_densities_are_clamped() {
        let c = desk();
        let s = BulkState { r: 2.0, u_e: -0.3, u_p: 0.5, du_e: 0.1, du_p: -0.2 };
        let d = bulk_rhs(&s, &c);
        assert!((d[3] - (0.2 + c.f * 0.5f64.powf(1.5))).abs() < 1e-14);
    }

    #[test]
    fn central_window_edges_are_rejected() {
        let c = desk();
        let w = ratio_window(&ConstantSet::desk()).unwrap();
        assert!(matches!(initial_signs(1.0, 1.0, &c), InitialSigns::BothNegative { .. }));
        assert!(matches!(initial_signs(w.central_hi, 1.0, &c), InitialSigns::Rejected(_)));
        assert!(matches!(initial_signs(w.central_lo * 0.999, 1.0, &c), InitialSigns::Rejected(_)));
        let zero = derive_coefficients(&ConstantSet { g: 0.0, k_p: Some(1.0), ..ConstantSet::desk() }).unwrap();
        assert!(matches!(initial_signs(1.0, 1.0, &zero), InitialSigns::Rejected(_)));
    }

    #[test]
    fn series_start_is_consistent_with_the_ode() {
        let c = desk();
        let (alpha, beta) = (1.0, 1.05);
        for h in [1e-2, 5e-3, 2.5e-3] {
            let s = series_start(alpha, beta, h, &c);
            assert!(s.u_p < alpha && s.u_e < beta);
            // Residual of u'' + 2u'/r − RHS with u'' taken from the series.
            let (phi0, psi0) = central_forces(alpha, beta, &c);
            let d = bulk_rhs(&s, &c);
            let res_p = (phi0 / 3.0 - d[3]).abs();
            let res_e = (psi0 / 3.0 - d[2]).abs();
            assert!(res_p < 2.0 * h && res_e < 2.0 * h, "h = {h}: {res_p}, {res_e}");
        }
        let tiny = series_start(alpha, beta, 1e-12, &c);
        assert!((tiny.u_p - alpha).abs() < 1e-20 && tiny.du_p.abs() < 1e-10);
    }

    #[test]
    fn rejected_input_is_an_error() {
        let c = desk();
        assert!(matches!(integrate_bulk(1.0, 100.0, &c, &BulkOptions::default()), Err(Error::Inadmissible { .. })));
        assert!(matches!(integrate_bulk(0.0, 1.0, &c, &BulkOptions::default()), Err(Error::NonPositiveInput { .. })));
    }
}
