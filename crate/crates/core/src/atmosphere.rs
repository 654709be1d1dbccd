//! Single-species exterior problem `u'' + (2/r) u' = D u^{3/2}` continued
//! from the bulk hand-off `u(R0) = a`, `u'(R0) = b`.
//!
//! Integration runs in Emden-Fowler variables `t = ln r`,
//! `u = K r⁻⁴ W(t)` with `K = 144/D²`, where the equation becomes
//! autonomous,
//!
//! ```text
//! W'' − 7 W' + 12 W = 12 W^{3/2},
//! ```
//!
//! and the decaying reference solution `K r⁻⁴` is the fixed point `W ≡ 1`.
//! Its linearisation has modes `r^s`, `s = (7 ± √73)/2`: one strongly
//! repelling, one slowly attracting with `σ = (√73 − 7)/2 ≈ 0.772`.

use serde::{Deserialize, Serialize};

use crate::bulk::blowup;
use crate::constants::Species;
use crate::error::{Error, Result};
use crate::ode::{self, Control, Step, Tolerances};
pub use crate::profile::approach_exponent;
use crate::profile::{
    critical_shape, critical_shape_slope, pow32, Envelope, PowerTail, ProfileSample, RadialProfile, SHAPE_DOMAIN,
};
use crate::roots::{bisect_predicate, brent};

/// `u r⁴` of the decaying reference solution.
pub fn reference_constant(d: f64) -> f64 {
    144.0 / (d * d)
}

/// `v(r) = (144/D²) r⁻⁴`.
pub fn decaying_reference(r: f64, d: f64) -> f64 {
    reference_constant(d) / r.powi(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmSample {
    pub r: f64,
    pub u: f64,
    pub du: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UnboundedReason {
    /// `u'` reached zero with `u > 0`; growth is monotone afterwards.
    Stationary,
    /// `u` exceeded the blow-up cap.
    Cap,
    /// Hand-off slope was already non-negative.
    InitialSlope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AtmosphereKind {
    Compact { r1: f64 },
    CriticalDecay,
    Unbounded { radius: f64, reason: UnboundedReason },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmosphereOptions {
    pub tol: Tolerances,
    /// Unbounded once `u` exceeds `blowup_cap · a`.
    pub blowup_cap: f64,
    /// Integration stops at `r_max_factor · R0`.
    pub r_max_factor: f64,
    /// Hand-off slopes within this relative distance of `b̂` are critical.
    pub critical_rel: f64,
    /// Relative gap between the two bracketing trajectories that ends the
    /// trusted range of a critical profile.
    pub trust_rel: f64,
    /// Allowed sup-norm misfit of the tail envelope, relative to its constant.
    pub envelope_tol: f64,
    /// Keep integrating past a stationary point (up to the cap).
    pub continue_unbounded: bool,
}

impl Default for AtmosphereOptions {
    fn default() -> Self {
        AtmosphereOptions {
            tol: Tolerances::default(),
            blowup_cap: 1e6,
            r_max_factor: 1e6,
            critical_rel: 1e-9,
            trust_rel: 1e-5,
            envelope_tol: 1e-3,
            continue_unbounded: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtmosphereOutcome {
    pub kind: AtmosphereKind,
    pub d: f64,
    pub samples: Vec<AtmSample>,
    /// Critical slope at this hand-off, when it was computed.
    pub critical_slope: Option<f64>,
    /// Fitted large-radius envelope (critical outcomes only).
    pub envelope: Option<Envelope>,
}

impl AtmosphereOutcome {
    pub fn outer_radius(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.r)
    }

    /// Two-species profile with the vanished species zero-filled.
    pub fn to_profile(&self, survivor: Species) -> RadialProfile {
        let samples = self
            .samples
            .iter()
            .map(|s| match survivor {
                Species::Electron => ProfileSample { r: s.r, u_e: s.u, u_p: 0.0, du_e: s.du, du_p: 0.0 },
                Species::Proton => ProfileSample { r: s.r, u_e: 0.0, u_p: s.u, du_e: 0.0, du_p: s.du },
            })
            .collect();
        RadialProfile { samples, tail: self.envelope.map(|envelope| PowerTail { species: survivor, envelope }) }
    }
}

/// Transformation between `(r, u, u')` and `(t, W, W')`.
#[derive(Debug, Clone, Copy)]
struct Frame {
    k: f64,
}

impl Frame {
    fn to_w(self, r: f64, u: f64, du: f64) -> [f64; 2] {
        let r4 = r.powi(4);
        [u * r4 / self.k, r4 * (r * du + 4.0 * u) / self.k]
    }

    fn to_u(self, t: f64, w: &[f64]) -> AtmSample {
        let r = t.exp();
        AtmSample { r, u: self.k * w[0] / r.powi(4), du: self.k * (w[1] - 4.0 * w[0]) / r.powi(5) }
    }
}

fn w_rhs(w: &[f64]) -> [f64; 2] {
    [w[1], 7.0 * w[1] - 12.0 * w[0] + 12.0 * pow32(w[0])]
}

fn check_inputs(r0: f64, a: f64, d: f64) -> Result<()> {
    if !(r0 > 0.0 && a > 0.0 && d > 0.0) || !(r0.is_finite() && a.is_finite() && d.is_finite()) {
        return Err(Error::InvalidHandoff(format!("need R0 > 0, a > 0, D > 0 (R0 = {r0}, a = {a}, D = {d})")));
    }
    Ok(())
}

/// Plain shooting run without the critical refinement.
fn shoot(r0: f64, a: f64, b: f64, d: f64, opts: &AtmosphereOptions) -> Result<(AtmosphereKind, Vec<AtmSample>)> {
    let frame = Frame { k: reference_constant(d) };
    let start = AtmSample { r: r0, u: a, du: b };
    if b >= 0.0 {
        return Ok((AtmosphereKind::Unbounded { radius: r0, reason: UnboundedReason::InitialSlope }, vec![start]));
    }
    let t0 = r0.ln();
    let t_end = t0 + opts.r_max_factor.ln();
    let rhs = |_t: f64, w: &[f64; 2]| w_rhs(w);
    let cap = opts.blowup_cap * a;
    let mut samples = vec![start];
    let mut hit: Option<(Step<2>, AtmosphereKind)> = None;
    let mut turned = false;

    let fin = ode::integrate(&rhs, t0, frame.to_w(r0, a, b), t_end, &opts.tol, |st| {
        if st.y1[0] <= 0.0 {
            hit = Some((st.clone(), AtmosphereKind::Compact { r1: 0.0 }));
            return Control::Stop;
        }
        let s = frame.to_u(st.t1, &st.y1);
        if !turned && st.y1[1] - 4.0 * st.y1[0] >= 0.0 {
            if !opts.continue_unbounded {
                hit =
                    Some((st.clone(), AtmosphereKind::Unbounded { radius: 0.0, reason: UnboundedReason::Stationary }));
                return Control::Stop;
            }
            turned = true;
        }
        samples.push(s);
        if s.u > cap {
            hit = Some((st.clone(), AtmosphereKind::Unbounded { radius: s.r, reason: UnboundedReason::Cap }));
            return Control::Stop;
        }
        Control::Continue
    })
    .map_err(blowup)?;

    let kind = match hit {
        None => {
            // Neither closed nor turned within the radius cap.
            let s = frame.to_u(fin.t, &fin.y);
            return Ok((AtmosphereKind::Unbounded { radius: s.r, reason: UnboundedReason::Cap }, samples));
        }
        Some((step, AtmosphereKind::Compact { .. })) => {
            let (t, w) = ode::locate_event(&rhs, &step, |w| w[0], 0.0);
            let mut s = frame.to_u(t, &w);
            s.u = 0.0;
            samples.push(s);
            AtmosphereKind::Compact { r1: s.r }
        }
        Some((step, AtmosphereKind::Unbounded { reason: UnboundedReason::Stationary, .. })) => {
            let (t, w) = ode::locate_event(&rhs, &step, |w| w[1] - 4.0 * w[0], 0.0);
            let mut s = frame.to_u(t, &w);
            s.du = 0.0;
            samples.push(s);
            AtmosphereKind::Unbounded { radius: s.r, reason: UnboundedReason::Stationary }
        }
        Some((_, kind)) => kind,
    };
    Ok((kind, samples))
}

fn is_unbounded(kind: &AtmosphereKind) -> bool {
    matches!(kind, AtmosphereKind::Unbounded { .. })
}

/// Final bisection bracket `(compact, unbounded)` around the critical slope.
pub fn critical_bracket(r0: f64, a: f64, d: f64, opts: &AtmosphereOptions) -> Result<(f64, f64)> {
    check_inputs(r0, a, d)?;
    let classify = |b: f64| -> Result<bool> { Ok(is_unbounded(&shoot(r0, a, b, d, opts)?.0)) };
    let hi = 0.0;
    let mut k = 8.0;
    let mut lo = -k * a / r0;
    let mut grown = 0;
    while classify(lo)? {
        grown += 1;
        if grown > 40 {
            return Err(Error::BracketFailure(format!("no compact outcome down to b = {lo:e}")));
        }
        k *= 4.0;
        lo = -k * a / r0;
    }
    let mut failure = None;
    let bracket = bisect_predicate(
        |b| match classify(b) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                true
            }
        },
        lo,
        hi,
        0.0,
        400,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(bracket),
    }
}

/// Slope `b̂` separating compact (`b < b̂`) from unbounded (`b > b̂`) outcomes.
///
/// The bisection runs to the resolution of `f64`; `tol` only guards the
/// final bracket width.
pub fn critical_slope(r0: f64, a: f64, d: f64, tol: f64) -> Result<f64> {
    let (lo, hi) = critical_bracket(r0, a, d, &AtmosphereOptions::default())?;
    if hi - lo > tol.max(4.0 * f64::EPSILON * lo.abs()) {
        return Err(Error::BracketFailure(format!("bracket [{lo:e}, {hi:e}] wider than {tol:e}")));
    }
    Ok(0.5 * (lo + hi))
}

/// Integrates the critical solution between its two bracketing slopes.
///
/// Samples follow the bracket midpoint until the compact and unbounded
/// neighbours separate by `trust_rel`; the envelope is then fitted over the
/// last decade of that trusted range.
fn critical_profile(r0: f64, a: f64, d: f64, lo: f64, hi: f64, opts: &AtmosphereOptions) -> Result<AtmosphereOutcome> {
    let frame = Frame { k: reference_constant(d) };
    let mid = 0.5 * (lo + hi);
    let t0 = r0.ln();
    let t_end = t0 + opts.r_max_factor.ln();
    let [w_lo, w_mid, w_hi] = [lo, mid, hi].map(|b| frame.to_w(r0, a, b));
    let y0 = [w_lo[0], w_lo[1], w_mid[0], w_mid[1], w_hi[0], w_hi[1]];
    let rhs = |_t: f64, y: &[f64; 6]| {
        let (p, q, s) = (w_rhs(&y[0..2]), w_rhs(&y[2..4]), w_rhs(&y[4..6]));
        [p[0], p[1], q[0], q[1], s[0], s[1]]
    };
    let mut samples = vec![AtmSample { r: r0, u: a, du: mid }];
    ode::integrate(&rhs, t0, y0, t_end, &opts.tol, |st| {
        let y = &st.y1;
        if (y[0] - y[4]).abs() > opts.trust_rel * y[2].abs() || y[2] <= 0.0 {
            return Control::Stop;
        }
        samples.push(frame.to_u(st.t1, &y[2..4]));
        Control::Continue
    })
    .map_err(blowup)?;
    let r_trust = samples.last().map_or(r0, |s| s.r);
    // Every critical solution tends to the reference envelope K r⁻⁴.
    let envelope = fit_envelope(&samples, r_trust / 10.0, r_trust, frame.k, opts.envelope_tol)?;
    Ok(AtmosphereOutcome {
        kind: AtmosphereKind::CriticalDecay,
        d,
        samples,
        critical_slope: Some(mid),
        envelope: Some(envelope),
    })
}

/// Fits `u r⁴ = c·W(λ r^{-σ})` with `c` pinned over samples in `[r_lo, r_hi]`.
///
/// `λ` starts from the outermost sample and is polished by Gauss-Newton on
/// the whole window; the fit fails if the window leaves the range where the
/// shape series is trusted or the sup-norm misfit exceeds `tol·c`.
pub fn fit_envelope(samples: &[AtmSample], r_lo: f64, r_hi: f64, constant: f64, tol: f64) -> Result<Envelope> {
    let fail = |msg: String| Err(Error::EnvelopeFitFailure(msg));
    if samples.first().is_none_or(|s| s.r > r_lo) {
        return fail(format!("trusted range ends at {r_hi:e}, less than a decade"));
    }
    let sigma = approach_exponent();
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.r >= r_lo * (1.0 - 1e-12) && s.r <= r_hi && s.r > 0.0)
        .map(|s| (s.r.powf(-sigma), s.u * s.r.powi(4) / constant))
        .collect();
    let Some(&(x_last, w_last)) = pts.last() else {
        return fail("no samples in the fit window".into());
    };
    let (y_lo, y_hi) = SHAPE_DOMAIN;
    let y_last = brent(|y| critical_shape(y) - w_last, y_lo, y_hi, 1e-15, 0.0, 200).map_err(|_| {
        Error::EnvelopeFitFailure(format!("u r^4 / c = {w_last:e} is outside the critical shape range"))
    })?;
    let mut lambda = y_last / x_last;
    for _ in 0..8 {
        let (mut num, mut den) = (0.0, 0.0);
        for &(x, w) in &pts {
            let jac = x * critical_shape_slope(lambda * x);
            num += jac * (w - critical_shape(lambda * x));
            den += jac * jac;
        }
        if den == 0.0 {
            break;
        }
        lambda += num / den;
    }
    let x_first = pts[0].0;
    if !(y_lo..=y_hi).contains(&(lambda * x_first)) {
        return fail(format!(
            "shape argument {:e} at r = {r_lo:e} is outside the trusted series range",
            lambda * x_first
        ));
    }
    let misfit = pts.iter().map(|&(x, w)| (w - critical_shape(lambda * x)).abs()).fold(0.0, f64::max);
    if misfit > tol {
        return fail(format!("misfit {misfit:e} exceeds {tol:e}"));
    }
    Ok(Envelope { constant, scale: lambda, cutoff: r_hi })
}

pub fn integrate_atmosphere(r0: f64, a: f64, b: f64, d: f64, opts: &AtmosphereOptions) -> Result<AtmosphereOutcome> {
    check_inputs(r0, a, d)?;
    if !b.is_finite() {
        return Err(Error::InvalidHandoff(format!("non-finite slope {b}")));
    }
    let (kind, samples) = shoot(r0, a, b, d, opts)?;
    let raw_radius = match kind {
        AtmosphereKind::Compact { r1 } => r1,
        AtmosphereKind::Unbounded { radius, .. } => radius,
        AtmosphereKind::CriticalDecay => unreachable!("plain shooting never reports critical decay"),
    };
    // A trajectory that decides within half a hand-off radius is far from
    // the critical slope.
    if raw_radius <= 1.5 * r0 {
        return Ok(AtmosphereOutcome { kind, d, samples, critical_slope: None, envelope: None });
    }
    let (lo, hi) = critical_bracket(r0, a, d, opts)?;
    let b_hat = 0.5 * (lo + hi);
    if (b - b_hat).abs() <= opts.critical_rel * b_hat.abs() {
        return critical_profile(r0, a, d, lo, hi, opts);
    }
    Ok(AtmosphereOutcome { kind, d, samples, critical_slope: Some(b_hat), envelope: None })
}

/// Count `4π ∫ r² u^{3/2}` beyond the last sample of a critical atmosphere,
/// together with the fitted envelope constant `lim u r⁴`.
pub fn tail_mass(outcome: &AtmosphereOutcome) -> Result<(f64, f64)> {
    match (&outcome.kind, outcome.envelope) {
        (AtmosphereKind::CriticalDecay, Some(env)) => Ok((env.count(), env.constant())),
        _ => Err(Error::EnvelopeFitFailure("tail mass needs a critically decaying atmosphere".into())),
    }
}
