//! Dormand-Prince 5(4) integrator with continuous (dense) output.
//!
//! The integrator only drives the step loop. Callers inspect every accepted
//! [`Step`] through a callback, sample it with [`Step::eval`], and stop the
//! integration when an event fires. Events are located with
//! [`locate_event`], which root-finds on the single-step map itself rather
//! than on the interpolant, so the located state is as accurate as a
//! regular step.

use serde::{Deserialize, Serialize};

use crate::roots::brent;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest step allowed, relative to `|t|`.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-11, atol: 1e-14, h_min_rel: 1e-14, max_steps: 200_000 }
    }
}

impl Tolerances {
    pub fn with_rtol(rtol: f64) -> Self {
        Tolerances { rtol, atol: rtol * 1e-3, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntegrationError {
    StepUnderflow { t: f64, h: f64 },
    NonFinite { t: f64 },
    TooManySteps { t: f64 },
}

/// One accepted step together with its dense-output polynomial.
#[derive(Debug, Clone)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    rcont: [[f64; N]; 5],
}

impl<const N: usize> Step<N> {
    pub fn h(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Fourth-order continuous extension on `[t0, t1]`.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h();
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        std::array::from_fn(|i| r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i]))))
    }
}

pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone)]
pub struct Finish<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub steps: usize,
    /// True when the callback stopped the run before `t_end`.
    pub stopped: bool,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

struct Stages<const N: usize> {
    k: [[f64; N]; 7],
    y1: [f64; N],
}

fn stages<const N: usize, F>(rhs: &F, t: f64, y: &[f64; N], k1: [f64; N], h: f64) -> Stages<N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k2 = rhs(t + C2 * h, &axpy(y, h, &[(A21, &k1)]));
    let k3 = rhs(t + C3 * h, &axpy(y, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = rhs(t + C4 * h, &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
    let k5 = rhs(t + C5 * h, &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = rhs(t + h, &axpy(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y1 = axpy(y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = rhs(t + h, &y1);
    Stages { k: [k1, k2, k3, k4, k5, k6, k7], y1 }
}

/// A single fifth-order step without error control.
pub fn single_step<const N: usize, F>(rhs: &F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if h == 0.0 {
        return *y;
    }
    stages(rhs, t, y, rhs(t, y), h).y1
}

fn initial_step<const N: usize, F>(rhs: &F, t: f64, y: &[f64; N], f0: &[f64; N], tol: &Tolerances, dir: f64) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let sc: [f64; N] = std::array::from_fn(|i| tol.atol + tol.rtol * y[i].abs());
    let norm = |v: &[f64; N]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = norm(y);
    let d1 = norm(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.max(1e-12 * t.abs().max(1.0));
    let y1 = axpy(y, dir * h0, &[(1.0, f0)]);
    let f1 = rhs(t + dir * h0, &y1);
    let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1)
}

/// Integrates `y' = rhs(t, y)` from `t0` towards `t_end`, handing every
/// accepted step to `on_step`.
pub fn integrate<const N: usize, F, O>(
    rhs: &F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: &Tolerances,
    mut on_step: O,
) -> Result<Finish<N>, IntegrationError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    O: FnMut(&Step<N>) -> Control,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut f0 = rhs(t, &y);
    let mut h = initial_step(rhs, t, &y, &f0, tol, dir).min((t_end - t0).abs());
    let mut steps = 0;
    let mut last_rejected = false;

    while dir * (t_end - t) > 0.0 {
        if steps >= tol.max_steps {
            return Err(IntegrationError::TooManySteps { t });
        }
        let h_min = tol.h_min_rel * t.abs().max(1e-300);
        if h < h_min {
            return Err(IntegrationError::StepUnderflow { t, h });
        }
        let mut hs = dir * h;
        if dir * (t + hs - t_end) > 0.0 {
            hs = t_end - t;
        }
        let st = stages(rhs, t, &y, f0, hs);
        let k = &st.k;
        let mut err = 0.0;
        for i in 0..N {
            let e = hs * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(st.y1[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() || st.y1.iter().any(|v| !v.is_finite()) {
            if h <= h_min * 2.0 {
                return Err(IntegrationError::NonFinite { t });
            }
            h *= 0.1;
            last_rejected = true;
            continue;
        }
        if err <= 1.0 {
            let t1 = t + hs;
            let ydiff: [f64; N] = std::array::from_fn(|i| st.y1[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| hs * k[0][i] - ydiff[i]);
            let step = Step {
                t0: t,
                t1,
                y0: y,
                y1: st.y1,
                rcont: [
                    y,
                    ydiff,
                    bspl,
                    std::array::from_fn(|i| ydiff[i] - hs * k[6][i] - bspl[i]),
                    std::array::from_fn(|i| {
                        hs * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i])
                    }),
                ],
            };
            steps += 1;
            t = t1;
            y = st.y1;
            f0 = k[6];
            if let Control::Stop = on_step(&step) {
                return Ok(Finish { t, y, steps, stopped: true });
            }
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 5.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = hs.abs() * fac;
            last_rejected = false;
        } else {
            let fac = (0.9 * err.powf(-0.2)).max(0.2);
            h = hs.abs() * fac;
            last_rejected = true;
        }
    }
    Ok(Finish { t, y, steps, stopped: false })
}

/// Locates the first zero of `g` inside `step`, given a sign change between
/// its end points, by root-finding on the single-step map from `step.t0`.
///
/// Returns the event time and the state there.
pub fn locate_event<const N: usize, F, G>(rhs: &F, step: &Step<N>, g: G, g_tol: f64) -> (f64, [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    G: Fn(&[f64; N]) -> f64,
{
    let map = |t: f64| single_step(rhs, step.t0, &step.y0, t - step.t0);
    let g0 = g(&step.y0);
    if g0 == 0.0 {
        return (step.t0, step.y0);
    }
    // Narrow the bracket on the interpolant first; the interior sign change
    // of a non-monotone g need not be at the step end.
    let (mut lo, mut hi) = (step.t0, step.t1);
    let n_scan = 8;
    for j in 1..=n_scan {
        let tj = step.t0 + step.h() * j as f64 / n_scan as f64;
        let gj = if j == n_scan { g(&step.y1) } else { g(&step.eval(tj)) };
        if gj.signum() != g0.signum() || gj == 0.0 {
            hi = tj;
            break;
        }
        lo = tj;
    }
    let phi = |t: f64| g(&map(t));
    let (glo, ghi) = (phi(lo), phi(hi));
    if glo.signum() == ghi.signum() {
        // Interpolant and step map disagree on the bracket; fall back to the full step.
        lo = step.t0;
        hi = step.t1;
    }
    let x_tol = 4.0 * f64::EPSILON * step.t1.abs().max(step.t0.abs());
    let t_ev = brent(phi, lo, hi, x_tol, g_tol, 200).unwrap_or(hi);
    (t_ev, map(t_ev))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let rhs = |_t: f64, y: &[f64; 1]| [-y[0]];
        let tol = Tolerances::default();
        let fin = integrate(&rhs, 0.0, [1.0], 5.0, &tol, |_| Control::Continue).unwrap();
        assert!((fin.y[0] - (-5.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn dense_output_tracks_oscillator() {
        let rhs = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let tol = Tolerances::with_rtol(1e-10);
        let mut worst: f64 = 0.0;
        integrate(&rhs, 0.0, [0.0, 1.0], 10.0, &tol, |st| {
            for j in 1..4 {
                let t = st.t0 + st.h() * j as f64 / 4.0;
                worst = worst.max((st.eval(t)[0] - t.sin()).abs());
            }
            Control::Continue
        })
        .unwrap();
        assert!(worst < 1e-8, "dense output error {worst}");
    }

    #[test]
    fn event_location_on_step_map() {
        let rhs = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let tol = Tolerances::with_rtol(1e-12);
        let mut found = None;
        integrate(&rhs, 0.0, [1.0, 0.0], 10.0, &tol, |st| {
            if st.y1[0] <= 0.0 {
                found = Some(locate_event(&rhs, st, |y| y[0], 1e-15));
                Control::Stop
            } else {
                Control::Continue
            }
        })
        .unwrap();
        let (t, y) = found.unwrap();
        assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
        assert!(y[0].abs() < 1e-13);
    }

    #[test]
    fn backward_integration() {
        let rhs = |_t: f64, y: &[f64; 1]| [y[0]];
        let fin = integrate(&rhs, 1.0, [1.0], 0.0, &Tolerances::default(), |_| Control::Continue).unwrap();
        assert!((fin.y[0] - (-1.0f64).exp()).abs() < 1e-12);
    }
}
