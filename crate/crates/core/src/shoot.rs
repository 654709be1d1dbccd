//! End-to-end profiles: bulk integration, atmospheric continuation, particle
//! counts, the scaling map and the inversion `(N_e, N_p) → (α, β)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atmosphere::{integrate_atmosphere, AtmosphereKind, AtmosphereOptions};
use crate::bulk::{integrate_bulk, BulkEvent, BulkOptions};
use crate::constants::{
    check_ratio, derive_coefficients, ratio_window, CoefficientSet, ConstantSet, RatioCheck, Species,
    RATIO_BOUNDARY_TOL,
};
use crate::error::{Error, Result};
use crate::profile::RadialProfile;
use crate::roots::{bisect_predicate, brent};
use crate::special::solve_kd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Special,
    ProtonAtmosphere,
    ElectronAtmosphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Closure {
    Compact,
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleCounts {
    pub n_e: f64,
    pub n_p: f64,
    /// `N_e / N_p`.
    pub ratio: f64,
}

impl ParticleCounts {
    pub fn new(n_e: f64, n_p: f64) -> Self {
        ParticleCounts { n_e, n_p, ratio: n_e / n_p }
    }

    pub fn get(&self, species: Species) -> f64 {
        match species {
            Species::Electron => self.n_e,
            Species::Proton => self.n_p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullSolution {
    pub alpha: f64,
    pub beta: f64,
    pub regime: Regime,
    pub closure: Closure,
    /// Radius where the first density vanishes.
    pub bulk_radius: f64,
    /// Radius where the surviving density vanishes; for critical solutions
    /// the end of the sampled range (the tail continues beyond it).
    pub outer_radius: f64,
    pub turning_radius: Option<f64>,
    /// Slope of the surviving density at the hand-off.
    pub handoff_slope: Option<f64>,
    pub critical_slope: Option<f64>,
    /// Count carried by the analytic tail (critical solutions only).
    pub tail_count: Option<f64>,
    pub profile: RadialProfile,
    pub counts: ParticleCounts,
}

impl FullSolution {
    pub fn survivor(&self) -> Option<Species> {
        match self.regime {
            Regime::Special => None,
            Regime::ProtonAtmosphere => Some(Species::Proton),
            Regime::ElectronAtmosphere => Some(Species::Electron),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub bulk: BulkOptions,
    pub atmosphere: AtmosphereOptions,
    /// Relative panel-halving tolerance for the count quadrature.
    pub count_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { bulk: BulkOptions::default(), atmosphere: AtmosphereOptions::default(), count_tol: 1e-8 }
    }
}

impl SolveOptions {
    /// Uses `rtol` for every integration.
    pub fn with_rtol(rtol: f64) -> Self {
        let mut o = SolveOptions::default();
        o.bulk.tol.rtol = rtol;
        o.bulk.tol.atol = rtol * 1e-3;
        o.atmosphere.tol.rtol = rtol;
        o.atmosphere.tol.atol = rtol * 1e-3;
        o
    }
}

/// `4π ∫ r² u_f^{3/2} dr` for both species, tails included.
pub fn counts(profile: &RadialProfile, rel_tol: f64) -> Result<ParticleCounts> {
    let n_e = profile.count_checked(Species::Electron, rel_tol)?;
    let n_p = profile.count_checked(Species::Proton, rel_tol)?;
    Ok(ParticleCounts::new(n_e, n_p))
}

pub fn solve_profile(alpha: f64, beta: f64, consts: &ConstantSet, opts: &SolveOptions) -> Result<FullSolution> {
    let coeffs = derive_coefficients(consts)?;
    solve_with(alpha, beta, &coeffs, opts)
}

pub fn solve_with(alpha: f64, beta: f64, coeffs: &CoefficientSet, opts: &SolveOptions) -> Result<FullSolution> {
    let bulk = integrate_bulk(alpha, beta, coeffs, &opts.bulk)?;
    let r0 = bulk.event_radius;
    let survivor = match bulk.event {
        BulkEvent::RadiusCap => {
            return Err(Error::NumericalBlowup {
                radius: r0,
                detail: "no density vanished below the radius cap".into(),
            })
        }
        BulkEvent::SimultaneousVanish => None,
        e => e.survivor(),
    };
    let Some(survivor) = survivor else {
        let counts = counts(&bulk.profile, opts.count_tol)?;
        return Ok(FullSolution {
            alpha,
            beta,
            regime: Regime::Special,
            closure: Closure::Compact,
            bulk_radius: r0,
            outer_radius: r0,
            turning_radius: bulk.turning_radius(),
            handoff_slope: None,
            critical_slope: None,
            tail_count: None,
            profile: bulk.profile,
            counts,
        });
    };
    let st = bulk.state_at_event;
    let (a, b) = (st.u(survivor), st.du(survivor));
    let d = coeffs.atmosphere(survivor);
    let atm = integrate_atmosphere(r0, a, b, d, &opts.atmosphere)?;
    let closure = match atm.kind {
        AtmosphereKind::Compact { .. } => Closure::Compact,
        AtmosphereKind::CriticalDecay => Closure::Critical,
        AtmosphereKind::Unbounded { .. } => return Err(Error::NonIntegrable { species: survivor, slope: b }),
    };
    let turning_radius = bulk.turning_radius();
    let mut profile = bulk.profile;
    let outer = atm.to_profile(survivor);
    profile.samples.extend(outer.samples.into_iter().skip(1));
    profile.tail = outer.tail;
    let tail_count = profile.tail.map(|t| t.count());
    let counts = counts(&profile, opts.count_tol)?;
    Ok(FullSolution {
        alpha,
        beta,
        regime: match survivor {
            Species::Proton => Regime::ProtonAtmosphere,
            Species::Electron => Regime::ElectronAtmosphere,
        },
        closure,
        bulk_radius: r0,
        outer_radius: profile.outer_radius(),
        turning_radius,
        handoff_slope: Some(b),
        critical_slope: atm.critical_slope,
        tail_count,
        profile,
        counts,
    })
}

/// Image of `sol` under `θ_f(s) = λ u_f(a s)`, `a = λ^{1/4}`.
///
/// Counts are recomputed by quadrature on the mapped profile.
pub fn apply_scaling(sol: &FullSolution, lambda: f64) -> Result<FullSolution> {
    let a = lambda.powf(0.25);
    let profile = sol.profile.rescaled(1.0 / a, lambda);
    let counts = counts(&profile, 1e-8)?;
    Ok(FullSolution {
        alpha: lambda * sol.alpha,
        beta: lambda * sol.beta,
        regime: sol.regime,
        closure: sol.closure,
        bulk_radius: sol.bulk_radius / a,
        outer_radius: sol.outer_radius / a,
        turning_radius: sol.turning_radius.map(|r| r / a),
        handoff_slope: sol.handoff_slope.map(|b| b * lambda * a),
        critical_slope: sol.critical_slope.map(|b| b * lambda * a),
        tail_count: profile.tail.map(|t| t.count()),
        profile,
        counts,
    })
}

/// Common factor `λ^{3/4}` by which the scaling map multiplies both counts.
pub fn count_scale_factor(lambda: f64) -> f64 {
    lambda.powf(0.75)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InversionPath {
    Brent,
    /// Pre-scan found a non-monotone ratio; the root came from the first
    /// bracketing grid interval.
    GridFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub alpha: f64,
    pub beta: f64,
    /// `β` of the canonical `α = 1` solution with the target ratio.
    pub beta_canonical: f64,
    pub target: ParticleCounts,
    pub achieved: ParticleCounts,
    pub boundary: bool,
    pub path: InversionPath,
    pub solution: FullSolution,
}

/// Signed distance of the count ratio at `(1, β)` from `target`.
///
/// Rejected and non-integrable inputs are mapped to the sign implied by
/// their side of the special ray, which keeps the function monotone.
fn ratio_residual(beta: f64, beta_special: f64, target: f64, coeffs: &CoefficientSet, opts: &SolveOptions) -> f64 {
    match solve_with(1.0, beta, coeffs, opts) {
        Ok(sol) => sol.counts.ratio - target,
        Err(_) if beta < beta_special => -1.0 - target,
        Err(_) => 1.0 + target,
    }
}

pub fn invert_counts(n_e: f64, n_p: f64, consts: &ConstantSet, opts: &SolveOptions) -> Result<Inversion> {
    let coeffs = derive_coefficients(consts)?;
    let windows = ratio_window(consts)?;
    if !(n_e > 0.0 && n_p > 0.0) {
        return Err(Error::NonPositiveInput { alpha: n_p, beta: n_e });
    }
    let target = n_e / n_p;
    let boundary = match check_ratio(n_e, n_p, &windows, RATIO_BOUNDARY_TOL) {
        RatioCheck::Inadmissible => {
            return Err(Error::InadmissibleRatio { ratio: target, lo: windows.ratio_lo, hi: windows.ratio_hi })
        }
        RatioCheck::Boundary => true,
        RatioCheck::Admissible => false,
    };
    let beta_special = 1.0 / solve_kd(5.0, &coeffs, 1e-15)?.powf(2.0 / 3.0);

    let (beta1, path) = if boundary {
        let ends = window_endpoints(1.0, &coeffs, opts)?;
        let near_lo = (target - windows.ratio_lo).abs() < (target - windows.ratio_hi).abs();
        (if near_lo { ends.lower.beta } else { ends.upper.beta }, InversionPath::Brent)
    } else {
        let (lo, hi) = windows.beta_range(1.0);
        let f = |b: f64| ratio_residual(b, beta_special, target, &coeffs, opts);
        let scan: Vec<f64> = (0..=8).map(|i| lo + (hi - lo) * i as f64 / 8.0).collect();
        let vals: Vec<f64> = scan.par_iter().map(|&b| f(b)).collect();
        let monotone = vals.windows(2).all(|w| w[1] >= w[0]);
        let k = vals.windows(2).position(|w| w[0] <= 0.0 && w[1] >= 0.0).ok_or(Error::RatioNotBracketed { target })?;
        let root = brent(f, scan[k], scan[k + 1], 1e-15, 1e-14 * target, 300)?;
        (root, if monotone { InversionPath::Brent } else { InversionPath::GridFallback })
    };

    let canonical = solve_with(1.0, beta1, &coeffs, opts)?;
    let lambda = (n_p / canonical.counts.n_p).powf(4.0 / 3.0);
    let solution = solve_with(lambda, lambda * beta1, &coeffs, opts)?;
    Ok(Inversion {
        alpha: lambda,
        beta: lambda * beta1,
        beta_canonical: beta1,
        target: ParticleCounts::new(n_e, n_p),
        achieved: solution.counts,
        boundary,
        path,
        solution,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEndpoint {
    pub beta: f64,
    /// Width of the final bisection bracket in `β`.
    pub bracket: f64,
    pub solution: FullSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEndpoints {
    pub beta_special: f64,
    pub lower: WindowEndpoint,
    pub upper: WindowEndpoint,
}

/// Critical end points `β_α^l < β_special < β_α^h` of the compact range at
/// fixed `α`, by bisection from the special ray towards each window edge.
pub fn window_endpoints(alpha: f64, coeffs: &CoefficientSet, opts: &SolveOptions) -> Result<WindowEndpoints> {
    let k = solve_kd(5.0, coeffs, 1e-15)?;
    let beta_special = alpha / k.powf(2.0 / 3.0);
    let cl = (coeffs.b / coeffs.a).powf(2.0 / 3.0);
    let ch = (coeffs.e / coeffs.f).powf(2.0 / 3.0);
    let (beta_min, beta_max) = (alpha / ch, alpha / cl);
    let excluded = |b: f64| solve_with(alpha, b, coeffs, opts).is_err();

    let refine = |edge: f64| -> Result<WindowEndpoint> {
        // Predicate is "excluded": true at the window edge, false on the ray.
        let (inside, outside) = if edge < beta_special {
            let (o, i) = bisect_predicate(|b| !excluded(b), edge, beta_special, 0.0, 200);
            (i, o)
        } else {
            bisect_predicate(excluded, beta_special, edge, 0.0, 200)
        };
        let solution = solve_with(alpha, inside, coeffs, opts)?;
        Ok(WindowEndpoint { beta: inside, bracket: (outside - inside).abs(), solution })
    };
    let (lower, upper) = rayon::join(|| refine(beta_min), || refine(beta_max));
    Ok(WindowEndpoints { beta_special, lower: lower?, upper: upper? })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub regime: Option<Regime>,
    pub closure: Option<Closure>,
    pub counts: Option<ParticleCounts>,
    pub bulk_radius: Option<f64>,
    pub outer_radius: Option<f64>,
    /// Error kind for rejected or non-integrable inputs.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub alpha: f64,
    pub rows: Vec<SweepRow>,
    pub endpoints: Option<WindowEndpoints>,
    /// Whether the count ratio increases along the compact rows.
    pub ratio_monotone: bool,
    /// Regime labels in order of increasing `β`, consecutive repeats merged.
    pub regime_order: Vec<String>,
}

fn row_label(row: &SweepRow) -> String {
    match (row.regime, row.closure, &row.failure) {
        (Some(r), Some(c), _) => format!("{r:?}/{c:?}"),
        (_, _, Some(f)) => f.clone(),
        _ => "Unknown".into(),
    }
}

fn failure_kind(e: &Error) -> String {
    match e {
        Error::Inadmissible { .. } => "Inadmissible".into(),
        Error::NonIntegrable { .. } => "NonIntegrable".into(),
        other => format!("{other}"),
    }
}

/// Solves every `β` of the grid in parallel; rows keep the grid order.
pub fn regime_sweep(
    alpha: f64,
    beta_grid: &[f64],
    consts: &ConstantSet,
    opts: &SolveOptions,
    with_endpoints: bool,
) -> Result<SweepReport> {
    let coeffs = derive_coefficients(consts)?;
    let rows: Vec<SweepRow> = beta_grid
        .par_iter()
        .map(|&beta| match solve_with(alpha, beta, &coeffs, opts) {
            Ok(sol) => SweepRow {
                beta,
                regime: Some(sol.regime),
                closure: Some(sol.closure),
                counts: Some(sol.counts),
                bulk_radius: Some(sol.bulk_radius),
                outer_radius: Some(sol.outer_radius),
                failure: None,
            },
            Err(e) => SweepRow {
                beta,
                regime: None,
                closure: None,
                counts: None,
                bulk_radius: None,
                outer_radius: None,
                failure: Some(failure_kind(&e)),
            },
        })
        .collect();
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.counts.map(|c| c.ratio)).collect();
    let ratio_monotone = ratios.windows(2).all(|w| w[1] > w[0]);
    let mut regime_order: Vec<String> = Vec::new();
    for row in &rows {
        let label = row_label(row);
        if regime_order.last() != Some(&label) {
            regime_order.push(label);
        }
    }
    let endpoints = if with_endpoints { Some(window_endpoints(alpha, &coeffs, opts)?) } else { None };
    Ok(SweepReport { alpha, rows, endpoints, ratio_monotone, regime_order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ProfileSample;
    use std::f64::consts::PI;

    #[test]
    fn uniform_ball_counts() {
        let u = 0.49f64;
        let samples = (0..=20)
            .map(|i| ProfileSample { r: 2.0 * i as f64 / 20.0, u_e: u, u_p: u * 4.0, du_e: 0.0, du_p: 0.0 })
            .collect();
        let c = counts(&RadialProfile::new(samples), 1e-8).unwrap();
        let vol = 4.0 / 3.0 * PI * 8.0;
        assert!((c.n_e - vol * u.powf(1.5)).abs() < 1e-12 * c.n_e);
        assert!((c.ratio - 0.125).abs() < 1e-14);
    }

    #[test]
    fn outside_central_window_is_inadmissible() {
        let r = solve_profile(1.0, 100.0, &ConstantSet::desk(), &SolveOptions::default());
        assert!(matches!(r, Err(Error::Inadmissible { .. })));
    }

    #[test]
    fn ratio_outside_window_is_rejected() {
        let r = invert_counts(2.0, 1.0, &ConstantSet::desk(), &SolveOptions::default());
        assert!(matches!(r, Err(Error::InadmissibleRatio { .. })));
    }

    #[test]
    fn scaling_by_one_is_identity() {
        let c = derive_coefficients(&ConstantSet::desk()).unwrap();
        let k = solve_kd(5.0, &c, 1e-15).unwrap();
        let sol = solve_with(1.0, k.powf(-2.0 / 3.0), &c, &SolveOptions::default()).unwrap();
        let same = apply_scaling(&sol, 1.0).unwrap();
        assert_eq!(same.profile, sol.profile);
        assert_eq!(same.counts, sol.counts);
    }
}
