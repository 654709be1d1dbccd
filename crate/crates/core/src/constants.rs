//! Model constants, the bulk/atmosphere ODE coefficients derived from them,
//! and the closed-form admissibility windows.
//!
//! Everything is expressed in a self-consistent nondimensional unit system.
//! The default "desk" set keeps every coefficient of order one to ten;
//! true SI values make the integrations badly scaled.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the two fluids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Electron,
    Proton,
}

impl Species {
    pub fn other(self) -> Self {
        match self {
            Species::Electron => Species::Proton,
            Species::Proton => Species::Electron,
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Species::Electron => f.write_str("electron"),
            Species::Proton => f.write_str("proton"),
        }
    }
}

/// `(3/π)^{2/3}`, shared by the kinetic prefactors and the relativity factor.
pub(crate) fn three_over_pi_23() -> f64 {
    (3.0 / PI).powf(2.0 / 3.0)
}

/// Physical constants of the model.
///
/// `k_e` and `k_p` default to `(3h²/40m)(3/π)^{2/3}` but can be pinned
/// directly, which decouples unit-system experiments from `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantSet {
    pub h: f64,
    pub c: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub q: f64,
    pub m_e: f64,
    pub m_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_p: Option<f64>,
}

impl ConstantSet {
    /// Desk units: q = 1, G = 0.05, m_e = 1, m_p = 2, k_e = 1, k_p = 1/2, c = 10.
    ///
    /// `h` is chosen so that the formula for `k_e` gives exactly the pinned
    /// value, which keeps the relativistic and nonrelativistic models
    /// mutually consistent.
    pub fn desk() -> Self {
        let m_e = 1.0;
        let h = (40.0 * m_e / (3.0 * three_over_pi_23())).sqrt();
        ConstantSet { h, c: 10.0, g: 0.05, q: 1.0, m_e, m_p: 2.0, k_e: Some(1.0), k_p: Some(0.5) }
    }

    /// Desk constants with gravity switched off.
    pub fn desk_zero_gravity() -> Self {
        ConstantSet { g: 0.0, ..Self::desk() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let consts: ConstantSet =
            serde_json::from_str(text).map_err(|e| Error::InadmissibleConstants(format!("bad constants JSON: {e}")))?;
        consts.validate()?;
        Ok(consts)
    }

    pub fn mass(&self, species: Species) -> f64 {
        match species {
            Species::Electron => self.m_e,
            Species::Proton => self.m_p,
        }
    }

    fn kinetic_from_h(&self, mass: f64) -> f64 {
        3.0 * self.h * self.h / (40.0 * mass) * three_over_pi_23()
    }

    pub fn k_e(&self) -> f64 {
        self.k_e.unwrap_or_else(|| self.kinetic_from_h(self.m_e))
    }

    pub fn k_p(&self) -> f64 {
        self.k_p.unwrap_or_else(|| self.kinetic_from_h(self.m_p))
    }

    pub fn kinetic_prefactor(&self, species: Species) -> f64 {
        match species {
            Species::Electron => self.k_e(),
            Species::Proton => self.k_p(),
        }
    }

    /// Checks positivity and the charge-dominates-gravity orderings.
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("h", self.h),
            ("c", self.c),
            ("q", self.q),
            ("m_e", self.m_e),
            ("m_p", self.m_p),
            ("k_e", self.k_e()),
            ("k_p", self.k_p()),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InadmissibleConstants(format!("{name} must be finite and positive, got {value}")));
            }
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::InadmissibleConstants(format!("G must be finite and non-negative, got {}", self.g)));
        }
        if self.m_p <= self.m_e {
            return Err(Error::InadmissibleConstants(format!("m_p ({}) must exceed m_e ({})", self.m_p, self.m_e)));
        }
        let q2 = self.q * self.q;
        if q2 <= self.g * self.m_p * self.m_p || q2 <= self.g * self.m_e * self.m_e {
            return Err(Error::InadmissibleConstants(format!(
                "q² = {q2} must exceed G·m_p² = {} and G·m_e² = {}",
                self.g * self.m_p * self.m_p,
                self.g * self.m_e * self.m_e
            )));
        }
        Ok(())
    }
}

impl Default for ConstantSet {
    fn default() -> Self {
        Self::desk()
    }
}

/// Coefficients of the radial bulk system
///
/// ```text
/// u_p'' + (2/r) u_p' = F u_p^{3/2} − E u_e^{3/2}
/// u_e'' + (2/r) u_e' = B u_e^{3/2} − A u_p^{3/2}
/// ```
///
/// and of the single-species atmospheres (`D_p = F`, `D_e = B`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub a: f64,
    pub b: f64,
    pub e: f64,
    pub f: f64,
}

impl CoefficientSet {
    /// Atmosphere coefficient for the surviving species.
    pub fn atmosphere(&self, survivor: Species) -> f64 {
        match survivor {
            Species::Electron => self.b,
            Species::Proton => self.f,
        }
    }

    pub fn d_e(&self) -> f64 {
        self.b
    }

    pub fn d_p(&self) -> f64 {
        self.f
    }
}

pub fn derive_coefficients(consts: &ConstantSet) -> Result<CoefficientSet> {
    consts.validate()?;
    let q2 = consts.q * consts.q;
    let g = consts.g;
    let (m_e, m_p) = (consts.m_e, consts.m_p);
    let pre_e = 12.0 * PI / (5.0 * consts.k_e());
    let pre_p = 12.0 * PI / (5.0 * consts.k_p());
    let coeffs = CoefficientSet {
        a: pre_e * (q2 + g * m_p * m_e),
        b: pre_e * (q2 - g * m_e * m_e),
        e: pre_p * (q2 + g * m_p * m_e),
        f: pre_p * (q2 - g * m_p * m_p),
    };
    let CoefficientSet { a, b, e, f } = coeffs;
    if !(a > 0.0 && b > 0.0 && e > 0.0 && f > 0.0) {
        return Err(Error::InadmissibleConstants(format!(
            "coefficients must be positive: A = {a}, B = {b}, E = {e}, F = {f}"
        )));
    }
    // Equalities only at G = 0.
    if e < f || a < b || e * a < b * f {
        return Err(Error::InadmissibleConstants(format!(
            "coefficient ordering violated: A = {a}, B = {b}, E = {e}, F = {f}"
        )));
    }
    Ok(coeffs)
}

/// Closed-form windows on `N_e/N_p` and on the central ratio `α/β = u_p(0)/u_e(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityWindows {
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    pub central_lo: f64,
    pub central_hi: f64,
}

impl AdmissibilityWindows {
    /// Open window on `u_e(0)` for a fixed proton centre `u_p(0) = alpha`.
    pub fn beta_range(&self, alpha: f64) -> (f64, f64) {
        (alpha / self.central_hi, alpha / self.central_lo)
    }
}

pub fn ratio_window(consts: &ConstantSet) -> Result<AdmissibilityWindows> {
    let coeffs = derive_coefficients(consts)?;
    let q2 = consts.q * consts.q;
    let g = consts.g;
    let (m_e, m_p) = (consts.m_e, consts.m_p);
    Ok(AdmissibilityWindows {
        ratio_lo: (1.0 - g * m_p * m_p / q2) / (1.0 + g * m_e * m_p / q2),
        ratio_hi: (1.0 + g * m_e * m_p / q2) / (1.0 - g * m_e * m_e / q2),
        central_lo: (coeffs.b / coeffs.a).powf(2.0 / 3.0),
        central_hi: (coeffs.e / coeffs.f).powf(2.0 / 3.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RatioCheck {
    Admissible,
    Boundary,
    Inadmissible,
}

/// Default relative tolerance for [`check_ratio`] endpoint matching.
pub const RATIO_BOUNDARY_TOL: f64 = 1e-9;

pub fn check_ratio(n_e: f64, n_p: f64, windows: &AdmissibilityWindows, rel_tol: f64) -> RatioCheck {
    let ratio = n_e / n_p;
    let near = |edge: f64| (ratio - edge).abs() <= rel_tol * edge;
    if near(windows.ratio_lo) || near(windows.ratio_hi) {
        RatioCheck::Boundary
    } else if ratio > windows.ratio_lo && ratio < windows.ratio_hi {
        RatioCheck::Admissible
    } else {
        RatioCheck::Inadmissible
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn desk_h_reproduces_pinned_kinetic_prefactors() {
        let c = ConstantSet::desk();
        assert!(close(c.kinetic_from_h(c.m_e), 1.0, 1e-14));
        assert!(close(c.kinetic_from_h(c.m_p), 0.5, 1e-14));
    }

    #[test]
    fn desk_coefficients_match_closed_forms() {
        let co = derive_coefficients(&ConstantSet::desk()).unwrap();
        let k = 12.0 * PI;
        assert!(close(co.f, k / 2.5 * 0.8, 1e-14));
        assert!(close(co.b, k / 5.0 * 0.95, 1e-14));
        assert!(close(co.e, k / 2.5 * 1.1, 1e-14));
        assert!(close(co.a, k / 5.0 * 1.1, 1e-14));
        assert!(co.e * co.a > co.b * co.f);
        assert!(co.f < co.e && co.b < co.a);
    }

    #[test]
    fn zero_gravity_symmetric_prefactors_collapse_coefficients() {
        let c = ConstantSet { g: 0.0, k_e: Some(1.0), k_p: Some(1.0), ..ConstantSet::desk() };
        let co = derive_coefficients(&c).unwrap();
        assert_eq!(co.a, co.b);
        assert_eq!(co.e, co.f);
        assert_eq!(co.a, co.e);
    }

    #[test]
    fn strong_gravity_is_rejected() {
        let c = ConstantSet { g: 0.3, ..ConstantSet::desk() };
        assert!(matches!(derive_coefficients(&c), Err(Error::InadmissibleConstants(_))));
    }

    #[test]
    fn desk_windows() {
        let w = ratio_window(&ConstantSet::desk()).unwrap();
        assert!(close(w.ratio_lo, 0.8 / 1.1, 1e-14));
        assert!(close(w.ratio_hi, 1.1 / 0.95, 1e-14));
        assert!(close(w.central_lo, (0.95f64 / 1.1).powf(2.0 / 3.0), 1e-14));
        assert!(close(w.central_hi, (1.1f64 / 0.8).powf(2.0 / 3.0), 1e-14));
        assert!((w.central_lo - 0.9069).abs() < 1e-4);
        assert!((w.central_hi - 1.2365).abs() < 1e-4);
    }

    #[test]
    fn zero_gravity_window_is_a_point() {
        let w = ratio_window(&ConstantSet::desk_zero_gravity()).unwrap();
        assert_eq!(w.ratio_lo, 1.0);
        assert_eq!(w.ratio_hi, 1.0);
    }

    #[test]
    fn ratio_classification() {
        let w = ratio_window(&ConstantSet::desk()).unwrap();
        assert_eq!(check_ratio(3.0, 3.0, &w, RATIO_BOUNDARY_TOL), RatioCheck::Admissible);
        assert_eq!(check_ratio(w.ratio_hi, 1.0, &w, RATIO_BOUNDARY_TOL), RatioCheck::Boundary);
        assert_eq!(check_ratio(w.ratio_lo * 7.0, 7.0, &w, RATIO_BOUNDARY_TOL), RatioCheck::Boundary);
        assert_eq!(check_ratio(2.0, 1.0, &w, RATIO_BOUNDARY_TOL), RatioCheck::Inadmissible);
        assert_eq!(check_ratio(0.5, 1.0, &w, RATIO_BOUNDARY_TOL), RatioCheck::Inadmissible);
    }

    #[test]
    fn constants_json_round_trip() {
        let text = r#"{"h": 3.0, "c": 10.0, "G": 0.05, "q": 1.0, "m_e": 1.0, "m_p": 2.0}"#;
        let c = ConstantSet::from_json(text).unwrap();
        assert_eq!(c.k_e, None);
        assert!(close(c.k_e(), 2.0 * c.k_p(), 1e-14));
        let back: ConstantSet = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn orderings_hold_for_valid_sets(
                g in 1e-4f64..0.2, m_e in 0.2f64..1.0, ratio in 1.1f64..2.2,
                k_e in 0.3f64..3.0, k_p in 0.3f64..3.0,
            ) {
                let c = ConstantSet { g, m_e, m_p: m_e * ratio, k_e: Some(k_e), k_p: Some(k_p), ..ConstantSet::desk() };
                prop_assume!(c.validate().is_ok());
                let co = derive_coefficients(&c).unwrap();
                prop_assert!(co.f < co.e && co.b < co.a);
                prop_assert!(co.e * co.a - co.b * co.f > 0.0);
                let w = ratio_window(&c).unwrap();
                prop_assert!(w.ratio_lo < 1.0 && 1.0 < w.ratio_hi);
                // k_e and k_p cancel inside each central bound, so 1 is always interior.
                prop_assert!(w.central_lo < 1.0 && 1.0 < w.central_hi);
            }

            #[test]
            fn window_shrinks_monotonically_with_gravity(g in 1e-3f64..0.2, shrink in 0.1f64..0.9) {
                let wide = ratio_window(&ConstantSet { g, ..ConstantSet::desk() }).unwrap();
                let narrow = ratio_window(&ConstantSet { g: g * shrink, ..ConstantSet::desk() }).unwrap();
                prop_assert!(narrow.ratio_hi - narrow.ratio_lo < wide.ratio_hi - wide.ratio_lo);
            }
        }
    }
}
