//! Two-fluid Thomas-Fermi star solver.
//!
//! Ground-state density profiles of a self-gravitating, charged
//! electron/proton fluid: bulk and atmosphere shooting, special proportional
//! solutions, count inversion through the scaling structure, energy
//! evaluation, and the special-relativistic variant.

pub mod atmosphere;
pub mod bulk;
pub mod constants;
pub mod energy;
pub mod error;
pub mod ode;
pub mod profile;
pub mod quadrature;
pub mod relativity;
pub mod roots;
pub mod shoot;
pub mod special;

pub use constants::{
    check_ratio, derive_coefficients, ratio_window, AdmissibilityWindows, CoefficientSet, ConstantSet, RatioCheck,
    Species,
};
pub use error::{Error, Result};
pub use profile::{Envelope, PowerTail, ProfileSample, RadialProfile};
