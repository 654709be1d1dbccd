use thiserror::Error;

use crate::constants::Species;

/// Errors raised by the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("inadmissible constants: {0}")]
    InadmissibleConstants(String),

    #[error("central densities must be positive (alpha = {alpha}, beta = {beta})")]
    NonPositiveInput { alpha: f64, beta: f64 },

    #[error("central densities (alpha = {alpha}, beta = {beta}) rejected: {reason}")]
    Inadmissible { alpha: f64, beta: f64, reason: String },

    #[error("{species} atmosphere is not integrable (hand-off slope {slope:e} above the critical slope)")]
    NonIntegrable { species: Species, slope: f64 },

    #[error("particle ratio N_e/N_p = {ratio} lies outside the admissible window [{lo}, {hi}]")]
    InadmissibleRatio { ratio: f64, lo: f64, hi: f64 },

    #[error("count ratio {target} was not bracketed by the beta sweep at alpha = 1")]
    RatioNotBracketed { target: f64 },

    #[error("numerical blow-up at r = {radius:e}: {detail}")]
    NumericalBlowup { radius: f64, detail: String },

    #[error("invalid atmosphere hand-off: {0}")]
    InvalidHandoff(String),

    #[error("no compact/unbounded bracket for the critical slope: {0}")]
    BracketFailure(String),

    #[error("no root of H_d in the bracket [0, E/F] (d = {d})")]
    NoRootInBracket { d: f64 },

    #[error("r^-4 envelope fit failed: {0}")]
    EnvelopeFitFailure(String),

    #[error("quadrature did not converge (relative change {change:e})")]
    QuadratureNotConverged { change: f64 },

    #[error("root bracketing failed: {0}")]
    RootNotBracketed(String),

    #[error("malformed profile: {0}")]
    MalformedProfile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
