use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "tfstar", version, about = "Two-fluid Thomas-Fermi star solver")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Constant set as JSON (defaults to desk units).
    #[arg(long, global = true, env = "TFSTAR_CONSTANTS")]
    pub constants: Option<PathBuf>,
    /// Output directory for the manifest and data files.
    #[arg(long, global = true, default_value = "tfstar-out")]
    pub out: PathBuf,
    /// Relative integration tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads for sweeps and scans.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed for randomized controls.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Solve the radial problem from central values u_p(0) = alpha, u_e(0) = beta.
    #[command(allow_negative_numbers = true)]
    Solve {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
    },
    /// Recover central values from particle counts.
    #[command(allow_negative_numbers = true)]
    Invert {
        #[arg(long)]
        ne: f64,
        #[arg(long)]
        np: f64,
    },
    /// Classify a grid of beta values at fixed alpha.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Defaults to a neighbourhood of the compact window.
        #[arg(long)]
        beta_min: Option<f64>,
        #[arg(long)]
        beta_max: Option<f64>,
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// Also locate the window endpoints by bisection.
        #[arg(long)]
        endpoints: bool,
    },
    /// Proportional solution through the Lane-Emden reduction.
    #[command(allow_negative_numbers = true)]
    Special {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Single-species atmosphere from hand-off data (u(R0) = a, u'(R0) = b).
    #[command(allow_negative_numbers = true)]
    Atmosphere {
        #[arg(long)]
        r0: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        /// Atmosphere coefficient; defaults to that of --species.
        #[arg(long)]
        d: Option<f64>,
        #[arg(long, value_enum, default_value_t = SpeciesArg::Electron)]
        species: SpeciesArg,
    },
    /// Energy breakdown and multiplier check of a profile CSV.
    Energy {
        #[arg(long)]
        profile: PathBuf,
        /// Dilation factors for the scaling scan.
        #[arg(long, value_delimiter = ',')]
        dilate: Vec<f64>,
        /// Relative amplitude of a seeded perturbation for a control run.
        #[arg(long)]
        control: Option<f64>,
    },
    /// Relativistic two-fluid profile from central densities.
    #[command(allow_negative_numbers = true)]
    RelSolve {
        #[arg(long)]
        rho_p: f64,
        #[arg(long)]
        rho_e: f64,
        /// Lions constant; reports the existence-bound margin.
        #[arg(long)]
        k_lions: Option<f64>,
    },
    /// Chandrasekhar's single-fluid equation.
    #[command(allow_negative_numbers = true)]
    Chandra {
        #[arg(long)]
        y0: f64,
    },
    /// Threshold electron count for uniform-ball collapse at N_p/N_e = ratio.
    #[command(allow_negative_numbers = true)]
    CriticalMass {
        #[arg(long)]
        ratio: f64,
    },
    /// Uniform-ball energy as a function of radius.
    #[command(allow_negative_numbers = true)]
    BallScan {
        #[arg(long)]
        ne: f64,
        #[arg(long)]
        np: f64,
        #[arg(long)]
        r_min: Option<f64>,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long, default_value_t = 60)]
        points: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeciesArg {
    Electron,
    Proton,
}

impl From<SpeciesArg> for tfstar::Species {
    fn from(s: SpeciesArg) -> Self {
        match s {
            SpeciesArg::Electron => tfstar::Species::Electron,
            SpeciesArg::Proton => tfstar::Species::Proton,
        }
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::Invert { .. } => "invert",
            Command::Sweep { .. } => "sweep",
            Command::Special { .. } => "special",
            Command::Atmosphere { .. } => "atmosphere",
            Command::Energy { .. } => "energy",
            Command::RelSolve { .. } => "rel-solve",
            Command::Chandra { .. } => "chandra",
            Command::CriticalMass { .. } => "critical-mass",
            Command::BallScan { .. } => "ball-scan",
        }
    }
}
