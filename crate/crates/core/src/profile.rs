//! Sampled radial profiles of the transformed densities `u_f = ρ_f^{2/3}`.
//!
//! Between samples each `u_f` is a cubic Hermite interpolant built from the
//! stored value and slope; all radial quadratures evaluate `ρ_f = u_f^{3/2}`
//! on that interpolant. A profile whose outer species decays like `r⁻⁴`
//! carries a [`PowerTail`] describing the density beyond the last sample.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::constants::Species;
use crate::error::{Error, Result};
use crate::quadrature::{cumulative, tail_integral, GaussRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub r: f64,
    pub u_e: f64,
    pub u_p: f64,
    pub du_e: f64,
    pub du_p: f64,
}

impl ProfileSample {
    pub fn u(&self, species: Species) -> f64 {
        match species {
            Species::Electron => self.u_e,
            Species::Proton => self.u_p,
        }
    }

    pub fn du(&self, species: Species) -> f64 {
        match species {
            Species::Electron => self.du_e,
            Species::Proton => self.du_p,
        }
    }

    pub fn rho(&self, species: Species) -> f64 {
        pow32(self.u(species))
    }
}

/// `u^{3/2}` with negative `u` clamped to zero.
#[inline]
pub fn pow32(u: f64) -> f64 {
    if u > 0.0 {
        u * u.sqrt()
    } else {
        0.0
    }
}

/// Rate `σ` at which critical solutions approach the `r⁻⁴` envelope.
pub fn approach_exponent() -> f64 {
    (73f64.sqrt() - 7.0) / 2.0
}

const SHAPE_TERMS: usize = 80;

/// Range of `y` on which the truncated shape series is accurate to `1e-10`;
/// the series has radius of convergence near 3.6.
pub const SHAPE_DOMAIN: (f64, f64) = (-2.5, 2.5);

/// Taylor coefficients of `W(y)`: with `x = r^{-σ}` every decaying solution of
/// `W'' = 7W' − 12W + 12W^{3/2}` (in `t = ln r`) is `W = Σ a_j (λx)^j`, with
/// `a_0 = a_1 = 1` and the rest fixed by the recursion below.
fn shape_coefficients() -> &'static [f64; SHAPE_TERMS] {
    static COEFFS: OnceLock<[f64; SHAPE_TERMS]> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let s = approach_exponent();
        let mut a = [0.0; SHAPE_TERMS];
        // p holds the series of W^{3/2}.
        let mut p = [0.0; SHAPE_TERMS];
        a[0] = 1.0;
        a[1] = 1.0;
        p[0] = 1.0;
        p[1] = 1.5;
        for n in 2..SHAPE_TERMS {
            let nf = n as f64;
            let rest: f64 = (1..n).map(|k| (2.5 * k as f64 - nf) * a[k] * p[n - k]).sum::<f64>() / nf;
            a[n] = 12.0 * rest / (s * s * nf * nf + 7.0 * s * nf - 6.0);
            p[n] = 1.5 * a[n] + rest;
        }
        a
    })
}

/// Universal shape `W(y)` of critical solutions, `u r⁴ = c·W(λ r^{-σ})`.
pub fn critical_shape(y: f64) -> f64 {
    shape_coefficients().iter().rev().fold(0.0, |acc, c| acc * y + c)
}

pub fn critical_shape_slope(y: f64) -> f64 {
    let a = shape_coefficients();
    (1..SHAPE_TERMS).rev().fold(0.0, |acc, j| acc * y + j as f64 * a[j])
}

/// Large-radius envelope `u(r) r⁴ = c·W(λ r^{-σ})` beyond `cutoff`.
///
/// `c` is the limiting value of `u r⁴`; `λ` sets where along the universal
/// critical shape the profile sits (`λ = 0` is the pure `c r⁻⁴` law).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub constant: f64,
    pub scale: f64,
    pub cutoff: f64,
}

impl Envelope {
    /// Pure `c r⁻⁴` envelope.
    pub fn pure(c: f64, cutoff: f64) -> Self {
        Envelope { constant: c, scale: 0.0, cutoff }
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn shape_argument(&self, r: f64) -> f64 {
        self.scale * r.powf(-approach_exponent())
    }

    pub fn value(&self, r: f64) -> f64 {
        if self.scale == 0.0 {
            return self.constant;
        }
        self.constant * critical_shape(self.shape_argument(r))
    }

    pub fn u(&self, r: f64) -> f64 {
        self.value(r) / r.powi(4)
    }

    pub fn rho(&self, r: f64) -> f64 {
        pow32(self.u(r))
    }

    /// `4π ∫_cutoff^∞ r² ρ dr`.
    pub fn count(&self) -> f64 {
        self.integrate(|_, rho| rho)
    }

    /// `4π ∫_cutoff^∞ r² f(r, ρ(r)) dr` for an arbitrary local integrand.
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let rule = GaussRule::new(24);
        4.0 * PI * tail_integral(self.cutoff, |r| r * r * f(r, self.rho(r)), &rule)
    }

    /// Envelope of the profile `r → r_scale·r`, `u → u_scale·u`.
    pub fn rescaled(&self, r_scale: f64, u_scale: f64) -> Envelope {
        Envelope {
            constant: self.constant * u_scale * r_scale.powi(4),
            scale: self.scale * r_scale.powf(approach_exponent()),
            cutoff: self.cutoff * r_scale,
        }
    }
}

/// Density of one species beyond the last sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTail {
    pub species: Species,
    pub envelope: Envelope,
}

impl PowerTail {
    pub fn cutoff(&self) -> f64 {
        self.envelope.cutoff
    }

    pub fn u(&self, r: f64) -> f64 {
        self.envelope.u(r)
    }

    pub fn count(&self) -> f64 {
        self.envelope.count()
    }

    fn rescaled(&self, r_scale: f64, u_scale: f64) -> PowerTail {
        PowerTail { species: self.species, envelope: self.envelope.rescaled(r_scale, u_scale) }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RadialProfile {
    pub samples: Vec<ProfileSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<PowerTail>,
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
}

impl RadialProfile {
    pub fn new(samples: Vec<ProfileSample>) -> Self {
        RadialProfile { samples, tail: None }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.r).collect()
    }

    pub fn outer_radius(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.r)
    }

    /// Interpolated `u_f` inside interval `i`.
    pub fn u_in(&self, species: Species, i: usize, r: f64) -> f64 {
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        hermite(a.r, b.r, a.u(species), b.u(species), a.du(species), b.du(species), r)
    }

    pub fn rho_in(&self, species: Species, i: usize, r: f64) -> f64 {
        pow32(self.u_in(species, i, r))
    }

    /// Interpolated `u_f` at any radius inside the sampled range; the tail
    /// (or zero) beyond it.
    pub fn u_at(&self, species: Species, r: f64) -> f64 {
        let n = self.samples.len();
        if n == 0 {
            return 0.0;
        }
        if r >= self.outer_radius() {
            return match self.tail {
                Some(t) if t.species == species && r > t.cutoff() => t.u(r),
                _ if r == self.outer_radius() => self.samples[n - 1].u(species),
                _ => 0.0,
            };
        }
        let i = self.samples.partition_point(|s| s.r <= r).saturating_sub(1).min(n - 2);
        self.u_in(species, i, r)
    }

    /// Cumulative `4π ∫_0^{r_i} r² g(r, ρ_e, ρ_p) dr` at every sample.
    pub fn cumulative_integral<G>(&self, g: G, rule: &GaussRule, splits: usize) -> Vec<f64>
    where
        G: Fn(f64, f64, f64) -> f64,
    {
        let nodes = self.radii();
        cumulative(
            &nodes,
            |i, r| 4.0 * PI * r * r * g(r, self.rho_in(Species::Electron, i, r), self.rho_in(Species::Proton, i, r)),
            rule,
            splits,
        )
    }

    /// `4π ∫ r² ρ_f dr` over the sampled range plus the tail.
    pub fn count(&self, species: Species) -> f64 {
        let rule = GaussRule::new(5);
        self.count_with(species, &rule, 1)
    }

    fn count_with(&self, species: Species, rule: &GaussRule, splits: usize) -> f64 {
        let inner = *self
            .cumulative_integral(
                |_, re, rp| match species {
                    Species::Electron => re,
                    Species::Proton => rp,
                },
                rule,
                splits,
            )
            .last()
            .unwrap_or(&0.0);
        inner + self.tail.filter(|t| t.species == species).map_or(0.0, |t| t.count())
    }

    /// Count with a panel-halving convergence check.
    pub fn count_checked(&self, species: Species, rel_tol: f64) -> Result<f64> {
        let rule = GaussRule::new(5);
        let coarse = self.count_with(species, &rule, 1);
        let fine = self.count_with(species, &rule, 2);
        let change = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
        if change > rel_tol {
            return Err(Error::QuadratureNotConverged { change });
        }
        Ok(fine)
    }

    /// Maps `r → r_scale·r` and `u → u_scale·u` (slopes follow).
    pub fn rescaled(&self, r_scale: f64, u_scale: f64) -> RadialProfile {
        let d_scale = u_scale / r_scale;
        RadialProfile {
            samples: self
                .samples
                .iter()
                .map(|s| ProfileSample {
                    r: s.r * r_scale,
                    u_e: s.u_e * u_scale,
                    u_p: s.u_p * u_scale,
                    du_e: s.du_e * d_scale,
                    du_p: s.du_p * d_scale,
                })
                .collect(),
            tail: self.tail.map(|t| t.rescaled(r_scale, u_scale)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Err(Error::MalformedProfile("need at least two samples".into()));
        }
        for w in self.samples.windows(2) {
            if !(w[1].r >= w[0].r) {
                return Err(Error::MalformedProfile(format!("radii not sorted at r = {}", w[0].r)));
            }
        }
        if self.samples[0].r < 0.0 {
            return Err(Error::MalformedProfile("negative radius".into()));
        }
        if self.samples.iter().any(|s| ![s.r, s.u_e, s.u_p, s.du_e, s.du_p].iter().all(|v| v.is_finite())) {
            return Err(Error::MalformedProfile("non-finite entry".into()));
        }
        Ok(())
    }

    pub const CSV_HEADER: &'static str = "r,u_e,u_p,du_e,du_p,rho_e,rho_p";

    /// Writes the profile as CSV with 17 significant digits per value.
    ///
    /// An analytic tail is kept in a trailing comment line
    /// `# tail,<species>,sigma,cutoff,c0,c1,c2,c3`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for s in &self.samples {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.r,
                s.u_e,
                s.u_p,
                s.du_e,
                s.du_p,
                s.rho(Species::Electron),
                s.rho(Species::Proton)
            )?;
        }
        if let Some(t) = &self.tail {
            let e = &t.envelope;
            let species = match t.species {
                Species::Electron => "electron",
                Species::Proton => "proton",
            };
            writeln!(out, "# tail,{species},{:.16e},{:.16e},{:.16e}", e.constant, e.scale, e.cutoff)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<RadialProfile> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedProfile("empty file".into()))?
            .map_err(|e| Error::MalformedProfile(e.to_string()))?;
        let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
        let idx = |name: &str| {
            cols.iter()
                .position(|c| *c == name)
                .ok_or_else(|| Error::MalformedProfile(format!("missing column {name}")))
        };
        let (ir, ie, ip, ide, idp) = (idx("r")?, idx("u_e")?, idx("u_p")?, idx("du_e")?, idx("du_p")?);
        let mut samples = Vec::new();
        let mut tail = None;
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::MalformedProfile(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(meta) = line.trim().strip_prefix('#') {
                tail = parse_tail(meta.trim()).map_err(|e| Error::MalformedProfile(format!("line {}: {e}", n + 2)))?;
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::MalformedProfile(format!("line {}: {e}", n + 2)))?;
            if vals.len() != cols.len() {
                return Err(Error::MalformedProfile(format!("line {}: wrong column count", n + 2)));
            }
            samples.push(ProfileSample { r: vals[ir], u_e: vals[ie], u_p: vals[ip], du_e: vals[ide], du_p: vals[idp] });
        }
        let profile = RadialProfile { samples, tail };
        profile.validate()?;
        Ok(profile)
    }
}

/// Parses `tail,<species>,constant,scale,cutoff`; other comments are ignored.
fn parse_tail(meta: &str) -> std::result::Result<Option<PowerTail>, String> {
    let fields: Vec<&str> = meta.split(',').map(str::trim).collect();
    if fields.first() != Some(&"tail") {
        return Ok(None);
    }
    if fields.len() != 5 {
        return Err("tail line needs 5 fields".into());
    }
    let species = match fields[1] {
        "electron" => Species::Electron,
        "proton" => Species::Proton,
        other => return Err(format!("unknown species {other}")),
    };
    let nums: Vec<f64> = fields[2..]
        .iter()
        .map(|v| v.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let envelope = Envelope { constant: nums[0], scale: nums[1], cutoff: nums[2] };
    Ok(Some(PowerTail { species, envelope }))
}
