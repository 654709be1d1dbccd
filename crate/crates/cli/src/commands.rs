use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{Context as _, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tfstar::atmosphere::{integrate_atmosphere, AtmosphereKind, AtmosphereOptions};
use tfstar::energy::{dilation_scan, el_residual, evaluate_energy};
use tfstar::ode::Tolerances;
use tfstar::relativity::{
    ball_scan, chandra_single_fluid, critical_mass_scan, default_ball_grid, integrate_rel_profile, rel_kinetic_energy,
    BallEnergyReport, RelOptions,
};
use tfstar::shoot::{invert_counts, regime_sweep, solve_profile, window_endpoints, SolveOptions};
use tfstar::special::special_profile;
use tfstar::{derive_coefficients, ratio_window, ConstantSet, Error, RadialProfile, Species};

use crate::args::Command;
use crate::output::{num, RunDir};
use crate::plot::{density_chart, density_rows, svg_chart, Series, DENSITY_HEADER};

pub struct Report {
    pub line: String,
    pub summary: Value,
}

pub struct Context<'a> {
    pub consts: &'a ConstantSet,
    pub tol: Option<f64>,
    pub seed: u64,
}

impl Context<'_> {
    fn solve_options(&self) -> SolveOptions {
        self.tol.map(SolveOptions::with_rtol).unwrap_or_default()
    }

    fn tolerances(&self) -> Tolerances {
        self.tol.map(Tolerances::with_rtol).unwrap_or_default()
    }
}

fn profile_outputs(run: &mut RunDir, title: &str, profile: &RadialProfile) -> Result<()> {
    run.profile("profile.csv", "profile", profile)?;
    run.table("density.csv", "plot-data", &DENSITY_HEADER, &density_rows(profile))?;
    run.text("density.svg", "plot", &density_chart(title, profile))?;
    Ok(())
}

fn finish(run: &mut RunDir, line: String, summary: Value) -> Result<Report> {
    run.json("summary.json", "summary", &summary)?;
    Ok(Report { line, summary })
}

pub fn execute(cmd: &Command, ctx: &Context, run: &mut RunDir) -> Result<Report> {
    let consts = ctx.consts;
    match *cmd {
        Command::Solve { alpha, beta } => {
            let sol = solve_profile(alpha, beta, consts, &ctx.solve_options())?;
            profile_outputs(run, &format!("solve alpha={alpha} beta={beta}"), &sol.profile)?;
            let line = format!(
                "solve: {:?}/{:?}, N_e = {:.10e}, N_p = {:.10e}, N_e/N_p = {:.10}",
                sol.regime, sol.closure, sol.counts.n_e, sol.counts.n_p, sol.counts.ratio
            );
            let summary = json!({
                "alpha": sol.alpha, "beta": sol.beta, "regime": sol.regime, "closure": sol.closure,
                "bulk_radius": sol.bulk_radius, "outer_radius": sol.outer_radius,
                "turning_radius": sol.turning_radius, "handoff_slope": sol.handoff_slope,
                "critical_slope": sol.critical_slope, "tail_count": sol.tail_count, "counts": sol.counts,
            });
            finish(run, line, summary)
        }
        Command::Invert { ne, np } => {
            let inv = invert_counts(ne, np, consts, &ctx.solve_options())?;
            profile_outputs(run, &format!("invert N_e={ne} N_p={np}"), &inv.solution.profile)?;
            let line = format!(
                "invert: alpha = {:.12e}, beta = {:.12e} ({:?}), achieved N_e = {:.10e}, N_p = {:.10e}",
                inv.alpha, inv.beta, inv.path, inv.achieved.n_e, inv.achieved.n_p
            );
            let summary = json!({
                "alpha": inv.alpha, "beta": inv.beta, "beta_canonical": inv.beta_canonical,
                "target": inv.target, "achieved": inv.achieved, "boundary": inv.boundary, "path": inv.path,
                "regime": inv.solution.regime, "closure": inv.solution.closure,
            });
            finish(run, line, summary)
        }
        Command::Sweep { alpha, beta_min, beta_max, points, endpoints } => {
            sweep(ctx, run, alpha, beta_min, beta_max, points, endpoints)
        }
        Command::Special { alpha } => {
            let coeffs = derive_coefficients(consts)?;
            let (sol, profile) = special_profile(alpha, &coeffs)?;
            profile_outputs(run, &format!("special alpha={alpha}"), &profile)?;
            let line = format!("special: k_d = {:.12}, beta = {:.12}, radius = {:.12}", sol.k_d, sol.beta, sol.radius);
            finish(run, line, serde_json::to_value(sol)?)
        }
        Command::Atmosphere { r0, a, b, d, species } => {
            let species: Species = species.into();
            let d = match d {
                Some(d) => d,
                None => derive_coefficients(consts)?.atmosphere(species),
            };
            let opts = AtmosphereOptions { tol: ctx.tolerances(), ..Default::default() };
            let out = integrate_atmosphere(r0, a, b, d, &opts)?;
            let rows: Vec<Vec<String>> = out.samples.iter().map(|s| vec![num(s.r), num(s.u), num(s.du)]).collect();
            run.table("atmosphere.csv", "atmosphere", &["r", "u", "du"], &rows)?;
            let pts = out.samples.iter().map(|s| (s.r, s.u)).collect();
            let svg = svg_chart(
                "atmosphere",
                "r",
                "u",
                &[Series { label: "u", color: "#2ca02c", points: pts, scatter: false }],
            );
            run.text("atmosphere.svg", "plot", &svg)?;
            let line = match out.kind {
                AtmosphereKind::Compact { r1 } => format!("atmosphere: Compact, R1 = {r1:.12e}"),
                AtmosphereKind::CriticalDecay => {
                    format!("atmosphere: CriticalDecay, envelope {:?}", out.envelope.map(|e| (e.constant, e.scale)))
                }
                AtmosphereKind::Unbounded { radius, reason } => {
                    format!("atmosphere: Unbounded ({reason:?}) at r = {radius:.6e}")
                }
            };
            let summary = json!({
                "r0": r0, "a": a, "b": b, "d": d, "kind": out.kind, "critical_slope": out.critical_slope,
                "envelope": out.envelope, "outer_radius": out.outer_radius(),
            });
            finish(run, line, summary)
        }
        Command::Energy { ref profile, ref dilate, control } => energy(ctx, run, profile, dilate, control),
        Command::RelSolve { rho_p, rho_e, k_lions } => {
            let opts = RelOptions { tol: ctx.tolerances(), k_lions, ..Default::default() };
            let sol = integrate_rel_profile(rho_p, rho_e, consts, &opts)?;
            profile_outputs(run, &format!("relativistic rho_p={rho_p} rho_e={rho_e}"), &sol.profile)?;
            let rows: Vec<Vec<String>> =
                sol.states.iter().map(|s| vec![num(s.r), num(s.y_e), num(s.y_p), num(s.dy_e), num(s.dy_p)]).collect();
            run.table("relativity_factors.csv", "rel-state", &["r", "y_e", "y_p", "dy_e", "dy_p"], &rows)?;
            let kin_e = rel_kinetic_energy(&sol.profile, Species::Electron, consts)?;
            let kin_p = rel_kinetic_energy(&sol.profile, Species::Proton, consts)?;
            let line = format!(
                "rel-solve: survivor {:?}, R = {:.10e}, N_e = {:.10e}, N_p = {:.10e}",
                sol.survivor, sol.outer_radius, sol.counts.n_e, sol.counts.n_p
            );
            let summary = json!({
                "rho_p0": rho_p, "rho_e0": rho_e, "bulk_radius": sol.bulk_radius, "outer_radius": sol.outer_radius,
                "survivor": sol.survivor, "counts": sol.counts, "kinetic_e": kin_e, "kinetic_p": kin_p,
                "existence_margin": sol.existence_margin,
            });
            finish(run, line, summary)
        }
        Command::Chandra { y0 } => {
            let sol = chandra_single_fluid(y0, &ctx.tolerances())?;
            let rows: Vec<Vec<String>> =
                (0..sol.radii.len()).map(|i| vec![num(sol.radii[i]), num(sol.y[i]), num(sol.dy[i])]).collect();
            run.table("chandra.csv", "chandra", &["r", "y", "dy"], &rows)?;
            let pts = sol.radii.iter().copied().zip(sol.y.iter().copied()).collect();
            let svg = svg_chart(
                "chandrasekhar",
                "r",
                "y",
                &[Series { label: "y", color: "#9467bd", points: pts, scatter: false }],
            );
            run.text("chandra.svg", "plot", &svg)?;
            let line = format!("chandra: y0 = {y0}, first zero = {:.12}", sol.first_zero);
            finish(run, line, json!({ "y0": y0, "first_zero": sol.first_zero, "samples": sol.radii.len() }))
        }
        Command::CriticalMass { ratio } => {
            let w = ratio_window(consts)?;
            let inverse = 1.0 / ratio;
            if !(inverse >= w.ratio_lo && inverse <= w.ratio_hi) {
                return Err(Error::InadmissibleRatio { ratio: inverse, lo: w.ratio_lo, hi: w.ratio_hi }.into());
            }
            let rep = critical_mass_scan(ratio, consts, None)?;
            ball_outputs(run, "ball_below.csv", &rep.below)?;
            ball_outputs(run, "ball_above.csv", &rep.above)?;
            let line = format!(
                "critical-mass: N_e* = {:.10e} at N_p/N_e = {ratio}; {:?} below, {:?} above",
                rep.threshold_n_e, rep.below.verdict, rep.above.verdict
            );
            let summary = json!({
                "ratio": ratio, "threshold_n_e": rep.threshold_n_e,
                "below": ball_summary(&rep.below), "above": ball_summary(&rep.above),
            });
            finish(run, line, summary)
        }
        Command::BallScan { ne, np, r_min, r_max, points } => {
            let grid = match (r_min, r_max) {
                (None, None) => default_ball_grid(ne, consts),
                (lo, hi) => {
                    let def = default_ball_grid(ne, consts);
                    let lo = lo.unwrap_or(*def.last().expect("grid is non-empty"));
                    let hi = hi.unwrap_or(def[0]);
                    anyhow::ensure!(
                        lo > 0.0 && hi > lo && points >= 2,
                        "need 0 < r_min < r_max and at least two points"
                    );
                    (0..points).map(|i| hi * (lo / hi).powf(i as f64 / (points - 1) as f64)).collect()
                }
            };
            let rep = ball_scan(ne, np, &grid, consts);
            ball_outputs(run, "ball.csv", &rep)?;
            let svg = svg_chart(
                "uniform ball",
                "log10 R",
                "R E(R)",
                &[Series {
                    label: "R E",
                    color: "#8c564b",
                    points: rep.radii.iter().zip(&rep.energies).map(|(r, e)| (r.log10(), r * e)).collect(),
                    scatter: false,
                }],
            )
            .to_string();
            run.text("ball.svg", "plot", &svg)?;
            let line = format!("ball-scan: {:?}, fitted 1/R slope = {:.10e}", rep.verdict, rep.fitted_slope);
            finish(run, line, ball_summary(&rep))
        }
    }
}

fn ball_outputs(run: &mut RunDir, name: &str, rep: &BallEnergyReport) -> Result<()> {
    let rows: Vec<Vec<String>> = rep.radii.iter().zip(&rep.energies).map(|(r, e)| vec![num(*r), num(*e)]).collect();
    run.table(name, "ball-energy", &["R", "E"], &rows)
}

fn ball_summary(rep: &BallEnergyReport) -> Value {
    json!({
        "n_e": rep.n_e, "n_p": rep.n_p, "verdict": rep.verdict, "fitted_slope": rep.fitted_slope,
        "exact_slope": rep.exact_slope, "crossover_radius": rep.crossover_radius, "min_energy": rep.min_energy,
    })
}

fn sweep(
    ctx: &Context,
    run: &mut RunDir,
    alpha: f64,
    beta_min: Option<f64>,
    beta_max: Option<f64>,
    points: usize,
    endpoints: bool,
) -> Result<Report> {
    anyhow::ensure!(points >= 2, "a sweep needs at least two points");
    let opts = ctx.solve_options();
    let (lo, hi) = match (beta_min, beta_max) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => {
            // Pad the compact window by half its width on each side.
            let ends = window_endpoints(alpha, &derive_coefficients(ctx.consts)?, &opts)?;
            let w = ends.upper.beta - ends.lower.beta;
            (beta_min.unwrap_or(ends.lower.beta - 0.5 * w), beta_max.unwrap_or(ends.upper.beta + 0.5 * w))
        }
    };
    anyhow::ensure!(hi > lo, "beta_max must exceed beta_min");
    let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let rep = regime_sweep(alpha, &grid, ctx.consts, &opts, endpoints)?;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let code = |row: &tfstar::shoot::SweepRow| match (row.regime, row.failure.as_deref()) {
        (Some(r), _) => format!("{r:?}"),
        (None, Some(f)) => f.to_string(),
        _ => String::new(),
    };
    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.beta),
                code(r),
                r.closure.map(|c| format!("{c:?}")).unwrap_or_default(),
                opt(r.counts.map(|c| c.n_e)),
                opt(r.counts.map(|c| c.n_p)),
                opt(r.counts.map(|c| c.ratio)),
                opt(r.bulk_radius),
                opt(r.outer_radius),
            ]
        })
        .collect();
    run.table(
        "sweep.csv",
        "sweep",
        &["beta", "regime", "closure", "n_e", "n_p", "ratio", "bulk_radius", "outer_radius"],
        &rows,
    )?;
    let labels = ["Inadmissible", "NonIntegrable", "ProtonAtmosphere", "Special", "ElectronAtmosphere"];
    let colors = ["#7f7f7f", "#ff7f0e", "#d62728", "#000000", "#1f77b4"];
    let series: Vec<Series> = labels
        .iter()
        .zip(colors)
        .enumerate()
        .map(|(k, (label, color))| Series {
            label,
            color,
            points: rep.rows.iter().filter(|r| code(r) == *label).map(|r| (r.beta, k as f64)).collect(),
            scatter: true,
        })
        .collect();
    run.text("sweep_regime.svg", "plot", &svg_chart("regime along beta", "beta", "regime", &series))?;
    let ratio_pts = rep.rows.iter().filter_map(|r| r.counts.map(|c| (r.beta, c.ratio))).collect();
    let ratio_series = [Series { label: "N_e/N_p", color: "#1f77b4", points: ratio_pts, scatter: true }];
    run.text("sweep_ratio.svg", "plot", &svg_chart("count ratio along beta", "beta", "N_e/N_p", &ratio_series))?;
    let compact = rep.rows.iter().filter(|r| r.counts.is_some()).count();
    let line = format!(
        "sweep: {} points, {compact} compact, order {}, ratio monotone: {}",
        rep.rows.len(),
        rep.regime_order.join(" > "),
        rep.ratio_monotone
    );
    let ends = rep.endpoints.as_ref().map(|e| {
        json!({
            "beta_special": e.beta_special,
            "lower": { "beta": e.lower.beta, "ratio": e.lower.solution.counts.ratio },
            "upper": { "beta": e.upper.beta, "ratio": e.upper.solution.counts.ratio },
        })
    });
    let summary = json!({
        "alpha": alpha, "beta_min": lo, "beta_max": hi, "points": points, "regime_order": rep.regime_order,
        "ratio_monotone": rep.ratio_monotone, "endpoints": ends,
    });
    finish(run, line, summary)
}

fn energy(ctx: &Context, run: &mut RunDir, path: &Path, dilate: &[f64], control: Option<f64>) -> Result<Report> {
    let file = File::open(path).with_context(|| format!("cannot open profile {}", path.display()))?;
    let mut profile = RadialProfile::read_csv(BufReader::new(file))?;
    if let Some(amp) = control {
        // Multiplicative noise on the interior samples.
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        for s in profile.samples.iter_mut() {
            let (fe, fp) = (1.0 + amp * rng.gen_range(-1.0..1.0), 1.0 + amp * rng.gen_range(-1.0..1.0));
            s.u_e *= fe;
            s.u_p *= fp;
            s.du_e *= fe;
            s.du_p *= fp;
        }
    }
    let e = evaluate_energy(&profile, ctx.consts)?;
    let el = el_residual(&profile, ctx.consts);
    if !dilate.is_empty() {
        let scan = dilation_scan(&profile, dilate, ctx.consts)?;
        let rows: Vec<Vec<String>> =
            scan.iter().map(|(l, b)| vec![num(*l), num(b.kinetic()), num(b.potential()), num(b.total)]).collect();
        run.table("dilation.csv", "dilation", &["lambda", "kinetic", "potential", "total"], &rows)?;
    }
    let line = format!(
        "energy: total = {:.12e} (kinetic {:.6e}, electric {:.6e}, gravitational {:.6e}); multiplier rel std e {:.2e}, p {:.2e}",
        e.total,
        e.kinetic(),
        e.electric,
        e.gravitational,
        el.rel_std_e,
        el.rel_std_p
    );
    let summary = json!({
        "profile": path, "control_amplitude": control, "energy": e,
        "multipliers": {
            "mean_e": el.mean_e, "rel_std_e": el.rel_std_e, "mean_p": el.mean_p, "rel_std_p": el.rel_std_p,
        },
    });
    finish(run, line, summary)
}
