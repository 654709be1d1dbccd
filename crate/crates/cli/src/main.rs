//! `tfstar`: command-line driver for the two-fluid Thomas-Fermi solvers.
//!
//! Every run writes `manifest.json` plus its data files into `--out`.
//! Exit codes: 0 success, 2 rejected input (inadmissible or non-integrable),
//! 1 anything else.

mod args;
mod commands;
mod output;
mod plot;

use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context as _, Result};
use clap::{CommandFactory, Parser};
use serde::Serialize;
use serde_json::Value;
use tfstar::{ConstantSet, Error};

use args::Cli;
use commands::{execute, Context};
use output::{Record, RunDir};

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a Cli,
    constants: Option<&'a ConstantSet>,
    workers: usize,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
    summary: Option<Value>,
    artifacts: &'a [Record],
    wall_clock_ms: f64,
}

fn load_constants(cli: &Cli) -> Result<ConstantSet> {
    match &cli.global.constants {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            Ok(ConstantSet::from_json(&text)?)
        }
        None => Ok(ConstantSet::desk()),
    }
}

fn is_rejection(err: &anyhow::Error) -> bool {
    matches!(
        err.downcast_ref::<Error>(),
        Some(
            Error::Inadmissible { .. }
                | Error::NonIntegrable { .. }
                | Error::InadmissibleRatio { .. }
                | Error::NonPositiveInput { .. }
        )
    )
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let start = Instant::now();
    if let Some(tol) = cli.global.tol {
        anyhow::ensure!(tol > 0.0 && tol < 1.0, "--tol must lie in (0, 1)");
    }
    if let Some(n) = cli.global.workers {
        anyhow::ensure!(n >= 1, "--workers must be at least 1");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut dir = RunDir::create(&cli.global.out)?;
    let consts = load_constants(cli);
    let result = consts.as_ref().map_err(|e| anyhow::anyhow!("{e:#}")).and_then(|consts| {
        let ctx = Context { consts, tol: cli.global.tol, seed: cli.global.seed };
        execute(&cli.command, &ctx, &mut dir)
    });
    let (status, message, summary, code) = match &result {
        Ok(rep) => {
            println!("{}", rep.line);
            ("ok", None, Some(rep.summary.clone()), ExitCode::SUCCESS)
        }
        Err(e) if is_rejection(e) => {
            eprintln!("rejected: {e:#}");
            ("rejected", Some(format!("{e:#}")), None, ExitCode::from(2))
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ("error", Some(format!("{e:#}")), None, ExitCode::from(1))
        }
    };
    let manifest = Manifest {
        tool: "tfstar",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        config: cli,
        constants: consts.as_ref().ok(),
        workers: rayon::current_num_threads(),
        status,
        message,
        summary,
        artifacts: dir.records(),
        wall_clock_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    dir.write_manifest(&manifest)?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            if informational {
                return ExitCode::SUCCESS;
            }
            let _ = Cli::command().print_help();
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
