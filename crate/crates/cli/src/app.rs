//! Flag parsing and the top-level command flow.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{defaults_doc, validate_with, Experiment, Overrides};
use crate::error::{CliError, CliResult};
use crate::experiments::run_experiment;
use crate::manifest::RunManifest;
use crate::report::emit_report;

#[derive(Debug, Parser)]
#[command(
    name = "stablelab",
    version,
    about = "Numerical experiments for the product of a symmetric stable process and a vertical Brownian motion",
    after_long_help = defaults_doc()
)]
pub struct Cli {
    /// TOML configuration document.
    #[arg(long, global = true, env = "STABLELAB_CONFIG", value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed of every random stream.
    #[arg(long, global = true, env = "STABLELAB_SEED", value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory for artifacts and manifests.
    #[arg(long, global = true, env = "STABLELAB_OUT", value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, env = "STABLELAB_WORKERS", value_name = "N")]
    pub workers: Option<usize>,
    /// Numerical tolerance passed to the deterministic solvers.
    #[arg(long, global = true, env = "STABLELAB_TOL", value_name = "REAL")]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stable densities against the closed-form or second-route oracle.
    KernelCheck,
    /// Boundary-hitting law, boundary values and the jump census.
    Simulate,
    /// Mean exit times over a sweep of box scales.
    ExitTime,
    /// Box-hitting probabilities against target measure.
    Hitting,
    /// Empirical Krylov-Safonov function.
    Phi,
    /// Harnack ratios over random nonnegative data.
    Harnack,
    /// Oscillation decay of harmonic extensions.
    Holder,
    /// Resolvent identity and the Monte Carlo cross-check.
    Resolvent,
    /// Square-function norm ratios.
    Lp,
    /// Summary over manifests (files or directories; default: the output directory).
    Report { manifests: Vec<PathBuf> },
}

impl Command {
    fn experiment(&self) -> Option<Experiment> {
        Some(match self {
            Command::KernelCheck => Experiment::KernelCheck,
            Command::Simulate => Experiment::Simulate,
            Command::ExitTime => Experiment::ExitTime,
            Command::Hitting => Experiment::Hitting,
            Command::Phi => Experiment::Phi,
            Command::Harnack => Experiment::Harnack,
            Command::Holder => Experiment::Holder,
            Command::Resolvent => Experiment::Resolvent,
            Command::Lp => Experiment::Lp,
            Command::Report { .. } => return None,
        })
    }
}

fn manifests_in(path: &Path) -> CliResult<Vec<RunManifest>> {
    if path.is_dir() {
        let mut names: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with("-manifest.json"))
            .collect();
        names.sort();
        names.iter().map(|p| RunManifest::read(p)).collect()
    } else {
        Ok(vec![RunManifest::read(path)?])
    }
}

/// Parses `args` and runs the command; the caller maps errors to exit statuses.
pub fn run<I, T>(args: I) -> CliResult<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Runtime(String::new())
        }
        _ => CliError::Validation(e.to_string()),
    })?;
    let raw = match &cli.config {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    let over = Overrides {
        experiment: cli.command.experiment(),
        seed: cli.seed,
        out_dir: cli.out.clone(),
        workers: cli.workers,
        tol: cli.tol,
    };
    match &cli.command {
        Command::Report { manifests } => {
            let dirs = if manifests.is_empty() {
                // the configured output directory, falling back to the default
                let cfg = validate_with(&raw, &Overrides { experiment: Some(Experiment::KernelCheck), ..over })
                    .map(|c| c.out_dir)
                    .unwrap_or_else(|_| PathBuf::from(crate::config::DEFAULT_OUT));
                vec![cfg]
            } else {
                manifests.clone()
            };
            let mut all = Vec::new();
            for d in &dirs {
                all.extend(manifests_in(d)?);
            }
            let report = emit_report(&all)?;
            let out = cli.out.clone().unwrap_or_else(|| dirs[0].clone());
            let out = if out.is_dir() { out } else { out.parent().map(Path::to_path_buf).unwrap_or_default() };
            fs::write(out.join("report.txt"), report.to_text())?;
            fs::write(out.join("report.csv"), report.to_csv())?;
            Ok(report.to_text())
        }
        _ => {
            let config = validate_with(&raw, &over)?;
            let m = run_experiment(&config)?;
            let mut s = format!(
                "{} finished in {:.2} s; manifest {}\n",
                config.experiment.name(),
                m.wall_time_s,
                config.out_dir.join(RunManifest::file_name(config.experiment)).display()
            );
            for k in &m.checks {
                s.push_str(&format!("  {:<8} {}: {}\n", k.status.label(), k.property, k.detail));
            }
            Ok(s)
        }
    }
}
