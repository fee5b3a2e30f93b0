//! The `gm3` command-line tool.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success (certificate valid, run completed, all checks passed) |
//! | 1 | usage, configuration or I/O error |
//! | 2 | no certificate can be issued (infeasible exponents or failed hypotheses) |
//! | 3 | blow-up suspected |
//! | 4 | positivity lost |
//! | 5 | a verification check failed |

pub mod commands;
pub mod config;
pub mod plot;
pub mod sweep;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
pub use config::{preset, RunConfig, TimeStep};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NO_CERTIFICATE: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_POSITIVITY: i32 = 4;
pub const EXIT_CHECK_FAILED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "gm3", version, about = "Certify and simulate a three-component activator-inhibitor system")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Config file applied on top of the preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in starting configuration.
    #[arg(long, global = true, default_value = "phyllotaxis")]
    pub preset: String,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for the initial perturbation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override one config key, `key=value` or `section.key=value`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute and write the boundedness certificate.
    Certify,
    /// Run the solver, writing the monitor CSV and the final snapshot.
    Simulate {
        /// Stop after this many steps (the snapshot can be resumed).
        #[arg(long)]
        stop_after: Option<u64>,
    },
    /// Check the certificate's ingredients with the oracles and a fresh run.
    Verify {
        /// Only run the pointwise and comparison-ODE oracles.
        #[arg(long)]
        lemmas_only: bool,
        /// Certificate file to check instead of computing one.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Run a two-parameter grid of simulations.
    Sweep {
        /// `name=lo:hi:count`, given exactly twice.
        #[arg(long = "sweep", value_name = "NAME=LO:HI:COUNT", required = true)]
        sweeps: Vec<String>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Keep rows already recorded in `sweep.partial`.
        #[arg(long)]
        resume: bool,
        /// Stop after computing this many new points.
        #[arg(long)]
        max_points: Option<usize>,
    },
    /// Render SVG plots from a monitor CSV.
    Plot {
        /// Monitor CSV written by `simulate`.
        csv: PathBuf,
    },
}

/// Preset, then config file, then `--set` overrides, then `--seed`/`--out`.
pub fn load_config(global: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = preset(&global.preset)?;
    if let Some(path) = &global.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        cfg.apply_text(&text)?;
    }
    for o in &global.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{o}`")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &global.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Parses arguments and runs the tool; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    if let Command::Plot { csv } = &cli.command {
        let out = cli.global.out.clone().unwrap_or_else(|| {
            csv.parent().map(Path::to_path_buf).unwrap_or_default()
        });
        return plot::cmd_plot(csv, &out);
    }
    let cfg = load_config(&cli.global)?;
    match &cli.command {
        Command::Certify => commands::cmd_certify(&cfg),
        Command::Simulate { stop_after } => commands::cmd_simulate(&cfg, *stop_after),
        Command::Verify {
            lemmas_only,
            certificate,
        } => commands::cmd_verify(&cfg, *lemmas_only, certificate.as_deref()),
        Command::Sweep {
            sweeps,
            workers,
            resume,
            max_points,
        } => {
            let spec = sweep::SweepSpec::parse(sweeps)?;
            sweep::cmd_sweep(&cfg, &spec, *workers, *resume, *max_points)
        }
        Command::Plot { .. } => unreachable!("handled above"),
    }
}
