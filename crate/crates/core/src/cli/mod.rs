//! The `qsim` command line: configuration, commands and reports.
//!
//! Every command writes one report, JSON by default (`coeffs` defaults to
//! CSV). Floats are written as decimal strings with 17 significant digits and
//! all randomness is drawn from the configured seed, so a fixed config and
//! seed reproduce the report byte for byte. The exit code is 0 when every
//! assertion in the report holds, 1 when one fails and 2 on errors.

mod commands;
mod config;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

pub use commands::{
    cmd_coeffs, cmd_construct, cmd_counterexample, cmd_joinings, cmd_kernel_scan, cmd_spectral,
    cmd_verify, conjugate_pair, OperatorSpec,
};
pub use config::{RunConfig, Tolerances};
pub use report::*;

use crate::error::{Error, Result};
use crate::joinings::{FiniteMps, SystemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "qsim",
    version,
    about = "Finite-dimensional checks for Markov quasi-similarity"
)]
pub struct Cli {
    /// JSON run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fourier coefficients a_n with running sums.
    Coeffs {
        /// Half-width; `K_weights` from the config when absent.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        resolution: Option<usize>,
        /// Skip the normalization to total mass 1.
        #[arg(long)]
        raw: bool,
    },
    /// Build the model and check every operator against its grid oracle.
    Construct,
    /// Intertwining, Markov axioms, kernel margins and convolution identities.
    VerifyIntertwine,
    /// Kernel margins of J and J* for each weight half-width 1..=K.
    KernelScan,
    /// The geometric-weights example with its residual bound.
    Counterexample {
        /// Comma-separated half-widths; `counterexample_k` from the config when absent.
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
    },
    /// Spectral profiles of two unitaries.
    SpectralCompare {
        /// JSON `{"permutation": [...]}` or `{"rows", "cols", "re", "im"}`.
        #[arg(long, requires = "right")]
        left: Option<PathBuf>,
        #[arg(long, requires = "left")]
        right: Option<PathBuf>,
        /// Size of the seeded conjugate permutation pair used without files.
        #[arg(long, default_value_t = 12)]
        size: usize,
    },
    /// Joining space of two finite systems and the joining/Markov round trip.
    Joinings {
        /// JSON `{"n", "permutation", "p"}` with decimal or `a/b` strings.
        #[arg(long, requires = "right")]
        left: Option<PathBuf>,
        #[arg(long, requires = "left")]
        right: Option<PathBuf>,
        /// Include the Markov matrices in the report.
        #[arg(long)]
        markov: bool,
    },
}

/// A rendered report and whether all of its assertions hold.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub passed: bool,
}

fn read_json<T: DeserializeOwned>(path: &PathBuf) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn render<R: Report>(report: &R, format: Format) -> Result<Outcome> {
    let text = match format {
        Format::Json => serde_json::to_string_pretty(report)? + "\n",
        Format::Csv => report.to_csv(),
    };
    Ok(Outcome {
        text,
        passed: report.passed(),
    })
}

/// Runs a parsed command line and renders its report.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let json = cli.format.unwrap_or(Format::Json);
    match &cli.command {
        Command::Coeffs { k, resolution, raw } => render(
            &cmd_coeffs(
                k.unwrap_or(cfg.k_weights),
                resolution.unwrap_or(cfg.resolution),
                !raw,
            )?,
            cli.format.unwrap_or(Format::Csv),
        ),
        Command::Construct => render(&cmd_construct(&cfg)?, json),
        Command::VerifyIntertwine => render(&cmd_verify(&cfg)?, json),
        Command::KernelScan => render(&cmd_kernel_scan(&cfg)?, json),
        Command::Counterexample { k } => {
            let ks = if k.is_empty() {
                cfg.counterexample_k.clone()
            } else {
                k.clone()
            };
            render(&cmd_counterexample(&cfg, &ks)?, json)
        }
        Command::SpectralCompare { left, right, size } => {
            let (l, r) = match (left, right) {
                (Some(l), Some(r)) => {
                    (read_json::<OperatorSpec>(l)?, read_json::<OperatorSpec>(r)?)
                }
                _ => conjugate_pair(*size, cfg.seed),
            };
            render(&cmd_spectral(&l, &r, cfg.seed)?, json)
        }
        Command::Joinings {
            left,
            right,
            markov,
        } => {
            let (l, r) = match (left, right) {
                (Some(l), Some(r)) => (
                    FiniteMps::try_from(read_json::<SystemSpec>(l)?)?,
                    FiniteMps::try_from(read_json::<SystemSpec>(r)?)?,
                ),
                _ => (FiniteMps::rotation(2)?, FiniteMps::rotation(3)?),
            };
            render(&cmd_joinings(&l, &r, cfg.seed, *markov)?, json)
        }
    }
}

/// Parses `args`, runs the command, writes the report and maps the outcome
/// to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli).and_then(|outcome| write_outcome(&cli, &outcome).map(|_| outcome)) {
        Ok(outcome) if outcome.passed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn write_outcome(cli: &Cli, outcome: &Outcome) -> Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, &outcome.text).map_err(Error::from),
        None => {
            print!("{}", outcome.text);
            Ok(())
        }
    }
}
