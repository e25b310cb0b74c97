use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod error;
mod io;

use config::RunConfig;
use error::CliError;

/// Numerical free probability: cumulants, admissibility, region D,
/// measure recovery, freeness of linear forms, Lambda classification and
/// free additive convolution.
#[derive(Debug, Parser)]
#[command(name = "freeforms", version)]
struct Cli {
    /// TOML file of `key = value` settings; flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Moment and free cumulant conversions.
    #[command(subcommand)]
    Cumulants(CumulantsCmd),
    /// Decide whether a cumulant sequence belongs to a compactly supported measure.
    Admissible(AdmissibleArgs),
    /// Sample the boundary of the (k3, k4) region for standardized sequences.
    RegionD(RegionDArgs),
    /// Recover a density from a finite cumulant sequence.
    Recover(RecoverArgs),
    /// Freeness of two linear forms.
    #[command(subcommand)]
    Freeness(FreenessCmd),
    /// Exponential sums of the coefficients.
    #[command(subcommand)]
    Lambda(LambdaCmd),
    /// Residual of the functional identity for a gallery Voiculescu transform.
    Gallery(GalleryArgs),
    /// Free additive convolution of two measures.
    Convolve(ConvolveArgs),
}

#[derive(Debug, Subcommand)]
enum CumulantsCmd {
    /// Moments m_0..m_n from cumulants.
    ToMoments {
        #[arg(long)]
        kappa: String,
        /// Highest moment order; defaults to twice the sequence length.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Cumulants from moments m_0..m_n (m_0 = 1).
    FromMoments {
        #[arg(long)]
        moments: String,
    },
    /// Cumulants of the dilation by `factor`.
    Scale {
        #[arg(long)]
        kappa: String,
        #[arg(long, allow_hyphen_values = true)]
        factor: f64,
    },
    /// Cumulants of the free additive convolution.
    Add {
        #[arg(long)]
        kappa: String,
        #[arg(long)]
        other: String,
    },
}

#[derive(Debug, Args)]
struct AdmissibleArgs {
    #[arg(long)]
    kappa: String,
    /// Grid size as `n_r,n_theta`.
    #[arg(long)]
    resolution: Option<String>,
    /// Skip the check on the refined grid.
    #[arg(long)]
    no_refine: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Branch {
    Printed,
    Tangency,
}

#[derive(Debug, Args)]
struct RegionDArgs {
    #[arg(long)]
    samples: Option<usize>,
    /// Expression used for the upper part of the boundary.
    #[arg(long, value_enum, default_value = "printed")]
    branch: Branch,
    /// CSV output; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RecoverArgs {
    #[arg(long)]
    kappa: String,
    /// `xmin,xmax,N`.
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    /// Comma-separated distances from the real axis, decreasing.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    chunk: Option<usize>,
    /// Recover without running the admissibility oracle first.
    #[arg(long)]
    skip_admissibility: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum FreenessCmd {
    /// Residuals of the freeness conditions for given cumulants.
    Check {
        #[arg(long)]
        coeffs: String,
        #[arg(long)]
        cumulants: String,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Build cumulants making the two forms free.
    Solve {
        #[arg(long)]
        coeffs: String,
        /// Highest cumulant order to populate (2..=8).
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
enum LambdaCmd {
    /// Check the conditions of the semicircular characterization.
    Classify {
        #[arg(long)]
        coeffs: String,
        /// Largest odd integer checked for the Lambda2 condition is 2M+1.
        #[arg(long)]
        max_odd: Option<u32>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Case {
    Semicircular,
    Stable,
    StableIndexOne,
    Constant,
    Log,
    PerturbedStable,
    Moment,
}

#[derive(Debug, Args)]
struct GalleryArgs {
    #[arg(long, value_enum)]
    case: Case,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    coeffs: String,
}

#[derive(Debug, Args)]
struct ConvolveArgs {
    #[arg(long)]
    mu1: String,
    #[arg(long)]
    mu2: String,
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    chunk: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => ExitCode::from(EXIT_USAGE),
                _ => ExitCode::from(2),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&io::tidy(e.diagnostics())).unwrap_or_default());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    commands::dispatch(cli.command, &cfg)
}

/// `FREEFORMS_THREADS` caps the worker pool. Results do not depend on it.
fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("FREEFORMS_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("FREEFORMS_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
