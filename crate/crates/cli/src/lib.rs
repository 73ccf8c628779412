//! Command-line driver: eigenvalue cache, parameter sweeps, verification
//! families and the acceptance suite.

pub mod accept;
pub mod cache;
pub mod commands;
pub mod grid;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use hml_core::moments::DEFAULT_SERIES_CUTOFF;
use hml_core::offdiag::EPSILON;
use hml_core::Precision;

use crate::output::Format;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OPERATIONAL: i32 = 1;
pub const EXIT_TOLERANCE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hml", version, about = "Harmonic moments of sharp-cutoff Hecke eigenvalue sums")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Weights, comma separated (even, >= 12)
    #[arg(long = "k", global = true, value_delimiter = ',')]
    pub k: Vec<u32>,
    /// Points of the x grid k²/(8π²)(1 + j/√2)
    #[arg(long, global = true, default_value_t = 5)]
    pub x_count: usize,
    /// x23k13, x12k35 or explicit:<Δ>
    #[arg(long, global = true, default_value = "x23k13")]
    pub delta_rule: String,
    #[arg(long, global = true, default_value_t = Precision::DEFAULT_BITS)]
    pub prec_bits: u32,
    #[arg(long, global = true, default_value_t = EPSILON)]
    pub epsilon: f64,
    #[arg(long, global = true, env = "HML_CACHE_DIR", default_value = ".hml-cache")]
    pub cache_dir: PathBuf,
    /// Output file; standard output when absent
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Largest n for eigenvalue tables
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    /// Terms of the Ω² series in the second-moment main term
    #[arg(long, global = true, default_value_t = DEFAULT_SERIES_CUTOFF)]
    pub series_cutoff: u64,
    /// Kloosterman truncation for trace-formula sums
    #[arg(long, global = true)]
    pub cmax: Option<u64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Build or load eigenvalue tables and check their integrity
    Eigen,
    /// Harmonic weights of each eigenbasis
    Weights,
    /// Trace formula against eigenvalue averages on held-out pairs
    TraceCheck,
    /// Series against the oscillatory asymptotic, orders ν = k − 1
    BesselCheck,
    /// Sharp sums against the smoothed Voronoi transform
    VoronoiCheck,
    /// First and second harmonic moments over the x grid
    Moments,
    /// Discrepancy and Erdős–Turán bounds for the fractional parts
    Discrepancy {
        /// x,kappa; repeatable
        #[arg(long = "point")]
        points: Vec<String>,
        #[arg(long, default_value_t = accept::C8_N)]
        n: u64,
        #[arg(long, default_value_t = accept::C8_R_MAX)]
        r_max: u32,
    },
    /// Poisson identity and stationary-phase checks at x = k²/4
    OffdiagCheck,
    /// The full acceptance suite
    Accept,
    /// Refit the envelope constants and compare with the shipped ones
    Calibrate,
}

impl Options {
    pub fn prec(&self) -> Result<Precision> {
        if self.prec_bits < 64 {
            return Err(anyhow!("--prec-bits must be >= 64"));
        }
        Ok(Precision::new(self.prec_bits)?)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.k.iter().find(|&&k| k < 12 || k % 2 == 1) {
            return Err(anyhow!("weight {k} must be even and >= 12"));
        }
        if self.jobs < 1 {
            return Err(anyhow!("--jobs must be >= 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(anyhow!("--epsilon must lie in (0, 1/2)"));
        }
        self.prec()?;
        grid::parse_delta_rule(&self.delta_rule)?;
        Ok(())
    }
}

/// Parse and run; returns the process exit status.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_OPERATIONAL } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_TOLERANCE,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_OPERATIONAL
        }
    }
}

/// Ok(true) when every asserted tolerance holds.
pub fn run(cli: &Cli) -> Result<bool> {
    cli.opts.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.opts.jobs).build()?;
    let outcome = match &cli.command {
        Command::Accept => return commands::accept(&cli.opts),
        c => pool.install(|| commands::dispatch(c, &cli.opts))?,
    };
    commands::emit(&outcome.tables, &cli.opts)?;
    Ok(outcome.pass)
}
