//! Driver behind the `macroreal` binary: eigensolves, correlation traces,
//! figure data and protocol reports from a JSON experiment configuration.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use commands::RunOptions;
use config::LoadedConfig;
use error::CliError;
use output::{sha256_hex, Manifest, OutputSet};

#[derive(Parser)]
#[command(
    name = "macroreal",
    version,
    about = "Two-time weak-measurement correlators and the NSIT macrorealism test"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Diagonalize the Hamiltonian and write `spectrum.csv`.
    Eigensolve(Common),
    /// Correlation traces C(σ, τ) for every configured σ and τ.
    Correlate(Common),
    /// Traces and autocorrelation spectra across σ, with both limits.
    #[command(name = "reproduce-fig1")]
    ReproduceFig1(Common),
    /// Δ(σ, N) table with region classification and decay fits.
    #[command(name = "reproduce-fig2")]
    ReproduceFig2(Common),
    /// IWM scan followed by the NSIT test; writes `protocol_report.json`.
    Protocol(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long, value_name = "path")]
    config: PathBuf,
    /// Output directory; overrides `output.directory` of the config.
    #[arg(long, value_name = "dir")]
    out: Option<PathBuf>,
    /// Cross-check closed-form values against full pointer quadrature.
    #[arg(long)]
    oracle: bool,
    /// Worker threads for independent (σ, τ, N) jobs.
    #[arg(long, value_name = "n", default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    workers: u16,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_from_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(macroreal::Error::NumericalRegime(_)) = e {
                eprintln!("hint: widen or refine the grid, or reduce the σ/τ range");
            }
            e.exit_code()
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    let (name, common) = match &command {
        Command::Eigensolve(c) => ("eigensolve", c),
        Command::Correlate(c) => ("correlate", c),
        Command::ReproduceFig1(c) => ("reproduce-fig1", c),
        Command::ReproduceFig2(c) => ("reproduce-fig2", c),
        Command::Protocol(c) => ("protocol", c),
    };
    let cfg = LoadedConfig::load(&common.config)?;
    let opts = RunOptions {
        oracle: common.oracle,
        workers: usize::from(common.workers),
    };
    let out_dir = common
        .out
        .clone()
        .unwrap_or_else(|| cfg.resolve(&cfg.config.output.directory));
    let mut out = OutputSet::new();
    let prepared = out.timed("prepare", || commands::prepare(&cfg))?;
    let mut results = None;
    match command {
        Command::Eigensolve(_) => commands::eigensolve::run(&prepared, &mut out)?,
        Command::Correlate(_) => commands::correlate::run(&cfg, &prepared, &opts, &mut out)?,
        Command::ReproduceFig1(_) => commands::fig1::run(&cfg, &prepared, &opts, &mut out)?,
        Command::ReproduceFig2(_) => {
            let s = commands::fig2::run(&cfg, &prepared, &mut out)?;
            results = Some(serde_json::json!({
                "exponential_fit": s.exponential_fit,
                "power_law_fit": s.power_law_fit,
                "largest_n_region": s.largest_n_region,
            }));
        }
        Command::Protocol(_) => commands::protocol::run(&cfg, &prepared, &mut out)?,
    }
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: name.to_string(),
        config_path: common_path(&cfg),
        config_sha256: sha256_hex(cfg.text.as_bytes()),
        workers: opts.workers,
        inputs: prepared.inputs,
        outputs: Vec::new(),
        stages: Vec::new(),
        wall_clock_seconds: 0.0,
        results,
    };
    out.commit(&out_dir, manifest)
}

fn common_path(cfg: &LoadedConfig) -> String {
    cfg.path.display().to_string()
}
