//! The `flowroi` command-line tool.

pub mod cmd;
pub mod common;
pub mod config_flags;
pub mod dataset;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use flowroi::PipelineConfig;

use crate::config_flags::ConfigFlags;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "flowroi", version, about = "Motion-salient RoI compression for time-lapse microscopy")]
pub struct Cli {
    /// Flat key=value config file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Where to write the JSON report.
    #[arg(long, global = true, value_name = "FILE")]
    pub report_out: Option<PathBuf>,
    #[command(flatten)]
    pub flags: ConfigFlags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with ground truth.
    Synth(cmd::synth::SynthArgs),
    /// Compute RoI masks and write them as PBM files.
    ExtractRoi(cmd::extract::ExtractArgs),
    /// Extract masks and encode every frame to `.froi`.
    Compress(cmd::compress::CompressArgs),
    /// Decode `.froi` files to PGM frames and PBM masks.
    Decompress(cmd::decompress::DecompressArgs),
    /// PSNR and coverage of decoded frames against the originals.
    Evaluate(cmd::evaluate::EvaluateArgs),
    /// Rate-curve rows over a grid of hyperparameters, as CSV.
    Sweep(cmd::sweep::SweepArgs),
    /// Render a sweep CSV as a PSNR-vs-rate SVG chart.
    Plot(cmd::plot::PlotArgs),
}

/// Options shared by every subcommand.
pub struct Globals {
    pub config_file: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
    pub flags: ConfigFlags,
}

impl Globals {
    pub fn config(&self) -> CliResult<PipelineConfig> {
        self.flags.resolve(self.config_file.as_deref())
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    let globals = Globals {
        config_file: cli.config,
        report_out: cli.report_out,
        flags: cli.flags,
    };
    // surfaces config errors before any work, for every subcommand
    globals.config()?;
    match &cli.command {
        Command::Synth(a) => cmd::synth::run(a, &globals),
        Command::ExtractRoi(a) => cmd::extract::run(a, &globals),
        Command::Compress(a) => cmd::compress::run(a, &globals),
        Command::Decompress(a) => cmd::decompress::run(a, &globals),
        Command::Evaluate(a) => cmd::evaluate::run(a, &globals),
        Command::Sweep(a) => cmd::sweep::run(a, &globals),
        Command::Plot(a) => cmd::plot::run(a),
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

impl From<CliError> for anyhow::Error {
    fn from(e: CliError) -> Self {
        e.error
    }
}
