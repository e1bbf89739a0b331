use std::path::PathBuf;
use std::process::ExitCode;

use afmtj_core::sweep::TableFormat;
use afmtj_lab::manifest::{emit, RunInfo};
use afmtj_lab::{exit_code, produce, Subcommand};
use anyhow::Result;
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, clap::Subcommand)]
enum Cmd {
    /// Single write transient: trajectory and latency/energy summary.
    WriteSim,
    /// Voltage sweep over devices; plot tables and device cards.
    Sweep,
    /// Fit device parameters to latency/energy targets.
    Calibrate,
    /// Bitline NAND/XOR truth tables over a TMR grid.
    Logic,
    /// In-memory-computing speedup and energy report.
    Imc,
    /// Recompute every acceptance check; nonzero exit on any failure.
    Validate,
}

impl From<Cmd> for Subcommand {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::WriteSim => Subcommand::WriteSim,
            Cmd::Sweep => Subcommand::Sweep,
            Cmd::Calibrate => Subcommand::Calibrate,
            Cmd::Logic => Subcommand::Logic,
            Cmd::Imc => Subcommand::Imc,
            Cmd::Validate => Subcommand::Validate,
        }
    }
}

/// AFMTJ/MTJ device simulation and in-memory-computing evaluation.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Subcommand config (JSON).
    #[arg(long, global = true, default_value = "config.json")]
    config: PathBuf,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for thermal noise.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long, global = true, env = "AFMTJ_LAB_JOBS")]
    jobs: Option<usize>,
    /// Format of the main result table.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Print the written files.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    let cmd = Subcommand::from(cli.cmd);
    let format = match cli.format {
        Format::Csv => TableFormat::Csv,
        Format::Json => TableFormat::Json,
    };
    let output = produce(cmd, &cli.config, cli.seed, format)?;
    let info = RunInfo { cmd, config: &cli.config, seed: cli.seed, format, jobs: rayon::current_num_threads() };
    let written = emit(&cli.out, &output, &info)?;
    for line in &output.summary {
        println!("{line}");
    }
    if cli.verbose > 0 {
        for p in &written {
            eprintln!("wrote {}", p.display());
        }
    }
    match output.failure {
        Some(f) => Err(f.into()),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
