use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use psra_queue::output::{write_table, Header};
use psra_queue::{run, CliError, Command, ExperimentConfig};

/// Pre-scheduled random arrivals: reference tables, figure data and
/// simulations as CSV.
#[derive(Debug, Parser)]
#[command(name = "psra-queue", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML file with one section per command.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Compare the output with the expected values; exit 4 on mismatch.
    #[arg(long)]
    check: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("psra-queue: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let outcome = run(cli.command, &cfg, cli.check)?;
    let header = Header {
        command: cli.command.name(),
        seed: cfg.seed,
        config: &outcome.config_toml,
    };
    match &cli.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            write_table(&mut file, &header, &outcome.table)?;
            file.flush()?;
        }
        None => write_table(io::stdout().lock(), &header, &outcome.table)?,
    }
    if let Some(report) = &outcome.check {
        for failure in &report.failures {
            eprintln!("mismatch: {failure}");
        }
        eprintln!(
            "check: {} value(s) compared, {} mismatch(es)",
            report.checked,
            report.failures.len()
        );
        if !report.passed() {
            return Err(CliError::CheckMismatch(report.failures.len()));
        }
    }
    Ok(())
}
