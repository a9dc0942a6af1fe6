use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use coopsdmm_cli::commands::{audit_costs_cmd, figure1_cmd, load_sdmm_config, pir_cmd, probe_cmd, run_sdmm_cmd};

#[derive(Parser)]
#[command(name = "sdmm", version, about = "Secure distributed matrix multiplication simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a protocol on seeded random inputs and print the cost ledger.
    RunSdmm {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the message transcript as JSON lines.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Run a protocol and compare its ledger with the closed-form costs.
    AuditCosts {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Retrieve one file privately and print the rate.
    Pir {
        #[arg(long)]
        files: PathBuf,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        config: PathBuf,
    },
    /// Exhaustively check that no coalition of the given size learns anything.
    ProbeSecurity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "X")]
        x: usize,
    },
    /// Emit the normalized cost sweep as CSV.
    Figure1 {
        #[arg(long, default_value_t = 5)]
        m: u64,
        #[arg(long, default_value_t = 50)]
        xmax: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::RunSdmm {
            config,
            seed,
            transcript,
        } => {
            let cfg = load_sdmm_config(&read(&config)?, seed)?;
            let (report, out) = run_sdmm_cmd(&cfg)?;
            if let Some(path) = transcript {
                fs::write(&path, out.transcript.to_jsonl())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            print!("{}", report.text);
            Ok(report.ok)
        }
        Command::AuditCosts { config, seed } => {
            let cfg = load_sdmm_config(&read(&config)?, seed)?;
            let report = audit_costs_cmd(&cfg)?;
            print!("{}", report.text);
            Ok(report.ok)
        }
        Command::Pir { files, index, config } => {
            let report = pir_cmd(&read(&files)?, index, &read(&config)?)?;
            print!("{}", report.text);
            Ok(report.ok)
        }
        Command::ProbeSecurity { config, x } => {
            let report = probe_cmd(&read(&config)?, x)?;
            print!("{}", report.text);
            Ok(report.ok)
        }
        Command::Figure1 { m, xmax, out } => {
            let csv = figure1_cmd(m, xmax)?;
            match out {
                Some(path) => fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{csv}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
