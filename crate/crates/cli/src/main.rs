//! `pqm`: score point clouds, generate degraded fixtures, detect changes and
//! benchmark the metrics.
//!
//! Exit codes: 0 ok, 2 usage, 3 i/o, 4 parse, 5 configuration, 6 metric
//! undefined for the input.

mod ablate;
mod anomaly;
mod bench;
mod compare;
mod errors;
mod output;
mod settings;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "pqm", version, about = "Point cloud quality metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a candidate cloud against a reference
    Compare(compare::CompareArgs),
    /// Write a degraded copy of a cloud plus a manifest
    Ablate(ablate::AblateArgs),
    /// Voxel change detection of frames against a reference map
    Anomaly(anomaly::AnomalyArgs),
    /// Time PQM, Chamfer and Hausdorff over keep fractions and region sizes
    Bench(bench::BenchArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(errors::EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Compare(a) => compare::run(a),
        Command::Ablate(a) => ablate::run(a),
        Command::Anomaly(a) => anomaly::run(a),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(errors::exit_code(&e))
        }
    }
}

/// The error and its causes, skipping causes already spelled out above.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !msg.contains(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg
}
