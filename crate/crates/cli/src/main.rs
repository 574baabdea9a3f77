#![allow(clippy::neg_cmp_op_on_partial_ord)]
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{exit_code, pretty, Run, EXIT_CONFIG};
use config::Command;

/// Radial and grid solvers for degenerate elliptic eigenvalue problems.
#[derive(Parser, Debug)]
#[command(name = "degen-eigen", version)]
struct Cli {
    /// Command to run; may instead be given as `command` in the config.
    #[arg(value_enum)]
    command: Option<Command>,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for independent sweep points.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let prepared = match config::load(&cli.config, cli.command) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = cli.out.clone().or_else(|| prepared.config.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let run = Run { prepared: &prepared, seed: cli.seed, jobs: cli.jobs.max(1) };
    let artifacts = match run.execute() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = write(&out, &artifacts) {
        eprintln!("cannot write to {}: {e}", out.display());
        return ExitCode::FAILURE;
    }
    println!("{}", serde_json::to_string(&artifacts.summary).expect("serializable"));
    ExitCode::from(artifacts.code)
}

fn write(out: &std::path::Path, a: &commands::Artifacts) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("summary.json"), pretty(&a.summary))?;
    for (name, body) in &a.files {
        std::fs::write(out.join(name), body)?;
    }
    Ok(())
}
