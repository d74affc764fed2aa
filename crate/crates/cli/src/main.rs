use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use overset_cli::config::ExperimentConfig;
use overset_cli::output::write_artifacts;
use overset_cli::run::Status;

#[derive(Parser)]
#[command(name = "overset", about = "Overset-grid experiments for linear hyperbolic systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Seed for random initial data.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let Cmd::Run { config, out, seed } = Cli::parse().cmd;
    let result = ExperimentConfig::load(&config).and_then(|cfg| {
        let a = overset_cli::run(&cfg, seed)?;
        let files = write_artifacts(&out, &cfg, &a)?;
        Ok((a, files))
    });
    match result {
        Ok((a, files)) => {
            for (name, v) in &a.summary.verdicts {
                let status = match v.status {
                    Status::Pass => "pass",
                    Status::Fail => "FAIL",
                    Status::NotApplicable => "n/a",
                };
                match (v.value, v.threshold) {
                    (Some(x), Some(t)) => println!("{name}: {status} ({x:e} vs {t:e})"),
                    (Some(x), None) => println!("{name}: {status} ({x:e})"),
                    _ => println!("{name}: {status}"),
                }
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            if a.summary.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
