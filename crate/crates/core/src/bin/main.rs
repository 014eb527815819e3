use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nested_control::harness::acceptance::run_acceptance;
use nested_control::harness::{output_dir, run_all, ScenarioConfig, SCENARIOS};

#[derive(Parser)]
#[command(name = "nested-control", about = "Run nested online controllers on configured scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write per-round CSV and JSON summaries.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run only this seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria and print one line per criterion.
    Accept {
        #[arg(long)]
        filter: Option<String>,
    },
    /// List the built-in scenarios.
    ListScenarios,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, seed, out } => {
            let mut cfg = match ScenarioConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            let dir = output_dir(out.as_deref(), &cfg);
            let records = match run_all(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            let mut any_failed = false;
            for rec in &records {
                match rec.write(&dir) {
                    Ok(path) => println!(
                        "seed {}: regret {:.6e}, bound {}, {:.1} ms -> {}",
                        rec.seed,
                        rec.summary.final_regret,
                        rec.summary.bound.map_or("none".to_string(), |b| format!("{b:.6e}")),
                        rec.summary.wall_time_ms,
                        path.display()
                    ),
                    Err(e) => {
                        eprintln!("{e}");
                        return ExitCode::from(2);
                    }
                }
                for d in &rec.summary.defects {
                    eprintln!("seed {}: {d}", rec.seed);
                }
                any_failed |= rec.summary.failed;
            }
            if any_failed { ExitCode::FAILURE } else { ExitCode::SUCCESS }
        }
        Command::Accept { filter } => {
            let results = run_acceptance(filter.as_deref());
            for r in &results {
                println!("{}", r.line());
            }
            if results.iter().all(|r| r.passed) { ExitCode::SUCCESS } else { ExitCode::FAILURE }
        }
        Command::ListScenarios => {
            for (name, about) in SCENARIOS {
                println!("{name:24} {about}");
            }
            ExitCode::SUCCESS
        }
    }
}
