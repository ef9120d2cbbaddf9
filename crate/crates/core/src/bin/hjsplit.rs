use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hjsplit::harness::{self, Experiment, RunConfig};

#[derive(Parser)]
#[command(name = "hjsplit", version, about = "Splitting solvers with exact and HJ-Prox proximal steps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write traces, objectives, plot and manifest.
    Run {
        experiment: String,
        /// JSON run configuration or a manifest from an earlier run.
        /// Defaults to the shipped desk-scale configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration and list every violated constraint.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the available experiments.
    List,
}

fn shipped(e: Experiment) -> &'static str {
    match e {
        Experiment::Lasso => include_str!("../../../../configs/lasso.json"),
        Experiment::Multitask => include_str!("../../../../configs/multitask.json"),
        Experiment::Fused => include_str!("../../../../configs/fused.json"),
        Experiment::SparseGroup => include_str!("../../../../configs/sparse_group.json"),
        Experiment::Tv => include_str!("../../../../configs/tv.json"),
    }
}

fn fail(err: hjsplit::Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(harness::exit_code(&err) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for e in Experiment::ALL {
                println!("{:<13} {:<5} {}", e.name(), e.solver(), e.description());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => {
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let violations = harness::validate_config(&cfg);
            if violations.is_empty() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                for v in &violations {
                    println!("violation: {v}");
                }
                ExitCode::from(harness::EXIT_CONFIG as u8)
            }
        }
        Command::Run { experiment, config, seed, scale, out } => {
            let experiment: Experiment = match experiment.parse() {
                Ok(e) => e,
                Err(e) => return fail(e),
            };
            let loaded = match &config {
                Some(path) => RunConfig::load(path),
                None => RunConfig::from_json(shipped(experiment)),
            };
            let mut cfg = match loaded {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            if cfg.experiment != experiment {
                return fail(hjsplit::Error::Config(format!(
                    "config is for experiment '{}', not '{experiment}'",
                    cfg.experiment
                )));
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = scale {
                cfg.size_scale = s;
            }
            if let Some(o) = out {
                cfg.output_dir = Some(o);
            }
            match harness::run_experiment(&cfg) {
                Ok(outcome) => {
                    for a in &outcome.arms {
                        println!(
                            "{:<6} iterations {:>6}  final objective {}",
                            a.arm.name(),
                            a.iterations,
                            a.final_objective.map_or("-".into(), |v| format!("{v:.10e}"))
                        );
                    }
                    println!("artifacts in {}", outcome.dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}
