//! Drives the experiment harness from code: loads a shipped config, shrinks
//! the iteration budget, runs both arms and writes traces, `objectives.csv`,
//! `plot.svg` and `manifest.json`.
//!
//! ```text
//! cargo run --release --example run_experiment -- sparse_group 500
//! ```

use std::path::PathBuf;

use hjsplit::harness::{self, Experiment};

fn main() -> hjsplit::Result<()> {
    let mut args = std::env::args().skip(1);
    let experiment: Experiment = args.next().as_deref().unwrap_or("lasso").parse()?;
    let iters: Option<usize> = args.next().map(|s| s.parse().expect("iteration count"));

    let configs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut cfg = harness::load_config(&configs.join(format!("{}.json", experiment.name())))?;
    cfg.iters = Some(iters.unwrap_or(300));
    cfg.output_dir = Some(std::env::temp_dir().join("hjsplit-example").join(experiment.name()));

    let violations = harness::validate_config(&cfg);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{v}");
        }
        std::process::exit(harness::EXIT_CONFIG);
    }

    let outcome = harness::run_experiment(&cfg)?;
    println!("{} ({})", experiment.description(), experiment.solver());
    for arm in &outcome.arms {
        println!(
            "  {:<5} {} iterations, final objective {:.6e}, residual {:.3e}",
            arm.arm.name(),
            arm.iterations,
            arm.final_objective.unwrap_or(f64::NAN),
            arm.final_residual.unwrap_or(f64::NAN)
        );
    }
    println!("artifacts in {}", outcome.dir.display());
    Ok(())
}
