//! Experiment harness: JSON run configurations, validation, and the
//! artifacts written by a run (`<arm>_trace.csv`, `objectives.csv`,
//! `plot.svg`, `manifest.json`, and the generated problem under
//! `instance/`).

mod config;
mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{Arm, Experiment, HjConfig, KmSettings, RunConfig, Sampling, StepConfig};
pub use experiments::{resolve, run_arm, validate_config, ArmRun, Problem, Resolved, Violation, TV_STEP};

use crate::error::{Error, Result};
use crate::trace::SolverTrace;

/// Environment variable replacing the default output root (`runs`).
pub const OUT_DIR_ENV: &str = "HJSPLIT_OUT_DIR";

/// Subdirectory of a run holding the generated instance in the flat
/// layout of [`crate::problems::flat`].
pub const INSTANCE_DIR: &str = "instance";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

/// Process exit status for an error returned by [`run_experiment`].
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        _ => EXIT_FAILURE,
    }
}

/// `cfg.output_dir` if set, else `<root>/<experiment>` where the root is
/// `$HJSPLIT_OUT_DIR` or `runs`.
pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    if let Some(dir) = &cfg.output_dir {
        return dir.clone();
    }
    let root = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
    root.join(cfg.experiment.name())
}

#[derive(Clone, Debug, Serialize)]
pub struct ArmSummary {
    pub arm: Arm,
    pub status: &'static str,
    pub iterations: usize,
    pub final_objective: Option<f64>,
    pub final_residual: Option<f64>,
    pub eps_bound_sum: f64,
}

impl ArmSummary {
    fn new(arm: Arm, trace: &SolverTrace, status: &'static str) -> Self {
        Self {
            arm,
            status,
            iterations: trace.len(),
            final_objective: trace.final_objective(),
            final_residual: trace.last().map(|r| r.fp_residual),
            eps_bound_sum: trace.eps_bound_sum(),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    artifact: &'static str,
    version: &'static str,
    experiment: Experiment,
    seed: u64,
    solver: &'static str,
    config: &'a RunConfig,
    arms: &'a [ArmSummary],
    files: Vec<String>,
}

/// What a completed run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub resolved: RunConfig,
    pub arms: Vec<ArmSummary>,
    pub runs: Vec<ArmRun>,
}

/// Runs every configured arm in order (exact first) and writes the
/// artifacts to [`output_dir`]. A diverging arm still gets its partial trace
/// and a manifest before the divergence error is returned.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutcome> {
    let resolved = resolve(cfg)?;
    let dir = output_dir(cfg);
    std::fs::create_dir_all(&dir)?;

    let mut arms: Vec<Arm> = cfg.arms.clone();
    arms.sort();
    let mut runs: Vec<ArmRun> = Vec::new();
    let mut summaries = Vec::new();
    let mut files = vec![format!("{INSTANCE_DIR}/{}", crate::problems::flat::INDEX_FILE)];
    resolved.problem.to_flat().write_dir(&dir.join(INSTANCE_DIR))?;
    let mut failure = None;
    for arm in arms {
        let name = format!("{}_trace.csv", arm.name());
        match run_arm(&resolved, arm) {
            Ok(run) => {
                output::write(&dir.join(&name), &output::trace_csv(&run.trace))?;
                summaries.push(ArmSummary::new(arm, &run.trace, "ok"));
                runs.push(run);
            }
            Err(Error::Divergence { iteration, trace }) => {
                output::write(&dir.join(&name), &output::trace_csv(&trace))?;
                summaries.push(ArmSummary::new(arm, &trace, "diverged"));
                failure = Some(Error::Divergence { iteration, trace });
            }
            Err(e) => return Err(e),
        }
        files.push(name);
        if failure.is_some() {
            break;
        }
    }

    let trace_of = |a: Arm| runs.iter().find(|r| r.arm == a).map(|r| &r.trace);
    output::write(&dir.join("objectives.csv"), &output::objectives_csv(trace_of(Arm::Exact), trace_of(Arm::Hj)))?;
    files.push("objectives.csv".into());
    let series: Vec<(&str, &SolverTrace)> = runs.iter().map(|r| (r.arm.name(), &r.trace)).collect();
    let title = format!("{} ({}), seed {}", cfg.experiment.description(), cfg.experiment.solver(), cfg.seed);
    output::write(&dir.join("plot.svg"), &output::convergence_svg(&title, &series))?;
    files.push("plot.svg".into());
    files.push("manifest.json".into());

    let manifest = Manifest {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment,
        seed: cfg.seed,
        solver: cfg.experiment.solver(),
        config: &resolved.cfg,
        arms: &summaries,
        files,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    output::write(&dir.join("manifest.json"), &json)?;

    if let Some(err) = failure {
        return Err(err);
    }
    Ok(RunOutcome { dir, resolved: resolved.cfg, arms: summaries, runs })
}

/// Loads a configuration (or a manifest) from disk.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path)
}
