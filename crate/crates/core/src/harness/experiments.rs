use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde_json::Value;

use super::config::{Arm, Experiment, RunConfig, Sampling};
use crate::error::{Error, Result};
use crate::linop::{op_norm_estimate, LinearOperator};
use crate::objective::{BlockL2Norm, FnObjective, L1Norm, LeastSquares, Objective};
use crate::problems::flat::FlatInstance;
use crate::problems::fused::{fused_penalty, gen_fused, FusedLassoInstance, FusedSpec, ProductSpace};
use crate::problems::lasso::{gen_lasso, lasso_objective, LassoInstance, LassoSpec};
use crate::problems::multitask::{baseline_proxes, gen_multitask, multitask_objective, MultitaskInstance, MultitaskSpec};
use crate::problems::sparse_group::{gen_sparse_group, sparse_group_objective, SparseGroupInstance, SparseGroupSpec};
use crate::problems::tv::{gen_tv, tv_objective, TvInstance, TvSpec};
use crate::prox::{tv_dual_clamp, DeltaRule, ProxProvider};
use crate::rng::RngStream;
use crate::solvers::{
    drs_run, dys_run, pdhg_run, pgd_run, ConjugateMode, KmConfig, Relaxation, StepSizes, STEP_SAFETY,
};
use crate::trace::SolverTrace;

/// Default PDHG step sizes for the TV experiment (`τσ·8 < 1`).
pub const TV_STEP: f64 = 0.3;

/// A violated configuration constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub constraint: String,
    pub detail: String,
}

impl Violation {
    fn new(constraint: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { constraint: constraint.into(), detail: detail.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.constraint, self.detail)
    }
}

#[derive(Clone, Debug)]
pub enum Problem {
    Lasso(LassoInstance),
    Multitask(MultitaskInstance),
    Fused(FusedLassoInstance),
    SparseGroup(SparseGroupInstance),
    Tv(TvInstance),
}

impl Problem {
    pub fn to_flat(&self) -> FlatInstance {
        match self {
            Problem::Lasso(i) => i.to_flat(),
            Problem::Multitask(i) => i.to_flat(),
            Problem::Fused(i) => i.to_flat(),
            Problem::SparseGroup(i) => i.to_flat(),
            Problem::Tv(i) => i.to_flat(),
        }
    }

    /// Dispatches on the stored kind.
    pub fn from_flat(flat: &FlatInstance) -> Result<Self> {
        Ok(match flat.kind.as_str() {
            "lasso" => Problem::Lasso(LassoInstance::from_flat(flat)?),
            "multitask" => Problem::Multitask(MultitaskInstance::from_flat(flat)?),
            "fused" => Problem::Fused(FusedLassoInstance::from_flat(flat)?),
            "sparse_group" => Problem::SparseGroup(SparseGroupInstance::from_flat(flat)?),
            "tv" => Problem::Tv(TvInstance::from_flat(flat)?),
            other => return Err(Error::param(format!("unknown instance kind '{other}'"))),
        })
    }

    /// Objective of the experiment at a primal point (flattened for
    /// multitask).
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        match self {
            Problem::Lasso(i) => lasso_objective(x, i),
            Problem::Multitask(i) => multitask_objective(&i.unflatten(x.as_slice()), i),
            Problem::Fused(i) => crate::problems::fused_objective(x, i),
            Problem::SparseGroup(i) => sparse_group_objective(x, i),
            Problem::Tv(i) => tv_objective(x, i),
        }
    }
}

/// A configuration with every default filled in, plus its problem instance.
#[derive(Clone, Debug)]
pub struct Resolved {
    /// `size_scale` is folded into `problem`; steps and iterations are
    /// explicit. Running this configuration again reproduces the run.
    pub cfg: RunConfig,
    pub problem: Problem,
    pub steps: StepSizes,
}

/// Result of one arm.
#[derive(Clone, Debug)]
pub struct ArmRun {
    pub arm: Arm,
    /// Final primal point (flattened column-major for multitask).
    pub x: DVector<f64>,
    pub trace: SolverTrace,
}

fn instance_rng(cfg: &RunConfig) -> RngStream {
    RngStream::new(cfg.seed, 0)
}

/// Base seed of the `index`-th HJ provider of a run.
fn provider_seed(cfg: &RunConfig, index: u64) -> u64 {
    RngStream::new(cfg.seed, 0).derive(0x4A00 + index).seed
}

fn scaled_problem(cfg: &RunConfig) -> Result<(Problem, Value)> {
    let s = cfg.size_scale;
    let rng = instance_rng(cfg);
    let to_value = |v: std::result::Result<Value, serde_json::Error>| v.map_err(Error::from);
    Ok(match cfg.experiment {
        Experiment::Lasso => {
            let spec = cfg.problem_spec::<LassoSpec>()?.scaled(s);
            (Problem::Lasso(gen_lasso(&spec, rng)?), to_value(serde_json::to_value(&spec))?)
        }
        Experiment::Multitask => {
            let spec = cfg.problem_spec::<MultitaskSpec>()?.scaled(s);
            (Problem::Multitask(gen_multitask(&spec, rng)?), to_value(serde_json::to_value(&spec))?)
        }
        Experiment::Fused => {
            let spec = cfg.problem_spec::<FusedSpec>()?.scaled(s);
            (Problem::Fused(gen_fused(&spec, rng)?), to_value(serde_json::to_value(&spec))?)
        }
        Experiment::SparseGroup => {
            let spec = cfg.problem_spec::<SparseGroupSpec>()?.scaled(s);
            (Problem::SparseGroup(gen_sparse_group(&spec, rng)?), to_value(serde_json::to_value(&spec))?)
        }
        Experiment::Tv => {
            let spec = cfg.problem_spec::<TvSpec>()?.scaled(s);
            (Problem::Tv(gen_tv(&spec, rng)?), to_value(serde_json::to_value(&spec))?)
        }
    })
}

fn smooth_lipschitz(problem: &Problem) -> Option<f64> {
    match problem {
        Problem::Lasso(i) => Some(crate::objective::spectral_norm_sq(&i.x)),
        Problem::SparseGroup(i) => Some(crate::objective::spectral_norm_sq(&i.x)),
        _ => None,
    }
}

fn default_steps(cfg: &RunConfig, problem: &Problem) -> StepSizes {
    let t = cfg.steps.t.unwrap_or_else(|| match smooth_lipschitz(problem) {
        Some(l) if l > 0.0 => 1.0 / l,
        _ => 1.0,
    });
    let tau = cfg.steps.tau.unwrap_or(TV_STEP);
    let sigma = cfg.steps.sigma.unwrap_or(TV_STEP);
    if cfg.experiment == Experiment::Tv {
        StepSizes { t: tau, tau, sigma }
    } else {
        StepSizes { t, tau: t, sigma: t }
    }
}

fn check_settings(cfg: &RunConfig, out: &mut Vec<Violation>) {
    if !(cfg.size_scale > 0.0 && cfg.size_scale <= 1.0) {
        out.push(Violation::new("size_scale in (0, 1]", format!("got {}", cfg.size_scale)));
    }
    if cfg.iterations() == 0 {
        out.push(Violation::new("iters >= 1", "the iteration budget must be positive"));
    }
    let arms: BTreeSet<_> = cfg.arms.iter().collect();
    if cfg.arms.is_empty() || arms.len() != cfg.arms.len() {
        out.push(Violation::new("arms", "must be a non-empty subset of {exact, hj} without repeats"));
    }
    if cfg.hj.n_samples == 0 {
        out.push(Violation::new("hj.n_samples >= 1", "the Monte Carlo prox needs at least one sample"));
    }
    if !(cfg.hj.delta0 > 0.0 && cfg.hj.delta0.is_finite()) {
        out.push(Violation::new("hj.delta0 > 0", format!("got {}", cfg.hj.delta0)));
    }
    if !(cfg.hj.exponent > 2.0) {
        out.push(Violation::new(
            "hj.exponent > 2",
            format!(
                "got {}; the schedule delta_k = delta0/k^p must make sqrt(delta_k) summable, \
                 the hypothesis under which the HJ-perturbed splitting methods converge",
                cfg.hj.exponent
            ),
        ));
    }
    let km = &cfg.km;
    if !(km.gamma > 0.0 && km.gamma < 1.0) {
        out.push(Violation::new("km.gamma in (0, 1)", format!("got {}", km.gamma)));
    } else if !(km.relaxation >= km.gamma && km.relaxation <= 2.0 - km.gamma) {
        out.push(Violation::new(
            "km.relaxation in [gamma, 2 - gamma]",
            format!("got {} with gamma = {} (Krasnosel'skii-Mann relaxation bound)", km.relaxation, km.gamma),
        ));
    }
    if !(km.stop_residual >= 0.0) {
        out.push(Violation::new("km.stop_residual >= 0", format!("got {}", km.stop_residual)));
    }
    for (name, v) in [("steps.t", cfg.steps.t), ("steps.tau", cfg.steps.tau), ("steps.sigma", cfg.steps.sigma)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                out.push(Violation::new(format!("{name} > 0"), format!("got {v}")));
            }
        }
    }
}

fn check_steps(cfg: &RunConfig, problem: &Problem, steps: &StepSizes, out: &mut Vec<Violation>) {
    if let Some(l) = smooth_lipschitz(problem) {
        if l > 0.0 && steps.t >= 2.0 / l {
            out.push(Violation::new(
                "t < 2/L",
                format!(
                    "step t = {} but the smooth term has L = {l}, so t must stay below {} for {} to converge",
                    steps.t,
                    2.0 / l,
                    cfg.experiment.solver()
                ),
            ));
        }
    }
    if let Problem::Tv(inst) = problem {
        let a = inst.gradient();
        if let Ok(est) = op_norm_estimate(&a, 200, RngStream::new(0x0A11_CE, 0)) {
            let norm = STEP_SAFETY * est;
            let product = steps.tau * steps.sigma * norm * norm;
            if product >= 1.0 {
                out.push(Violation::new(
                    "tau*sigma*||A||^2 < 1",
                    format!(
                        "tau = {}, sigma = {}, ||A|| ~ {est:.6} (x{STEP_SAFETY} safety) gives {product:.6}; \
                         the PDHG convergence bound requires a product below 1",
                        steps.tau, steps.sigma
                    ),
                ));
            }
        }
    }
}

/// Every violated constraint of `cfg`; empty iff the run may start.
pub fn validate_config(cfg: &RunConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    check_settings(cfg, &mut out);
    if !out.is_empty() {
        return out;
    }
    match scaled_problem(cfg) {
        Ok((problem, _)) => {
            let steps = default_steps(cfg, &problem);
            check_steps(cfg, &problem, &steps, &mut out);
        }
        Err(e) => out.push(Violation::new("problem settings", e.to_string())),
    }
    out
}

/// Validates `cfg`, builds the instance and fills in defaults.
pub fn resolve(cfg: &RunConfig) -> Result<Resolved> {
    let mut violations = Vec::new();
    check_settings(cfg, &mut violations);
    if violations.is_empty() {
        let (problem, spec) = scaled_problem(cfg).map_err(|e| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(format!("problem settings: {other}")),
        })?;
        let steps = default_steps(cfg, &problem);
        check_steps(cfg, &problem, &steps, &mut violations);
        if violations.is_empty() {
            let mut resolved = cfg.clone();
            resolved.size_scale = 1.0;
            resolved.problem = spec;
            resolved.iters = Some(cfg.iterations());
            resolved.output_dir = None;
            resolved.steps = if cfg.experiment == Experiment::Tv {
                super::config::StepConfig { t: None, tau: Some(steps.tau), sigma: Some(steps.sigma) }
            } else {
                super::config::StepConfig { t: Some(steps.t), tau: None, sigma: None }
            };
            return Ok(Resolved { cfg: resolved, problem, steps });
        }
    }
    let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    Err(Error::Config(text.join("; ")))
}

fn km_config(cfg: &RunConfig) -> KmConfig {
    KmConfig {
        relaxation: Relaxation::Constant(cfg.km.relaxation),
        gamma: cfg.km.gamma,
        max_iters: cfg.iterations(),
        stop_residual: cfg.km.stop_residual,
    }
}

struct HjFactory<'a> {
    cfg: &'a RunConfig,
}

impl HjFactory<'_> {
    fn rule(&self) -> DeltaRule {
        DeltaRule::Schedule(self.cfg.hj.schedule())
    }

    fn joint(&self, index: u64, f: Arc<dyn Objective>) -> ProxProvider {
        ProxProvider::hj_joint(f, self.cfg.hj.n_samples, provider_seed(self.cfg, index), self.rule())
    }

    /// Block-wise sampling when configured, joint sampling otherwise.
    fn blocks<F>(&self, index: u64, f: F) -> ProxProvider
    where
        F: crate::objective::SeparableObjective + Objective + 'static,
    {
        let seed = provider_seed(self.cfg, index);
        match self.cfg.hj.sampling {
            Sampling::Separable => ProxProvider::hj_separable(Arc::new(f), self.cfg.hj.n_samples, seed, self.rule()),
            Sampling::Joint => ProxProvider::hj_joint(Arc::new(f), self.cfg.hj.n_samples, seed, self.rule()),
        }
    }
}

/// Runs one arm of a resolved experiment.
pub fn run_arm(res: &Resolved, arm: Arm) -> Result<ArmRun> {
    let cfg = &res.cfg;
    let km = km_config(cfg);
    let steps = res.steps;
    let hj = HjFactory { cfg };
    let objective = |x: &DVector<f64>| res.problem.objective(x);
    let (x, trace) = match &res.problem {
        Problem::Lasso(inst) => {
            let p = inst.x.ncols();
            let f = LeastSquares::new(inst.x.clone(), inst.y.clone())?;
            let g = match arm {
                Arm::Exact => ProxProvider::l1(inst.lambda),
                Arm::Hj => hj.blocks(0, L1Norm::new(p, inst.lambda)),
            };
            let sol = pgd_run(&f, &g, &steps, &DVector::zeros(p), &km, &objective)?;
            (sol.x, sol.trace)
        }
        Problem::Fused(inst) => match arm {
            Arm::Exact => {
                let ps = ProductSpace::new(inst)?;
                let obj = |v: &DVector<f64>| res.problem.objective(&ps.beta(v));
                let sol =
                    drs_run(&ps.f_prox(inst), &ps.graph_projection(), &steps, &DVector::zeros(ps.dim()), &km, &obj)?;
                (ps.beta(&sol.x), sol.trace)
            }
            Arm::Hj => {
                let n = inst.y.len();
                let f = ProxProvider::squared_distance(inst.y.clone());
                let g = hj.joint(0, Arc::new(fused_penalty(inst)));
                let sol = drs_run(&f, &g, &steps, &DVector::zeros(n), &km, &objective)?;
                (sol.x, sol.trace)
            }
        },
        Problem::SparseGroup(inst) => {
            let p = inst.x.ncols();
            let h = LeastSquares::new(inst.x.clone(), inst.y.clone())?;
            let (lg, l1) = inst.lambdas;
            let (f, g) = match arm {
                Arm::Exact => (ProxProvider::group_l2(inst.groups.clone(), lg), ProxProvider::l1(l1)),
                Arm::Hj => (hj.blocks(0, BlockL2Norm::uniform(p, inst.group_size, lg)?), hj.blocks(1, L1Norm::new(p, l1))),
            };
            let sol = dys_run(&f, &g, &h, &steps, &DVector::zeros(p), &km, &objective)?;
            (sol.x, sol.trace)
        }
        Problem::Tv(inst) => {
            let n = inst.size * inst.size;
            let a = inst.gradient();
            let f = inst.data_prox(steps.tau)?;
            let lambda = inst.lambda;
            let (g, mode) = match arm {
                Arm::Exact => (ProxProvider::exact(move |v, _| Ok(tv_dual_clamp(v, lambda))), ConjugateMode::Direct),
                Arm::Hj => (hj.blocks(0, BlockL2Norm::uniform(2 * n, 2, lambda)?), ConjugateMode::Moreau),
            };
            let (m, _) = a.dims();
            let sol = pdhg_run(&f, &g, mode, &a, &steps, &DVector::zeros(n), &DVector::zeros(m), &km, &objective)?;
            (sol.x, sol.trace)
        }
        Problem::Multitask(inst) => {
            let dim = inst.p() * inst.q();
            let (f, g) = match arm {
                Arm::Exact => baseline_proxes(inst),
                Arm::Hj => {
                    let a = inst.clone();
                    let b = inst.clone();
                    let f: Arc<dyn Objective> = Arc::new(FnObjective::new(move |v| a.loss_nuclear(&a.unflatten(v))));
                    let g: Arc<dyn Objective> = Arc::new(FnObjective::new(move |v| b.group_penalty(&b.unflatten(v))));
                    (hj.joint(0, f), hj.joint(1, g))
                }
            };
            let sol = drs_run(&f, &g, &steps, &DVector::zeros(dim), &km, &objective)?;
            (sol.x, sol.trace)
        }
    };
    Ok(ArmRun { arm, x, trace })
}
