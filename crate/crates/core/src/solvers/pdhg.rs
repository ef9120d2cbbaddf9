use nalgebra::DVector;

use super::{check_provider, guard, reported_delta, KmConfig, StepSizes};
use crate::error::{Error, Result};
use crate::hjprox::prox_conjugate_via_moreau;
use crate::linop::{op_norm_estimate, LinearOperator};
use crate::prox::ProxProvider;
use crate::rng::RngStream;
use crate::trace::{SolverTrace, TraceRow};

/// Inflation applied to the power-iteration norm estimate before checking
/// `τσ‖A‖² < 1`.
pub const STEP_SAFETY: f64 = 1.01;

const NORM_ITERS: usize = 200;

/// How `prox_{σg*}` is obtained from the `g` provider.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConjugateMode {
    /// `y − σ prox_{g/σ}(y/σ)`: the provider is the prox of `g`.
    #[default]
    Moreau,
    /// The provider is already the prox of `g*`.
    Direct,
}

#[derive(Clone, Debug)]
pub struct PdhgSolution {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub trace: SolverTrace,
}

/// PDHG with step sizes validated against the operator norm.
pub struct PdhgSolver<'a> {
    a: &'a dyn LinearOperator,
    steps: StepSizes,
    op_norm: f64,
}

impl<'a> PdhgSolver<'a> {
    /// Fails unless `τσ (1.01·‖A‖_est)² < 1`.
    pub fn new(a: &'a dyn LinearOperator, steps: StepSizes) -> Result<Self> {
        if !(steps.tau > 0.0 && steps.sigma > 0.0) {
            return Err(Error::Config("PDHG step sizes tau and sigma must be positive".into()));
        }
        let op_norm = STEP_SAFETY * op_norm_estimate(a, NORM_ITERS, RngStream::new(0x0A11_CE, 0))?;
        let product = steps.tau * steps.sigma * op_norm * op_norm;
        if product >= 1.0 {
            return Err(Error::Config(format!(
                "PDHG step sizes violate tau*sigma*||A||^2 < 1: tau = {}, sigma = {}, ||A|| ~ {:.6} (x{STEP_SAFETY} safety), product = {:.6}",
                steps.tau, steps.sigma, op_norm / STEP_SAFETY, product
            )));
        }
        Ok(Self { a, steps, op_norm })
    }

    /// Inflated operator-norm estimate used in the step check.
    pub fn op_norm(&self) -> f64 {
        self.op_norm
    }

    /// ```text
    /// y_{k+1} = prox_{σg*}(y_k + σ A x_k)
    /// x_{k+1} = prox_{τf}(x_k − τ Aᵀ y_{k+1})
    /// ```
    ///
    /// The residual is `‖(Δx, Δy)‖_V` with `‖(x, y)‖_V² = ‖x‖²/τ + ‖y‖²/σ`; the
    /// error column is the V-norm bound
    /// `√((2τ‖A‖² + 1/σ) ζ² + (2/τ) κ²)` with `ζ = √(2mσδ_k)` and `κ = √(2nτδ_k)`.
    #[allow(clippy::too_many_arguments)]
    pub fn run(
        &self,
        f_prox: &ProxProvider,
        g_prox: &ProxProvider,
        mode: ConjugateMode,
        x0: &DVector<f64>,
        y0: &DVector<f64>,
        cfg: &KmConfig,
        objective: &dyn Fn(&DVector<f64>) -> f64,
    ) -> Result<PdhgSolution> {
        cfg.validate()?;
        check_provider(f_prox)?;
        check_provider(g_prox)?;
        let (m, n) = self.a.dims();
        if x0.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
        }
        if y0.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: y0.len() });
        }
        let StepSizes { tau, sigma, .. } = self.steps;

        let mut x = x0.clone();
        let mut y = y0.clone();
        let mut trace = SolverTrace::with_capacity(cfg.max_iters);
        for k in 1..=cfg.max_iters {
            let lambda = cfg.lambda(k)?;
            let dual_arg = &y + self.a.apply(&x) * sigma;
            let y_next = match mode {
                ConjugateMode::Moreau => prox_conjugate_via_moreau(g_prox, sigma, &dual_arg, k)?,
                ConjugateMode::Direct => g_prox.prox(&dual_arg, sigma, k)?,
            };
            let primal_arg = &x - self.a.adjoint(&y_next) * tau;
            let x_next = f_prox.prox(&primal_arg, tau, k)?;

            let dx = (x_next - &x) * lambda;
            let dy = (y_next - &y) * lambda;
            x += &dx;
            y += &dy;
            let residual = (dx.norm_squared() / tau + dy.norm_squared() / sigma).sqrt();

            let zeta = match g_prox.delta_at(k)? {
                Some(d) => (2.0 * m.max(1) as f64 * sigma * d).sqrt(),
                None => 0.0,
            };
            let kappa = f_prox.error_bound(n, tau, k)?;
            let eps = ((2.0 * tau * self.op_norm * self.op_norm + 1.0 / sigma) * zeta * zeta
                + 2.0 / tau * kappa * kappa)
                .sqrt();
            let row = TraceRow {
                k,
                objective: objective(&x),
                fp_residual: residual,
                delta_k: reported_delta(&[g_prox, f_prox], k)?,
                eps_bound: eps,
            };
            guard(&[&x, &y], k, &mut trace, row)?;
            if cfg.should_stop(residual) {
                break;
            }
        }
        Ok(PdhgSolution { x, y, trace })
    }
}

/// Validates step sizes, then runs [`PdhgSolver::run`].
#[allow(clippy::too_many_arguments)]
pub fn pdhg_run(
    f_prox: &ProxProvider,
    g_prox: &ProxProvider,
    mode: ConjugateMode,
    a: &dyn LinearOperator,
    steps: &StepSizes,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    cfg: &KmConfig,
    objective: &dyn Fn(&DVector<f64>) -> f64,
) -> Result<PdhgSolution> {
    PdhgSolver::new(a, *steps)?.run(f_prox, g_prox, mode, x0, y0, cfg, objective)
}
