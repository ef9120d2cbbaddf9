use nalgebra::DVector;

use super::{check_provider, guard, KmConfig, Solution, StepSizes};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::prox::ProxProvider;
use crate::trace::{SolverTrace, TraceRow};

/// Proximal gradient descent `x_{k+1} = prox_{tg}(x_k − t∇f(x_k))`.
///
/// `objective` is evaluated on each new iterate for the trace (usually
/// `f + g`). With an HJ provider, `eps_bound = √(2ntδ_k)`.
pub fn pgd_run(
    f: &dyn Objective,
    g_prox: &ProxProvider,
    steps: &StepSizes,
    x0: &DVector<f64>,
    cfg: &KmConfig,
    objective: &dyn Fn(&DVector<f64>) -> f64,
) -> Result<Solution> {
    cfg.validate()?;
    if !f.has_gradient() {
        return Err(Error::Config("proximal gradient needs a gradient for the smooth term".into()));
    }
    steps.check_smooth(f.lipschitz_grad())?;
    check_provider(g_prox)?;
    let t = steps.t;
    let n = x0.len();

    let mut x = x0.clone();
    let mut trace = SolverTrace::with_capacity(cfg.max_iters);
    for k in 1..=cfg.max_iters {
        let lambda = cfg.lambda(k)?;
        let grad = f
            .gradient(&x)
            .ok_or_else(|| Error::Config("gradient unavailable".into()))?;
        let forward = &x - grad * t;
        let tx = g_prox.prox(&forward, t, k)?;
        let step = (tx - &x) * lambda;
        x += &step;
        let residual = step.norm();
        let row = TraceRow {
            k,
            objective: objective(&x),
            fp_residual: residual,
            delta_k: g_prox.delta_at(k)?.unwrap_or(0.0),
            eps_bound: g_prox.error_bound(n, t, k)?,
        };
        guard(&[&x], k, &mut trace, row)?;
        if cfg.should_stop(residual) {
            break;
        }
    }
    Ok(Solution { x, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{FnObjective, SquaredDistance, Zero};

    #[test]
    fn unit_step_lands_on_quadratic_minimizer() {
        let c = DVector::from_vec(vec![1.5, -2.0, 0.25]);
        let f = SquaredDistance { center: c.clone() };
        let sol = pgd_run(
            &f,
            &ProxProvider::zero(),
            &StepSizes::new(1.0),
            &DVector::zeros(3),
            &KmConfig::with_iters(1),
            &|x| f.value(x),
        )
        .unwrap();
        assert!((sol.x - c).norm() < 1e-15);
    }

    #[test]
    fn rejects_missing_gradient_and_long_steps() {
        let no_grad = FnObjective::new(|x| x[0] * x[0]);
        let r = pgd_run(
            &no_grad,
            &ProxProvider::zero(),
            &StepSizes::new(0.1),
            &DVector::zeros(1),
            &KmConfig::default(),
            &|_| 0.0,
        );
        assert!(matches!(r, Err(Error::Config(_))));
        let f = SquaredDistance { center: DVector::zeros(1) };
        let r = pgd_run(&f, &ProxProvider::zero(), &StepSizes::new(2.0), &DVector::zeros(1), &KmConfig::default(), &|_| 0.0);
        assert!(matches!(r, Err(Error::Config(_))));
        let r = pgd_run(&Zero, &ProxProvider::zero(), &StepSizes::new(-1.0), &DVector::zeros(1), &KmConfig::default(), &|_| 0.0);
        assert!(r.is_err());
    }
}
