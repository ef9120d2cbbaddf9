use nalgebra::DVector;

use super::{check_provider, guard, reported_delta, KmConfig, StepSizes};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::prox::ProxProvider;
use crate::trace::{SolverTrace, TraceRow};

#[derive(Clone, Debug)]
pub struct DysSolution {
    /// Last `y_{k+1} = prox_{tf}(x_k)`.
    pub x: DVector<f64>,
    /// Governing sequence at termination.
    pub governing: DVector<f64>,
    pub trace: SolverTrace,
}

/// Davis–Yin three-operator splitting for `f + g + h` with `h` smooth:
///
/// ```text
/// y_{k+1} = prox_{tf}(x_k)
/// z_{k+1} = prox_{tg}(2y_{k+1} − x_k − t∇h(y_{k+1}))
/// x_{k+1} = x_k + λ_k (z_{k+1} − y_{k+1})
/// ```
///
/// `eps_bound = (1 + tL)‖κ‖ + ‖ζ‖` with the `√(2ntδ_k)` bounds substituted;
/// `L = 0` when the smooth term does not report one.
pub fn dys_run(
    f_prox: &ProxProvider,
    g_prox: &ProxProvider,
    h: &dyn Objective,
    steps: &StepSizes,
    x0: &DVector<f64>,
    cfg: &KmConfig,
    objective: &dyn Fn(&DVector<f64>) -> f64,
) -> Result<DysSolution> {
    cfg.validate()?;
    if !h.has_gradient() {
        return Err(Error::Config("Davis-Yin needs a gradient for the smooth term".into()));
    }
    steps.check_smooth(h.lipschitz_grad())?;
    check_provider(f_prox)?;
    check_provider(g_prox)?;
    let t = steps.t;
    let n = x0.len();
    let lip = h.lipschitz_grad().unwrap_or(0.0);

    let mut x = x0.clone();
    let mut y = x0.clone();
    let mut trace = SolverTrace::with_capacity(cfg.max_iters);
    for k in 1..=cfg.max_iters {
        let lambda = cfg.lambda(k)?;
        y = f_prox.prox(&x, t, k)?;
        let grad = h.gradient(&y).ok_or_else(|| Error::Config("gradient unavailable".into()))?;
        let arg = &y * 2.0 - &x - grad * t;
        let z = g_prox.prox(&arg, t, k)?;
        let step = (z - &y) * lambda;
        x += &step;
        let residual = step.norm();
        let eps = (1.0 + t * lip) * f_prox.error_bound(n, t, k)? + g_prox.error_bound(n, t, k)?;
        let row = TraceRow {
            k,
            objective: objective(&y),
            fp_residual: residual,
            delta_k: reported_delta(&[f_prox, g_prox], k)?,
            eps_bound: eps,
        };
        guard(&[&x, &y], k, &mut trace, row)?;
        if cfg.should_stop(residual) {
            break;
        }
    }
    Ok(DysSolution { x: y, governing: x, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::LeastSquares;
    use nalgebra::DMatrix;

    #[test]
    fn zero_proxes_reduce_to_gradient_descent() {
        let a = DMatrix::from_fn(5, 3, |i, j| ((i + 1) as f64 * 0.3 - j as f64 * 0.2).cos());
        let b = DVector::from_vec(vec![1.0, 0.0, -1.0, 2.0, 0.5]);
        let h = LeastSquares::new(a, b).unwrap();
        let t = 1.0 / h.lipschitz_grad().unwrap();
        let x0 = DVector::from_vec(vec![0.3, -0.2, 1.0]);
        let iters = 40;
        let sol = dys_run(
            &ProxProvider::zero(),
            &ProxProvider::zero(),
            &h,
            &StepSizes::new(t),
            &x0,
            &KmConfig::with_iters(iters),
            &|y| h.value(y),
        )
        .unwrap();
        let mut gd = x0.clone();
        let mut prev = x0.clone();
        for _ in 0..iters {
            prev = gd.clone();
            gd = &gd - h.gradient(&gd).unwrap() * t;
        }
        assert!((&sol.governing - &gd).norm() <= 1e-12);
        // y_{k+1} = x_k lags the governing sequence by one step
        assert!((&sol.x - &prev).norm() <= 1e-12);
    }
}
