use nalgebra::DVector;

use super::{check_provider, guard, reported_delta, KmConfig, StepSizes};
use crate::error::Result;
use crate::prox::ProxProvider;
use crate::trace::{SolverTrace, TraceRow};

#[derive(Clone, Debug)]
pub struct DrsSolution {
    /// `prox_{tf}(z)` at the final governing iterate.
    pub x: DVector<f64>,
    /// Last `x_{k+1/2} = prox_{tf}(z_k)`.
    pub x_half: DVector<f64>,
    /// Last `x_{k+1} = prox_{tg}(2x_{k+1/2} − z_k)`.
    pub x_g: DVector<f64>,
    pub z: DVector<f64>,
    pub trace: SolverTrace,
}

/// Douglas–Rachford splitting on the governing sequence `z`:
///
/// ```text
/// x_{k+1/2} = prox_{tf}(z_k)
/// x_{k+1}   = prox_{tg}(2 x_{k+1/2} − z_k)
/// z_{k+1}   = z_k + λ_k (x_{k+1} − x_{k+1/2})
/// ```
///
/// The trace objective is evaluated at `x_{k+1/2}`, the residual is
/// `‖z_{k+1} − z_k‖` and `eps_bound = 3‖κ‖ + ‖ζ‖` with each prox error
/// replaced by its `√(2ntδ_k)` bound.
pub fn drs_run(
    f_prox: &ProxProvider,
    g_prox: &ProxProvider,
    steps: &StepSizes,
    z0: &DVector<f64>,
    cfg: &KmConfig,
    objective: &dyn Fn(&DVector<f64>) -> f64,
) -> Result<DrsSolution> {
    cfg.validate()?;
    steps.check_t()?;
    check_provider(f_prox)?;
    check_provider(g_prox)?;
    let t = steps.t;
    let n = z0.len();

    let mut z = z0.clone();
    let mut x_half = z0.clone();
    let mut x_g = z0.clone();
    let mut trace = SolverTrace::with_capacity(cfg.max_iters);
    let mut last_k = 0;
    for k in 1..=cfg.max_iters {
        let lambda = cfg.lambda(k)?;
        x_half = f_prox.prox(&z, t, k)?;
        let reflected = &x_half * 2.0 - &z;
        x_g = g_prox.prox(&reflected, t, k)?;
        let step = (&x_g - &x_half) * lambda;
        z += &step;
        let residual = step.norm();
        let eps = 3.0 * f_prox.error_bound(n, t, k)? + g_prox.error_bound(n, t, k)?;
        let row = TraceRow {
            k,
            objective: objective(&x_half),
            fp_residual: residual,
            delta_k: reported_delta(&[f_prox, g_prox], k)?,
            eps_bound: eps,
        };
        guard(&[&z, &x_half, &x_g], k, &mut trace, row)?;
        last_k = k;
        if cfg.should_stop(residual) {
            break;
        }
    }
    let x = f_prox.prox(&z, t, last_k + 1)?;
    Ok(DrsSolution { x, x_half, x_g, z, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn common_minimizer_is_found() {
        let c = v(&[1.0, -3.0, 0.5]);
        let p = ProxProvider::squared_distance(c.clone());
        let sol = drs_run(&p, &p, &StepSizes::new(0.7), &DVector::zeros(3), &KmConfig::with_iters(200), &|_| 0.0)
            .unwrap();
        assert!((&sol.x - &c).norm() < 1e-10);
        assert!(sol.trace.last().unwrap().fp_residual <= 1e-8);
    }

    #[test]
    fn projection_of_unconstrained_minimizer() {
        // min ½(x + 1)² s.t. x ≥ 0 has solution 0.
        let f = ProxProvider::squared_distance(v(&[-1.0]));
        let g = ProxProvider::nonneg();
        let sol = drs_run(&f, &g, &StepSizes::new(1.0), &v(&[5.0]), &KmConfig::with_iters(500), &|_| 0.0).unwrap();
        assert!(sol.x[0].abs() <= 1e-6, "{}", sol.x[0]);
        assert!(sol.x_g[0].abs() <= 1e-6);
    }
}
