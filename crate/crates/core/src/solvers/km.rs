use nalgebra::DVector;

use super::{guard, KmConfig, Solution};
use crate::error::Result;
use crate::trace::{SolverTrace, TraceRow};

/// Perturbed Krasnosel'skiĭ–Mann iteration
/// `x_{k+1} = x_k + λ_k (T x_k + ε_k − x_k)`.
///
/// The trace records `‖T x_k − x_k‖` as the residual and `‖ε_k‖` as the
/// error column. Without an objective the objective column holds `‖x_{k+1}‖`.
pub fn km_iterate(
    mut op: impl FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    x0: &DVector<f64>,
    cfg: &KmConfig,
    noise: Option<&dyn Fn(usize) -> DVector<f64>>,
    objective: Option<&dyn Fn(&DVector<f64>) -> f64>,
) -> Result<Solution> {
    cfg.validate()?;
    let mut x = x0.clone();
    let mut trace = SolverTrace::with_capacity(cfg.max_iters);
    for k in 1..=cfg.max_iters {
        let lambda = cfg.lambda(k)?;
        let tx = op(&x)?;
        let residual = (&tx - &x).norm();
        let (step, eps_norm) = match noise {
            Some(eps) => {
                let e = eps(k);
                let n = e.norm();
                (tx + e - &x, n)
            }
            None => (tx - &x, 0.0),
        };
        x += step * lambda;
        let obj = objective.map_or_else(|| x.norm(), |f| f(&x));
        let row = TraceRow { k, objective: obj, fp_residual: residual, delta_k: 0.0, eps_bound: eps_norm };
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
    use crate::error::Error;
    use crate::solvers::Relaxation;
    use std::sync::Arc;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn identity_map_keeps_start_point() {
        let x0 = v(&[1.0, -2.0, 3.0]);
        let sol = km_iterate(|x| Ok(x.clone()), &x0, &KmConfig::with_iters(25), None, None).unwrap();
        assert_eq!(sol.x, x0);
        assert!(sol.trace.rows().iter().all(|r| r.fp_residual == 0.0));
    }

    #[test]
    fn halving_contracts_geometrically() {
        let sol = km_iterate(|x| Ok(x / 2.0), &v(&[1.0]), &KmConfig::with_iters(60), None, None).unwrap();
        assert!(sol.x.norm() <= 1e-18);
        assert!(sol.trace.is_well_formed());
    }

    #[test]
    fn early_stop_on_residual() {
        let cfg = KmConfig { stop_residual: 1e-3, ..KmConfig::with_iters(1000) };
        let sol = km_iterate(|x| Ok(x / 2.0), &v(&[1.0]), &cfg, None, None).unwrap();
        assert!(sol.trace.len() < 20);
    }

    #[test]
    fn relaxation_bounds_are_enforced() {
        let bad = KmConfig { relaxation: Relaxation::Constant(1.9), gamma: 0.5, ..KmConfig::default() };
        assert!(matches!(km_iterate(|x| Ok(x.clone()), &v(&[1.0]), &bad, None, None), Err(Error::Config(_))));
        let seq = KmConfig {
            relaxation: Relaxation::Sequence(Arc::new(|k| if k < 5 { 1.0 } else { 0.01 })),
            ..KmConfig::with_iters(10)
        };
        assert!(km_iterate(|x| Ok(x.clone()), &v(&[1.0]), &seq, None, None).is_err());
        let gamma = KmConfig { gamma: 1.0, ..KmConfig::default() };
        assert!(gamma.validate().is_err());
    }

    #[test]
    fn over_relaxed_sequence_converges() {
        let cfg = KmConfig {
            relaxation: Relaxation::Sequence(Arc::new(|k| if k % 2 == 0 { 1.5 } else { 0.5 })),
            gamma: 0.4,
            ..KmConfig::with_iters(200)
        };
        let sol = km_iterate(|x| Ok(x / 2.0), &v(&[3.0, 4.0]), &cfg, None, None).unwrap();
        assert!(sol.x.norm() < 1e-12);
    }

    #[test]
    fn divergence_keeps_finite_rows() {
        let err = km_iterate(|x| Ok(x * 1e4), &v(&[1.0]), &KmConfig::with_iters(10), None, None).unwrap_err();
        match err {
            Error::Divergence { iteration, trace } => {
                assert_eq!(iteration, 4);
                assert_eq!(trace.len(), 3);
                assert!(trace.is_well_formed());
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn injected_error_norm_is_recorded() {
        let noise = |k: usize| v(&[1.0 / (k * k) as f64]);
        let sol = km_iterate(|x| Ok(x / 2.0), &v(&[0.0]), &KmConfig::with_iters(5), Some(&noise), None).unwrap();
        let eps: Vec<f64> = sol.trace.rows().iter().map(|r| r.eps_bound).collect();
        assert_eq!(eps, vec![1.0, 0.25, 1.0 / 9.0, 1.0 / 16.0, 1.0 / 25.0]);
    }
}
