use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Maximum number of coordinate-descent sweeps in [`lasso_reference`].
pub const MAX_SWEEPS: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct LassoInstance {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub beta_true: DVector<f64>,
    pub support: Range<usize>,
    pub lambda: f64,
}

/// Generator settings for [`gen_lasso`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoSpec {
    pub n_obs: usize,
    pub p: usize,
    pub support: Range<usize>,
    pub noise_sigma: f64,
    pub lambda: f64,
    /// Standard deviation of the design entries; `None` means `1/√n_obs`.
    pub design_sd: Option<f64>,
}

impl Default for LassoSpec {
    fn default() -> Self {
        Self { n_obs: 250, p: 500, support: 400..410, noise_sigma: 0.1, lambda: 0.05, design_sd: None }
    }
}

impl LassoSpec {
    /// Scales `n_obs`, `p` and the support start by `scale`, keeping the
    /// support width.
    pub fn scaled(&self, scale: f64) -> Self {
        let n_obs = ((self.n_obs as f64 * scale).round() as usize).max(2);
        let p = ((self.p as f64 * scale).round() as usize).max(2);
        let width = self.support.len().min(p);
        let start = ((self.support.start as f64 * scale).round() as usize).min(p - width);
        Self { n_obs, p, support: start..start + width, ..self.clone() }
    }
}

/// Gaussian design `X`, `β = 1` on `support` and 0 elsewhere, and
/// `y = Xβ + σ·ξ`. Design entries come from `rng.derive(0)`, noise from
/// `rng.derive(1)`.
pub fn gen_lasso(spec: &LassoSpec, rng: RngStream) -> Result<LassoInstance> {
    if spec.support.is_empty() || spec.support.end > spec.p {
        return Err(Error::param(format!(
            "support {:?} must be a non-empty range within 0..{}",
            spec.support, spec.p
        )));
    }
    if spec.n_obs == 0 || !(spec.lambda >= 0.0) || !(spec.noise_sigma >= 0.0) {
        return Err(Error::param("lasso needs n_obs ≥ 1, lambda ≥ 0 and noise_sigma ≥ 0"));
    }
    let sd = spec.design_sd.unwrap_or(1.0 / (spec.n_obs as f64).sqrt());
    let x = gaussian_matrix(spec.n_obs, spec.p, sd, rng.derive(0));
    let beta_true = DVector::from_fn(spec.p, |i, _| if spec.support.contains(&i) { 1.0 } else { 0.0 });
    let noise = DVector::from_vec(rng.derive(1).normal_vec(spec.n_obs));
    let y = &x * &beta_true + noise * spec.noise_sigma;
    Ok(LassoInstance { x, y, beta_true, support: spec.support.clone(), lambda: spec.lambda })
}

/// Row-major fill of an `m × n` matrix with `N(0, sd²)` entries.
pub(crate) fn gaussian_matrix(m: usize, n: usize, sd: f64, rng: RngStream) -> DMatrix<f64> {
    let z = rng.normal_vec(m * n);
    DMatrix::from_row_iterator(m, n, z.into_iter().map(|v| v * sd))
}

/// `½‖Xβ − y‖² + λ‖β‖₁`.
pub fn lasso_objective(beta: &DVector<f64>, inst: &LassoInstance) -> f64 {
    0.5 * (&inst.x * beta - &inst.y).norm_squared() + inst.lambda * beta.lp_norm(1)
}

/// Cyclic coordinate descent for `½‖Xβ − y‖² + λ‖β‖₁`, stopped when the
/// largest coordinate change of a sweep is at most `tol`.
pub fn lasso_reference(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, tol: f64) -> Result<DVector<f64>> {
    if !(tol > 0.0) {
        return Err(Error::param("tolerance must be positive"));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
    }
    let p = x.ncols();
    let col_sq: Vec<f64> = (0..p).map(|j| x.column(j).norm_squared()).collect();
    let mut beta = DVector::zeros(p);
    let mut resid = y.clone();
    for _ in 0..MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = x.column(j);
            let old = beta[j];
            let rho = col.dot(&resid) + col_sq[j] * old;
            let new = crate::prox::soft_threshold_scalar(rho, lambda) / col_sq[j];
            if new != old {
                resid.axpy(old - new, &col, 1.0);
                beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if max_change <= tol {
            return Ok(beta);
        }
    }
    Err(Error::NonConvergence(MAX_SWEEPS))
}

/// Indices whose magnitude exceeds `threshold`.
pub fn support_of(beta: &DVector<f64>, threshold: f64) -> Vec<usize> {
    beta.iter().enumerate().filter(|(_, v)| v.abs() > threshold).map(|(i, _)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_shapes() {
        let inst = gen_lasso(&LassoSpec::default(), RngStream::new(1, 0)).unwrap();
        assert_eq!(inst.x.shape(), (250, 500));
        assert_eq!(inst.y.len(), 250);
        assert_eq!(inst.beta_true.iter().filter(|v| **v == 1.0).count(), 10);
        assert_eq!(inst.beta_true[400], 1.0);
        assert_eq!(inst.beta_true[399], 0.0);
    }

    #[test]
    fn bad_support_is_rejected() {
        let spec = LassoSpec { p: 20, support: 15..25, ..LassoSpec::default() };
        assert!(gen_lasso(&spec, RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = LassoSpec::default().scaled(0.2);
        let a = gen_lasso(&spec, RngStream::new(9, 0)).unwrap();
        let b = gen_lasso(&spec, RngStream::new(9, 0)).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
    }

    #[test]
    fn large_lambda_gives_zero() {
        let inst = gen_lasso(&LassoSpec::default().scaled(0.1), RngStream::new(2, 0)).unwrap();
        let lmax = (inst.x.transpose() * &inst.y).amax();
        let beta = lasso_reference(&inst.x, &inst.y, lmax * 1.0001, 1e-12).unwrap();
        assert_eq!(beta.amax(), 0.0);
    }

    #[test]
    fn single_feature_closed_form() {
        let x = DMatrix::from_column_slice(4, 1, &[1.0, -2.0, 0.5, 3.0]);
        let y = DVector::from_vec(vec![0.3, -1.0, 2.0, 1.5]);
        let lambda = 0.7;
        let beta = lasso_reference(&x, &y, lambda, 1e-14).unwrap();
        let xty = x.column(0).dot(&y);
        let expect = crate::prox::soft_threshold_scalar(xty, lambda) / x.column(0).norm_squared();
        assert_abs_diff_eq!(beta[0], expect, epsilon = 1e-10);
    }

    #[test]
    fn zero_lambda_square_system_solves_least_squares() {
        let x = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.2, 1.5, -0.4, 0.0, 0.5, 1.8]);
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let beta = lasso_reference(&x, &y, 0.0, 1e-13).unwrap();
        assert!((&x * beta - y).norm() < 1e-10);
    }

    #[test]
    fn zero_beta_objective_is_half_norm() {
        let inst = gen_lasso(&LassoSpec::default().scaled(0.1), RngStream::new(3, 0)).unwrap();
        let z = DVector::zeros(inst.x.ncols());
        assert_abs_diff_eq!(lasso_objective(&z, &inst), 0.5 * inst.y.norm_squared());
    }
}
