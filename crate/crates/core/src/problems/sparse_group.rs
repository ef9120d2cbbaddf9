use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lasso::gaussian_matrix;
use crate::error::{Error, Result};
use crate::prox::GroupSpec;
use crate::rng::RngStream;

#[derive(Clone, Debug)]
pub struct SparseGroupInstance {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub beta_true: DVector<f64>,
    pub groups: GroupSpec,
    pub group_size: usize,
    /// `(λ₁, λ₂)`: group-ℓ₂ and ℓ₁ weights.
    pub lambdas: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparseGroupSpec {
    pub n_obs: usize,
    pub groups: usize,
    pub group_size: usize,
    /// Leading groups carrying signal.
    pub active_groups: usize,
    /// Leading nonzero coordinates inside each active group.
    pub active_per_group: usize,
    pub noise_sigma: f64,
    pub lambda_group: f64,
    pub lambda_l1: f64,
    pub design_sd: Option<f64>,
}

impl Default for SparseGroupSpec {
    fn default() -> Self {
        Self {
            n_obs: 300,
            groups: 6,
            group_size: 10,
            active_groups: 2,
            active_per_group: 5,
            noise_sigma: 0.1,
            lambda_group: 0.05,
            lambda_l1: 0.05,
            design_sd: None,
        }
    }
}

impl SparseGroupSpec {
    /// Scales the observation count; the group layout is kept.
    pub fn scaled(&self, scale: f64) -> Self {
        Self { n_obs: ((self.n_obs as f64 * scale).round() as usize).max(2), ..self.clone() }
    }
}

/// Gaussian design with `G` contiguous groups. The first `active_per_group`
/// coordinates of each of the first `active_groups` groups equal 1.
pub fn gen_sparse_group(spec: &SparseGroupSpec, rng: RngStream) -> Result<SparseGroupInstance> {
    if spec.groups == 0 || spec.group_size == 0 || spec.n_obs == 0 {
        return Err(Error::param("sparse group instance needs groups, group_size and n_obs ≥ 1"));
    }
    if spec.active_groups > spec.groups || spec.active_per_group > spec.group_size {
        return Err(Error::param("active pattern exceeds the group layout"));
    }
    let p = spec.groups * spec.group_size;
    let sd = spec.design_sd.unwrap_or(1.0 / (spec.n_obs as f64).sqrt());
    let x = gaussian_matrix(spec.n_obs, p, sd, rng.derive(0));
    let beta_true = DVector::from_fn(p, |i, _| {
        let (g, j) = (i / spec.group_size, i % spec.group_size);
        if g < spec.active_groups && j < spec.active_per_group {
            1.0
        } else {
            0.0
        }
    });
    let noise = DVector::from_vec(rng.derive(1).normal_vec(spec.n_obs));
    let y = &x * &beta_true + noise * spec.noise_sigma;
    Ok(SparseGroupInstance {
        x,
        y,
        beta_true,
        groups: GroupSpec::contiguous(spec.groups, spec.group_size, 1.0)?,
        group_size: spec.group_size,
        lambdas: (spec.lambda_group, spec.lambda_l1),
    })
}

/// `½‖Xβ − y‖² + λ₁ Σ_g ‖β_g‖ + λ₂‖β‖₁`.
pub fn sparse_group_objective(beta: &DVector<f64>, inst: &SparseGroupInstance) -> f64 {
    0.5 * (&inst.x * beta - &inst.y).norm_squared()
        + inst.lambdas.0 * inst.groups.penalty(beta.as_slice())
        + inst.lambdas.1 * beta.lp_norm(1)
}

/// A subgradient of [`sparse_group_objective`] (zero chosen at kinks).
pub fn sparse_group_subgradient(beta: &DVector<f64>, inst: &SparseGroupInstance) -> DVector<f64> {
    let mut g = inst.x.transpose() * (&inst.x * beta - &inst.y);
    for (idx, w) in inst.groups.groups().iter().zip(inst.groups.weights()) {
        let norm = idx.iter().map(|&i| beta[i] * beta[i]).sum::<f64>().sqrt();
        if norm > 0.0 {
            for &i in idx {
                g[i] += inst.lambdas.0 * w * beta[i] / norm;
            }
        }
    }
    g + beta.map(|v| inst.lambdas.1 * v.signum() * (v != 0.0) as u8 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout() {
        let inst = gen_sparse_group(&SparseGroupSpec::default(), RngStream::new(1, 0)).unwrap();
        assert_eq!(inst.x.shape(), (300, 60));
        assert_eq!(inst.groups.groups().len(), 6);
        assert_eq!(inst.beta_true.sum(), 10.0);
        assert_eq!(inst.beta_true[10], 1.0);
        assert_eq!(inst.beta_true[15], 0.0);
    }

    #[test]
    fn zero_objective_is_half_norm() {
        let inst = gen_sparse_group(&SparseGroupSpec::default(), RngStream::new(1, 0)).unwrap();
        let z = DVector::zeros(60);
        assert_eq!(sparse_group_objective(&z, &inst), 0.5 * inst.y.norm_squared());
    }
}
