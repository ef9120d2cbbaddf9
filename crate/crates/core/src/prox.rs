//! Closed-form proximal operators and the provider abstraction that lets a
//! solver swap them for the HJ approximation.
//!
//! Every prox takes its scale `t` explicitly: `prox_{tf}(x) = argmin_z f(z) + ‖z − x‖²/(2t)`.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hjprox::{hj_error_bound, hj_prox, hj_prox_separable, DeltaSchedule, HjProxParams};
use crate::objective::{Objective, SeparableObjective};
use crate::rng::RngStream;

/// `sign(xᵢ)·max(|xᵢ| − τ, 0)`.
pub fn soft_threshold(x: &DVector<f64>, tau: f64) -> DVector<f64> {
    x.map(|v| soft_threshold_scalar(v, tau))
}

#[inline]
pub fn soft_threshold_scalar(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// Disjoint, covering, non-empty index groups with non-negative weights.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupSpec {
    groups: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl GroupSpec {
    pub fn new(groups: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        if groups.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: groups.len(), got: weights.len() });
        }
        let n: usize = groups.iter().map(Vec::len).sum();
        let mut seen = HashSet::with_capacity(n);
        for (g, idx) in groups.iter().enumerate() {
            if idx.is_empty() {
                return Err(Error::param(format!("group {g} is empty")));
            }
            for &i in idx {
                if i >= n || !seen.insert(i) {
                    return Err(Error::param(format!("groups must partition 0..{n}; bad index {i}")));
                }
            }
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::param("group weights must be non-negative"));
        }
        Ok(Self { groups, weights })
    }

    /// `count` consecutive groups of `size` coordinates, common weight.
    pub fn contiguous(count: usize, size: usize, weight: f64) -> Result<Self> {
        let groups = (0..count).map(|g| (g * size..(g + 1) * size).collect()).collect();
        Self::new(groups, vec![weight; count])
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// `Σ_g w_g ‖x_g‖`.
    pub fn penalty(&self, x: &[f64]) -> f64 {
        self.groups
            .iter()
            .zip(&self.weights)
            .map(|(g, w)| w * g.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt())
            .sum()
    }
}

/// Block soft thresholding `x_g · max(1 − τ w_g / ‖x_g‖, 0)`; zero groups stay zero.
pub fn group_soft_threshold(x: &DVector<f64>, spec: &GroupSpec, tau: f64) -> DVector<f64> {
    let mut out = x.clone();
    for (g, w) in spec.groups.iter().zip(&spec.weights) {
        let norm = g.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { (1.0 - tau * w / norm).max(0.0) } else { 0.0 };
        for &i in g {
            out[i] = x[i] * scale;
        }
    }
    out
}

/// `U · softthresh(Σ, τ) · Vᵀ`.
pub fn singular_value_threshold(b: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Svd);
    }
    if b.is_empty() {
        return Ok(b.clone());
    }
    let mut svd = b.clone().svd(true, true);
    svd.singular_values.apply(|s| *s = (*s - tau).max(0.0));
    svd.recompose().map_err(|_| Error::Svd)
}

pub fn nuclear_norm(b: &DMatrix<f64>) -> f64 {
    if b.is_empty() {
        return 0.0;
    }
    b.clone().singular_values().sum()
}

/// Exact prox of `½‖β − y‖²` at `v`: `(v + t y) / (1 + t)`.
pub fn quadratic_moreau_prox(v: &DVector<f64>, y: &DVector<f64>, t: f64) -> DVector<f64> {
    (v + y * t) / (1.0 + t)
}

/// Per-pixel projection of an interleaved dual field `(pₓ, p_y)` onto the
/// radius-`λ` Euclidean ball.
pub fn tv_dual_clamp(p: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let mut out = p.clone();
    for pair in out.as_mut_slice().chunks_exact_mut(2) {
        let norm = (pair[0] * pair[0] + pair[1] * pair[1]).sqrt();
        let scale = (norm / lambda).max(1.0);
        pair[0] /= scale;
        pair[1] /= scale;
    }
    out
}

/// Projection onto the non-negative orthant.
pub fn project_nonneg(x: &DVector<f64>) -> DVector<f64> {
    x.map(|v| v.max(0.0))
}

type ExactFn = dyn Fn(&DVector<f64>, f64) -> Result<DVector<f64>> + Send + Sync;

/// How the HJ temperature is chosen per iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeltaRule {
    Schedule(DeltaSchedule),
    Fixed(f64),
}

impl DeltaRule {
    pub fn at(&self, k: usize) -> Result<f64> {
        match self {
            DeltaRule::Schedule(s) => s.at(k),
            DeltaRule::Fixed(d) => Ok(*d),
        }
    }
}

/// What the HJ sampler evaluates.
#[derive(Clone)]
pub enum HjTarget {
    /// Sample all coordinates jointly.
    Joint(Arc<dyn Objective>),
    /// Sample each block of a separable objective independently.
    Separable(Arc<dyn SeparableObjective>),
}

/// Monte Carlo prox source: a target function, a sample count, a base seed
/// and a temperature rule. Samples at iteration `k` come from stream `k`.
#[derive(Clone)]
pub struct HjProvider {
    pub target: HjTarget,
    pub n_samples: usize,
    pub seed: u64,
    pub delta: DeltaRule,
}

/// A proximal-operator source: a closed form or the HJ sampler.
#[derive(Clone)]
pub enum ProxProvider {
    Exact(Arc<ExactFn>),
    Hj(HjProvider),
}

impl fmt::Debug for ProxProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProxProvider::Exact(_) => f.write_str("ProxProvider::Exact"),
            ProxProvider::Hj(h) => f
                .debug_struct("ProxProvider::Hj")
                .field("n_samples", &h.n_samples)
                .field("seed", &h.seed)
                .field("delta", &h.delta)
                .finish(),
        }
    }
}

impl ProxProvider {
    pub fn exact(f: impl Fn(&DVector<f64>, f64) -> Result<DVector<f64>> + Send + Sync + 'static) -> Self {
        ProxProvider::Exact(Arc::new(f))
    }

    pub fn hj_joint(f: Arc<dyn Objective>, n_samples: usize, seed: u64, delta: DeltaRule) -> Self {
        ProxProvider::Hj(HjProvider { target: HjTarget::Joint(f), n_samples, seed, delta })
    }

    pub fn hj_separable(
        f: Arc<dyn SeparableObjective>,
        n_samples: usize,
        seed: u64,
        delta: DeltaRule,
    ) -> Self {
        ProxProvider::Hj(HjProvider { target: HjTarget::Separable(f), n_samples, seed, delta })
    }

    /// Prox of the zero function (identity).
    pub fn zero() -> Self {
        Self::exact(|x, _| Ok(x.clone()))
    }

    /// Prox of `λ‖·‖₁`.
    pub fn l1(weight: f64) -> Self {
        Self::exact(move |x, t| Ok(soft_threshold(x, t * weight)))
    }

    /// Prox of `λ Σ_g w_g ‖x_g‖`.
    pub fn group_l2(spec: GroupSpec, weight: f64) -> Self {
        Self::exact(move |x, t| Ok(group_soft_threshold(x, &spec, t * weight)))
    }

    /// Prox of `½‖· − c‖²`.
    pub fn squared_distance(center: DVector<f64>) -> Self {
        Self::exact(move |x, t| Ok(quadratic_moreau_prox(x, &center, t)))
    }

    /// Projection onto `{x ≥ 0}`.
    pub fn nonneg() -> Self {
        Self::exact(|x, _| Ok(project_nonneg(x)))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ProxProvider::Exact(_))
    }

    /// `δ_k` for HJ providers, `None` for exact ones.
    pub fn delta_at(&self, k: usize) -> Result<Option<f64>> {
        match self {
            ProxProvider::Exact(_) => Ok(None),
            ProxProvider::Hj(h) => h.delta.at(k).map(Some),
        }
    }

    /// `√(2ntδ_k)` for HJ providers, zero for exact ones.
    pub fn error_bound(&self, n: usize, t: f64, k: usize) -> Result<f64> {
        match self.delta_at(k)? {
            None => Ok(0.0),
            Some(d) => hj_error_bound(n.max(1), t, d),
        }
    }

    /// `prox_{t·f}(x)`, resolved at iteration `k` for HJ providers.
    pub fn prox(&self, x: &DVector<f64>, t: f64, k: usize) -> Result<DVector<f64>> {
        match self {
            ProxProvider::Exact(f) => f(x, t),
            ProxProvider::Hj(h) => {
                let delta = h.delta.at(k.max(1))?;
                let params = HjProxParams::new(delta, t, h.n_samples, RngStream::new(h.seed, k as u64))?;
                match &h.target {
                    HjTarget::Joint(f) => hj_prox(f.as_ref(), x, &params),
                    HjTarget::Separable(f) => hj_prox_separable(f.as_ref(), x, &params),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&v(&[3.0, -0.5]), 1.0), v(&[2.0, 0.0]));
        assert_eq!(soft_threshold(&v(&[3.0, -0.5]), 0.0), v(&[3.0, -0.5]));
        assert_abs_diff_eq!(soft_threshold(&v(&[-2.0]), 0.5)[0], -1.5);
    }

    #[test]
    fn group_soft_threshold_examples() {
        let spec = GroupSpec::contiguous(1, 2, 1.0).unwrap();
        let out = group_soft_threshold(&v(&[3.0, 4.0]), &spec, 1.0);
        assert_abs_diff_eq!(out[0], 2.4, epsilon = 1e-14);
        assert_abs_diff_eq!(out[1], 3.2, epsilon = 1e-14);
        assert_eq!(group_soft_threshold(&v(&[3.0, 4.0]), &spec, 0.0), v(&[3.0, 4.0]));
        assert_eq!(group_soft_threshold(&v(&[3.0, 4.0]), &spec, 5.0), v(&[0.0, 0.0]));
        assert_eq!(group_soft_threshold(&v(&[0.0, 0.0]), &spec, 0.0), v(&[0.0, 0.0]));
    }

    #[test]
    fn group_spec_validation() {
        assert!(GroupSpec::new(vec![vec![0, 1], vec![1]], vec![1.0, 1.0]).is_err());
        assert!(GroupSpec::new(vec![vec![0], vec![]], vec![1.0, 1.0]).is_err());
        assert!(GroupSpec::new(vec![vec![0], vec![2]], vec![1.0, 1.0]).is_err());
        assert!(GroupSpec::new(vec![vec![0], vec![1]], vec![1.0, -1.0]).is_err());
        let ok = GroupSpec::new(vec![vec![1], vec![0, 2]], vec![0.5, 2.0]).unwrap();
        assert_eq!(ok.dim(), 3);
        assert_abs_diff_eq!(ok.penalty(&[3.0, 1.0, 4.0]), 0.5 + 10.0);
    }

    #[test]
    fn svt_examples() {
        let b = DMatrix::from_diagonal(&v(&[3.0, 1.0]));
        let out = singular_value_threshold(&b, 2.0).unwrap();
        assert!((out - DMatrix::from_diagonal(&v(&[1.0, 0.0]))).norm() < 1e-12);
        let r = DMatrix::from_fn(5, 3, |i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0);
        assert!((singular_value_threshold(&r, 0.0).unwrap() - &r).norm() < 1e-10);
        assert!(nuclear_norm(&singular_value_threshold(&r, 0.7).unwrap()) <= nuclear_norm(&r));
        let mut bad = r.clone();
        bad[(0, 0)] = f64::NAN;
        assert!(matches!(singular_value_threshold(&bad, 1.0), Err(Error::Svd)));
    }

    #[test]
    fn svt_is_locally_optimal() {
        let b = DMatrix::from_fn(5, 3, |i, j| (1.3 * i as f64 - 0.7 * j as f64).sin() * 2.0);
        let tau = 0.5;
        let z = singular_value_threshold(&b, tau).unwrap();
        let obj = |m: &DMatrix<f64>| 0.5 * (m - &b).norm_squared() + tau * nuclear_norm(m);
        let base = obj(&z);
        let noise = RngStream::new(17, 0).normal_vec(15 * 1000);
        for trial in 0..1000 {
            let d = DMatrix::from_column_slice(5, 3, &noise[trial * 15..(trial + 1) * 15]);
            let scaled = &d * (1e-3 / d.norm());
            assert!(obj(&(&z + scaled)) >= base - 1e-9);
        }
    }

    #[test]
    fn quadratic_prox_examples() {
        let y = v(&[1.0, -2.0]);
        assert!((quadratic_moreau_prox(&y, &y, 0.7) - &y).norm() < 1e-15);
        let vv = v(&[3.0, 5.0]);
        let out = quadratic_moreau_prox(&vv, &y, 1e-12);
        assert!((&out - &vv).norm() <= 1e-9 * (&vv - &y).norm());
        assert_abs_diff_eq!(quadratic_moreau_prox(&v(&[0.0]), &v(&[2.0]), 1.0)[0], 1.0);
    }

    #[test]
    fn tv_dual_clamp_examples() {
        let inside = v(&[0.1, 0.2, -0.3, 0.0]);
        assert_eq!(tv_dual_clamp(&inside, 1.0), inside);
        let out = tv_dual_clamp(&v(&[3.0, 4.0]), 1.0);
        assert_abs_diff_eq!(out[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 0.8, epsilon = 1e-15);
        assert_eq!(tv_dual_clamp(&v(&[0.0, 0.0]), 2.0), v(&[0.0, 0.0]));
    }

    #[test]
    fn provider_reports_error_bounds() {
        let exact = ProxProvider::l1(1.0);
        assert_eq!(exact.error_bound(10, 1.0, 3).unwrap(), 0.0);
        assert_eq!(exact.delta_at(3).unwrap(), None);
        let hj = ProxProvider::hj_separable(
            Arc::new(crate::objective::L1Norm::new(2, 1.0)),
            10,
            0,
            DeltaRule::Fixed(0.01),
        );
        assert_abs_diff_eq!(hj.error_bound(2, 1.0, 5).unwrap(), 0.2, epsilon = 1e-15);
        assert!(!hj.is_exact());
    }
}
