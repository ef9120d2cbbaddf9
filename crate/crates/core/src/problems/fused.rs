use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::FnObjective;
use crate::prox::{quadratic_moreau_prox, soft_threshold, ProxProvider};
use crate::rng::RngStream;

#[derive(Clone, Debug)]
pub struct FusedLassoInstance {
    pub y: DVector<f64>,
    pub signal: DVector<f64>,
    pub d: DMatrix<f64>,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusedSpec {
    pub n: usize,
    pub noise_sigma: f64,
    pub lambda: f64,
}

impl Default for FusedSpec {
    fn default() -> Self {
        Self { n: 256, noise_sigma: 0.05, lambda: 0.5 }
    }
}

impl FusedSpec {
    pub fn scaled(&self, scale: f64) -> Self {
        Self { n: ((self.n as f64 * scale).round() as usize).max(8), ..self.clone() }
    }
}

/// Doppler test function `√(t(1−t)) sin(2π·1.05/(t+0.05))` at `t = i/n`,
/// `i = 0..n`, plus `N(0, σ²)` noise.
pub fn doppler_signal(n: usize, rng: RngStream, noise_sigma: f64) -> Result<DVector<f64>> {
    if n < 8 {
        return Err(Error::param(format!("Doppler signal needs n ≥ 8, got {n}")));
    }
    let noise = rng.normal_vec(n);
    Ok(DVector::from_fn(n, |i, _| doppler(i as f64 / n as f64) + noise_sigma * noise[i]))
}

/// Noise-free Doppler value at `t ∈ [0, 1]`.
pub fn doppler(t: f64) -> f64 {
    (t * (1.0 - t)).sqrt() * (2.0 * PI * 1.05 / (t + 0.05)).sin()
}

/// `(n−3) × n` third-order difference matrix with rows `(−1, 3, −3, 1)`.
pub fn third_diff_matrix(n: usize) -> Result<DMatrix<f64>> {
    if n < 4 {
        return Err(Error::param(format!("third differences need n ≥ 4, got {n}")));
    }
    let mut d = DMatrix::zeros(n - 3, n);
    for i in 0..n - 3 {
        for (j, c) in [-1.0, 3.0, -3.0, 1.0].into_iter().enumerate() {
            d[(i, i + j)] = c;
        }
    }
    Ok(d)
}

pub fn gen_fused(spec: &FusedSpec, rng: RngStream) -> Result<FusedLassoInstance> {
    let signal = doppler_signal(spec.n, rng, 0.0)?;
    let y = doppler_signal(spec.n, rng, spec.noise_sigma)?;
    Ok(FusedLassoInstance { y, signal, d: third_diff_matrix(spec.n)?, lambda: spec.lambda })
}

/// `½‖β − y‖² + λ‖Dβ‖₁`.
pub fn fused_objective(beta: &DVector<f64>, inst: &FusedLassoInstance) -> f64 {
    0.5 * (beta - &inst.y).norm_squared() + inst.lambda * (&inst.d * beta).lp_norm(1)
}

/// `λ‖D·‖₁` as a zeroth-order objective.
pub fn fused_penalty(inst: &FusedLassoInstance) -> FnObjective {
    let d = inst.d.clone();
    let lambda = inst.lambda;
    FnObjective::new(move |b| {
        let mut s = 0.0;
        for i in 0..d.nrows() {
            s += (-b[i] + 3.0 * b[i + 1] - 3.0 * b[i + 2] + b[i + 3]).abs();
        }
        debug_assert_eq!(d.ncols(), b.len());
        lambda * s
    })
}

/// Proximal operators of the product-space splitting of the fused LASSO on
/// stacked variables `(β, w)` with `w ∈ ℝ^{n−3}`:
///
/// * `f(β, w) = ½‖β − y‖² + λ‖w‖₁` (closed form, separable),
/// * `g = ι{w = Dβ}`, projected by solving `(I + DᵀD)β = a + Dᵀb`.
#[derive(Clone)]
pub struct ProductSpace {
    n: usize,
    d: Arc<DMatrix<f64>>,
    chol: Arc<Cholesky<f64, Dyn>>,
}

impl ProductSpace {
    pub fn new(inst: &FusedLassoInstance) -> Result<Self> {
        let n = inst.y.len();
        let gram = DMatrix::identity(n, n) + inst.d.transpose() * &inst.d;
        let chol = Cholesky::new(gram).ok_or_else(|| Error::param("I + DᵀD is not positive definite"))?;
        Ok(Self { n, d: Arc::new(inst.d.clone()), chol: Arc::new(chol) })
    }

    pub fn dim(&self) -> usize {
        self.n + self.d.nrows()
    }

    pub fn beta(&self, v: &DVector<f64>) -> DVector<f64> {
        v.rows(0, self.n).into_owned()
    }

    /// Stacks `(β, Dβ)`.
    pub fn lift(&self, beta: &DVector<f64>) -> DVector<f64> {
        let w = &*self.d * beta;
        let mut v = DVector::zeros(self.dim());
        v.rows_mut(0, self.n).copy_from(beta);
        v.rows_mut(self.n, w.len()).copy_from(&w);
        v
    }

    pub fn f_prox(&self, inst: &FusedLassoInstance) -> ProxProvider {
        let n = self.n;
        let y = inst.y.clone();
        let lambda = inst.lambda;
        ProxProvider::exact(move |v, t| {
            let beta = quadratic_moreau_prox(&v.rows(0, n).into_owned(), &y, t);
            let w = soft_threshold(&v.rows(n, v.len() - n).into_owned(), t * lambda);
            let mut out = DVector::zeros(v.len());
            out.rows_mut(0, n).copy_from(&beta);
            out.rows_mut(n, w.len()).copy_from(&w);
            Ok(out)
        })
    }

    pub fn graph_projection(&self) -> ProxProvider {
        let me = self.clone();
        ProxProvider::exact(move |v, _| {
            let a = v.rows(0, me.n).into_owned();
            let b = v.rows(me.n, v.len() - me.n).into_owned();
            let beta = me.chol.solve(&(a + me.d.transpose() * b));
            Ok(me.lift(&beta))
        })
    }
}
