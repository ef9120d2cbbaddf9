use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::{Convolution2d, Gradient2d, LinearOperator};
use crate::prox::ProxProvider;
use crate::rng::RngStream;

/// Images are `s × s`, flattened row-major.
#[derive(Clone, Debug)]
pub struct TvInstance {
    pub size: usize,
    pub truth: DVector<f64>,
    pub blur: Convolution2d,
    pub y: DVector<f64>,
    pub lambda: f64,
    pub smoothing_eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvSpec {
    pub size: usize,
    pub kernel_size: usize,
    /// Gaussian kernel width; `0` selects the identity kernel.
    pub kernel_sigma: f64,
    pub noise_sigma: f64,
    pub lambda: f64,
    pub smoothing_eps: f64,
}

impl Default for TvSpec {
    fn default() -> Self {
        Self { size: 64, kernel_size: 5, kernel_sigma: 1.0, noise_sigma: 0.1, lambda: 0.05, smoothing_eps: 1e-8 }
    }
}

impl TvSpec {
    pub fn scaled(&self, scale: f64) -> Self {
        Self { size: ((self.size as f64 * scale).round() as usize).max(8), ..self.clone() }
    }
}

/// Black-and-white test image: a rectangle and a disc on a zero background.
pub fn shapes_image(s: usize) -> DVector<f64> {
    let sf = s as f64;
    DVector::from_fn(s * s, |p, _| {
        let (i, j) = ((p / s) as f64 + 0.5, (p % s) as f64 + 0.5);
        let rect = i >= sf * 0.15 && i < sf * 0.45 && j >= sf * 0.1 && j < sf * 0.6;
        let (di, dj) = (i - sf * 0.65, j - sf * 0.65);
        let disc = di * di + dj * dj <= (sf * 0.22) * (sf * 0.22);
        if rect || disc {
            1.0
        } else {
            0.0
        }
    })
}

/// Blurs [`shapes_image`] with the configured kernel and adds noise.
pub fn gen_tv(spec: &TvSpec, rng: RngStream) -> Result<TvInstance> {
    if spec.size < 8 {
        return Err(Error::param(format!("TV image size must be ≥ 8, got {}", spec.size)));
    }
    let kernel = if spec.kernel_sigma == 0.0 {
        if spec.kernel_size % 2 == 0 {
            return Err(Error::param(format!("kernel size must be odd, got {}", spec.kernel_size)));
        }
        Convolution2d::identity_kernel(spec.kernel_size)
    } else {
        Convolution2d::gaussian_kernel(spec.kernel_size, spec.kernel_sigma)?
    };
    let s = spec.size;
    let blur = Convolution2d::new(s, s, kernel, spec.kernel_size)?;
    let truth = shapes_image(s);
    let noise = DVector::from_vec(rng.normal_vec(s * s));
    let y = blur.apply(&truth) + noise * spec.noise_sigma;
    Ok(TvInstance { size: s, truth, blur, y, lambda: spec.lambda, smoothing_eps: spec.smoothing_eps })
}

impl TvInstance {
    pub fn gradient(&self) -> Gradient2d {
        Gradient2d::new(self.size, self.size)
    }

    /// `Σ √(∇ₓ² + ∇ᵧ² + ε²)` with forward differences.
    pub fn tv(&self, beta: &DVector<f64>) -> f64 {
        let g = self.gradient().apply(beta);
        let e2 = self.smoothing_eps * self.smoothing_eps;
        g.as_slice().chunks_exact(2).map(|p| (p[0] * p[0] + p[1] * p[1] + e2).sqrt()).sum()
    }

    /// Exact prox of `½‖K·−y‖²` at scale `τ`: solves `(I + τKᵀK)x = v + τKᵀy`
    /// with a dense Cholesky factor computed once per `τ`.
    pub fn data_prox(&self, tau: f64) -> Result<ProxProvider> {
        let n = self.size * self.size;
        let mut ktk = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            ktk.set_column(j, &self.blur.adjoint(&self.blur.apply(&e)));
        }
        let sys = DMatrix::identity(n, n) + ktk * tau;
        let chol: Arc<Cholesky<f64, Dyn>> =
            Arc::new(Cholesky::new(sys).ok_or_else(|| Error::param("I + τKᵀK is not positive definite"))?);
        let kty = self.blur.adjoint(&self.y);
        Ok(ProxProvider::exact(move |v, t| {
            if (t - tau).abs() > 1e-15 * tau.max(1.0) {
                return Err(Error::param(format!("data prox factored for tau = {tau}, called with {t}")));
            }
            Ok(chol.solve(&(v + &kty * tau)))
        }))
    }
}

/// `½‖Kβ − y‖² + λ Σ √(∇ₓβ² + ∇ᵧβ² + ε²)`.
pub fn tv_objective(beta: &DVector<f64>, inst: &TvInstance) -> f64 {
    0.5 * (inst.blur.apply(beta) - &inst.y).norm_squared() + inst.lambda * inst.tv(beta)
}
