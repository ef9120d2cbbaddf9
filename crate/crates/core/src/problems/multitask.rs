use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lasso::gaussian_matrix;
use crate::error::{Error, Result};
use crate::objective::spectral_norm_sq;
use crate::prox::{nuclear_norm, singular_value_threshold, ProxProvider};
use crate::rng::RngStream;

/// FISTA iterations for the loss + nuclear norm prox of the baseline.
pub const FISTA_ITERS: usize = 500;
/// Dykstra iterations for the row + column group prox of the baseline.
pub const DYKSTRA_ITERS: usize = 100;
/// Dykstra stops early once an iterate moves by at most this much.
pub const DYKSTRA_TOL: f64 = 1e-10;

/// Coefficient matrices are flattened column-major (`p·q` entries, task
/// `j` occupies `j·p .. (j+1)·p`).
#[derive(Clone, Debug)]
pub struct MultitaskInstance {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub b_true: DMatrix<f64>,
    /// `(λ₁, λ₂, λ₃)`: nuclear, row-group and column-group weights.
    pub lambdas: (f64, f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultitaskSpec {
    pub n_obs: usize,
    pub p: usize,
    pub q: usize,
    /// Rank of the true coefficient matrix.
    pub rank: usize,
    /// Leading rows of the true coefficient matrix that are nonzero.
    pub active_rows: usize,
    pub noise_sigma: f64,
    pub lambda_nuclear: f64,
    pub lambda_row: f64,
    pub lambda_col: f64,
    pub design_sd: Option<f64>,
}

impl Default for MultitaskSpec {
    fn default() -> Self {
        Self {
            n_obs: 50,
            p: 30,
            q: 9,
            rank: 2,
            active_rows: 6,
            noise_sigma: 0.1,
            lambda_nuclear: 0.1,
            lambda_row: 0.1,
            lambda_col: 0.1,
            design_sd: None,
        }
    }
}

impl MultitaskSpec {
    pub fn scaled(&self, scale: f64) -> Self {
        let s = |v: usize, min: usize| ((v as f64 * scale).round() as usize).max(min);
        let p = s(self.p, 2);
        let q = s(self.q, 2);
        Self {
            n_obs: s(self.n_obs, 2),
            p,
            q,
            rank: self.rank.min(p).min(q).max(1),
            active_rows: s(self.active_rows, 1).min(p),
            ..self.clone()
        }
    }
}

/// `B = U Vᵀ` restricted to the first `active_rows` rows, `U`, `V` Gaussian;
/// `Y = XB + σ·Ξ`.
pub fn gen_multitask(spec: &MultitaskSpec, rng: RngStream) -> Result<MultitaskInstance> {
    if spec.n_obs == 0 || spec.p == 0 || spec.q == 0 || spec.rank == 0 {
        return Err(Error::param("multitask dimensions must be positive"));
    }
    if spec.active_rows > spec.p {
        return Err(Error::param("active_rows exceeds p"));
    }
    let sd = spec.design_sd.unwrap_or(1.0 / (spec.n_obs as f64).sqrt());
    let x = gaussian_matrix(spec.n_obs, spec.p, sd, rng.derive(0));
    let mut u = gaussian_matrix(spec.p, spec.rank, 1.0, rng.derive(1));
    for i in spec.active_rows..spec.p {
        u.row_mut(i).fill(0.0);
    }
    let v = gaussian_matrix(spec.q, spec.rank, 1.0 / (spec.rank as f64).sqrt(), rng.derive(2));
    let b_true = u * v.transpose();
    let noise = gaussian_matrix(spec.n_obs, spec.q, spec.noise_sigma, rng.derive(3));
    let y = &x * &b_true + noise;
    Ok(MultitaskInstance {
        x,
        y,
        b_true,
        lambdas: (spec.lambda_nuclear, spec.lambda_row, spec.lambda_col),
    })
}

impl MultitaskInstance {
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }

    pub fn unflatten(&self, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.p(), self.q(), v)
    }

    pub fn loss(&self, b: &DMatrix<f64>) -> f64 {
        0.5 * (&self.x * b - &self.y).norm_squared()
    }

    /// `λ₂ Σᵢ ‖b_{i·}‖ + λ₃ Σⱼ ‖b_{·j}‖`.
    pub fn group_penalty(&self, b: &DMatrix<f64>) -> f64 {
        let rows: f64 = b.row_iter().map(|r| r.norm()).sum();
        let cols: f64 = b.column_iter().map(|c| c.norm()).sum();
        self.lambdas.1 * rows + self.lambdas.2 * cols
    }

    /// `½‖XB − Y‖² + λ₁‖B‖_*`, `+∞` if the SVD fails.
    pub fn loss_nuclear(&self, b: &DMatrix<f64>) -> f64 {
        self.loss(b) + self.lambdas.0 * nuclear_norm(b)
    }
}

/// `½‖XB − Y‖_F² + λ₁‖B‖_* + λ₂ Σᵢ ‖b_{i·}‖ + λ₃ Σⱼ ‖b_{·j}‖`.
pub fn multitask_objective(b: &DMatrix<f64>, inst: &MultitaskInstance) -> f64 {
    inst.loss_nuclear(b) + inst.group_penalty(b)
}

fn shrink_rows(b: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let mut out = b.clone();
    for mut r in out.row_iter_mut() {
        let n = r.norm();
        let s = if n > tau { 1.0 - tau / n } else { 0.0 };
        r *= s;
    }
    out
}

fn shrink_cols(b: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let mut out = b.clone();
    for mut c in out.column_iter_mut() {
        let n = c.norm();
        let s = if n > tau { 1.0 - tau / n } else { 0.0 };
        c *= s;
    }
    out
}

/// `prox_{t(λ₂ rows + λ₃ cols)}(V)` by proximal Dykstra alternating the row
/// and column group shrinkages.
pub fn dykstra_group_prox(v: &DMatrix<f64>, t: f64, lambdas: (f64, f64), iters: usize, tol: f64) -> DMatrix<f64> {
    let mut x = v.clone();
    let mut p = DMatrix::zeros(v.nrows(), v.ncols());
    let mut q = DMatrix::zeros(v.nrows(), v.ncols());
    for _ in 0..iters {
        let y = shrink_rows(&(&x + &p), t * lambdas.0);
        p = &x + &p - &y;
        let x_next = shrink_cols(&(&y + &q), t * lambdas.1);
        q = &y + &q - &x_next;
        let change = (&x_next - &x).amax();
        x = x_next;
        if change <= tol {
            break;
        }
    }
    x
}

/// `prox_{t(½‖X·−Y‖² + λ₁‖·‖_*)}(V)` by FISTA with singular value
/// thresholding, warm-started at `V`.
pub fn fista_loss_nuclear_prox(inst: &MultitaskInstance, v: &DMatrix<f64>, t: f64, iters: usize) -> Result<DMatrix<f64>> {
    let xtx = inst.x.transpose() * &inst.x;
    let xty = inst.x.transpose() * &inst.y;
    let lip = spectral_norm_sq(&inst.x) + 1.0 / t;
    let step = 1.0 / lip;
    let mut z = v.clone();
    let mut w = v.clone();
    let mut theta: f64 = 1.0;
    for _ in 0..iters {
        let grad = &xtx * &w - &xty + (&w - v) / t;
        let z_next = singular_value_threshold(&(&w - grad * step), step * inst.lambdas.0)?;
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        w = &z_next + (&z_next - &z) * ((theta - 1.0) / theta_next);
        z = z_next;
        theta = theta_next;
    }
    Ok(z)
}

/// Baseline proxes on flattened coefficients: FISTA for the loss + nuclear
/// norm term and Dykstra for the row + column group term.
pub fn baseline_proxes(inst: &MultitaskInstance) -> (ProxProvider, ProxProvider) {
    let a = inst.clone();
    let f = ProxProvider::exact(move |v, t| {
        let b = fista_loss_nuclear_prox(&a, &a.unflatten(v.as_slice()), t, FISTA_ITERS)?;
        Ok(DVector::from_column_slice(b.as_slice()))
    });
    let c = inst.clone();
    let g = ProxProvider::exact(move |v, t| {
        let b = dykstra_group_prox(&c.unflatten(v.as_slice()), t, (c.lambdas.1, c.lambdas.2), DYKSTRA_ITERS, DYKSTRA_TOL);
        Ok(DVector::from_column_slice(b.as_slice()))
    });
    (f, g)
}
