//! Zeroth-order objectives, optionally with gradients.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A scalar function of a vector. `eval` may return `+∞` outside the
/// function's domain (indicator-type terms).
pub trait Objective: Send + Sync {
    fn eval(&self, x: &[f64]) -> f64;

    fn gradient(&self, _x: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }

    fn has_gradient(&self) -> bool {
        false
    }

    /// Lipschitz constant of the gradient, when known.
    fn lipschitz_grad(&self) -> Option<f64> {
        None
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.eval(x.as_slice())
    }
}

/// A sum of terms acting on disjoint coordinate blocks. The blocks of a
/// valid separable objective partition `0..dim`.
pub trait SeparableObjective: Send + Sync {
    fn blocks(&self) -> &[Range<usize>];

    fn eval_block(&self, block: usize, y: &[f64]) -> f64;

    fn dim(&self) -> usize {
        self.blocks().iter().map(|b| b.end).max().unwrap_or(0)
    }

    fn eval_sum(&self, x: &[f64]) -> f64 {
        self.blocks()
            .iter()
            .enumerate()
            .map(|(i, b)| self.eval_block(i, &x[b.clone()]))
            .sum()
    }
}

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;

/// Objective assembled from closures.
#[derive(Clone)]
pub struct FnObjective {
    eval: Arc<EvalFn>,
    grad: Option<Arc<GradFn>>,
    lipschitz: Option<f64>,
}

impl FnObjective {
    pub fn new(eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(eval), grad: None, lipschitz: None }
    }

    pub fn with_gradient(
        mut self,
        grad: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }
}

impl Objective for FnObjective {
    fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        self.grad.as_ref().map(|g| g(x))
    }

    fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        self.lipschitz
    }
}

/// The zero function.
#[derive(Clone, Copy, Debug, Default)]
pub struct Zero;

impl Objective for Zero {
    fn eval(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        Some(DVector::zeros(x.len()))
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `½‖x − c‖²`.
#[derive(Clone, Debug)]
pub struct SquaredDistance {
    pub center: DVector<f64>,
}

impl Objective for SquaredDistance {
    fn eval(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(self.center.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        Some(x - &self.center)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// `½‖A x − b‖²` with `L = ‖A‖²` computed from the spectrum of `AᵀA`.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    lipschitz: f64,
}

impl LeastSquares {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
        }
        let lipschitz = spectral_norm_sq(&a);
        Ok(Self { a, b, lipschitz })
    }
}

/// `‖A‖²` as the largest eigenvalue of the Gram matrix.
pub fn spectral_norm_sq(a: &DMatrix<f64>) -> f64 {
    let gram = if a.nrows() < a.ncols() { a * a.transpose() } else { a.tr_mul(a) };
    if gram.is_empty() {
        return 0.0;
    }
    gram.symmetric_eigenvalues().max().max(0.0)
}

impl Objective for LeastSquares {
    fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.a.nrows() {
            let mut r = -self.b[i];
            for (j, xj) in x.iter().enumerate() {
                r += self.a[(i, j)] * xj;
            }
            s += r * r;
        }
        0.5 * s
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        Some(self.a.tr_mul(&(&self.a * x - &self.b)))
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

/// `λ‖x‖₁`, separable over single coordinates.
#[derive(Clone, Debug)]
pub struct L1Norm {
    pub weight: f64,
    blocks: Vec<Range<usize>>,
}

impl L1Norm {
    pub fn new(dim: usize, weight: f64) -> Self {
        Self { weight, blocks: (0..dim).map(|i| i..i + 1).collect() }
    }
}

impl Objective for L1Norm {
    fn eval(&self, x: &[f64]) -> f64 {
        self.weight * x.iter().map(|v| v.abs()).sum::<f64>()
    }
}

impl SeparableObjective for L1Norm {
    fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    fn eval_block(&self, _block: usize, y: &[f64]) -> f64 {
        self.weight * y.iter().map(|v| v.abs()).sum::<f64>()
    }
}

/// `Σ_g w_g ‖x_g‖₂` over disjoint blocks.
#[derive(Clone, Debug)]
pub struct BlockL2Norm {
    blocks: Vec<Range<usize>>,
    weights: Vec<f64>,
}

impl BlockL2Norm {
    pub fn new(blocks: Vec<Range<usize>>, weights: Vec<f64>) -> Result<Self> {
        if blocks.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: blocks.len(), got: weights.len() });
        }
        Ok(Self { blocks, weights })
    }

    /// Consecutive blocks of `size` coordinates with a common weight.
    pub fn uniform(dim: usize, size: usize, weight: f64) -> Result<Self> {
        if size == 0 || dim % size != 0 {
            return Err(Error::param(format!("block size {size} does not divide {dim}")));
        }
        let blocks: Vec<_> = (0..dim / size).map(|g| g * size..(g + 1) * size).collect();
        let weights = vec![weight; blocks.len()];
        Ok(Self { blocks, weights })
    }
}

impl Objective for BlockL2Norm {
    fn eval(&self, x: &[f64]) -> f64 {
        self.eval_sum(x)
    }
}

impl SeparableObjective for BlockL2Norm {
    fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    fn eval_block(&self, block: usize, y: &[f64]) -> f64 {
        self.weights[block] * y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Central finite differences `(f(x + h eᵢ) − f(x − h eᵢ)) / 2h`.
pub fn finite_diff_grad(f: &dyn Objective, x: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    if !(h > 0.0) {
        return Err(Error::param("finite difference step must be positive"));
    }
    let mut probe = x.as_slice().to_vec();
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let fp = f.eval(&probe);
        probe[i] = orig - h;
        let fm = f.eval(&probe);
        probe[i] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::InvalidProbePoint(format!("coordinate {i} at step {h}")));
        }
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn finite_diff_of_half_squared_norm() {
        let f = FnObjective::new(|x| 0.5 * x.iter().map(|v| v * v).sum::<f64>());
        let g = finite_diff_grad(&f, &DVector::from_vec(vec![1.0, 2.0]), 1e-5).unwrap();
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(g[1], 2.0, epsilon = 1e-8);
    }

    #[test]
    fn finite_diff_of_constant_is_zero() {
        let f = FnObjective::new(|_| 3.5);
        let g = finite_diff_grad(&f, &DVector::from_vec(vec![0.3, -7.0, 2.0]), 1e-3).unwrap();
        assert_eq!(g, DVector::zeros(3));
    }

    #[test]
    fn finite_diff_of_quartic() {
        // ∇(¼‖x‖⁴) = ‖x‖² x
        let f = FnObjective::new(|x| 0.25 * x.iter().map(|v| v * v).sum::<f64>().powi(2));
        let g = finite_diff_grad(&f, &DVector::from_vec(vec![1.0, 0.0]), 1e-4).unwrap();
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn finite_diff_rejects_bad_probes() {
        let f = FnObjective::new(|x| if x[0] > 0.5 { f64::INFINITY } else { 0.0 });
        assert!(matches!(
            finite_diff_grad(&f, &DVector::from_vec(vec![0.5]), 0.1),
            Err(Error::InvalidProbePoint(_))
        ));
        assert!(finite_diff_grad(&f, &DVector::from_vec(vec![0.0]), 0.0).is_err());
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let a = DMatrix::from_fn(4, 3, |i, j| ((i + 2 * j) % 3) as f64 - 1.0 + 0.1 * i as f64);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let ls = LeastSquares::new(a, b).unwrap();
        let c = SquaredDistance { center: DVector::from_vec(vec![1.0, 2.0, -1.0]) };
        let x = DVector::from_vec(vec![0.3, -0.7, 1.9]);
        for f in [&ls as &dyn Objective, &c] {
            let g = f.gradient(&x).unwrap();
            let fd = finite_diff_grad(f, &x, 1e-5).unwrap();
            assert!((&g - &fd).norm() <= 1e-5 * (1.0 + g.norm()));
        }
    }

    #[test]
    fn separable_sums_match_full_evaluation() {
        let x = [1.0, -2.0, 3.0, -4.0];
        let l1 = L1Norm::new(4, 0.5);
        assert_abs_diff_eq!(l1.eval(&x), l1.eval_sum(&x), epsilon = 1e-15);
        assert_abs_diff_eq!(l1.eval(&x), 5.0, epsilon = 1e-15);
        let g = BlockL2Norm::uniform(4, 2, 2.0).unwrap();
        assert_abs_diff_eq!(g.eval(&x), 2.0 * (5f64.sqrt() + 5.0), epsilon = 1e-12);
        assert_eq!(g.dim(), 4);
        assert!(BlockL2Norm::uniform(5, 2, 1.0).is_err());
    }

    #[test]
    fn least_squares_lipschitz_is_spectral_norm_squared() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
        let ls = LeastSquares::new(a, DVector::zeros(2)).unwrap();
        assert_abs_diff_eq!(ls.lipschitz_grad().unwrap(), 9.0, epsilon = 1e-12);
    }
}
