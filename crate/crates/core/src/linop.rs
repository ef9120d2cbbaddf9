//! Linear operators with adjoints.
//!
//! Images are flattened row-major: pixel `(i, j)` of an `rows × cols` image
//! lives at index `i * cols + j`. Gradient fields interleave the two
//! components per pixel: `(∇ₓ, ∇_y)` of pixel `p` live at `2p` and `2p + 1`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub trait LinearOperator: Send + Sync {
    /// `(m, n)`: maps `R^n` to `R^m`.
    fn dims(&self) -> (usize, usize);

    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;

    fn adjoint(&self, y: &DVector<f64>) -> DVector<f64>;

    /// Cached upper bound on the operator norm, when known analytically.
    fn norm_hint(&self) -> Option<f64> {
        None
    }
}

/// Dense matrix operator.
#[derive(Clone, Debug)]
pub struct MatrixOperator {
    pub matrix: DMatrix<f64>,
    norm_hint: Option<f64>,
}

impl MatrixOperator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix, norm_hint: None }
    }

    pub fn with_norm_hint(mut self, bound: f64) -> Self {
        self.norm_hint = Some(bound);
        self
    }
}

impl LinearOperator for MatrixOperator {
    fn dims(&self) -> (usize, usize) {
        self.matrix.shape()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    fn adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        self.matrix.tr_mul(y)
    }

    fn norm_hint(&self) -> Option<f64> {
        self.norm_hint
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dims(&self) -> (usize, usize) {
        (self.0, self.0)
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    fn adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        y.clone()
    }

    fn norm_hint(&self) -> Option<f64> {
        Some(1.0)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ZeroOperator {
    pub rows: usize,
    pub cols: usize,
}

impl LinearOperator for ZeroOperator {
    fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn apply(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.rows)
    }

    fn adjoint(&self, _y: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.cols)
    }

    fn norm_hint(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Forward-difference image gradient with zero difference on the last row
/// and last column. `‖∇‖² ≤ 8`.
#[derive(Clone, Copy, Debug)]
pub struct Gradient2d {
    pub rows: usize,
    pub cols: usize,
}

impl Gradient2d {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }
}

impl LinearOperator for Gradient2d {
    fn dims(&self) -> (usize, usize) {
        (2 * self.rows * self.cols, self.rows * self.cols)
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let (r, c) = (self.rows, self.cols);
        let mut out = DVector::zeros(2 * r * c);
        for i in 0..r {
            for j in 0..c {
                let p = i * c + j;
                if i + 1 < r {
                    out[2 * p] = x[p + c] - x[p];
                }
                if j + 1 < c {
                    out[2 * p + 1] = x[p + 1] - x[p];
                }
            }
        }
        out
    }

    /// Negative divergence.
    fn adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        let (r, c) = (self.rows, self.cols);
        let mut out = DVector::zeros(r * c);
        for i in 0..r {
            for j in 0..c {
                let p = i * c + j;
                if i + 1 < r {
                    out[p + c] += y[2 * p];
                    out[p] -= y[2 * p];
                }
                if j + 1 < c {
                    out[p + 1] += y[2 * p + 1];
                    out[p] -= y[2 * p + 1];
                }
            }
        }
        out
    }

    fn norm_hint(&self) -> Option<f64> {
        Some(8f64.sqrt())
    }
}

/// Direct 2-D convolution with an odd square kernel and symmetric
/// (half-sample) reflective boundary: index `-1` maps to `0`, `n` to `n - 1`.
#[derive(Clone, Debug)]
pub struct Convolution2d {
    pub rows: usize,
    pub cols: usize,
    kernel: Vec<f64>,
    ksize: usize,
}

impl Convolution2d {
    /// `kernel` is `ksize × ksize`, row-major.
    pub fn new(rows: usize, cols: usize, kernel: Vec<f64>, ksize: usize) -> Result<Self> {
        if ksize % 2 == 0 {
            return Err(Error::param(format!("kernel size must be odd, got {ksize}")));
        }
        if kernel.len() != ksize * ksize {
            return Err(Error::DimensionMismatch { expected: ksize * ksize, got: kernel.len() });
        }
        if rows == 0 || cols == 0 {
            return Err(Error::param("image must be non-empty"));
        }
        Ok(Self { rows, cols, kernel, ksize })
    }

    /// Normalized Gaussian kernel of odd size `ksize` and width `sigma`.
    pub fn gaussian_kernel(ksize: usize, sigma: f64) -> Result<Vec<f64>> {
        if ksize % 2 == 0 {
            return Err(Error::param(format!("kernel size must be odd, got {ksize}")));
        }
        if !(sigma > 0.0) {
            return Err(Error::param("kernel sigma must be positive"));
        }
        let h = (ksize / 2) as f64;
        let mut k: Vec<f64> = (0..ksize * ksize)
            .map(|idx| {
                let a = (idx / ksize) as f64 - h;
                let b = (idx % ksize) as f64 - h;
                (-(a * a + b * b) / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let s: f64 = k.iter().sum();
        k.iter_mut().for_each(|v| *v /= s);
        Ok(k)
    }

    pub fn identity_kernel(ksize: usize) -> Vec<f64> {
        let mut k = vec![0.0; ksize * ksize];
        k[(ksize / 2) * ksize + ksize / 2] = 1.0;
        k
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

impl LinearOperator for Convolution2d {
    fn dims(&self) -> (usize, usize) {
        let n = self.rows * self.cols;
        (n, n)
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let (r, c, ks) = (self.rows, self.cols, self.ksize);
        let h = (ks / 2) as isize;
        let mut out = DVector::zeros(r * c);
        for i in 0..r {
            for j in 0..c {
                let mut acc = 0.0;
                for a in 0..ks {
                    let si = reflect(i as isize + a as isize - h, r);
                    for b in 0..ks {
                        let sj = reflect(j as isize + b as isize - h, c);
                        acc += self.kernel[a * ks + b] * x[si * c + sj];
                    }
                }
                out[i * c + j] = acc;
            }
        }
        out
    }

    fn adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        let (r, c, ks) = (self.rows, self.cols, self.ksize);
        let h = (ks / 2) as isize;
        let mut out = DVector::zeros(r * c);
        for i in 0..r {
            for j in 0..c {
                let v = y[i * c + j];
                for a in 0..ks {
                    let si = reflect(i as isize + a as isize - h, r);
                    for b in 0..ks {
                        let sj = reflect(j as isize + b as isize - h, c);
                        out[si * c + sj] += self.kernel[a * ks + b] * v;
                    }
                }
            }
        }
        out
    }

    fn norm_hint(&self) -> Option<f64> {
        // Row sums are bounded by ‖k‖₁; reflection lets a pixel be hit by a
        // tap at most twice per axis, so column sums are bounded by 4‖k‖₁.
        let l1: f64 = self.kernel.iter().map(|k| k.abs()).sum();
        Some(2.0 * l1)
    }
}

/// Power-iteration estimate of `‖A‖` on `AᵀA`.
///
/// The estimate `‖A v_k‖` with unit `v_k` never exceeds the true norm and
/// is nondecreasing in `iters` for a fixed start vector (the running maximum
/// is returned). A zero operator yields `0`.
pub fn op_norm_estimate(a: &dyn LinearOperator, iters: usize, rng: RngStream) -> Result<f64> {
    if iters == 0 {
        return Err(Error::param("op_norm_estimate needs at least one iteration"));
    }
    let (_, n) = a.dims();
    if n == 0 {
        return Ok(0.0);
    }
    let mut v = DVector::from_vec(rng.normal_vec(n));
    let nv = v.norm();
    if nv == 0.0 {
        return Ok(0.0);
    }
    v /= nv;
    let mut best: f64 = 0.0;
    for _ in 0..iters {
        let av = a.apply(&v);
        best = best.max(av.norm());
        let w = a.adjoint(&av);
        let nw = w.norm();
        if nw == 0.0 || !nw.is_finite() {
            break;
        }
        v = w / nw;
    }
    Ok(best)
}

/// `|⟨Ax, y⟩ − ⟨x, Aᵀy⟩|` relative to `1 + ‖x‖‖y‖`, maximized over `trials`
/// random pairs.
pub fn adjoint_mismatch(a: &dyn LinearOperator, trials: usize, rng: RngStream) -> f64 {
    let (m, n) = a.dims();
    let mut normals = rng.normals();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let x = DVector::from_iterator(n, (&mut normals).take(n));
        let y = DVector::from_iterator(m, (&mut normals).take(m));
        let lhs = a.apply(&x).dot(&y);
        let rhs = x.dot(&a.adjoint(&y));
        worst = worst.max((lhs - rhs).abs() / (1.0 + x.norm() * y.norm()));
    }
    worst
}
