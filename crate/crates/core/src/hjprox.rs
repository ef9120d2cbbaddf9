//! Monte Carlo Hamilton–Jacobi proximal approximation.
//!
//! For `δ > 0` the approximate prox of `t·f` at `x` is the softmax-weighted
//! average of Gaussian samples `yᵢ ~ N(x, δt I)`:
//!
//! ```text
//! prox^δ_{tf}(x) = Σᵢ wᵢ yᵢ,   wᵢ ∝ exp(−f(yᵢ)/δ)
//! ```
//!
//! As `δ → 0` the exact (integral) version converges to `prox_{tf}(x)` with
//! error at most `√(2ntδ)` uniformly in `x`. The Monte Carlo estimate adds
//! sampling error on top of that bound; it grows quickly once the prox
//! displacement is many sampling standard deviations `√(δt)` away from `x`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::objective::{Objective, SeparableObjective};
use crate::prox::ProxProvider;
use crate::rng::RngStream;

pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HjProxParams {
    pub delta: f64,
    pub t: f64,
    pub n_samples: usize,
    pub rng: RngStream,
}

impl HjProxParams {
    pub fn new(delta: f64, t: f64, n_samples: usize, rng: RngStream) -> Result<Self> {
        let p = Self { delta, t, n_samples, rng };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::param(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::param(format!("t must be positive, got {}", self.t)));
        }
        if self.n_samples == 0 {
            return Err(Error::param("n_samples must be at least 1"));
        }
        Ok(())
    }
}

/// `δ_k = delta0 / k^exponent`. An exponent above 2 makes `{√δ_k}` summable.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DeltaSchedule {
    pub delta0: f64,
    pub exponent: f64,
}

impl Default for DeltaSchedule {
    fn default() -> Self {
        Self { delta0: 1.0, exponent: 2.00001 }
    }
}

impl DeltaSchedule {
    pub fn new(delta0: f64, exponent: f64) -> Result<Self> {
        let s = Self { delta0, exponent };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(Error::param(format!("delta0 must be positive, got {}", self.delta0)));
        }
        if !(self.exponent > 2.0 && self.exponent.is_finite()) {
            return Err(Error::param(format!(
                "schedule exponent must exceed 2 so that sqrt(delta_k) is summable, got {}",
                self.exponent
            )));
        }
        Ok(())
    }

    pub fn at(&self, k: usize) -> Result<f64> {
        delta_schedule(k, self)
    }
}

pub fn delta_schedule(k: usize, sched: &DeltaSchedule) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("delta schedule is indexed from k = 1"));
    }
    Ok(sched.delta0 / (k as f64).powf(sched.exponent))
}

/// `√(2 n t δ)`: uniform bound on the exact-integral approximation error.
pub fn hj_error_bound(n: usize, t: f64, delta: f64) -> Result<f64> {
    if n == 0 || !(t > 0.0) || !(delta > 0.0) {
        return Err(Error::param("hj_error_bound needs n >= 1, t > 0, delta > 0"));
    }
    Ok((2.0 * n as f64 * t * delta).sqrt())
}

/// Stabilized softmax of `−values/δ`. Entries equal to `+∞` receive weight 0.
pub fn softmax_weights(values: &[f64], delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(Error::param("softmax temperature must be positive"));
    }
    let vmin = finite_min(values)?;
    let mut w: Vec<f64> = values.iter().map(|&v| stabilized_exp(v, vmin, delta)).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= z);
    Ok(w)
}

fn finite_min(values: &[f64]) -> Result<f64> {
    let mut vmin = f64::INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            return Err(Error::InvalidObjectiveValue(i));
        }
        if v < vmin {
            vmin = v;
        }
    }
    if vmin == f64::INFINITY {
        return Err(Error::DegenerateWeights);
    }
    if vmin == f64::NEG_INFINITY {
        return Err(Error::param("objective is unbounded below (value -inf)"));
    }
    Ok(vmin)
}

#[inline]
fn stabilized_exp(v: f64, vmin: f64, delta: f64) -> f64 {
    if v == f64::INFINITY {
        0.0
    } else {
        (-(v - vmin) / delta).exp()
    }
}

/// Draws `N` samples `yᵢ = x + √(δt) ξᵢ` (sample `i` uses normals
/// `i·n .. (i+1)·n` of `params.rng`) and returns their softmax average.
///
/// If only one weight survives stabilization the argmin sample is returned
/// exactly.
pub fn hj_prox(f: &dyn Objective, x: &DVector<f64>, params: &HjProxParams) -> Result<DVector<f64>> {
    params.validate()?;
    let out = hj_prox_slice(|y| f.eval(y), x.as_slice(), params)?;
    Ok(DVector::from_vec(out))
}

pub(crate) fn hj_prox_slice(
    f: impl Fn(&[f64]) -> f64,
    x: &[f64],
    params: &HjProxParams,
) -> Result<Vec<f64>> {
    let n = x.len();
    let count = params.n_samples;
    let scale = (params.delta * params.t).sqrt();
    let mut samples = vec![0.0; count * n];
    let mut values = vec![0.0; count];
    let mut normals = params.rng.normals();
    for (i, y) in samples.chunks_exact_mut(n.max(1)).enumerate().take(count) {
        for (yj, xj) in y.iter_mut().zip(x) {
            *yj = xj + scale * normals.next_normal();
        }
        values[i] = f(y);
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let vmin = finite_min(&values)?;

    let mut z = 0.0;
    let mut alive = 0usize;
    let mut survivor = 0usize;
    let mut acc = vec![0.0; n];
    for (i, (&v, y)) in values.iter().zip(samples.chunks_exact(n)).enumerate() {
        let e = stabilized_exp(v, vmin, params.delta);
        if e > 0.0 {
            alive += 1;
            survivor = i;
            z += e;
            for (a, yj) in acc.iter_mut().zip(y) {
                *a += e * yj;
            }
        }
    }
    if alive == 1 {
        // the lone survivor is the argmin sample
        return Ok(samples[survivor * n..(survivor + 1) * n].to_vec());
    }
    acc.iter_mut().for_each(|a| *a /= z);
    Ok(acc)
}

/// Block-wise HJ prox of a separable objective. Block `b` is sampled from
/// `rng.derive(b)`, so blocks are independent. The exact-integral operator
/// factorizes over blocks, so this estimates the same quantity as
/// [`hj_prox`] on the summed objective, with far lower variance.
pub fn hj_prox_separable(
    f: &dyn SeparableObjective,
    x: &DVector<f64>,
    params: &HjProxParams,
) -> Result<DVector<f64>> {
    params.validate()?;
    let mut out = DVector::zeros(x.len());
    for (b, range) in f.blocks().iter().enumerate() {
        if range.end > x.len() {
            return Err(Error::DimensionMismatch { expected: range.end, got: x.len() });
        }
        let block_params = HjProxParams { rng: params.rng.derive(b as u64), ..*params };
        let yb = hj_prox_slice(|y| f.eval_block(b, y), &x.as_slice()[range.clone()], &block_params)?;
        out.rows_mut(range.start, range.len()).copy_from_slice(&yb);
    }
    Ok(out)
}

/// `prox_{σg*}(y) = y − σ·prox_{g/σ}(y/σ)`, evaluating the primal prox with
/// scale `1/σ` at iteration `k`.
pub fn prox_conjugate_via_moreau(
    prox_g: &ProxProvider,
    sigma: f64,
    y: &DVector<f64>,
    k: usize,
) -> Result<DVector<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::param("sigma must be positive"));
    }
    let inner = prox_g.prox(&(y / sigma), 1.0 / sigma, k)?;
    Ok(y - inner * sigma)
}
