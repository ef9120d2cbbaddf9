//! Independent reference solvers used to check the closed-form proxes, the
//! HJ sampler and the splitting solvers.

use nalgebra::DVector;

use crate::error::{Error, Result};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section search of a unimodal function on `[lo, hi]` down to an
/// interval of width `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut a = hi - GOLDEN * (hi - lo);
    let mut b = lo + GOLDEN * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa == fb {
            // Rounding makes the minimum a plateau; shrink from both sides so
            // the result sits at its centre.
            lo = a;
            hi = b;
            a = hi - GOLDEN * (hi - lo);
            b = lo + GOLDEN * (hi - lo);
            fa = f(a);
            fb = f(b);
        } else if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - GOLDEN * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + GOLDEN * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Coordinatewise prox of `Σ f(xᵢ)`: minimizes `f(z) + (z − xᵢ)²/(2t)` by
/// golden-section search to a `1e-10` interval. The search interval is
/// centred on `xᵢ`, widened until the endpoint values exceed the centre.
pub fn prox_oracle_separable(f: impl Fn(f64) -> f64, x: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
    if !(t > 0.0) {
        return Err(Error::param("prox scale must be positive"));
    }
    let mut out = DVector::zeros(x.len());
    for (i, &xi) in x.iter().enumerate() {
        let phi = |z: f64| f(z) + (z - xi) * (z - xi) / (2.0 * t);
        let centre = phi(xi);
        if !centre.is_finite() && !(-50..=50).any(|s| phi(xi + s as f64 * 0.1).is_finite()) {
            return Err(Error::InvalidProbePoint(format!("{xi}")));
        }
        let mut r = 1.0 + xi.abs();
        while phi(xi - r).min(phi(xi + r)) <= centre.min(phi(xi)) && r < 1e12 {
            r *= 2.0;
        }
        let guard = |z: f64| {
            let v = phi(z);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let z = golden_section(guard, xi - r, xi + r, 1e-10);
        out[i] = polish_smooth(guard, z);
    }
    Ok(out)
}

/// Comparing function values locates a smooth minimum only to about
/// `√ε`. When `φ` is quadratic to within rounding on a small window around
/// `z`, the vertex of a least-squares parabola is far more accurate; kinks
/// fail the fit test and keep `z`.
fn polish_smooth(phi: impl Fn(f64) -> f64, z: f64) -> f64 {
    let w = 1e-4 * (1.0 + z.abs());
    let us: Vec<f64> = (-10..=10).map(|i| i as f64 / 10.0).collect();
    let vals: Vec<f64> = us.iter().map(|u| phi(z + w * u)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return z;
    }
    let mut ata = nalgebra::Matrix3::zeros();
    let mut atb = nalgebra::Vector3::zeros();
    for (&u, &v) in us.iter().zip(&vals) {
        let row = nalgebra::Vector3::new(1.0, u, u * u);
        ata += row * row.transpose();
        atb += row * v;
    }
    let Some(c) = ata.lu().solve(&atb) else { return z };
    let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
    let misfit = us
        .iter()
        .zip(&vals)
        .map(|(&u, &v)| (c[0] + c[1] * u + c[2] * u * u - v).abs())
        .fold(0.0, f64::max);
    if c[2] <= 0.0 || misfit > 1e-6 * spread + 1e-13 * (1.0 + vals[10].abs()) {
        return z;
    }
    let vertex = -c[1] / (2.0 * c[2]);
    if vertex.abs() > 1.0 {
        return z;
    }
    z + w * vertex
}

/// Minimizes a convex function of one variable on `[lo, hi]` that may be
/// `+∞` off its domain. Samples `first` equally spaced points and keeps the
/// bracket around the best finite sample, resampling with 9 points while
/// the bracket still touches `+∞`; a fully finite bracket is finished by
/// golden section. Brackets on the domain boundary are resolved to
/// rounding so the outer levels see a smooth value. Returns `None` when no
/// sample is finite.
fn min_1d(g: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, first: usize) -> Option<f64> {
    let mut count = first.max(3);
    loop {
        let h = (hi - lo) / (count - 1) as f64;
        let vals: Vec<f64> = (0..count).map(|i| g(lo + i as f64 * h)).collect();
        let (i, _) = vals
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .min_by(|a, b| a.1.total_cmp(b.1))?;
        let (a, b) = (i.saturating_sub(1), (i + 1).min(count - 1));
        let centre = lo + i as f64 * h;
        lo = lo + a as f64 * h;
        hi = lo + (b - a) as f64 * h;
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + centre.abs()) {
            return Some(polish_smooth(g, centre));
        }
        if vals[a].is_finite() && vals[b].is_finite() {
            return Some(polish_smooth(g, golden_section(g, lo, hi, 1e-11 * (1.0 + centre.abs()))));
        }
        count = 9;
    }
}

/// Prox of a low-dimensional (`n ≤ 3`) convex function. Minimizes over the
/// box `x ± radius` one coordinate at a time, with the remaining
/// coordinates minimized out; partial minimization keeps each level
/// convex. `grid` is the number of samples in the first pass of every
/// one-dimensional search, which locates narrow domains.
pub fn prox_oracle_lowdim(
    f: impl Fn(&[f64]) -> f64,
    x: &DVector<f64>,
    t: f64,
    grid: usize,
    radius: f64,
) -> Result<DVector<f64>> {
    let n = x.len();
    if n == 0 || n > 3 {
        return Err(Error::param(format!("low-dimensional oracle needs 1 ≤ n ≤ 3, got {n}")));
    }
    if !(t > 0.0) || grid < 2 || !(radius > 0.0) {
        return Err(Error::param("oracle needs t > 0, grid ≥ 2 and radius > 0"));
    }
    let phi = |z: &[f64]| {
        let v = f(z) + z.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * t);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    // Minimizes over coordinates `d..n` with `prefix` fixed, returning the
    // optimal tail and its value.
    fn nested(
        phi: &dyn Fn(&[f64]) -> f64,
        x: &DVector<f64>,
        radius: f64,
        grid: usize,
        prefix: &mut Vec<f64>,
    ) -> Option<(Vec<f64>, f64)> {
        let d = prefix.len();
        if d == x.len() {
            let v = phi(prefix);
            return v.is_finite().then(|| (Vec::new(), v));
        }
        let inner = |zd: f64| {
            let mut p = prefix.clone();
            p.push(zd);
            nested(phi, x, radius, grid, &mut p).map_or(f64::INFINITY, |(_, v)| v)
        };
        let zd = min_1d(&inner, x[d] - radius, x[d] + radius, grid)?;
        prefix.push(zd);
        let (tail, v) = nested(phi, x, radius, grid, prefix)?;
        prefix.pop();
        let mut out = vec![zd];
        out.extend(tail);
        Some((out, v))
    }
    let (z, _) = nested(&phi, x, radius, grid, &mut Vec::with_capacity(n))
        .ok_or_else(|| Error::InvalidProbePoint(format!("{:?}", x.as_slice())))?;
    Ok(DVector::from_vec(z))
}

/// Subgradient method `x ← x − (α₀/√k) g(x)`, returning the best point seen
/// and its objective value.
pub fn subgradient_oracle(
    objective: impl Fn(&DVector<f64>) -> f64,
    subgradient: impl Fn(&DVector<f64>) -> DVector<f64>,
    x0: &DVector<f64>,
    iters: usize,
    step0: f64,
) -> (DVector<f64>, f64) {
    let mut x = x0.clone();
    let mut best = x.clone();
    let mut best_val = objective(&x);
    for k in 1..=iters {
        let g = subgradient(&x);
        x -= g * (step0 / (k as f64).sqrt());
        let v = objective(&x);
        if v < best_val {
            best_val = v;
            best.copy_from(&x);
        }
    }
    (best, best_val)
}
