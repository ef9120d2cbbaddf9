//! Fixed-point splitting solvers.
//!
//! Each solver is a Krasnosel'skiĭ–Mann iteration `x ← x + λ_k (T x − x)` on
//! its governing sequence, generic over [`ProxProvider`]. With an HJ
//! provider the algorithm map is evaluated inexactly; the trace records the
//! analytic bound on the injected error at every iteration.

mod drs;
mod dys;
mod km;
mod pdhg;
mod pgd;

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

pub use drs::{drs_run, DrsSolution};
pub use dys::{dys_run, DysSolution};
pub use km::km_iterate;
pub use pdhg::{pdhg_run, ConjugateMode, PdhgSolution, PdhgSolver, STEP_SAFETY};
pub use pgd::pgd_run;

use crate::error::{Error, Result};
use crate::prox::{DeltaRule, ProxProvider};
use crate::trace::{SolverTrace, TraceRow};

/// Iterates whose norm exceeds this abort the run.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Relaxation sequence `λ_k`.
#[derive(Clone)]
pub enum Relaxation {
    Constant(f64),
    Sequence(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl fmt::Debug for Relaxation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relaxation::Constant(l) => write!(f, "Constant({l})"),
            Relaxation::Sequence(_) => f.write_str("Sequence(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct KmConfig {
    pub relaxation: Relaxation,
    /// Every `λ_k` must lie in `[γ, 2 − γ]`.
    pub gamma: f64,
    pub max_iters: usize,
    /// Stop once the fixed-point residual drops to this value; `0` disables.
    pub stop_residual: f64,
}

impl Default for KmConfig {
    fn default() -> Self {
        Self { relaxation: Relaxation::Constant(1.0), gamma: 0.5, max_iters: 1000, stop_residual: 0.0 }
    }
}

impl KmConfig {
    pub fn with_iters(max_iters: usize) -> Self {
        Self { max_iters, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(self.stop_residual >= 0.0) {
            return Err(Error::Config("stop_residual must be non-negative".into()));
        }
        if let Relaxation::Constant(l) = self.relaxation {
            self.check_lambda(l)?;
        }
        Ok(())
    }

    fn check_lambda(&self, l: f64) -> Result<f64> {
        if l >= self.gamma && l <= 2.0 - self.gamma {
            Ok(l)
        } else {
            Err(Error::Config(format!(
                "relaxation {l} outside [gamma, 2 - gamma] = [{}, {}]",
                self.gamma,
                2.0 - self.gamma
            )))
        }
    }

    pub(crate) fn lambda(&self, k: usize) -> Result<f64> {
        match &self.relaxation {
            Relaxation::Constant(l) => Ok(*l),
            Relaxation::Sequence(f) => self.check_lambda(f(k)),
        }
    }

    pub(crate) fn should_stop(&self, residual: f64) -> bool {
        self.stop_residual > 0.0 && residual <= self.stop_residual
    }
}

/// Step sizes: `t` for PGD/DRS/DYS, `(tau, sigma)` for PDHG.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepSizes {
    pub t: f64,
    pub tau: f64,
    pub sigma: f64,
}

impl StepSizes {
    pub fn new(t: f64) -> Self {
        Self { t, tau: t, sigma: t }
    }

    pub fn primal_dual(tau: f64, sigma: f64) -> Self {
        Self { t: tau, tau, sigma }
    }

    pub(crate) fn check_t(&self) -> Result<()> {
        if self.t > 0.0 && self.t.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("step size t must be positive, got {}", self.t)))
        }
    }

    /// `0 < t < 2/L` when `L` is known.
    pub(crate) fn check_smooth(&self, lipschitz: Option<f64>) -> Result<()> {
        self.check_t()?;
        if let Some(l) = lipschitz {
            if l > 0.0 && self.t >= 2.0 / l {
                return Err(Error::Config(format!(
                    "step size t = {} violates t < 2/L = {} (L-smooth term)",
                    self.t,
                    2.0 / l
                )));
            }
        }
        Ok(())
    }
}

/// Primal iterate plus trace.
#[derive(Clone, Debug)]
pub struct Solution {
    pub x: DVector<f64>,
    pub trace: SolverTrace,
}

pub(crate) fn check_provider(p: &ProxProvider) -> Result<()> {
    if let ProxProvider::Hj(h) = p {
        if h.n_samples == 0 {
            return Err(Error::Config("HJ sample count must be at least 1".into()));
        }
        match h.delta {
            DeltaRule::Schedule(s) => s.validate().map_err(|e| Error::Config(e.to_string()))?,
            DeltaRule::Fixed(d) if !(d > 0.0) => {
                return Err(Error::Config(format!("fixed delta must be positive, got {d}")))
            }
            DeltaRule::Fixed(_) => {}
        }
    }
    Ok(())
}

/// First `δ_k` among the providers, or 0 when all are exact.
pub(crate) fn reported_delta(providers: &[&ProxProvider], k: usize) -> Result<f64> {
    for p in providers {
        if let Some(d) = p.delta_at(k)? {
            return Ok(d);
        }
    }
    Ok(0.0)
}

pub(crate) fn guard(
    iterates: &[&DVector<f64>],
    k: usize,
    trace: &mut SolverTrace,
    row: TraceRow,
) -> Result<()> {
    let diverged = iterates
        .iter()
        .any(|x| x.iter().any(|v| !v.is_finite()) || x.norm() > DIVERGENCE_NORM);
    if diverged || !trace.push(row) {
        return Err(Error::Divergence { iteration: k, trace: std::mem::take(trace) });
    }
    Ok(())
}
