//! Operator splitting with Monte Carlo Hamilton–Jacobi proximal operators.
//!
//! Proximal gradient descent, Douglas–Rachford, Davis–Yin and PDHG are
//! written once against [`ProxProvider`], so every prox step can come from a
//! closed form or from the zeroth-order HJ sampler [`hj_prox`]. The
//! [`problems`] module generates the benchmark instances (LASSO, multitask
//! regression, fused LASSO, sparse group LASSO, TV deblurring) and their
//! reference solvers; [`harness`] runs them end to end and writes CSV traces,
//! SVG plots and a manifest.

pub mod error;
pub mod harness;
pub mod hjprox;
pub mod linop;
pub mod objective;
pub mod problems;
pub mod prox;
pub mod rng;
pub mod solvers;
pub mod trace;

pub use error::{Error, Result};
pub use hjprox::{
    delta_schedule, hj_error_bound, hj_prox, hj_prox_separable, prox_conjugate_via_moreau,
    softmax_weights, DeltaSchedule, HjProxParams,
};
pub use linop::{op_norm_estimate, LinearOperator};
pub use objective::{finite_diff_grad, FnObjective, Objective, SeparableObjective};
pub use prox::{DeltaRule, GroupSpec, ProxProvider};
pub use rng::RngStream;
pub use trace::{SolverTrace, TraceRow};
