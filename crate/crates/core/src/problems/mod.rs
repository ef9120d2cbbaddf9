//! Generators, objectives and reference solvers for the five benchmark
//! problems.

pub mod flat;
pub mod fused;
pub mod lasso;
pub mod multitask;
pub mod oracles;
pub mod sparse_group;
pub mod tv;

pub use flat::FlatInstance;
pub use fused::{doppler_signal, fused_objective, gen_fused, third_diff_matrix, FusedLassoInstance, FusedSpec};
pub use lasso::{gen_lasso, lasso_objective, lasso_reference, LassoInstance, LassoSpec};
pub use multitask::{gen_multitask, multitask_objective, MultitaskInstance, MultitaskSpec};
pub use oracles::{prox_oracle_lowdim, prox_oracle_separable, subgradient_oracle};
pub use sparse_group::{gen_sparse_group, sparse_group_objective, SparseGroupInstance, SparseGroupSpec};
pub use tv::{gen_tv, tv_objective, TvInstance, TvSpec};
