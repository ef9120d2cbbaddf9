//! Sparse group LASSO with Davis-Yin splitting: group soft thresholding and
//! soft thresholding as the two proxes, the least-squares term as the smooth
//! part. A long subgradient run serves as an independent check.

use std::sync::Arc;

use hjsplit::objective::{spectral_norm_sq, BlockL2Norm, L1Norm, LeastSquares};
use hjsplit::problems::lasso::support_of;
use hjsplit::problems::sparse_group::sparse_group_subgradient;
use hjsplit::problems::{gen_sparse_group, sparse_group_objective, subgradient_oracle, SparseGroupSpec};
use hjsplit::solvers::{dys_run, KmConfig, StepSizes};
use hjsplit::{DeltaRule, DeltaSchedule, ProxProvider, RngStream};
use nalgebra::DVector;

fn main() -> hjsplit::Result<()> {
    let spec = SparseGroupSpec {
        n_obs: 100,
        groups: 4,
        group_size: 5,
        active_per_group: 3,
        noise_sigma: 5e-4,
        lambda_group: 2e-5,
        lambda_l1: 2e-5,
        design_sd: Some(2e-3),
        ..SparseGroupSpec::default()
    };
    let inst = gen_sparse_group(&spec, RngStream::new(7, 0))?;
    let p = inst.x.ncols();
    let (lg, l1) = inst.lambdas;
    let h = LeastSquares::new(inst.x.clone(), inst.y.clone())?;
    let steps = StepSizes::new(1.0 / spectral_norm_sq(&inst.x));
    let km = KmConfig::with_iters(3000);
    let objective = |b: &DVector<f64>| sparse_group_objective(b, &inst);
    let x0 = DVector::zeros(p);

    let exact = dys_run(
        &ProxProvider::group_l2(inst.groups.clone(), lg),
        &ProxProvider::l1(l1),
        &h,
        &steps,
        &x0,
        &km,
        &objective,
    )?;

    let schedule = DeltaRule::Schedule(DeltaSchedule::default());
    let hj = dys_run(
        &ProxProvider::hj_separable(Arc::new(BlockL2Norm::uniform(p, inst.group_size, lg)?), 2000, 1, schedule),
        &ProxProvider::hj_separable(Arc::new(L1Norm::new(p, l1)), 2000, 2, schedule),
        &h,
        &steps,
        &x0,
        &km,
        &objective,
    )?;

    let (_, oracle) = subgradient_oracle(objective, |b| sparse_group_subgradient(b, &inst), &x0, 200_000, steps.t);

    println!("true support      {:?}", support_of(&inst.beta_true, 0.5));
    for (name, sol) in [("exact DYS", &exact), ("HJ DYS", &hj)] {
        println!("{name:<17} objective {:.6e}  support {:?}", objective(&sol.x), support_of(&sol.x, 1e-2));
    }
    println!("subgradient       objective {oracle:.6e}");
    Ok(())
}
