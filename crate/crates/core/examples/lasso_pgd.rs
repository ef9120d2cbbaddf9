//! LASSO by proximal gradient descent, once with soft thresholding and once
//! with the per-coordinate HJ sampler, checked against coordinate descent.

use std::sync::Arc;

use hjsplit::objective::{spectral_norm_sq, L1Norm, LeastSquares};
use hjsplit::problems::lasso::support_of;
use hjsplit::problems::{gen_lasso, lasso_objective, lasso_reference, LassoSpec};
use hjsplit::solvers::{pgd_run, KmConfig, StepSizes};
use hjsplit::{DeltaRule, DeltaSchedule, ProxProvider, RngStream};
use nalgebra::DVector;

fn main() -> hjsplit::Result<()> {
    let spec = LassoSpec {
        lambda: 2e-4,
        noise_sigma: 2e-4,
        design_sd: Some(0.03),
        ..LassoSpec::default()
    }
    .scaled(0.2);
    let inst = gen_lasso(&spec, RngStream::new(7, 0))?;
    let p = inst.x.ncols();
    let f = LeastSquares::new(inst.x.clone(), inst.y.clone())?;
    let steps = StepSizes::new(1.0 / spectral_norm_sq(&inst.x));
    let km = KmConfig::with_iters(3000);
    let objective = |b: &DVector<f64>| lasso_objective(b, &inst);
    let x0 = DVector::zeros(p);

    let exact = pgd_run(&f, &ProxProvider::l1(inst.lambda), &steps, &x0, &km, &objective)?;
    let hj_prox = ProxProvider::hj_separable(
        Arc::new(L1Norm::new(p, inst.lambda)),
        2000,
        11,
        DeltaRule::Schedule(DeltaSchedule::default()),
    );
    let hj = pgd_run(&f, &hj_prox, &steps, &x0, &km, &objective)?;
    let reference = lasso_reference(&inst.x, &inst.y, inst.lambda, 1e-12)?;

    println!("n_obs = {}, p = {}, true support = {:?}", inst.x.nrows(), p, inst.support);
    println!("reference objective  {:.8e}", objective(&reference));
    for (name, sol) in [("exact", &exact), ("hj", &hj)] {
        println!(
            "{name:<5} objective {:.8e}  max |b - ref| {:.2e}  support {:?}",
            sol.trace.final_objective().unwrap_or(f64::NAN),
            (&sol.x - &reference).amax(),
            support_of(&sol.x, 1e-2)
        );
    }
    Ok(())
}
