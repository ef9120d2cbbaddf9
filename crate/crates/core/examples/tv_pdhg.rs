//! Total-variation deblurring with PDHG. The exact arm clamps the dual
//! variable onto pixelwise balls; the HJ arm samples the prox of the
//! isotropic TV term pixel by pixel and takes the dual step through the
//! Moreau identity.

use std::sync::Arc;

use hjsplit::objective::BlockL2Norm;
use hjsplit::problems::{gen_tv, tv_objective, TvSpec};
use hjsplit::prox::tv_dual_clamp;
use hjsplit::solvers::{pdhg_run, ConjugateMode, KmConfig, StepSizes};
use hjsplit::{DeltaRule, DeltaSchedule, LinearOperator, ProxProvider, RngStream};
use nalgebra::DVector;

fn main() -> hjsplit::Result<()> {
    let inst = gen_tv(&TvSpec { size: 16, ..TvSpec::default() }, RngStream::new(7, 0))?;
    let s = inst.size;
    let n = s * s;
    let grad = inst.gradient();
    let (m, _) = grad.dims();
    let steps = StepSizes::primal_dual(0.04, 3.0);
    let km = KmConfig::with_iters(500);
    let objective = |b: &DVector<f64>| tv_objective(b, &inst);
    let data = inst.data_prox(steps.tau)?;
    let lambda = inst.lambda;

    let clamp = ProxProvider::exact(move |v, _| Ok(tv_dual_clamp(v, lambda)));
    let exact = pdhg_run(&data, &clamp, ConjugateMode::Direct, &grad, &steps, &DVector::zeros(n), &DVector::zeros(m), &km, &objective)?;

    let tv_hj = ProxProvider::hj_separable(
        Arc::new(BlockL2Norm::uniform(m, 2, lambda)?),
        1000,
        3,
        DeltaRule::Schedule(DeltaSchedule { delta0: 100.0, ..DeltaSchedule::default() }),
    );
    let hj = pdhg_run(&data, &tv_hj, ConjugateMode::Moreau, &grad, &steps, &DVector::zeros(n), &DVector::zeros(m), &km, &objective)?;

    let err = |b: &DVector<f64>| (b - &inst.truth).norm() / (n as f64).sqrt();
    println!("{s}x{s} image, lambda = {lambda}");
    println!("{:<10} {:>11} {:>11}", "", "objective", "rms error");
    println!("{:<10} {:>11.5} {:>11.5}", "observed", objective(&inst.y), err(&inst.y));
    println!("{:<10} {:>11.5} {:>11.5}", "exact", objective(&exact.x), err(&exact.x));
    println!("{:<10} {:>11.5} {:>11.5}", "hj", objective(&hj.x), err(&hj.x));

    let row = s / 2;
    println!("\nrow {row}:");
    for (name, img) in [("truth", &inst.truth), ("observed", &inst.y), ("exact", &exact.x), ("hj", &hj.x)] {
        let vals: Vec<String> = (0..s).map(|c| format!("{:5.2}", img[row * s + c])).collect();
        println!("{name:>9} {}", vals.join(" "));
    }
    Ok(())
}
