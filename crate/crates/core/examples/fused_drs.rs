//! Third-order fused LASSO on a noisy Doppler signal with Douglas-Rachford:
//! the exact arm works in the product space `(β, w = Dβ)`, the HJ arm samples
//! the prox of `λ‖Dβ‖₁` directly.

use std::sync::Arc;

use hjsplit::problems::fused::{fused_penalty, ProductSpace};
use hjsplit::problems::{fused_objective, gen_fused, FusedSpec};
use hjsplit::solvers::{drs_run, KmConfig, StepSizes};
use hjsplit::{DeltaRule, DeltaSchedule, ProxProvider, RngStream};
use nalgebra::DVector;

fn main() -> hjsplit::Result<()> {
    let inst = gen_fused(&FusedSpec { n: 32, ..FusedSpec::default() }, RngStream::new(7, 0))?;
    let n = inst.y.len();
    let steps = StepSizes::new(1e-3);
    let km = KmConfig::with_iters(10_000);
    let objective = |b: &DVector<f64>| fused_objective(b, &inst);

    let ps = ProductSpace::new(&inst)?;
    let lifted = |v: &DVector<f64>| objective(&ps.beta(v));
    let exact = drs_run(&ps.f_prox(&inst), &ps.graph_projection(), &steps, &DVector::zeros(ps.dim()), &km, &lifted)?;
    let beta_exact = ps.beta(&exact.x);

    let hj_prox = ProxProvider::hj_joint(
        Arc::new(fused_penalty(&inst)),
        2000,
        3,
        DeltaRule::Schedule(DeltaSchedule { delta0: 1e6, ..DeltaSchedule::default() }),
    );
    let hj = drs_run(&ProxProvider::squared_distance(inst.y.clone()), &hj_prox, &steps, &DVector::zeros(n), &km, &objective)?;

    println!("n = {n}, lambda = {}", inst.lambda);
    println!("objective at y     {:.6}", objective(&inst.y));
    println!("exact DRS          {:.6}", objective(&beta_exact));
    println!("HJ DRS             {:.6}", objective(&hj.x));
    println!("\n{:>4} {:>9} {:>9} {:>9} {:>9}", "i", "signal", "y", "exact", "hj");
    for i in (0..n).step_by(4) {
        println!("{i:>4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}", inst.signal[i], inst.y[i], beta_exact[i], hj.x[i]);
    }
    Ok(())
}
