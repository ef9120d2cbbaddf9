//! Multitask regression with a nuclear-norm term and row and column group
//! penalties, solved by Douglas-Rachford. The exact arm needs inner
//! solvers (FISTA and Dykstra); the HJ arm only evaluates the two
//! objectives.

use std::sync::Arc;

use hjsplit::problems::multitask::baseline_proxes;
use hjsplit::problems::{gen_multitask, multitask_objective, MultitaskSpec};
use hjsplit::solvers::{drs_run, KmConfig, StepSizes};
use hjsplit::{DeltaRule, DeltaSchedule, FnObjective, Objective, ProxProvider, RngStream};
use nalgebra::DVector;

fn main() -> hjsplit::Result<()> {
    let spec = MultitaskSpec { n_obs: 20, p: 10, q: 3, ..MultitaskSpec::default() };
    let inst = Arc::new(gen_multitask(&spec, RngStream::new(7, 0))?);
    let dim = inst.p() * inst.q();
    let steps = StepSizes::new(0.3);
    let km = KmConfig::with_iters(300);
    let objective = |v: &DVector<f64>| multitask_objective(&inst.unflatten(v.as_slice()), &inst);

    let (f, g) = baseline_proxes(&inst);
    let exact = drs_run(&f, &g, &steps, &DVector::zeros(dim), &km, &objective)?;

    let rule = DeltaRule::Schedule(DeltaSchedule { delta0: 1e4, ..DeltaSchedule::default() });
    let (a, b) = (inst.clone(), inst.clone());
    let f_obj: Arc<dyn Objective> = Arc::new(FnObjective::new(move |v| a.loss_nuclear(&a.unflatten(v))));
    let g_obj: Arc<dyn Objective> = Arc::new(FnObjective::new(move |v| b.group_penalty(&b.unflatten(v))));
    let hj = drs_run(
        &ProxProvider::hj_joint(f_obj, 4000, 3, rule),
        &ProxProvider::hj_joint(g_obj, 4000, 4, rule),
        &steps,
        &DVector::zeros(dim),
        &km,
        &objective,
    )?;

    let fe = objective(&exact.x);
    let fh = objective(&hj.x);
    println!("B is {}x{}, {} observations", inst.p(), inst.q(), spec.n_obs);
    println!("objective at B = 0   {:.6}", objective(&DVector::zeros(dim)));
    println!("exact DRS            {fe:.6}");
    println!("HJ DRS               {fh:.6}  (relative gap {:.2e})", (fh - fe) / fe);

    let rank = |v: &DVector<f64>| {
        let sv = inst.unflatten(v.as_slice()).singular_values();
        sv.iter().filter(|&&s| s > 1e-3 * sv.max()).count()
    };
    println!("numerical rank: truth {}, exact {}, hj {}", spec.rank, rank(&exact.x), rank(&hj.x));
    println!("\nrow norms of B:");
    for i in 0..inst.p() {
        let row = |v: &DVector<f64>| inst.unflatten(v.as_slice()).row(i).norm();
        println!("{i:>3}  truth {:7.4}  exact {:7.4}  hj {:7.4}", inst.b_true.row(i).norm(), row(&exact.x), row(&hj.x));
    }
    Ok(())
}
