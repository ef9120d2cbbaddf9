//! Monte Carlo HJ prox of `|x|` against the exact soft threshold, with the
//! analytic error bound and the default temperature schedule.

use hjsplit::objective::L1Norm;
use hjsplit::prox::soft_threshold;
use hjsplit::{delta_schedule, hj_error_bound, hj_prox, DeltaSchedule, HjProxParams, RngStream};
use nalgebra::DVector;

fn main() -> hjsplit::Result<()> {
    let x = DVector::from_vec(vec![2.0, -0.3, 0.8]);
    let t = 0.5;
    let f = L1Norm::new(x.len(), 1.0);
    let exact = soft_threshold(&x, t);
    println!("x            = {:?}", x.as_slice());
    println!("soft thresh  = {:?}", exact.as_slice());

    println!("\n{:>8} {:>8} {:>12} {:>12}", "delta", "N", "error", "bound");
    for delta in [1.0, 0.1, 0.01] {
        for n_samples in [1_000, 100_000] {
            let params = HjProxParams::new(delta, t, n_samples, RngStream::new(42, 1))?;
            let approx = hj_prox(&f, &x, &params)?;
            let err = (&approx - &exact).norm();
            let bound = hj_error_bound(x.len(), t, delta)?;
            println!("{delta:>8} {n_samples:>8} {err:>12.3e} {bound:>12.3e}");
        }
    }

    let sched = DeltaSchedule::default();
    println!("\ndefault schedule delta0 = {}, exponent = {}", sched.delta0, sched.exponent);
    for k in [1, 2, 10, 100, 1000] {
        println!("  delta_{k:<5} = {:.6e}", delta_schedule(k, &sched)?);
    }
    Ok(())
}
