//! Krasnosel'skii-Mann iteration on `T(x) = x/2` with injected errors of
//! size `1/k²` (summable) and `1/k` (not summable).

use hjsplit::solvers::{km_iterate, KmConfig};
use nalgebra::DVector;

fn run(power: i32, iters: usize) -> hjsplit::Result<Vec<(usize, f64)>> {
    let u = DVector::from_vec(vec![1.0, 1.0]).normalize();
    let noise = move |k: usize| &u * (k as f64).powi(-power);
    let sol = km_iterate(
        |x| Ok(x / 2.0),
        &DVector::from_vec(vec![1.0, -1.0]),
        &KmConfig::with_iters(iters),
        Some(&noise),
        None,
    )?;
    Ok([10, 100, 1_000, 10_000, 100_000]
        .iter()
        .filter(|&&k| k <= iters)
        .map(|&k| (k, sol.trace.rows()[k - 1].objective))
        .collect())
}

fn main() -> hjsplit::Result<()> {
    let summable = run(2, 100_000)?;
    let harmonic = run(1, 100_000)?;
    println!("{:>8} {:>14} {:>14}", "k", "||x_k|| 1/k^2", "||x_k|| 1/k");
    for ((k, a), (_, b)) in summable.iter().zip(&harmonic) {
        println!("{k:>8} {a:>14.3e} {b:>14.3e}");
    }
    Ok(())
}
