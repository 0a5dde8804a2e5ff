//! Propagates an initial perturbation through the whole flight with STTs of
//! order 1-3 and compares against the integrated perturbed trajectory.

use aerostt::config::ExperimentConfig;
use aerostt::dynamics::{Component, N};
use aerostt::experiments::{unit_direction, Context};

fn main() -> aerostt::Result<()> {
    let ctx = Context::new(ExperimentConfig::default())?;
    let sweep = ctx.sweep(3, Component::Full)?;
    let k = sweep.stts.len();
    let full = sweep.compose_range(0, k)?;
    let xf = sweep.grid.final_state();
    let d = unit_direction(7);
    for mag in [1e-7, 1e-6, 1e-5] {
        let dx: [f64; N] = std::array::from_fn(|i| mag * d[i]);
        let x: [f64; N] = std::array::from_fn(|i| ctx.x0[i] + dx[i]);
        let truth = ctx.propagator.replay_to(&sweep.grid, &x, 0, k)?;
        print!("|dx0| = {mag:.0e}:");
        for m in 1..=3 {
            let p = full.propagate(&dx, m)?;
            let err = (0..N).map(|i| (xf[i] + p[i] - truth[i]).powi(2)).sum::<f64>().sqrt();
            print!("  order {m} error {err:.3e}");
        }
        println!();
    }
    println!("{} intervals, final time {} s", k, full.t_end);
    Ok(())
}
