//! Integrates the default aerocapture reference and prints a few samples.

use aerostt::config::ExperimentConfig;
use aerostt::experiments::{reference, Context};

fn main() -> aerostt::Result<()> {
    let ctx = Context::new(ExperimentConfig::default())?;
    let run = reference(&ctx)?;
    println!("{:>6} {:>12} {:>10} {:>10} {:>14}", "t_s", "alt_km", "v_m_s", "accel", "energy_J_kg");
    let rp = ctx.config.planet.radius;
    for p in run.points.iter().step_by(10) {
        println!(
            "{:>6.0} {:>12.3} {:>10.2} {:>10.3} {:>14.1}",
            p.t,
            (p.state[0] - rp) / 1e3,
            p.state[3],
            p.accel_ratio,
            p.energy
        );
    }
    println!("peak dynamic pressure at {} s", run.peak_dynamic_pressure_time);
    if let Some((a, b)) = run.high_accel_window {
        println!("drag exceeds gravity on [{a}, {b}] s");
    }
    println!("energy drop {:.1} J/kg, captured: {}", run.energy_drop, run.captured);
    if let Some(ra) = run.points.last().and_then(|p| p.apoapsis) {
        println!("exit apoapsis radius {:.1} km", ra / 1e3);
    }
    Ok(())
}
