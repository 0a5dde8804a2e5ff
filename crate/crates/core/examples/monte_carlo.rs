//! Terminal energy and apoapsis errors of each approximation over Gaussian
//! initial dispersions. Pass a sample count as the first argument.

use aerostt::config::ExperimentConfig;
use aerostt::experiments::{monte_carlo, Context};

fn main() -> aerostt::Result<()> {
    let mut cfg = ExperimentConfig::default();
    if let Some(n) = std::env::args().nth(1) {
        cfg.monte_carlo.samples = n.parse().expect("sample count");
    }
    let ctx = Context::new(cfg)?;
    let mc = monte_carlo(&ctx)?;
    println!("{} samples, {} escaped", mc.samples, mc.escaped);
    println!("{:<10} {:>14} {:>14} {:>14}", "method", "median_dE", "q3_dE", "median_dra_m");
    for s in &mc.stats {
        println!(
            "{:<10} {:>14.4e} {:>14.4e} {:>14.4e}",
            s.method.name(),
            s.energy.median,
            s.energy.q3,
            s.apoapsis.median
        );
    }
    Ok(())
}
