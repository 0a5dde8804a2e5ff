//! Dominant Cauchy-Green eigenvectors of the conservative, dissipative and
//! full STMs on each grid interval.

use aerostt::config::ExperimentConfig;
use aerostt::experiments::{decomposed_cgt, Context};

fn main() -> aerostt::Result<()> {
    let ctx = Context::new(ExperimentConfig::default())?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>10} {:>10}", "t_s", "lam_full", "lam_cons", "lam_diss", "diss_deg", "cons_deg");
    for r in decomposed_cgt(&ctx)?.iter().step_by(4) {
        println!(
            "{:>6.0} {:>12.4e} {:>12.4e} {:>12.4e} {:>10.3} {:>10.3}",
            r.t_start,
            r.lambda_full,
            r.lambda_conservative,
            r.lambda_dissipative,
            r.angle_dissipative_full_deg,
            r.angle_conservative_full_deg
        );
    }
    Ok(())
}
