//! Final-time errors of STM, STT2 and hoDSTT as the initial perturbation
//! rotates away from the maximal HOCGT direction.

use aerostt::config::{ExperimentConfig, Method};
use aerostt::experiments::{direction_study, Context};

fn main() -> aerostt::Result<()> {
    let ctx = Context::new(ExperimentConfig::default())?;
    let d = direction_study(&ctx)?;
    let t_f = *ctx.times.last().expect("non-empty grid");
    let err = |m, k| d.rows.iter().find(|r| r.t == t_f && r.method == m && r.kappa_deg == k).map(|r| r.error);
    println!("{:>8} {:>12} {:>12} {:>12}", "kappa", "STM", "STT2", "hoDSTT");
    for r in d.rows.iter().filter(|r| r.t == t_f && r.method == Method::Stm) {
        let k = r.kappa_deg;
        println!(
            "{:>8.2} {:>12.4e} {:>12.4e} {:>12.4e}",
            k,
            r.error,
            err(Method::Stt2, k).unwrap_or(f64::NAN),
            err(Method::HoDstt, k).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
