//! Per-interval reconstruction error of reduced-basis DSTTs.

use aerostt::config::{ExperimentConfig, Method};
use aerostt::dynamics::Component;
use aerostt::experiments::{frobenius_sweep, Context};

fn main() -> aerostt::Result<()> {
    let ctx = Context::new(ExperimentConfig::default())?;
    let sweep = ctx.sweep(3, Component::Full)?;
    let methods = [Method::Dstt1, Method::Dstt3, Method::Dstt6, Method::HoDstt];
    let rows = frobenius_sweep(&ctx, &sweep, &methods)?;
    print!("{:>6}", "t_s");
    for m in methods {
        print!(" {:>12}", m.name());
    }
    println!();
    for chunk in rows.chunks(methods.len()).step_by(6) {
        print!("{:>6.0}", chunk[0].t_start);
        for r in chunk {
            print!(" {:>12.4e}", r.error.eps3);
        }
        println!();
    }
    Ok(())
}
