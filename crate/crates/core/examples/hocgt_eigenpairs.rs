//! Maximal z-eigenpairs of the whole-flight higher-order Cauchy-Green
//! tensors, and how strongly the maximal direction beats its orthogonal
//! complement.

use aerostt::cgt::{cgt, CgtFamily};
use aerostt::config::ExperimentConfig;
use aerostt::dynamics::Component;
use aerostt::eigen::max_eigenpair;
use aerostt::experiments::{maximality, Context};

fn main() -> aerostt::Result<()> {
    let ctx = Context::new(ExperimentConfig::default())?;
    let sweep = ctx.sweep(3, Component::Full)?;
    let full = sweep.compose_range(0, sweep.stts.len())?;
    for m in 2..=4 {
        let s = max_eigenpair(&cgt(&full, &CgtFamily::Full, m)?, &ctx.search)?;
        let b = s.best();
        let v: Vec<String> = b.v.iter().map(|x| format!("{x:+.3}")).collect();
        println!("order {m}: lambda {:.6e}, {} distinct pairs, v = [{}]", b.lambda, s.pairs.len(), v.join(" "));
    }
    for r in maximality(&ctx, &sweep, &full)? {
        println!("{:<8} direction {} relative objective {:.4e}", r.family, r.direction, r.relative);
    }
    Ok(())
}
