mod common;

use std::path::Path;
use std::process::Command;

use aerostt::config::{ExperimentConfig, Method};
use aerostt::dynamics::Component;
use aerostt::experiments::{maximality, monte_carlo, write_monte_carlo, Context};
use tempfile::tempdir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aerostt"))
}

fn small_config(samples: usize, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.monte_carlo.samples = samples;
    c.monte_carlo.seed = seed;
    c.monte_carlo.history_samples = 0;
    c.methods = vec![Method::Stm, Method::Stt2, Method::HoDstt];
    c
}

fn run_mc(dir: &Path, cfg: &Path) {
    let st = bin()
        .args(["monte-carlo", "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(dir)
        .args(["--samples", "6", "--seed", "11"])
        .status()
        .unwrap();
    assert!(st.success());
}

#[test]
fn cli_and_library_write_identical_monte_carlo_files() {
    let tmp = tempdir().unwrap();
    let cfg_path = tmp.path().join("mc.toml");
    std::fs::write(&cfg_path, small_config(100, 1).to_toml_string().unwrap()).unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    run_mc(&a, &cfg_path);
    run_mc(&b, &cfg_path);

    let ctx = Context::new(small_config(6, 11)).unwrap();
    write_monte_carlo(&ctx, &monte_carlo(&ctx).unwrap(), &c).unwrap();

    let read = |d: &Path| std::fs::read_to_string(d.join("monte_carlo_samples.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(read(&a), read(&c));
    assert_eq!(read(&a).lines().count(), 2 + 6 * 3);
    assert!(read(&a).starts_with(&format!("# config_hash={}\n", ctx.hash)));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("monte_carlo.json")).unwrap()).unwrap();
    assert_eq!(json["config_hash"], ctx.hash.as_str());
}

#[test]
fn unknown_methods_are_rejected() {
    let tmp = tempdir().unwrap();
    let out = bin()
        .args(["monte-carlo", "--samples", "1", "--methods", "STM,bogus", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn zero_samples_gives_empty_statistics() {
    let ctx = Context::new(small_config(0, 3)).unwrap();
    let mc = monte_carlo(&ctx).unwrap();
    assert!(mc.rows.is_empty());
    assert_eq!(mc.stats.len(), 3);
    for s in &mc.stats {
        assert_eq!(s.energy.count, 0);
        assert!(s.energy.median.is_nan());
    }
}

#[test]
fn changing_the_config_changes_the_hash() {
    let a = Context::new(small_config(6, 11)).unwrap();
    let b = Context::new(small_config(6, 12)).unwrap();
    assert_ne!(a.hash, b.hash);
    let mut moved = small_config(6, 11);
    moved.output_dir = "elsewhere".into();
    assert_eq!(a.hash, Context::new(moved).unwrap().hash);
}

#[test]
fn maximal_directions_are_normalised_to_one() {
    let ctx = common::default_context();
    let sweep = ctx.sweep(3, Component::Full).unwrap();
    let full = sweep.compose_range(0, sweep.stts.len()).unwrap();
    let rows = maximality(&ctx, &sweep, &full).unwrap();
    assert_eq!(rows.len(), 3 * 7);
    for r in rows.iter().filter(|r| r.direction == 0) {
        assert_eq!(r.relative, 1.0);
    }
}

#[test]
fn second_order_beats_the_stm_in_the_median() {
    let ctx = Context::new(small_config(40, 2)).unwrap();
    let mc = monte_carlo(&ctx).unwrap();
    let med = |m| mc.stats_for(m).unwrap().energy.median;
    assert!(med(Method::Stt2) < med(Method::Stm));
    assert!(med(Method::HoDstt) < med(Method::Stm));
}
