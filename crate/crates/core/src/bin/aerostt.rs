use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aerostt::config::{parse_methods, ExperimentConfig};
use aerostt::experiments::{self as ex, Context};
use aerostt::output::Written;

#[derive(Parser)]
#[command(name = "aerostt", version, about = "Aerocapture STT/DSTT studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the reference trajectory.
    Reference(Common),
    /// Check STTs against finite differences, Taylor scaling and composition.
    SttValidate(Common),
    /// Decomposed CGT and HOCGT/sCGT/qCGT eigenvector studies.
    EigStudies(Common),
    /// Perturbations swept from the maximal HOCGT direction to an orthogonal one.
    DirectionStudy(Common),
    /// Per-interval DSTT reconstruction errors.
    Frobenius(Common),
    /// Terminal energy and apoapsis errors over Gaussian initial perturbations.
    MonteCarlo(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the command's random draws.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Comma-separated methods, e.g. STM,STT2,hoDSTT.
    #[arg(long)]
    methods: Option<String>,
}

impl Common {
    fn resolve(&self, cmd: &Command) -> aerostt::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(n) = self.samples {
            cfg.monte_carlo.samples = n;
        }
        if let Some(m) = &self.methods {
            cfg.methods = parse_methods(m)?;
        }
        if let Some(seed) = self.seed {
            match cmd {
                Command::MonteCarlo(_) => cfg.monte_carlo.seed = seed,
                Command::DirectionStudy(_) | Command::SttValidate(_) => cfg.direction_study.seed = seed,
                _ => cfg.eigen.seed = seed,
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cmd: &Command) -> aerostt::Result<Written> {
    let common = match cmd {
        Command::Reference(c)
        | Command::SttValidate(c)
        | Command::EigStudies(c)
        | Command::DirectionStudy(c)
        | Command::Frobenius(c)
        | Command::MonteCarlo(c) => c,
    };
    let ctx = Context::new(common.resolve(cmd)?)?;
    let out = ctx.config.output_dir.clone();
    std::fs::create_dir_all(&out)?;
    match cmd {
        Command::Reference(_) => ex::write_reference(&ctx, &ex::reference(&ctx)?, &out),
        Command::SttValidate(_) => ex::write_stt_validation(&ctx, &ex::stt_validate(&ctx)?, &out),
        Command::EigStudies(_) => ex::write_eig_studies(&ctx, &ex::eig_studies(&ctx)?, &out),
        Command::DirectionStudy(_) => ex::write_direction_study(&ctx, &ex::direction_study(&ctx)?, &out),
        Command::Frobenius(_) => ex::write_frobenius(&ctx, &ex::frobenius_study(&ctx)?, &out),
        Command::MonteCarlo(_) => {
            let mut w = ex::write_monte_carlo(&ctx, &ex::monte_carlo(&ctx)?, &out)?;
            let n = ctx.config.monte_carlo.history_samples.min(ctx.config.monte_carlo.samples);
            if n > 0 {
                w.csv(&out, "energy_history.csv", &ex::energy_history(&ctx, n)?, &ctx.hash)?;
            }
            Ok(w)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(w) => {
            for f in &w.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
