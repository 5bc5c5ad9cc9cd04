//! `wtchaos` command line: one subcommand per experiment plus `fit-slope`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wtchaos::harness::{self, fit_slope_csv, ExperimentConfig, ExperimentId};
use wtchaos::Error;

#[derive(Parser)]
#[command(
    name = "wtchaos",
    version,
    about = "Propagation-of-chaos experiments for wave turbulence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate N-trees with n nodes as Polish codes.
    Trees(RunArgs),
    /// Enumerate pairings and the dimension of their solution sets.
    Pairings(RunArgs),
    /// Structural, oracle and Monte Carlo moments on a model.
    Moments(RunArgs),
    /// Wick residual ladder over L and its log-log slope.
    Slope(RunArgs),
    /// Analytic-space inequalities and Picard decay for 2D Euler.
    #[command(name = "euler-wp")]
    EulerWp(RunArgs),
    /// Upper tail of the analytic norm of the initial datum.
    Tails(RunArgs),
    /// Typical size of the sup norm through grid values.
    #[command(name = "typical-size")]
    TypicalSize(RunArgs),
    /// Conditioned mixed-mode moments of the Euler solution.
    Theorem2(RunArgs),
    /// Run the experiment named in a config file.
    Run(RunArgs),
    /// Fit the log-log slope of one CSV column against the first.
    #[command(name = "fit-slope")]
    FitSlope {
        file: PathBuf,
        #[arg(long, default_value = "residual")]
        column: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Config overrides as KEY=VALUE.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Further KEY=VALUE overrides.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(id: Option<ExperimentId>, a: RunArgs) -> Result<ExperimentConfig, Error> {
    let mut ov = a.set;
    ov.extend(a.overrides);
    if let Some(id) = id {
        ov.push(format!("experiment={id}"));
    }
    if let Some(s) = a.seed {
        ov.push(format!("seed={s}"));
    }
    if let Some(w) = a.workers {
        ov.push(format!("workers={w}"));
    }
    if let Some(o) = a.out {
        ov.push(format!(
            "out={}",
            toml::Value::String(o.display().to_string())
        ));
    }
    match a.config {
        Some(p) => ExperimentConfig::from_file(&p, &ov),
        None => ExperimentConfig::from_sources(None, &ov),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (id, args) = match cli.command {
        Command::FitSlope { file, column } => {
            let fit = std::fs::read_to_string(&file)
                .map_err(Error::from)
                .and_then(|t| fit_slope_csv(&t, &column));
            return match fit {
                Ok(f) => {
                    println!(
                        "slope {:.6} ± {:.6} ({} points, {} excluded)",
                        f.slope, f.half_width, f.used, f.excluded
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            };
        }
        Command::Trees(a) => (Some(ExperimentId::Trees), a),
        Command::Pairings(a) => (Some(ExperimentId::Pairings), a),
        Command::Moments(a) => (Some(ExperimentId::Moments), a),
        Command::Slope(a) => (Some(ExperimentId::Slope), a),
        Command::EulerWp(a) => (Some(ExperimentId::EulerWp), a),
        Command::Tails(a) => (Some(ExperimentId::Tails), a),
        Command::TypicalSize(a) => (Some(ExperimentId::TypicalSize), a),
        Command::Theorem2(a) => (Some(ExperimentId::Theorem2), a),
        Command::Run(a) => (None, a),
    };
    let outcome = load(id, args).and_then(|cfg| harness::run(&cfg));
    match outcome {
        Ok(o) => {
            if let Some(e) = &o.manifest.error {
                eprintln!("error: {e}");
            }
            for a in o.manifest.assertions.iter().filter(|a| !a.passed) {
                eprintln!("FAIL {}: {}", a.name, a.detail);
            }
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
