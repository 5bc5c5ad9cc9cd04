//! Config-driven experiment runs with manifests, CSV artifacts and exit codes.

pub mod config;
pub mod manifest;
pub mod runners;

use std::path::Path;
use std::time::Instant;

pub use config::{ExperimentConfig, ExperimentId, QuerySpec};
pub use manifest::{fit_slope, fit_slope_csv, RunManifest, RunStatus, SlopeFit, Table};

use crate::error::Result;

/// Outcome of one run: the final manifest and the process exit code.
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub exit_code: i32,
}

/// Validates `cfg`, runs its experiment on `cfg.workers` threads and writes
/// `manifest.json` before and after the run.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let out = Path::new(&cfg.out);
    let mut manifest = RunManifest::new(cfg);
    manifest.write(out)?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| crate::Error::invalid(format!("thread pool: {e}")))?;
    let result = pool.install(|| runners::run_experiment(cfg, out, &mut manifest));
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    let exit_code = match &result {
        Ok(()) if manifest.all_passed() => {
            manifest.status = RunStatus::Passed;
            0
        }
        Ok(()) => {
            manifest.status = RunStatus::Failed;
            4
        }
        Err(e) => {
            manifest.status = RunStatus::Error;
            manifest.error = Some(e.to_string());
            e.exit_code()
        }
    };
    manifest.write(out)?;
    for a in &manifest.assertions {
        log::info!(
            "{} {}: {}",
            if a.passed { "PASS" } else { "FAIL" },
            a.name,
            a.detail
        );
    }
    Ok(RunOutcome {
        manifest,
        exit_code,
    })
}
