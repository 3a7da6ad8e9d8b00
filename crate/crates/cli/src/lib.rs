//! Command-line harness around `oulab-core`: scenario files, presets, run
//! manifests and CSV outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::Path;
use std::time::Instant;

pub use commands::{execute, CauchyOptions, Invocation, Report, Run};
pub use config::ScenarioFile;
pub use error::CliError;
pub use manifest::RunManifest;

/// Executes `run` into `out` and writes its manifest next to the outputs.
pub fn run_and_record(
    run: &Run,
    seed_source: &str,
    out: &Path,
) -> error::Result<(RunManifest, Report)> {
    let started = Instant::now();
    let mut report = execute(run, out)?;
    let manifest = RunManifest {
        command: run.invocation.name().to_string(),
        run: run.clone(),
        seed_source: seed_source.to_string(),
        version: manifest::version(),
        out_dir: out.display().to_string(),
        outputs: std::mem::take(&mut report.outputs),
        slope: report.slope,
        duration_seconds: started.elapsed().as_secs_f64(),
    };
    manifest.write(out)?;
    report.outputs = manifest.outputs.clone();
    Ok((manifest, report))
}
