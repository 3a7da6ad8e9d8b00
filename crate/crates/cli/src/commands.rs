use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use oulab_core::csv::{self, real};
use oulab_core::estimation::CauchyCriterion;
use oulab_core::noise::ou_path_exact;
use oulab_core::{
    consistency_experiment, error_report, estimate_tn_with, evolve_frames,
    infinite_sample_estimate, mode_spectrum, noise_covariance, noise_variance, observation_stream,
    ou_integral_exact, sample_batch, stability_report, ErrorMetrics, EstimatorOptions,
    FourierSignal, FrameNoise, Randomness, ScenarioConfig,
};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioFile;
use crate::error::{CliError, Result};

/// Command-specific options after parsing and defaulting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Invocation {
    Spectrum,
    Evolve {
        times: Vec<f64>,
        noise: String,
    },
    Sample,
    Estimate {
        samples: Option<PathBuf>,
        cauchy: Option<CauchyOptions>,
    },
    Verify {
        draws: usize,
    },
    Convergence {
        n_grid: Vec<usize>,
        trials: usize,
    },
}

impl Invocation {
    pub fn name(&self) -> &'static str {
        match self {
            Invocation::Spectrum => "spectrum",
            Invocation::Evolve { .. } => "evolve",
            Invocation::Sample => "sample",
            Invocation::Estimate { .. } => "estimate",
            Invocation::Verify { .. } => "verify",
            Invocation::Convergence { .. } => "convergence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyOptions {
    pub epsilon: f64,
    pub window: usize,
    pub n_max: usize,
}

/// Everything a command needs; recorded verbatim in the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub invocation: Invocation,
    pub config: ScenarioFile,
    pub seed: u64,
    pub quasi: bool,
}

impl Run {
    pub fn randomness(&self) -> Randomness {
        if self.quasi {
            Randomness::Quasi { base: 1 }
        } else {
            Randomness::Pseudo { seed: self.seed }
        }
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        self.config.scenario(self.randomness())
    }
}

/// Files written by a command plus anything worth echoing to the user.
#[derive(Debug, Default)]
pub struct Report {
    pub outputs: Vec<String>,
    pub messages: Vec<String>,
    pub slope: Option<f64>,
    /// Failure to report after the outputs have been written.
    pub deferred: Option<CliError>,
}

/// Writes `name` inside `dir` through a temporary file and a rename.
pub fn write_atomic<F>(dir: &Path, name: &str, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let io = |e| CliError::io(&target, e);
    let mut w = BufWriter::new(File::create(&tmp).map_err(io)?);
    body(&mut w).map_err(io)?;
    w.into_inner()
        .map_err(|e| CliError::io(&target, e.into_error()))?
        .sync_all()
        .map_err(io)?;
    fs::rename(&tmp, &target).map_err(io)
}

pub fn execute(run: &Run, out: &Path) -> Result<Report> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let config = run.scenario()?;
    let mut report = Report::default();
    let mut outputs = Vec::new();
    let mut emit = |name: &str, body: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| {
        write_atomic(out, name, body)?;
        outputs.push(name.to_string());
        Ok::<_, CliError>(())
    };

    match &run.invocation {
        Invocation::Spectrum => {
            let spectrum = mode_spectrum(&config.op, config.modes, config.half_period());
            emit("spectrum.csv", &|w| csv::write_spectrum(w, &spectrum))?;
            let s = stability_report(&config.op, config.modes, config.half_period(), config.t0);
            report.messages.push(format!(
                "max forward growth {:.6e}, max inverse amplification {:.6e} at t0 = {}",
                s.max_forward_growth, s.max_inverse_amplification, config.t0
            ));
            if s.forward_unstable {
                report
                    .messages
                    .push("warning: sigma_k grows without bound in k".into());
            }
        }
        Invocation::Evolve { times, noise } => {
            let noise = match noise.as_str() {
                "off" => FrameNoise::Off,
                "path" => FrameNoise::Path,
                "independent" => FrameNoise::Independent,
                other => return Err(CliError::input(format!("unknown noise mode `{other}`"))),
            };
            let frames = evolve_frames(&config, times, noise)?;
            emit("frames.csv", &|w| csv::write_frames(w, &frames))?;
        }
        Invocation::Sample => {
            let set = sample_batch(&config)?;
            emit("samples.csv", &|w| csv::write_samples(w, &set.samples))?;
            report.messages.push(format!(
                "{} samples, noise variance {:.6e}",
                set.len(),
                config.noise_variance()
            ));
        }
        Invocation::Estimate { samples, cauchy } => {
            let rows = estimate_runs(
                run,
                &config,
                samples.as_deref(),
                cauchy.as_ref(),
                &mut report,
            )?;
            emit("estimate.csv", &|w| {
                writeln!(w, "run,k,c,d")?;
                for (i, row) in rows.iter().enumerate() {
                    let s = &row.estimate;
                    writeln!(w, "{},0,{},{}", i + 1, real(s.c0()), real(0.0))?;
                    for (k, (c, d)) in s.modes().iter().enumerate() {
                        writeln!(w, "{},{},{},{}", i + 1, k + 1, real(*c), real(*d))?;
                    }
                }
                Ok(())
            })?;
            emit("report.csv", &|w| {
                writeln!(
                    w,
                    "run,sigma,n_used,sup_error,c0_error,max_mode_error,amplification_max"
                )?;
                for (i, row) in rows.iter().enumerate() {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        i + 1,
                        real(row.sigma),
                        row.n_used,
                        real(row.metrics.sup_error),
                        real(row.metrics.c0_error),
                        real(row.metrics.max_mode_error),
                        real(row.amplification_max)
                    )?;
                }
                Ok(())
            })?;
            for row in &rows {
                report.messages.push(format!(
                    "sigma = {}: n = {}, sup error {:.6e}",
                    row.sigma, row.n_used, row.metrics.sup_error
                ));
            }
        }
        Invocation::Verify { draws } => {
            let checks = verify(&config, *draws)?;
            emit("verify.csv", &|w| {
                writeln!(w, "quantity,s,t,analytic,empirical,standard_error,pass")?;
                for c in &checks {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        c.quantity,
                        real(c.s),
                        real(c.t),
                        real(c.analytic),
                        real(c.empirical),
                        real(c.standard_error),
                        c.pass
                    )?;
                }
                Ok(())
            })?;
            let failed = checks.iter().filter(|c| !c.pass).count();
            report.messages.push(format!(
                "{} of {} checks within 3 standard errors",
                checks.len() - failed,
                checks.len()
            ));
            if failed > 0 {
                report.deferred = Some(CliError::VerificationFailed {
                    failed,
                    total: checks.len(),
                });
            }
        }
        Invocation::Convergence { n_grid, trials } => {
            let table =
                consistency_experiment(&config, n_grid, *trials, &EstimatorOptions::default())?;
            emit("trials.csv", &|w| csv::write_trials(w, &table.trials))?;
            emit("summary.csv", &|w| csv::write_summary(w, &table.summary))?;
            let slope = match table.slope {
                Some(s) => real(s),
                None => "undefined".into(),
            };
            emit("summary.meta", &|w| writeln!(w, "slope={slope}"))?;
            report.slope = table.slope;
            report.messages.push(format!("slope={slope}"));
        }
    }
    report.outputs = outputs;
    Ok(report)
}

struct EstimateRow {
    sigma: f64,
    estimate: FourierSignal,
    metrics: ErrorMetrics,
    n_used: usize,
    amplification_max: f64,
}

/// One estimate from a samples file, from the Cauchy surrogate, or one per
/// swept noise level. Swept runs share the seed, so their errors differ only
/// through the noise amplitude.
fn estimate_runs(
    run: &Run,
    config: &ScenarioConfig,
    samples: Option<&Path>,
    cauchy: Option<&CauchyOptions>,
    report: &mut Report,
) -> Result<Vec<EstimateRow>> {
    let options = EstimatorOptions::default();
    let theta = config.theta_padded();
    let row = |sigma, estimate: FourierSignal, n_used, amplification_max| -> Result<EstimateRow> {
        let metrics = error_report(&estimate, &theta, options.probes)?;
        Ok(EstimateRow {
            sigma,
            estimate,
            metrics,
            n_used,
            amplification_max,
        })
    };

    if let Some(path) = samples {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let observations = csv::read_samples(&text, config.half_period())
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let est = estimate_tn_with(&observations, &config.op, config.t0, config.modes, &options)?;
        return Ok(vec![row(
            config.noise.sigma,
            est.signal,
            observations.len(),
            est.amplification_max,
        )?]);
    }

    if let Some(c) = cauchy {
        let criterion = CauchyCriterion {
            epsilon: c.epsilon,
            window: c.window,
            n_max: c.n_max,
        };
        let result = infinite_sample_estimate(
            observation_stream(config)?,
            &config.op,
            config.t0,
            config.modes,
            &criterion,
            &options,
        )?;
        if !result.converged {
            report.deferred = Some(CliError::NotConverged {
                n_max: c.n_max,
                epsilon: c.epsilon,
            });
        }
        let amplification =
            stability_report(&config.op, config.modes, config.half_period(), config.t0)
                .max_inverse_amplification
                .min(options.caps.amplification_cap);
        return Ok(vec![row(
            config.noise.sigma,
            result.signal,
            result.n_used,
            amplification,
        )?]);
    }

    let sweep = if run.config.sigma_sweep.is_empty() {
        vec![config.noise.sigma]
    } else {
        run.config.sigma_sweep.clone()
    };
    sweep
        .into_iter()
        .map(|sigma| {
            let cfg = config.with_sigma(sigma)?;
            let set = sample_batch(&cfg)?;
            let est = estimate_tn_with(&set.samples, &cfg.op, cfg.t0, cfg.modes, &options)?;
            row(sigma, est.signal, set.len(), est.amplification_max)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub quantity: &'static str,
    pub s: f64,
    pub t: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub standard_error: f64,
    pub pass: bool,
}

impl Check {
    fn from_products(
        quantity: &'static str,
        s: f64,
        t: f64,
        analytic: f64,
        products: &[f64],
    ) -> Self {
        let n = products.len() as f64;
        let empirical = products.iter().sum::<f64>() / n;
        let var = products
            .iter()
            .map(|p| (p - empirical).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        let standard_error = (var / n).sqrt();
        Check {
            quantity,
            s,
            t,
            analytic,
            empirical,
            standard_error,
            pass: (empirical - analytic).abs() <= 3.0 * standard_error,
        }
    }
}

/// Monte Carlo check of the noise second moments. Draw `i` uses the driver of
/// sample `i`: one exact draw at `t0`, then a joint path at quarter points.
pub fn verify(config: &ScenarioConfig, draws: usize) -> Result<Vec<Check>> {
    if draws < 2 {
        return Err(CliError::input("verify needs at least 2 draws"));
    }
    let t0 = config.t0;
    let times = [0.25 * t0, 0.5 * t0, 0.75 * t0, t0];
    let pairs = [(0, 1), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut squares = Vec::with_capacity(draws);
    let mut products = vec![Vec::with_capacity(draws); pairs.len()];
    for mut rng in config.with_n(draws).sources() {
        let eta = ou_integral_exact(&config.noise, t0, &mut rng);
        squares.push(eta * eta);
        let path = ou_path_exact(&config.noise, &times, &mut rng)?;
        for (p, &(i, j)) in products.iter_mut().zip(&pairs) {
            p.push(path[i] * path[j]);
        }
    }
    let mut checks = vec![Check::from_products(
        "variance",
        t0,
        t0,
        noise_variance(&config.noise, t0),
        &squares,
    )];
    for (p, &(i, j)) in products.iter().zip(&pairs) {
        let (s, t) = (times[i], times[j]);
        checks.push(Check::from_products(
            "covariance",
            s,
            t,
            noise_covariance(&config.noise, s, t),
            p,
        ));
    }
    Ok(checks)
}
