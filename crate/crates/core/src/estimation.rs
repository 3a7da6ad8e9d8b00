//! Recovery of the useful signal from transformed observations.
//!
//! The estimator averages the observations and pulls the average back through
//! the inverse semigroup:
//!
//! ```text
//! T_n(Z_1..Z_n) = e^{-t0 A} ( (Z_1 + ... + Z_n) / n )
//! ```
//!
//! Because the noise lives in the constant mode only, the error of `T_n` is
//! the constant `e^{-A_0 t0} * mean(eta)`, which vanishes almost surely as
//! `n` grows.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{FourierSignal, DEFAULT_PROBES};
use crate::model::{sample_batch, MeanAccumulator, Observation, Randomness, ScenarioConfig};
use crate::noise::derive_seed;
use crate::spectral::{inverse_propagate_with, Caps, IllConditionedModes, OperatorSpec};

/// Mean errors below this are treated as roundoff when fitting rates.
pub const SLOPE_NOISE_FLOOR: f64 = 1e-12;

/// Tuning for [`estimate_tn_with`] and the experiments built on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    pub caps: Caps,
    pub ill_conditioned: IllConditionedModes,
    /// Probe points used for sup distances.
    pub probes: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            caps: Caps::default(),
            ill_conditioned: IllConditionedModes::Truncate,
            probes: DEFAULT_PROBES,
        }
    }
}

/// Output of the estimator with conditioning diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub signal: FourierSignal,
    pub amplification_max: f64,
    /// Modes dropped because their inverse amplification exceeded the cap.
    pub truncated: Vec<usize>,
}

fn invert(
    mean: &Observation,
    op: &OperatorSpec,
    t0: f64,
    modes: usize,
    options: &EstimatorOptions,
) -> Result<Estimate> {
    let averaged = mean.to_fourier(modes)?;
    let inv = inverse_propagate_with(&averaged, op, t0, &options.caps, options.ill_conditioned)?;
    Ok(Estimate {
        signal: inv.signal,
        amplification_max: inv.amplification_max,
        truncated: inv.truncated,
    })
}

/// `T_n` with default options.
pub fn estimate_tn(
    samples: &[Observation],
    op: &OperatorSpec,
    t0: f64,
    modes: usize,
) -> Result<FourierSignal> {
    estimate_tn_with(samples, op, t0, modes, &EstimatorOptions::default()).map(|e| e.signal)
}

/// `T_n`: average the samples, then invert the propagator once.
pub fn estimate_tn_with(
    samples: &[Observation],
    op: &OperatorSpec,
    t0: f64,
    modes: usize,
    options: &EstimatorOptions,
) -> Result<Estimate> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument(
            "estimator needs at least one sample".into(),
        ));
    }
    invert(&Observation::mean(samples)?, op, t0, modes, options)
}

/// Distances between an estimate and the true signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub sup_error: f64,
    /// `estimate.c0 - theta.c0`.
    pub c0_error: f64,
    /// `max_{k >= 1} |(c_k, d_k) - (c_k*, d_k*)|`.
    pub max_mode_error: f64,
}

/// An estimate together with its error against a known signal.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimate: FourierSignal,
    pub sup_error: f64,
    pub c0_error: f64,
    pub max_mode_error: f64,
    pub n_used: usize,
    pub amplification_max: f64,
}

impl EstimateReport {
    pub fn new(
        estimate: Estimate,
        theta: &FourierSignal,
        n_used: usize,
        probes: usize,
    ) -> Result<Self> {
        let metrics = error_report(&estimate.signal, theta, probes)?;
        Ok(Self {
            estimate: estimate.signal,
            sup_error: metrics.sup_error,
            c0_error: metrics.c0_error,
            max_mode_error: metrics.max_mode_error,
            n_used,
            amplification_max: estimate.amplification_max,
        })
    }

    pub fn metrics(&self) -> ErrorMetrics {
        ErrorMetrics {
            sup_error: self.sup_error,
            c0_error: self.c0_error,
            max_mode_error: self.max_mode_error,
        }
    }
}

pub fn error_report(
    estimate: &FourierSignal,
    theta: &FourierSignal,
    probes: usize,
) -> Result<ErrorMetrics> {
    if estimate.mode_count() != theta.mode_count() {
        return Err(Error::DimensionMismatch {
            what: "mode count",
            left: estimate.mode_count(),
            right: theta.mode_count(),
        });
    }
    let diff = estimate.difference(theta)?;
    let max_mode_error = diff
        .modes()
        .iter()
        .fold(0.0f64, |acc, &(c, d)| acc.max(c.hypot(d)));
    Ok(ErrorMetrics {
        sup_error: estimate.sup_distance_with_probes(theta, probes)?,
        c0_error: diff.c0(),
        max_mode_error,
    })
}

/// Stopping rule for [`infinite_sample_estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyCriterion {
    /// Threshold on the sup distance between consecutive estimates.
    pub epsilon: f64,
    /// Number of consecutive estimates that must agree.
    pub window: usize,
    pub n_max: usize,
}

/// Result of the running-estimate surrogate for the infinite-sample estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningEstimate {
    pub signal: FourierSignal,
    pub n_used: usize,
    pub converged: bool,
}

/// Runs `T_1, T_2, ...` over a stream of observations and stops once the last
/// `window` estimates are pairwise-consecutively within `epsilon` in sup
/// distance. Exhausting `n_max` (or the stream) is reported through
/// `converged = false`, never as a made-up estimate.
pub fn infinite_sample_estimate<I>(
    stream: I,
    op: &OperatorSpec,
    t0: f64,
    modes: usize,
    criterion: &CauchyCriterion,
    options: &EstimatorOptions,
) -> Result<RunningEstimate>
where
    I: IntoIterator<Item = Result<Observation>>,
{
    if criterion.epsilon.is_nan() || criterion.epsilon < 0.0 {
        return Err(Error::InvalidArgument(
            "epsilon must be non-negative".into(),
        ));
    }
    if criterion.window < 2 || criterion.n_max == 0 {
        return Err(Error::InvalidArgument(
            "window must be at least 2 and n_max at least 1".into(),
        ));
    }
    let mut acc = MeanAccumulator::default();
    let mut previous: Option<FourierSignal> = None;
    let mut gaps: VecDeque<f64> = VecDeque::with_capacity(criterion.window);

    for obs in stream.into_iter().take(criterion.n_max) {
        acc.push(&obs?)?;
        let current = invert(&acc.mean()?, op, t0, modes, options)?.signal;
        if let Some(prev) = &previous {
            if gaps.len() == criterion.window - 1 {
                gaps.pop_front();
            }
            gaps.push_back(current.sup_distance_with_probes(prev, options.probes)?);
        }
        previous = Some(current);
        if gaps.len() == criterion.window - 1 && gaps.iter().all(|&g| g < criterion.epsilon) {
            return Ok(RunningEstimate {
                signal: previous.expect("set above"),
                n_used: acc.count(),
                converged: true,
            });
        }
    }
    let signal =
        previous.ok_or_else(|| Error::InvalidArgument("observation stream was empty".into()))?;
    Ok(RunningEstimate {
        signal,
        n_used: acc.count(),
        converged: false,
    })
}

/// Observation stream for `config`: sample `i` uses the same driver it would
/// in [`sample_batch`].
pub fn observation_stream(
    config: &ScenarioConfig,
) -> Result<impl Iterator<Item = Result<Observation>> + '_> {
    let channel = crate::model::Channel::new(config)?;
    Ok((0..).map(move |i| {
        let mut rng = channel.config().source(i)?;
        channel.observe(&mut rng).map(|(obs, _)| obs)
    }))
}

/// One estimation run in a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    pub sup_error: f64,
    pub c0_error: f64,
    pub max_mode_error: f64,
}

/// Mean and spread of the sup error at one sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    pub mean_error: f64,
    /// Sample standard deviation across trials (zero for a single trial).
    pub sd_error: f64,
}

impl SummaryRow {
    /// Standard error of `mean_error`.
    pub fn standard_error(&self, trials: usize) -> f64 {
        self.sd_error / (trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyTable {
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    /// Least-squares slope of `ln(mean_error)` against `ln(n)`; `None` when
    /// fewer than two sample sizes are present or the errors are at roundoff.
    pub slope: Option<f64>,
}

/// Scenario for trial `trial` at sample size `n`, keyed so that every
/// `(seed, n, trial)` gets an independent driver.
pub fn trial_config(config: &ScenarioConfig, n: usize, trial: usize) -> ScenarioConfig {
    let randomness = match config.randomness {
        Randomness::Pseudo { seed } => Randomness::Pseudo {
            seed: derive_seed(seed, &[n as u64, trial as u64]),
        },
        Randomness::Quasi { base } => Randomness::Quasi {
            base: base + trial * n,
        },
    };
    config.with_n(n).with_randomness(randomness)
}

/// Runs `trials` independent estimations for each `n` in `n_grid` and fits the
/// convergence rate of the mean sup error.
pub fn consistency_experiment(
    config: &ScenarioConfig,
    n_grid: &[usize],
    trials: usize,
    options: &EstimatorOptions,
) -> Result<ConsistencyTable> {
    if n_grid.is_empty() || trials == 0 {
        return Err(Error::InvalidArgument(
            "need at least one sample size and one trial".into(),
        ));
    }
    if n_grid.contains(&0) || n_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "sample sizes must be positive and sorted ascending".into(),
        ));
    }
    config.validate()?;
    let theta = config.theta_padded();

    let jobs: Vec<(usize, usize)> = n_grid
        .iter()
        .flat_map(|&n| (0..trials).map(move |t| (n, t)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(n, trial)| {
            let cfg = trial_config(config, n, trial);
            let set = sample_batch(&cfg)?;
            let estimate = estimate_tn_with(&set.samples, &cfg.op, cfg.t0, cfg.modes, options)?;
            let m = error_report(&estimate.signal, &theta, options.probes)?;
            Ok(TrialRecord {
                n,
                trial,
                sup_error: m.sup_error,
                c0_error: m.c0_error,
                max_mode_error: m.max_mode_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let summary: Vec<SummaryRow> = records
        .chunks(trials)
        .map(|chunk| {
            let errors: Vec<f64> = chunk.iter().map(|r| r.sup_error).collect();
            let (mean_error, sd_error) = mean_and_sd(&errors);
            SummaryRow {
                n: chunk[0].n,
                mean_error,
                sd_error,
            }
        })
        .collect();
    let slope = fit_log_slope(&summary);
    Ok(ConsistencyTable {
        trials: records,
        summary,
        slope,
    })
}

fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Least-squares slope of `ln(mean_error)` on `ln(n)`.
pub fn fit_log_slope(summary: &[SummaryRow]) -> Option<f64> {
    if summary
        .iter()
        .any(|r| r.mean_error.is_nan() || r.mean_error < SLOPE_NOISE_FLOOR)
    {
        return None;
    }
    let points: Vec<(f64, f64)> = summary
        .iter()
        .map(|r| ((r.n as f64).ln(), r.mean_error.ln()))
        .collect();
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
