//! The transmission channel: a useful signal evolved by `e^{tA}` plus scalar
//! Ornstein-Uhlenbeck noise on the constant mode.
//!
//! An observation at time `t0` is
//!
//! ```text
//! Z = e^{t0 A} theta + eta * 1,   eta ~ N(0, noise_variance(t0))
//! ```
//!
//! The noise is spatially constant, so it only ever touches `c0` (as `+2 eta`,
//! since the constant term is `c0 / 2`).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{FourierSignal, GridSignal};
use crate::noise::{
    first_primes, noise_variance, ou_integral_exact, ou_integral_series_sample, ou_path_exact,
    NoiseParams, RandomSource, SeriesVariant,
};
use crate::spectral::{propagate, OperatorSpec};

/// Representation in which observations are delivered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObservationForm {
    Fourier,
    #[default]
    Grid,
}

impl ObservationForm {
    pub fn as_str(&self) -> &'static str {
        match self {
            ObservationForm::Fourier => "fourier",
            ObservationForm::Grid => "grid",
        }
    }
}

impl std::str::FromStr for ObservationForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier" => Ok(ObservationForm::Fourier),
            "grid" => Ok(ObservationForm::Grid),
            other => Err(Error::InvalidArgument(format!(
                "unknown observation form `{other}`"
            ))),
        }
    }
}

/// How the scalar noise at `t0` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseSampler {
    /// One Gaussian scaled by the analytic standard deviation.
    #[default]
    Exact,
    /// The time-changed Karhunen-Loeve series.
    Series(SeriesVariant),
}

/// Driver family for a scenario. Sample `i` (0-based) uses ChaCha stream `i`
/// of `seed`, or the quasi-random stream of prime index `base + i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Randomness {
    Pseudo { seed: u64 },
    Quasi { base: usize },
}

/// Everything needed to simulate one batch of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub theta: FourierSignal,
    pub op: OperatorSpec,
    pub noise: NoiseParams,
    pub sampler: NoiseSampler,
    pub t0: f64,
    pub n: usize,
    pub modes: usize,
    pub grid: usize,
    pub randomness: Randomness,
    pub observation: ObservationForm,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "observation time t0 must be positive, got {}",
                self.t0
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument(
                "sample size n must be at least 1".into(),
            ));
        }
        if self.grid < 2 * self.modes + 1 {
            return Err(Error::Aliasing {
                grid: self.grid,
                modes: self.modes,
            });
        }
        if self.theta.mode_count() > self.modes {
            return Err(Error::DimensionMismatch {
                what: "signal modes exceed the truncation",
                left: self.theta.mode_count(),
                right: self.modes,
            });
        }
        if self.noise.a0 != self.op.a0() {
            return Err(Error::InvalidArgument(format!(
                "noise A_0 ({}) differs from the operator A_0 ({})",
                self.noise.a0,
                self.op.a0()
            )));
        }
        if let Randomness::Quasi { base: 0 } = self.randomness {
            return Err(Error::InvalidArgument(
                "quasi-random stream base starts at 1".into(),
            ));
        }
        Ok(())
    }

    /// `theta` padded to the scenario truncation.
    pub fn theta_padded(&self) -> FourierSignal {
        self.theta.resized(self.modes)
    }

    pub fn half_period(&self) -> f64 {
        self.theta.half_period()
    }

    /// Driver for sample `index` (0-based).
    pub fn source(&self, index: usize) -> Result<RandomSource> {
        match self.randomness {
            Randomness::Pseudo { seed } => Ok(RandomSource::substream(seed, index as u64)),
            Randomness::Quasi { base } => RandomSource::quasi(base + index),
        }
    }

    /// Drivers for samples `0..n`.
    pub fn sources(&self) -> Vec<RandomSource> {
        match self.randomness {
            Randomness::Pseudo { seed } => (0..self.n)
                .map(|i| RandomSource::substream(seed, i as u64))
                .collect(),
            Randomness::Quasi { base } => {
                let primes = first_primes(base + self.n - 1);
                (0..self.n)
                    .map(|i| RandomSource::quasi_with_prime(base + i, primes[base + i - 1]))
                    .collect()
            }
        }
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Ok(Self {
            noise: self.noise.with_sigma(sigma)?,
            ..self.clone()
        })
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    pub fn with_randomness(&self, randomness: Randomness) -> Self {
        Self {
            randomness,
            ..self.clone()
        }
    }

    /// Variance of the constant-mode noise at `t0`.
    pub fn noise_variance(&self) -> f64 {
        noise_variance(&self.noise, self.t0)
    }
}

/// One transformed signal.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Fourier(FourierSignal),
    Grid(GridSignal),
}

impl Observation {
    pub fn form(&self) -> ObservationForm {
        match self {
            Observation::Fourier(_) => ObservationForm::Fourier,
            Observation::Grid(_) => ObservationForm::Grid,
        }
    }

    pub fn half_period(&self) -> f64 {
        match self {
            Observation::Fourier(s) => s.half_period(),
            Observation::Grid(g) => g.half_period(),
        }
    }

    /// Value at `x`; grid observations report the nearest node.
    pub fn value_at(&self, x: f64) -> f64 {
        match self {
            Observation::Fourier(s) => s.evaluate(x),
            Observation::Grid(g) => g.value_near(x),
        }
    }

    pub fn add_constant(&mut self, value: f64) {
        match self {
            Observation::Fourier(s) => s.add_constant(value),
            Observation::Grid(g) => g.add_constant(value),
        }
    }

    /// Coefficients with `modes` modes, by quadrature for grid data.
    pub fn to_fourier(&self, modes: usize) -> Result<FourierSignal> {
        match self {
            Observation::Fourier(s) => Ok(s.resized(modes)),
            Observation::Grid(g) => g.extract_coefficients(modes),
        }
    }

    /// Pointwise (or coefficient-wise) mean of a non-empty batch.
    pub fn mean(observations: &[Observation]) -> Result<Observation> {
        let mut acc = MeanAccumulator::default();
        for obs in observations {
            acc.push(obs)?;
        }
        acc.mean()
    }
}

/// Running sum of observations of one form.
#[derive(Debug, Clone, Default)]
pub(crate) struct MeanAccumulator {
    sum: Option<Observation>,
    count: usize,
}

impl MeanAccumulator {
    pub(crate) fn push(&mut self, obs: &Observation) -> Result<()> {
        self.count += 1;
        let Some(sum) = &mut self.sum else {
            self.sum = Some(obs.clone());
            return Ok(());
        };
        match (sum, obs) {
            (Observation::Fourier(acc), Observation::Fourier(s)) => {
                *acc = acc.linear_combination(1.0, s, 1.0)?;
            }
            (Observation::Grid(acc), Observation::Grid(g)) => {
                if acc.len() != g.len() {
                    return Err(Error::DimensionMismatch {
                        what: "grid size",
                        left: acc.len(),
                        right: g.len(),
                    });
                }
                if acc.half_period() != g.half_period() {
                    return Err(Error::HalfPeriodMismatch {
                        left: acc.half_period(),
                        right: g.half_period(),
                    });
                }
                let values = acc
                    .values()
                    .iter()
                    .zip(g.values())
                    .map(|(a, b)| a + b)
                    .collect();
                *acc = GridSignal::new(acc.half_period(), values)?;
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "cannot mix grid and Fourier observations".into(),
                ))
            }
        }
        Ok(())
    }

    pub(crate) fn count(&self) -> usize {
        self.count
    }

    pub(crate) fn mean(&self) -> Result<Observation> {
        let sum = self
            .sum
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("no observations to average".into()))?;
        let scale = 1.0 / self.count as f64;
        Ok(match sum {
            Observation::Fourier(s) => Observation::Fourier(s.scaled(scale)),
            Observation::Grid(g) => Observation::Grid(GridSignal::new(
                g.half_period(),
                g.values().iter().map(|v| v * scale).collect(),
            )?),
        })
    }
}

/// A scenario with the deterministic part `e^{t0 A} theta` precomputed.
#[derive(Debug, Clone)]
pub struct Channel<'a> {
    config: &'a ScenarioConfig,
    mean: FourierSignal,
    mean_grid: Option<GridSignal>,
}

impl<'a> Channel<'a> {
    pub fn new(config: &'a ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let mean = propagate(&config.theta_padded(), &config.op, config.t0)?;
        let mean_grid = match config.observation {
            ObservationForm::Grid => Some(mean.evaluate_grid(config.grid)?),
            ObservationForm::Fourier => None,
        };
        Ok(Self {
            config,
            mean,
            mean_grid,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        self.config
    }

    /// `e^{t0 A} theta`.
    pub fn mean(&self) -> &FourierSignal {
        &self.mean
    }

    /// One draw of the constant-mode noise `eta`.
    pub fn draw_noise(&self, rng: &mut RandomSource) -> Result<f64> {
        let cfg = self.config;
        match cfg.sampler {
            NoiseSampler::Exact => Ok(ou_integral_exact(&cfg.noise, cfg.t0, rng)),
            NoiseSampler::Series(variant) => {
                ou_integral_series_sample(&cfg.noise, cfg.t0, variant, rng)
            }
        }
    }

    /// One transformed signal and its noise draw.
    pub fn observe(&self, rng: &mut RandomSource) -> Result<(Observation, f64)> {
        let eta = self.draw_noise(rng)?;
        let mut obs = match &self.mean_grid {
            Some(grid) => Observation::Grid(grid.clone()),
            None => Observation::Fourier(self.mean.clone()),
        };
        obs.add_constant(eta);
        Ok((obs, eta))
    }
}

/// `n` independent observations with the scenario that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub config: ScenarioConfig,
    pub samples: Vec<Observation>,
    /// Noise draw of each sample.
    pub eta: Vec<f64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// One transformed signal `Z = e^{t0 A} theta + eta`.
pub fn sample_transformed(
    config: &ScenarioConfig,
    rng: &mut RandomSource,
) -> Result<(Observation, f64)> {
    Channel::new(config)?.observe(rng)
}

/// `config.n` independent observations, generated in parallel. Sample `i`
/// is driven by its own substream, so the result equals
/// [`sample_batch_sequential`].
pub fn sample_batch(config: &ScenarioConfig) -> Result<SampleSet> {
    let channel = Channel::new(config)?;
    let drawn = config
        .sources()
        .into_par_iter()
        .map(|mut rng| channel.observe(&mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(config, drawn))
}

/// Single-threaded form of [`sample_batch`].
pub fn sample_batch_sequential(config: &ScenarioConfig) -> Result<SampleSet> {
    let channel = Channel::new(config)?;
    let drawn = config
        .sources()
        .into_iter()
        .map(|mut rng| channel.observe(&mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(config, drawn))
}

fn assemble(config: &ScenarioConfig, drawn: Vec<(Observation, f64)>) -> SampleSet {
    let (samples, eta) = drawn.into_iter().unzip();
    SampleSet {
        config: config.clone(),
        samples,
        eta,
    }
}

/// Expected transformed signal, `e^{t0 A} theta`.
pub fn analytic_mean(config: &ScenarioConfig) -> Result<FourierSignal> {
    propagate(&config.theta_padded(), &config.op, config.t0)
}

/// Sample mean and unbiased sample variance of `Z_i(x)`.
pub fn empirical_moments(set: &SampleSet, x: f64) -> Result<(f64, f64)> {
    let n = set.samples.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "sample variance needs at least two samples, got {n}"
        )));
    }
    let values: Vec<f64> = set.samples.iter().map(|z| z.value_at(x)).collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, var))
}

/// How noise is added to animation frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrameNoise {
    #[default]
    Off,
    /// A single noise trajectory sampled jointly across the frame times.
    Path,
    /// A fresh independent draw for every frame.
    Independent,
}

/// One snapshot of the evolving signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub grid: GridSignal,
}

/// Snapshots of `e^{tA} theta` (plus optional noise) on the scenario grid.
/// Noise draws use the driver of sample 0.
pub fn evolve_frames(
    config: &ScenarioConfig,
    times: &[f64],
    noise: FrameNoise,
) -> Result<Vec<Frame>> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::InvalidArgument(
            "frame times must be finite, non-negative and sorted".into(),
        ));
    }
    let theta = config.theta_padded();
    let offsets = match noise {
        FrameNoise::Off => vec![0.0; times.len()],
        FrameNoise::Path => ou_path_exact(&config.noise, times, &mut config.source(0)?)?,
        FrameNoise::Independent => {
            let mut rng = config.source(0)?;
            times
                .iter()
                .map(|&t| ou_integral_exact(&config.noise, t, &mut rng))
                .collect()
        }
    };
    times
        .iter()
        .zip(offsets)
        .map(|(&t, eta)| {
            let mut signal = propagate(&theta, &config.op, t)?;
            signal.add_constant(eta);
            Ok(Frame {
                t,
                grid: signal.evaluate_grid(config.grid)?,
            })
        })
        .collect()
}
