//! Numerical laboratory for a spectral Ornstein-Uhlenbeck signal transmission
//! model on `C[-l, l)`.
//!
//! A useful signal `theta`, stored as a truncated Fourier series, is evolved by
//! the semigroup of a constant-coefficient differential operator and corrupted
//! by scalar Ornstein-Uhlenbeck noise on the constant mode. The crate simulates
//! the channel, checks its moments against closed forms, and recovers `theta`
//! from repeated observations with a consistent estimator.
//!
//! Modules:
//!
//! * [`fourier`]: series and grid signals, quadrature, sup distances;
//! * [`spectral`]: operator spectrum and forward/inverse propagators;
//! * [`noise`]: Gaussian drivers, Karhunen-Loeve paths, OU moments;
//! * [`model`]: scenario configuration and sampling of transformed signals;
//! * [`estimation`]: the estimator, error reports and convergence studies;
//! * [`csv`]: the CSV schemas shared with the command-line harness.

pub mod csv;
pub mod error;
pub mod estimation;
pub mod fourier;
pub mod model;
pub mod noise;
pub mod spectral;

pub use error::{Error, Result};
pub use estimation::{
    consistency_experiment, error_report, estimate_tn, estimate_tn_with, fit_log_slope,
    infinite_sample_estimate, observation_stream, trial_config, CauchyCriterion, ConsistencyTable,
    ErrorMetrics, Estimate, EstimateReport, EstimatorOptions, RunningEstimate, SummaryRow,
    TrialRecord,
};
pub use fourier::{extract_coefficients, sup_distance, FourierSignal, GridSignal, SupDistance};
pub use model::{
    analytic_mean, empirical_moments, evolve_frames, sample_batch, sample_batch_sequential,
    sample_transformed, Channel, Frame, FrameNoise, NoiseSampler, Observation, ObservationForm,
    Randomness, SampleSet, ScenarioConfig,
};
pub use noise::{
    derive_seed, gaussian_inverse_cdf, noise_covariance, noise_variance, normal_cdf,
    ou_integral_exact, ou_integral_series, ou_integral_series_sample, ou_path_exact,
    quasi_gaussian, wiener_path_value, Kernel, NoiseParams, RandomMode, RandomSource,
    SeriesVariant,
};
pub use spectral::{
    inverse_propagate, mode_spectrum, propagate, stability_report, Caps, IllConditionedModes,
    ModeSpectrum, OperatorSpec, StabilityReport,
};
