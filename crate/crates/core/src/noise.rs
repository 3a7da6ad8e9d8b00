//! Gaussian drivers and the scalar Ornstein-Uhlenbeck noise that enters the
//! constant mode of the transmission model.
//!
//! Two kernels are supported for the stochastic convolution
//! `sigma * int_0^t k(t - tau) dW(tau)`:
//!
//! * [`Kernel::MeanReverting`], `k(s) = e^{-A_0 s}`, with variance
//!   `sigma^2 / (2 A_0) (1 - e^{-2 A_0 t})`;
//! * [`Kernel::Growth`], `k(s) = e^{+A_0 s}`, with variance
//!   `sigma^2 / (2 A_0) (e^{2 A_0 t} - 1)`.

use std::f64::consts::{PI, SQRT_2};

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// Default number of sine terms in the Karhunen-Loeve path.
pub const DEFAULT_SERIES_TERMS: usize = 999;

/// Sign of the exponent in the stochastic convolution kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    #[default]
    MeanReverting,
    Growth,
}

impl Kernel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kernel::MeanReverting => "mean_reverting",
            Kernel::Growth => "growth",
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_reverting" => Ok(Kernel::MeanReverting),
            "growth" => Ok(Kernel::Growth),
            other => Err(Error::InvalidArgument(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Normalisation of the time-changed series sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeriesVariant {
    /// Prefactor `sigma / sqrt(2 A_0)`; the variance matches
    /// [`noise_variance`] for the mean-reverting kernel.
    #[default]
    VarianceMatched,
    /// Prefactor `sigma / (2 A_0)`; variance is off by `1 / (2 A_0)`.
    PaperFaithful,
}

impl SeriesVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            SeriesVariant::VarianceMatched => "variance_matched",
            SeriesVariant::PaperFaithful => "paper_faithful",
        }
    }
}

impl std::str::FromStr for SeriesVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance_matched" => Ok(SeriesVariant::VarianceMatched),
            "paper_faithful" => Ok(SeriesVariant::PaperFaithful),
            other => Err(Error::InvalidArgument(format!(
                "unknown series variant `{other}`"
            ))),
        }
    }
}

/// Amplitude and kernel of the scalar noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub sigma: f64,
    /// `A_0` of the operator.
    pub a0: f64,
    pub kernel: Kernel,
    /// Number of sine terms `N` in the series sampler.
    pub series_terms: usize,
}

impl NoiseParams {
    pub fn new(sigma: f64, a0: f64, kernel: Kernel, series_terms: usize) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise amplitude must be finite and non-negative, got {sigma}"
            )));
        }
        if !(a0.is_finite() && a0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "A_0 must be strictly positive, got {a0}"
            )));
        }
        if series_terms == 0 {
            return Err(Error::InvalidArgument(
                "series_terms must be at least 1".into(),
            ));
        }
        Ok(Self {
            sigma,
            a0,
            kernel,
            series_terms,
        })
    }

    /// Mean-reverting kernel with the default series length.
    pub fn mean_reverting(sigma: f64, a0: f64) -> Result<Self> {
        Self::new(sigma, a0, Kernel::MeanReverting, DEFAULT_SERIES_TERMS)
    }

    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        Self::new(sigma, self.a0, self.kernel, self.series_terms)
    }
}

// ---------------------------------------------------------------------------
// Normal distribution

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Inverse of the standard normal CDF.
///
/// Acklam's rational approximation (relative error below 1.2e-9) followed by
/// one Halley step against `erfc`, which brings the result to near machine
/// precision.
pub fn gaussian_inverse_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            value: p,
            domain: "(0, 1)",
        });
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };

    // Halley refinement. In the upper tail work with the complement to keep
    // relative accuracy.
    let e = if x > 0.0 {
        (1.0 - p) - 0.5 * libm::erfc(x / SQRT_2)
    } else {
        0.5 * libm::erfc(-x / SQRT_2) - p
    };
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    Ok(x - u / (1.0 + 0.5 * x * u))
}

// ---------------------------------------------------------------------------
// Quasi-random Gaussians

/// The first `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    if count == 0 {
        return Vec::new();
    }
    // p_n < n (ln n + ln ln n) for n >= 6.
    let n = count.max(6) as f64;
    let bound = (n * (n.ln() + n.ln().ln())).ceil() as usize + 1;
    let mut composite = vec![false; bound + 1];
    let mut primes = Vec::with_capacity(count);
    for i in 2..=bound {
        if composite[i] {
            continue;
        }
        primes.push(i as u64);
        if primes.len() == count {
            break;
        }
        let mut j = i * i;
        while j <= bound {
            composite[j] = true;
            j += i;
        }
    }
    primes
}

/// The `i`-th prime, `i >= 1` (`nth_prime(1) = 2`).
pub fn nth_prime(i: usize) -> u64 {
    assert!(i >= 1, "prime index starts at 1");
    first_primes(i)[i - 1]
}

/// Fractional part of `j * sqrt(p)`, carried in double-double arithmetic so
/// that large `j` keep full precision.
fn frac_multiple_of_sqrt(j: u64, p: u64) -> f64 {
    let pf = p as f64;
    let hi = pf.sqrt();
    let lo = (-hi).mul_add(hi, pf) / (2.0 * hi);
    let jf = j as f64;
    let prod = jf * hi;
    let err = jf.mul_add(hi, -prod);
    let frac = prod - prod.floor();
    let r = frac + (err + jf * lo);
    r - r.floor()
}

/// `Phi^{-1}({ j sqrt(p_i) })` with `p_i` the `i`-th prime.
pub fn quasi_gaussian(i: usize, j: u64) -> Result<f64> {
    if i == 0 || j == 0 {
        return Err(Error::InvalidArgument(
            "quasi-random indices start at 1".into(),
        ));
    }
    Ok(quasi_gaussian_with_prime(nth_prime(i), j))
}

fn quasi_gaussian_with_prime(p: u64, j: u64) -> f64 {
    let mut u = frac_multiple_of_sqrt(j, p);
    if u <= 0.0 || u >= 1.0 {
        log::warn!("fractional part of {j}*sqrt({p}) hit an endpoint; nudging by one ulp");
        u = if u <= 0.0 {
            f64::EPSILON
        } else {
            1.0 - f64::EPSILON
        };
    }
    gaussian_inverse_cdf(u).expect("nudged into (0, 1)")
}

/// Where a [`RandomSource`] draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomMode {
    /// ChaCha20 keyed by `seed`, on stream `stream`.
    Pseudo { seed: u64, stream: u64 },
    /// The quasi-random sequence `Phi^{-1}({ j sqrt(p_i) })`, `i = stream_index`.
    Quasi { stream_index: usize },
}

/// Seeded source of standard normal variates.
///
/// Pseudo-random draws map the top 53 bits of a ChaCha20 word `w` to
/// `u = (w + 1/2) / 2^53` and return `Phi^{-1}(u)`, so each Gaussian costs
/// exactly one 64-bit word and the stream is fully determined by
/// `(seed, stream, counter)`. Quasi-random draws return
/// `Phi^{-1}({ j sqrt(p_i) })` for `j = counter + 1`.
#[derive(Debug, Clone)]
pub struct RandomSource {
    mode: RandomMode,
    counter: u64,
    state: Driver,
}

#[derive(Debug, Clone)]
enum Driver {
    Pseudo(Box<ChaCha20Rng>),
    Quasi(u64),
}

impl RandomSource {
    /// Stream 0 of the generator keyed by `seed`.
    pub fn pseudo(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    /// Independent stream `stream` of the generator keyed by `seed`.
    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            mode: RandomMode::Pseudo { seed, stream },
            counter: 0,
            state: Driver::Pseudo(Box::new(rng)),
        }
    }

    /// Quasi-random stream driven by the `stream_index`-th prime.
    pub fn quasi(stream_index: usize) -> Result<Self> {
        if stream_index == 0 {
            return Err(Error::InvalidArgument(
                "quasi-random stream index starts at 1".into(),
            ));
        }
        Ok(Self::quasi_with_prime(
            stream_index,
            nth_prime(stream_index),
        ))
    }

    pub(crate) fn quasi_with_prime(stream_index: usize, prime: u64) -> Self {
        Self {
            mode: RandomMode::Quasi { stream_index },
            counter: 0,
            state: Driver::Quasi(prime),
        }
    }

    pub fn mode(&self) -> RandomMode {
        self.mode
    }

    /// Number of Gaussians drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_gaussian(&mut self) -> f64 {
        self.counter += 1;
        match &mut self.state {
            Driver::Pseudo(rng) => {
                let bits = rng.next_u64() >> 11;
                let u = (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
                gaussian_inverse_cdf(u).expect("u lies strictly inside (0, 1)")
            }
            Driver::Quasi(p) => quasi_gaussian_with_prime(*p, self.counter),
        }
    }

    /// `count` successive draws.
    pub fn gaussians(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.next_gaussian()).collect()
    }
}

/// Mixes words into a fresh 64-bit seed (SplitMix64 finaliser), used to key
/// independent experiments off one user seed.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    keys.iter().fold(mix(seed), |acc, &k| mix(acc ^ mix(k)))
}

// ---------------------------------------------------------------------------
// Brownian paths and the OU integral

/// Karhunen-Loeve Wiener path on `[0, 1]`:
/// `x_0 t + sqrt(2) sum_{n=1..N} x_n sin(pi n t) / (pi n)`.
pub fn wiener_path_value(coefficients: &[f64], t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain {
            value: t,
            domain: "[0, 1]",
        });
    }
    let Some((&x0, rest)) = coefficients.split_first() else {
        return Ok(0.0);
    };
    let series: f64 = rest
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let n = (i + 1) as f64;
            x * (PI * n * t).sin() / (PI * n)
        })
        .sum();
    Ok(x0 * t + SQRT_2 * series)
}

/// Variance of the stochastic convolution at time `t`.
pub fn noise_variance(params: &NoiseParams, t: f64) -> f64 {
    let scale = params.sigma * params.sigma / (2.0 * params.a0);
    let x = 2.0 * params.a0 * t;
    match params.kernel {
        Kernel::MeanReverting => scale * -(-x).exp_m1(),
        Kernel::Growth => scale * x.exp_m1(),
    }
}

/// Covariance of the stochastic convolution between times `s` and `t`.
pub fn noise_covariance(params: &NoiseParams, s: f64, t: f64) -> f64 {
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    let a0 = params.a0;
    let scale = params.sigma * params.sigma / (2.0 * a0);
    match params.kernel {
        Kernel::MeanReverting => scale * ((-a0 * (t - s)).exp() - (-a0 * (t + s)).exp()),
        Kernel::Growth => scale * (a0 * (s + t)).exp() * -(-2.0 * a0 * s).exp_m1(),
    }
}

/// Factor relating the convolution at `t + dt` to its value at `t`:
/// `eta(t + dt) = factor * eta(t) + fresh noise of variance noise_variance(dt)`.
fn transition_factor(params: &NoiseParams, dt: f64) -> f64 {
    match params.kernel {
        Kernel::MeanReverting => (-params.a0 * dt).exp(),
        Kernel::Growth => (params.a0 * dt).exp(),
    }
}

/// One exact draw of the convolution at `t0`, consuming one Gaussian.
pub fn ou_integral_exact(params: &NoiseParams, t0: f64, rng: &mut RandomSource) -> f64 {
    let z = rng.next_gaussian();
    if params.sigma == 0.0 {
        return 0.0;
    }
    noise_variance(params, t0).sqrt() * z
}

/// Jointly samples the convolution along increasing `times` (one path),
/// consuming one Gaussian per time.
pub fn ou_path_exact(
    params: &NoiseParams,
    times: &[f64],
    rng: &mut RandomSource,
) -> Result<Vec<f64>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidArgument(
            "path times must be non-negative and sorted".into(),
        ));
    }
    let mut previous = 0.0;
    let mut value = 0.0;
    Ok(times
        .iter()
        .map(|&t| {
            let dt = t - previous;
            let z = rng.next_gaussian();
            value = transition_factor(params, dt) * value + noise_variance(params, dt).sqrt() * z;
            previous = t;
            value
        })
        .collect())
}

/// Time-changed series form of the convolution at `t0`, driven by the
/// Karhunen-Loeve coefficients `x_0..x_N`:
///
/// ```text
/// pre * e^{-A_0 t0} * W(u),  u = e^{2 A_0 t0} - 1
/// ```
///
/// where `W` is [`wiener_path_value`] and `pre` is `sigma / sqrt(2 A_0)`
/// (variance matched) or `sigma / (2 A_0)` (paper faithful). The path
/// expansion only holds on `[0, 1]`, so `u > 1` is rejected.
pub fn ou_integral_series(
    params: &NoiseParams,
    t0: f64,
    coefficients: &[f64],
    variant: SeriesVariant,
) -> Result<f64> {
    let u = (2.0 * params.a0 * t0).exp_m1();
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain {
            value: u,
            domain: "[0, 1] for the time change e^{2 A_0 t0} - 1",
        });
    }
    let prefactor = match variant {
        SeriesVariant::VarianceMatched => params.sigma / (2.0 * params.a0).sqrt(),
        SeriesVariant::PaperFaithful => params.sigma / (2.0 * params.a0),
    };
    Ok(prefactor * (-params.a0 * t0).exp() * wiener_path_value(coefficients, u)?)
}

/// Series sampler drawing its `N + 1` coefficients from `rng`.
pub fn ou_integral_series_sample(
    params: &NoiseParams,
    t0: f64,
    variant: SeriesVariant,
    rng: &mut RandomSource,
) -> Result<f64> {
    let coefficients = rng.gaussians(params.series_terms + 1);
    ou_integral_series(params, t0, &coefficients, variant)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference quantiles from 40-digit evaluation of sqrt(2) erfinv(2p - 1).
    const Q975: f64 = 1.959_963_984_540_054_2;
    const Q_FRAC_SQRT2: f64 = -0.216_719_276_223_777_97;
    const Q_FRAC_2SQRT3: f64 = -0.090_105_686_695_348_48;

    fn sample_variance(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn inverse_cdf_reference_values() {
        assert_eq!(gaussian_inverse_cdf(0.5).unwrap(), 0.0);
        assert!((gaussian_inverse_cdf(0.975).unwrap() - Q975).abs() < 1e-13);
        assert!((gaussian_inverse_cdf(0.025).unwrap() + Q975).abs() < 1e-13);
    }

    #[test]
    fn inverse_cdf_domain() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(gaussian_inverse_cdf(p), Err(Error::Domain { .. })));
        }
    }

    #[test]
    fn inverse_cdf_round_trip_across_range() {
        let mut rng = RandomSource::pseudo(7);
        for i in 0..1000 {
            // Mix uniform probabilities with log-uniform tails.
            let z = rng.next_gaussian();
            let p = if i % 2 == 0 {
                normal_cdf(z)
            } else {
                10f64.powf(-10.0 * normal_cdf(z))
            };
            let p = p.clamp(1e-10, 1.0 - 1e-10);
            let x = gaussian_inverse_cdf(p).unwrap();
            assert!((normal_cdf(x) - p).abs() < 1e-9 * p.max(1e-3), "p = {p}");
        }
    }

    #[test]
    fn primes() {
        assert_eq!(first_primes(10), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(nth_prime(1000), 7919);
        assert!(first_primes(0).is_empty());
    }

    #[test]
    fn quasi_reference_values() {
        assert!((quasi_gaussian(1, 1).unwrap() - Q_FRAC_SQRT2).abs() < 1e-12);
        assert!((quasi_gaussian(2, 2).unwrap() - Q_FRAC_2SQRT3).abs() < 1e-12);
        assert!(quasi_gaussian(0, 1).is_err());
        assert!(quasi_gaussian(1, 0).is_err());
    }

    #[test]
    fn fractional_part_keeps_precision_for_large_multiples() {
        // 10^9 sqrt(2) = 1414213562.3730950488...
        let f = frac_multiple_of_sqrt(1_000_000_000, 2);
        assert!((f - 0.373_095_048_801_688_7).abs() < 1e-12, "{f}");
    }

    #[test]
    fn quasi_mean_is_near_zero() {
        let mut src = RandomSource::quasi(1).unwrap();
        let mean = src.gaussians(100_000).iter().sum::<f64>() / 1e5;
        assert!(mean.abs() < 0.02, "{mean}");
    }

    #[test]
    fn quasi_empirical_cdf_matches_normal() {
        let mut src = RandomSource::quasi(1).unwrap();
        let mut xs = src.gaussians(100_000);
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
            let f = normal_cdf(x);
            acc.max((f - i as f64 / n).abs())
                .max(((i + 1) as f64 / n - f).abs())
        });
        assert!(ks < 0.01, "KS = {ks}");
    }

    #[test]
    fn sources_are_reproducible() {
        let a = RandomSource::substream(42, 3).gaussians(16);
        let b = RandomSource::substream(42, 3).gaussians(16);
        let c = RandomSource::substream(42, 4).gaussians(16);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let q = RandomSource::quasi(3).unwrap().gaussians(5);
        assert_eq!(q, RandomSource::quasi(3).unwrap().gaussians(5));
        assert_eq!(q[0], quasi_gaussian(3, 1).unwrap());
        let mut src = RandomSource::pseudo(1);
        src.gaussians(5);
        assert_eq!(src.counter(), 5);
    }

    #[test]
    fn pseudo_draws_are_standard_normal() {
        let xs = RandomSource::pseudo(11).gaussians(100_000);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 3.0 / (1e5f64).sqrt());
        let var = sample_variance(&xs);
        assert!((var - 1.0).abs() < 3.0 * (2.0 / 1e5f64).sqrt());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, &[100, 0]), derive_seed(1, &[100, 1]));
        assert_ne!(derive_seed(1, &[100, 0]), derive_seed(1, &[0, 100]));
        assert_eq!(derive_seed(9, &[3]), derive_seed(9, &[3]));
    }

    #[test]
    fn wiener_path_endpoints() {
        let x = [0.7, 1.0, -2.0, 0.5];
        assert_eq!(wiener_path_value(&x, 0.0).unwrap(), 0.0);
        assert!((wiener_path_value(&x, 1.0).unwrap() - 0.7).abs() < 1e-15);
        let mut linear = vec![0.0; 10];
        linear[0] = 1.0;
        assert_eq!(wiener_path_value(&linear, 0.5).unwrap(), 0.5);
        assert!(wiener_path_value(&x, 1.01).is_err());
        assert!(wiener_path_value(&x, -0.01).is_err());
    }

    #[test]
    fn wiener_path_variance_at_half() {
        let mut rng = RandomSource::pseudo(2024);
        let values: Vec<f64> = (0..100_000)
            .map(|_| wiener_path_value(&rng.gaussians(1000), 0.5).unwrap())
            .collect();
        let var = sample_variance(&values);
        let se = 0.5 * (2.0 / (values.len() - 1) as f64).sqrt();
        assert!((var - 0.5).abs() < 3.0 * se, "var = {var}");
    }

    #[test]
    fn analytic_moments() {
        let p = NoiseParams::mean_reverting(150.0, 2.0).unwrap();
        assert_eq!(noise_variance(&p, 0.0), 0.0);
        // 5625 (1 - e^{-4 pi / 7})
        assert!((noise_variance(&p, PI / 7.0) - 4_690.716_033_176_94).abs() < 1e-8);
        assert!((noise_variance(&p, 50.0) - 5625.0).abs() < 1e-9);

        let unit = NoiseParams::mean_reverting(1.0, 2.0).unwrap();
        assert!((noise_covariance(&unit, 0.1, 0.3) - 0.055_247_770_479_604_43).abs() < 1e-15);
        assert!(
            (noise_covariance(&unit, 0.3, 0.1) - noise_covariance(&unit, 0.1, 0.3)).abs() == 0.0
        );
        assert_eq!(noise_covariance(&unit, 0.0, 0.7), 0.0);

        for kernel in [Kernel::MeanReverting, Kernel::Growth] {
            let p = NoiseParams::new(1.3, 0.8, kernel, 10).unwrap();
            for t in [0.0, 0.2, 1.7] {
                let diff = noise_covariance(&p, t, t) - noise_variance(&p, t);
                assert!(diff.abs() < 1e-12 * (1.0 + noise_variance(&p, t)));
            }
        }
        let g = NoiseParams::new(1.0, 0.5, Kernel::Growth, 10).unwrap();
        assert!((noise_variance(&g, 1.0) - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn zero_sigma_exact_sampler() {
        let p = NoiseParams::mean_reverting(0.0, 2.0).unwrap();
        let mut rng = RandomSource::pseudo(1);
        assert!((0..10).all(|_| ou_integral_exact(&p, 1.0, &mut rng) == 0.0));
        assert_eq!(rng.counter(), 10);
    }

    #[test]
    fn exact_sampler_variance() {
        let p = NoiseParams::mean_reverting(150.0, 2.0).unwrap();
        let t0 = PI / 7.0;
        let mut rng = RandomSource::pseudo(99);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| ou_integral_exact(&p, t0, &mut rng))
            .collect();
        let v = noise_variance(&p, t0);
        let se = v * (2.0 / (draws.len() - 1) as f64).sqrt();
        assert!((sample_variance(&draws) - v).abs() < 3.0 * se);
        let first = ou_integral_exact(&p, t0, &mut RandomSource::pseudo(5));
        assert_eq!(
            first,
            ou_integral_exact(&p, t0, &mut RandomSource::pseudo(5))
        );
    }

    #[test]
    fn series_domain_and_variants() {
        let p = NoiseParams::mean_reverting(1.0, 0.5).unwrap();
        let zeros = vec![0.0; 20];
        assert_eq!(
            ou_integral_series(&p, 0.4, &zeros, SeriesVariant::VarianceMatched).unwrap(),
            0.0
        );
        let big = NoiseParams::mean_reverting(150.0, 2.0).unwrap();
        assert!(matches!(
            ou_integral_series(&big, PI / 7.0, &zeros, SeriesVariant::PaperFaithful),
            Err(Error::Domain { .. })
        ));

        let p = NoiseParams::mean_reverting(3.0, 0.3).unwrap();
        let x = RandomSource::pseudo(3).gaussians(50);
        let matched = ou_integral_series(&p, 0.5, &x, SeriesVariant::VarianceMatched).unwrap();
        let faithful = ou_integral_series(&p, 0.5, &x, SeriesVariant::PaperFaithful).unwrap();
        assert!((faithful / matched - 1.0 / 0.6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn path_sampler_starts_like_exact_sampler() {
        let p = NoiseParams::mean_reverting(2.0, 1.0).unwrap();
        let path = ou_path_exact(&p, &[0.4], &mut RandomSource::pseudo(8)).unwrap();
        let exact = ou_integral_exact(&p, 0.4, &mut RandomSource::pseudo(8));
        assert!((path[0] - exact).abs() < 1e-14);
        assert!(ou_path_exact(&p, &[0.5, 0.2], &mut RandomSource::pseudo(8)).is_err());
    }

    #[test]
    fn parse_enums() {
        assert_eq!("growth".parse::<Kernel>().unwrap(), Kernel::Growth);
        assert!("sideways".parse::<Kernel>().is_err());
        assert_eq!(
            "paper_faithful".parse::<SeriesVariant>().unwrap(),
            SeriesVariant::PaperFaithful
        );
    }
}
