//! The constant-coefficient operator `A = sum_n A_n d^n/dx^n` on the periodic
//! trigonometric system, its per-mode spectrum and the semigroups `e^{+-tA}`.
//!
//! On `span{cos(qx), sin(qx)}` with `q = k pi / l`, differentiation maps
//! `(c, d)` to `(q d, -q c)`. Even powers are therefore scalar and odd powers
//! are rotations, so `A` acts as
//!
//! ```text
//! [[sigma_k, omega_k], [-omega_k, sigma_k]]
//! sigma_k = sum_n (-1)^n A_{2n}   q^{2n}
//! omega_k = sum_n (-1)^n A_{2n+1} q^{2n+1}
//! ```
//!
//! and `e^{tA}` scales mode `k` by `e^{sigma_k t}` while rotating it by
//! `omega_k t`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fourier::FourierSignal;

/// Coefficients `A_0..A_{2m}` of the differential operator.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    coefficients: Vec<f64>,
}

impl OperatorSpec {
    /// Requires an odd-length list of at least three finite values with
    /// `A_0 > 0`.
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() < 3 || coefficients.len() % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "operator needs an odd number (>= 3) of coefficients A_0..A_2m, got {}",
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument(
                "operator coefficients must be finite".into(),
            ));
        }
        if coefficients[0] <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "A_0 must be strictly positive, got {}",
                coefficients[0]
            )));
        }
        Ok(Self { coefficients })
    }

    /// Pads `coefficients` with zeros up to the next valid length.
    pub fn padded(mut coefficients: Vec<f64>) -> Result<Self> {
        let len = coefficients.len().max(3);
        coefficients.resize(len + (1 - len % 2), 0.0);
        Self::new(coefficients)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn a0(&self) -> f64 {
        self.coefficients[0]
    }

    /// Half the operator order, `m`.
    pub fn half_order(&self) -> usize {
        (self.coefficients.len() - 1) / 2
    }

    /// `(sigma, omega)` of the operator acting on frequency `q`.
    pub fn symbol(&self, q: f64) -> (f64, f64) {
        let mut sigma = 0.0;
        let mut omega = 0.0;
        let mut power = 1.0;
        for (n, &a) in self.coefficients.iter().enumerate() {
            // q^n times the sign (-1)^{floor(n/2)}
            let signed = if (n / 2) % 2 == 0 { power } else { -power };
            if n % 2 == 0 {
                sigma += a * signed;
            } else {
                omega += a * signed;
            }
            power *= q;
        }
        (sigma, omega)
    }

    /// Applies the generator `A` to a band-limited signal.
    pub fn apply(&self, signal: &FourierSignal) -> FourierSignal {
        let spectrum = mode_spectrum(self, signal.mode_count(), signal.half_period());
        let modes = signal
            .modes()
            .iter()
            .zip(spectrum.sigma.iter().zip(&spectrum.omega))
            .map(|(&(c, d), (&s, &w))| (s * c + w * d, -w * c + s * d))
            .collect();
        FourierSignal::new(signal.half_period(), self.a0() * signal.c0(), modes)
            .expect("finite operator applied to finite signal")
    }
}

/// Per-mode decay rate and rotation frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    /// Rate of the constant mode, equal to `A_0`.
    pub sigma0: f64,
    /// `sigma_k` for `k = 1..=K` (index 0 holds `k = 1`).
    pub sigma: Vec<f64>,
    /// `omega_k` for `k = 1..=K`.
    pub omega: Vec<f64>,
}

impl ModeSpectrum {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// `(sigma_k, omega_k)` for `k >= 1`.
    pub fn get(&self, k: usize) -> (f64, f64) {
        (self.sigma[k - 1], self.omega[k - 1])
    }
}

/// Spectrum of `op` for modes `1..=modes` on `[-l, l)`.
pub fn mode_spectrum(op: &OperatorSpec, modes: usize, half_period: f64) -> ModeSpectrum {
    // Exact integer wavenumbers when l = pi.
    let unit = PI / half_period;
    let (sigma, omega) = (1..=modes).map(|k| op.symbol(k as f64 * unit)).unzip();
    ModeSpectrum {
        sigma0: op.a0(),
        sigma,
        omega,
    }
}

/// Guard thresholds for the propagators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Caps {
    /// Largest coefficient magnitude a forward propagation may produce.
    pub value_cap: f64,
    /// Largest factor `e^{-sigma_k t}` an inverse propagation may apply.
    pub amplification_cap: f64,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            value_cap: 1e300,
            amplification_cap: 1e12,
        }
    }
}

/// What to do with modes whose inverse amplification exceeds the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IllConditionedModes {
    #[default]
    Fail,
    /// Zero the offending modes and continue.
    Truncate,
}

/// Result of an inverse propagation under a conditioning policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub signal: FourierSignal,
    /// Largest factor applied to a retained, nonzero coefficient.
    pub amplification_max: f64,
    /// Modes zeroed by [`IllConditionedModes::Truncate`].
    pub truncated: Vec<usize>,
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "propagation time must be finite and non-negative, got {t}"
        )))
    }
}

fn rotate(c: f64, d: f64, angle: f64) -> (f64, f64) {
    let (s, co) = angle.sin_cos();
    (c * co + d * s, d * co - c * s)
}

/// `e^{tA} signal` with default [`Caps`].
pub fn propagate(signal: &FourierSignal, op: &OperatorSpec, t: f64) -> Result<FourierSignal> {
    propagate_with(signal, op, t, &Caps::default())
}

/// `e^{tA} signal`; fails if any coefficient would exceed `caps.value_cap`.
pub fn propagate_with(
    signal: &FourierSignal,
    op: &OperatorSpec,
    t: f64,
    caps: &Caps,
) -> Result<FourierSignal> {
    check_time(t)?;
    let log_cap = caps.value_cap.ln();
    let spectrum = mode_spectrum(op, signal.mode_count(), signal.half_period());

    let guard = |mode: usize, rate: f64, magnitude: f64| -> Result<f64> {
        if magnitude == 0.0 {
            return Ok(0.0);
        }
        let log_growth = rate * t;
        if log_growth + magnitude.ln() > log_cap {
            return Err(Error::Overflow {
                mode,
                time: t,
                log_growth,
            });
        }
        Ok(log_growth.exp())
    };

    let c0 = guard(0, spectrum.sigma0, signal.c0().abs())? * signal.c0();
    let modes = signal
        .modes()
        .iter()
        .enumerate()
        .map(|(i, &(c, d))| {
            let (sigma, omega) = spectrum.get(i + 1);
            let scale = guard(i + 1, sigma, c.abs().max(d.abs()))?;
            if scale == 0.0 {
                return Ok((0.0, 0.0));
            }
            let (c, d) = rotate(c, d, omega * t);
            Ok((scale * c, scale * d))
        })
        .collect::<Result<Vec<_>>>()?;
    FourierSignal::new(signal.half_period(), c0, modes)
}

/// `e^{-tA} signal` with default [`Caps`]; fails on ill-conditioned modes.
pub fn inverse_propagate(
    signal: &FourierSignal,
    op: &OperatorSpec,
    t: f64,
) -> Result<FourierSignal> {
    inverse_propagate_with(signal, op, t, &Caps::default(), IllConditionedModes::Fail)
        .map(|inv| inv.signal)
}

/// `e^{-tA} signal`. A mode with a nonzero coefficient whose amplification
/// `e^{-sigma_k t}` exceeds `caps.amplification_cap` either fails the call or
/// is zeroed, according to `policy`.
pub fn inverse_propagate_with(
    signal: &FourierSignal,
    op: &OperatorSpec,
    t: f64,
    caps: &Caps,
    policy: IllConditionedModes,
) -> Result<Inversion> {
    check_time(t)?;
    let log_cap = caps.amplification_cap.ln();
    let spectrum = mode_spectrum(op, signal.mode_count(), signal.half_period());
    let mut amplification_max: f64 = 0.0;
    let mut truncated = Vec::new();

    // c0 decays under the inverse since A_0 > 0.
    let c0_factor = (-spectrum.sigma0 * t).exp();
    if signal.c0() != 0.0 {
        amplification_max = c0_factor;
    }
    let c0 = c0_factor * signal.c0();

    let mut modes = Vec::with_capacity(signal.mode_count());
    for (i, &(c, d)) in signal.modes().iter().enumerate() {
        let k = i + 1;
        let (sigma, omega) = spectrum.get(k);
        if c == 0.0 && d == 0.0 {
            modes.push((0.0, 0.0));
            continue;
        }
        let log_amp = -sigma * t;
        if log_amp > log_cap {
            match policy {
                IllConditionedModes::Fail => {
                    return Err(Error::IllConditioned {
                        mode: k,
                        time: t,
                        amplification: log_amp.exp(),
                        cap: caps.amplification_cap,
                    })
                }
                IllConditionedModes::Truncate => {
                    truncated.push(k);
                    modes.push((0.0, 0.0));
                    continue;
                }
            }
        }
        let scale = log_amp.exp();
        amplification_max = amplification_max.max(scale);
        let (c, d) = rotate(c, d, -omega * t);
        modes.push((scale * c, scale * d));
    }
    if !truncated.is_empty() {
        log::warn!(
            "inverse propagation zeroed {} ill-conditioned mode(s) starting at k = {}",
            truncated.len(),
            truncated[0]
        );
    }
    Ok(Inversion {
        signal: FourierSignal::new(signal.half_period(), c0, modes)?,
        amplification_max,
        truncated,
    })
}

/// Numeric conditioning summary of an operator over `K` modes and a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// `max_k e^{sigma_k t}` over `k = 0..=K` (mode 0 uses `A_0`).
    pub max_forward_growth: f64,
    /// `max_k e^{-sigma_k t}` over `k = 0..=K`.
    pub max_inverse_amplification: f64,
    /// Sign of `(-1)^m A_{2m}`.
    pub leading_sign: f64,
    /// `sigma_k` grows without bound in `k`.
    pub forward_unstable: bool,
    /// `min_k sigma_k t < -ln(amplification_cap)`.
    pub inverse_ill_conditioned: bool,
}

pub fn stability_report(
    op: &OperatorSpec,
    modes: usize,
    half_period: f64,
    t: f64,
) -> StabilityReport {
    stability_report_with(op, modes, half_period, t, &Caps::default())
}

pub fn stability_report_with(
    op: &OperatorSpec,
    modes: usize,
    half_period: f64,
    t: f64,
    caps: &Caps,
) -> StabilityReport {
    let spectrum = mode_spectrum(op, modes, half_period);
    let rates = std::iter::once(spectrum.sigma0).chain(spectrum.sigma.iter().copied());
    let (min_rate, max_rate) = rates.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
        (lo.min(s), hi.max(s))
    });
    let a = op.coefficients();
    let m = op.half_order();
    let signed_even = |j: usize| if j % 2 == 0 { a[2 * j] } else { -a[2 * j] };
    // The highest nonzero even-order term decides the large-k behaviour of sigma_k.
    let forward_unstable = (1..=m)
        .rev()
        .map(signed_even)
        .find(|v| *v != 0.0)
        .is_some_and(|v| v > 0.0);
    let leading = signed_even(m);
    StabilityReport {
        max_forward_growth: (max_rate * t).exp(),
        max_inverse_amplification: (-min_rate * t).exp(),
        leading_sign: if leading == 0.0 {
            0.0
        } else {
            leading.signum()
        },
        forward_unstable,
        inverse_ill_conditioned: min_rate * t < -caps.amplification_cap.ln(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(a: &[f64]) -> OperatorSpec {
        OperatorSpec::new(a.to_vec()).unwrap()
    }

    /// n-th derivative of a band-limited signal, applied term by term.
    fn derivative(s: &FourierSignal, n: usize) -> FourierSignal {
        let l = s.half_period();
        let mut out = s.clone();
        for _ in 0..n {
            let modes = out
                .modes()
                .iter()
                .enumerate()
                .map(|(i, &(c, d))| {
                    let q = (i + 1) as f64 * PI / l;
                    (q * d, -q * c)
                })
                .collect();
            out = FourierSignal::new(l, 0.0, modes).unwrap();
        }
        out
    }

    #[test]
    fn rejects_invalid_operators() {
        assert!(OperatorSpec::new(vec![1.0, 0.0]).is_err());
        assert!(OperatorSpec::new(vec![1.0, 0.0, 0.0, 0.0]).is_err());
        assert!(OperatorSpec::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(OperatorSpec::new(vec![-1.0, 1.0, 1.0]).is_err());
        assert!(OperatorSpec::new(vec![1.0, f64::NAN, 1.0]).is_err());
        assert_eq!(
            OperatorSpec::padded(vec![2.0]).unwrap().coefficients(),
            &[2.0, 0.0, 0.0]
        );
        assert_eq!(
            OperatorSpec::padded(vec![2.0, 1.0, 0.0, 3.0])
                .unwrap()
                .coefficients()
                .len(),
            5
        );
    }

    #[test]
    fn zeroth_order_spectrum() {
        let s = mode_spectrum(&op(&[2.0, 0.0, 0.0]), 7, PI);
        assert!(s.sigma.iter().all(|&v| v == 2.0));
        assert!(s.omega.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn drift_operator_spectrum() {
        let s = mode_spectrum(&op(&[2.0, -1.0, 0.0]), 5, PI);
        let (sigma, omega) = s.get(5);
        assert!((sigma - 2.0).abs() < 1e-14);
        assert!((omega + 5.0).abs() < 1e-13);
    }

    #[test]
    fn heat_operator_spectrum() {
        let (sigma, omega) = mode_spectrum(&op(&[1.0, 0.0, 1.0]), 3, PI).get(3);
        assert!((sigma + 8.0).abs() < 1e-13);
        assert_eq!(omega, 0.0);
    }

    #[test]
    fn spectrum_matches_symbolic_derivatives() {
        // A = sum A_n D^n applied term-wise, read back as the 2x2 block.
        let a = [0.7, -1.3, 0.4, 0.25, -0.05];
        let operator = op(&a);
        let l = 1.7;
        for k in 1..=4 {
            let basis_c = FourierSignal::zero(l, k).unwrap().with_mode(k, 1.0, 0.0);
            let mut applied = FourierSignal::zero(l, k).unwrap();
            for (n, &an) in a.iter().enumerate() {
                let dn = if n == 0 {
                    basis_c.clone()
                } else {
                    derivative(&basis_c, n)
                };
                applied = applied.linear_combination(1.0, &dn, an).unwrap();
            }
            let (sigma, omega) = mode_spectrum(&operator, k, l).get(k);
            // A cos = sigma cos - omega sin
            assert!((applied.c(k) - sigma).abs() < 1e-12 * (1.0 + sigma.abs()));
            assert!((applied.d(k) + omega).abs() < 1e-12 * (1.0 + omega.abs()));
        }
    }

    #[test]
    fn propagate_at_zero_is_identity() {
        let s = FourierSignal::new(PI, 1.0, vec![(0.3, -0.2), (1.0, 4.0)]).unwrap();
        assert_eq!(propagate(&s, &op(&[2.0, -1.0, 0.5]), 0.0).unwrap(), s);
        assert_eq!(
            inverse_propagate(&s, &op(&[2.0, -1.0, 0.5]), 0.0).unwrap(),
            s
        );
    }

    #[test]
    fn drift_transports_cosine() {
        let theta = FourierSignal::zero(PI, 1).unwrap().with_mode(1, 1.0, 0.0);
        for t in [0.1, PI / 7.0, 1.0, 2.5] {
            let out = propagate(&theta, &op(&[2.0, -1.0, 0.0]), t).unwrap();
            let g = (2.0 * t).exp();
            assert!((out.c(1) - g * t.cos()).abs() < 1e-12 * g);
            assert!((out.d(1) - g * t.sin()).abs() < 1e-12 * g);
        }
    }

    #[test]
    fn neutral_heat_mode_is_unchanged() {
        let theta = FourierSignal::new(PI, 1.0, vec![(1.0, 0.0)]).unwrap();
        let out = propagate(&theta, &op(&[1.0, 0.0, 1.0]), 3.0).unwrap();
        assert_eq!(out.mode(1), (1.0, 0.0));
        assert!((out.c0() - 3f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn inverse_scalar_example() {
        let s = FourierSignal::new(PI, 4.0, vec![]).unwrap();
        let out = inverse_propagate(&s, &op(&[2.0, 0.0, 0.0]), 2f64.ln() / 2.0).unwrap();
        assert!((out.c0() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn round_trip_example_42() {
        let theta = FourierSignal::new(PI, 1.0, vec![(0.0, 0.0); 20])
            .unwrap()
            .with_mode(1, 5.0, 0.0)
            .with_mode(5, 0.0, 5.0);
        let operator = op(&[2.0, -1.0, 0.0]);
        let t = PI / 7.0;
        let back =
            inverse_propagate(&propagate(&theta, &operator, t).unwrap(), &operator, t).unwrap();
        assert!(back.max_coefficient_difference(&theta).unwrap() < 1e-10);
    }

    #[test]
    fn overflow_names_the_mode() {
        let theta = FourierSignal::zero(PI, 3).unwrap().with_mode(3, 1.0, 0.0);
        let err = propagate(&theta, &op(&[1.0, 0.0, -1.0]), 100.0).unwrap_err();
        assert!(matches!(err, Error::Overflow { mode: 3, .. }), "{err}");
        assert!(err.is_numeric_instability());
        // A zero coefficient never overflows, however fast its mode grows.
        let zero_high = FourierSignal::zero(PI, 3).unwrap().with_mode(1, 1.0, 0.0);
        assert!(propagate(&zero_high, &op(&[1.0, 0.0, -1.0]), 70.0).is_ok());
    }

    #[test]
    fn inverse_conditioning_guard_and_truncation() {
        let operator = op(&[1.0, 0.0, 1.0]);
        let s = FourierSignal::new(PI, 1.0, vec![(1.0, 0.0); 20]).unwrap();
        let err = inverse_propagate(&s, &operator, 1.0).unwrap_err();
        // e^{-sigma_k} > 1e12 first at k = 6 (sigma_6 = -35).
        assert!(
            matches!(err, Error::IllConditioned { mode: 6, .. }),
            "{err}"
        );

        let inv = inverse_propagate_with(
            &s,
            &operator,
            1.0,
            &Caps::default(),
            IllConditionedModes::Truncate,
        )
        .unwrap();
        assert_eq!(inv.truncated, (6..=20).collect::<Vec<_>>());
        assert!(inv.signal.modes()[5..].iter().all(|&m| m == (0.0, 0.0)));
        assert!((inv.amplification_max - 24f64.exp()).abs() < 1e-6 * 24f64.exp());
    }

    #[test]
    fn stability_examples() {
        let heat = stability_report(&op(&[1.0, 0.0, 1.0]), 20, PI, 1.0);
        assert!(!heat.forward_unstable);
        assert!(heat.inverse_ill_conditioned);
        assert!((heat.max_inverse_amplification.ln() - 399.0).abs() < 1e-9);
        assert_eq!(heat.leading_sign, -1.0);

        let drift = stability_report(&op(&[2.0, -1.0, 0.0]), 20, PI, 0.7);
        assert!(!drift.forward_unstable && !drift.inverse_ill_conditioned);
        assert!((drift.max_forward_growth - 1.4f64.exp()).abs() < 1e-12);
        assert_eq!(drift.leading_sign, 0.0);

        let anti = stability_report(&op(&[1.0, 0.0, -1.0]), 20, PI, 0.1);
        assert!(anti.forward_unstable);
        assert_eq!(anti.leading_sign, 1.0);

        // Fourth order with a damping top term but an anti-diffusive second-order one.
        let mixed = stability_report(&op(&[1.0, 0.0, -1.0, 0.0, -0.01]), 20, PI, 0.1);
        assert!(!mixed.forward_unstable);
    }

    #[test]
    fn apply_matches_time_derivative_of_propagator() {
        let operator = op(&[0.5, -0.8, -0.1]);
        let s = FourierSignal::new(PI, 0.4, vec![(1.0, 0.5), (-0.3, 0.2), (0.0, 0.7)]).unwrap();
        let h = 1e-6;
        let fd = propagate(&s, &operator, h)
            .unwrap()
            .linear_combination(1.0 / h, &s, -1.0 / h)
            .unwrap();
        assert!(fd.max_coefficient_difference(&operator.apply(&s)).unwrap() < 1e-4);
    }
}
