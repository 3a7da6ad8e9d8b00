//! Truncated Fourier series on the periodic interval `[-l, l)` and their
//! sampled counterparts on a uniform grid.
//!
//! A [`FourierSignal`] stores
//!
//! ```text
//! f(x) = c0/2 + sum_{k=1..K} c_k cos(k pi x / l) + d_k sin(k pi x / l)
//! ```
//!
//! with `c0` kept as the series coefficient, so the constant term of the
//! function is `c0 / 2`. A [`GridSignal`] holds values at the left-endpoint
//! nodes `x_g = -l + 2 l g / G`, `g = 0..G`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default truncation order.
pub const DEFAULT_MODES: usize = 20;
/// Default number of grid nodes.
pub const DEFAULT_GRID: usize = 200;
/// Default probe count used when measuring sup distances of series.
pub const DEFAULT_PROBES: usize = 4096;

fn check_half_period(l: f64) -> Result<()> {
    if l.is_finite() && l > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "half period must be positive and finite, got {l}"
        )))
    }
}

fn same_half_period(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) {
        Ok(())
    } else {
        Err(Error::HalfPeriodMismatch { left: a, right: b })
    }
}

/// `cos(2 pi m / G)` and `sin(2 pi m / G)` for `m = 0..G`.
struct RootTable {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl RootTable {
    fn new(grid: usize) -> Self {
        let (sin, cos) = (0..grid)
            .map(|m| (2.0 * PI * m as f64 / grid as f64).sin_cos())
            .unzip();
        Self { cos, sin }
    }
}

/// Truncated Fourier series on `[-l, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSignal {
    half_period: f64,
    c0: f64,
    modes: Vec<(f64, f64)>,
}

impl FourierSignal {
    /// Builds a signal from `c0` and the `(c_k, d_k)` pairs for `k = 1..=K`.
    pub fn new(half_period: f64, c0: f64, modes: Vec<(f64, f64)>) -> Result<Self> {
        check_half_period(half_period)?;
        if !c0.is_finite() || modes.iter().any(|(c, d)| !c.is_finite() || !d.is_finite()) {
            return Err(Error::InvalidArgument(
                "Fourier coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            half_period,
            c0,
            modes,
        })
    }

    /// The zero signal with `mode_count` modes.
    pub fn zero(half_period: f64, mode_count: usize) -> Result<Self> {
        Self::new(half_period, 0.0, vec![(0.0, 0.0); mode_count])
    }

    /// The constant function `value`, i.e. `c0 = 2 * value`.
    pub fn constant(half_period: f64, value: f64, mode_count: usize) -> Result<Self> {
        Self::new(half_period, 2.0 * value, vec![(0.0, 0.0); mode_count])
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Cosine coefficient of mode `k >= 1`; zero beyond the truncation.
    pub fn c(&self, k: usize) -> f64 {
        self.mode(k).0
    }

    /// Sine coefficient of mode `k >= 1`; zero beyond the truncation.
    pub fn d(&self, k: usize) -> f64 {
        self.mode(k).1
    }

    /// `(c_k, d_k)` for `k >= 1`, zero beyond the truncation.
    pub fn mode(&self, k: usize) -> (f64, f64) {
        assert!(k >= 1, "mode index starts at 1");
        self.modes.get(k - 1).copied().unwrap_or((0.0, 0.0))
    }

    /// The `(c_k, d_k)` pairs, index 0 holding `k = 1`.
    pub fn modes(&self) -> &[(f64, f64)] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Constant term of the function, `c0 / 2`.
    pub fn mean_value(&self) -> f64 {
        0.5 * self.c0
    }

    pub fn set_c0(&mut self, c0: f64) {
        self.c0 = c0;
    }

    /// Sets `(c_k, d_k)`, growing the truncation if needed.
    pub fn set_mode(&mut self, k: usize, c: f64, d: f64) {
        assert!(k >= 1, "mode index starts at 1");
        if self.modes.len() < k {
            self.modes.resize(k, (0.0, 0.0));
        }
        self.modes[k - 1] = (c, d);
    }

    /// Builder form of [`set_mode`](Self::set_mode).
    pub fn with_mode(mut self, k: usize, c: f64, d: f64) -> Self {
        self.set_mode(k, c, d);
        self
    }

    /// Adds the constant function `value` (shifts `c0` by `2 * value`).
    pub fn add_constant(&mut self, value: f64) {
        self.c0 += 2.0 * value;
    }

    /// Copy zero-padded (or truncated) to exactly `mode_count` modes.
    pub fn resized(&self, mode_count: usize) -> Self {
        let mut modes = self.modes.clone();
        modes.resize(mode_count, (0.0, 0.0));
        Self {
            half_period: self.half_period,
            c0: self.c0,
            modes,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            half_period: self.half_period,
            c0: factor * self.c0,
            modes: self
                .modes
                .iter()
                .map(|&(c, d)| (factor * c, factor * d))
                .collect(),
        }
    }

    /// `alpha * self + beta * other`, coefficient-wise. The result carries the
    /// larger of the two truncations.
    pub fn linear_combination(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        same_half_period(self.half_period, other.half_period)?;
        let k = self.mode_count().max(other.mode_count());
        let modes = (1..=k)
            .map(|k| {
                let (a, b) = (self.mode(k), other.mode(k));
                (alpha * a.0 + beta * b.0, alpha * a.1 + beta * b.1)
            })
            .collect();
        Self::new(self.half_period, alpha * self.c0 + beta * other.c0, modes)
    }

    /// `self - other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.linear_combination(1.0, other, -1.0)
    }

    /// Largest absolute coefficient difference, including `c0`.
    pub fn max_coefficient_difference(&self, other: &Self) -> Result<f64> {
        let diff = self.difference(other)?;
        Ok(diff
            .modes
            .iter()
            .fold(diff.c0.abs(), |acc, &(c, d)| acc.max(c.abs()).max(d.abs())))
    }

    /// Value of the series at `x`. The series is `2l`-periodic, so `x` may lie
    /// anywhere on the real line.
    pub fn evaluate(&self, x: f64) -> f64 {
        let l = self.half_period;
        let period = 2.0 * l;
        let reduced = x - period * ((x + l) / period).floor();
        let base = PI * reduced / l;
        self.modes
            .iter()
            .enumerate()
            .fold(0.5 * self.c0, |acc, (i, &(c, d))| {
                let (s, co) = ((i + 1) as f64 * base).sin_cos();
                acc + c * co + d * s
            })
    }

    /// Samples the series on the `G`-point periodic grid.
    pub fn evaluate_grid(&self, grid: usize) -> Result<GridSignal> {
        if grid == 0 {
            return Err(Error::InvalidArgument(
                "grid needs at least one node".into(),
            ));
        }
        // On the grid, k pi x_g / l = 2 pi (k g mod G) / G - k pi.
        let table = RootTable::new(grid);
        let values = (0..grid)
            .map(|g| {
                self.modes
                    .iter()
                    .enumerate()
                    .fold(0.5 * self.c0, |acc, (i, &(c, d))| {
                        let k = i + 1;
                        let m = (k * g) % grid;
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        acc + sign * (c * table.cos[m] + d * table.sin[m])
                    })
            })
            .collect();
        GridSignal::new(self.half_period, values)
    }

    /// Sup distance estimated on `probes` uniform probe points.
    pub fn sup_distance_with_probes(&self, other: &Self, probes: usize) -> Result<f64> {
        let diff = self.difference(other)?;
        let grid = diff.evaluate_grid(probes)?;
        Ok(grid.sup_abs())
    }
}

/// Function values on the uniform periodic grid of `[-l, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSignal {
    half_period: f64,
    values: Vec<f64>,
}

impl GridSignal {
    pub fn new(half_period: f64, values: Vec<f64>) -> Result<Self> {
        check_half_period(half_period)?;
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "grid needs at least one node".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid values must be finite".into()));
        }
        Ok(Self {
            half_period,
            values,
        })
    }

    /// Samples an arbitrary function on the `G`-point grid.
    pub fn from_fn(half_period: f64, grid: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_half_period(half_period)?;
        let values = (0..grid)
            .map(|g| f(grid_node(half_period, grid, g)))
            .collect();
        Self::new(half_period, values)
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Abscissa of node `g`.
    pub fn node(&self, g: usize) -> f64 {
        grid_node(self.half_period, self.values.len(), g)
    }

    /// Iterator over `(x_g, value_g)`.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(g, &v)| (self.node(g), v))
    }

    /// Index of the node closest to `x` (periodically).
    pub fn nearest_node(&self, x: f64) -> usize {
        let l = self.half_period;
        let n = self.values.len() as f64;
        let pos = ((x + l) / (2.0 * l) * n).round();
        pos.rem_euclid(n) as usize
    }

    /// Value at the node closest to `x`.
    pub fn value_near(&self, x: f64) -> f64 {
        self.values[self.nearest_node(x)]
    }

    /// Adds a constant to every node.
    pub fn add_constant(&mut self, value: f64) {
        self.values.iter_mut().for_each(|v| *v += value);
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Recovers `K` modes by the periodic rectangle rule. The rule is exact
    /// for trigonometric polynomials of degree `K` when `G >= 2K + 1`; smaller
    /// grids alias and are rejected.
    pub fn extract_coefficients(&self, modes: usize) -> Result<FourierSignal> {
        extract_coefficients(self, modes)
    }
}

/// Abscissa `x_g = -l + 2 l g / G`.
pub fn grid_node(half_period: f64, grid: usize, g: usize) -> f64 {
    -half_period + 2.0 * half_period * g as f64 / grid as f64
}

/// See [`GridSignal::extract_coefficients`].
pub fn extract_coefficients(grid: &GridSignal, modes: usize) -> Result<FourierSignal> {
    let n = grid.len();
    if n < 2 * modes + 1 {
        return Err(Error::Aliasing { grid: n, modes });
    }
    let table = RootTable::new(n);
    let weight = 2.0 / n as f64;
    let c0 = weight * grid.values.iter().sum::<f64>();
    let coefficients = (1..=modes)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let (c, d) = grid
                .values
                .iter()
                .enumerate()
                .fold((0.0, 0.0), |(c, d), (g, &v)| {
                    let m = (k * g) % n;
                    (c + v * table.cos[m], d + v * table.sin[m])
                });
            (sign * weight * c, sign * weight * d)
        })
        .collect();
    FourierSignal::new(grid.half_period, c0, coefficients)
}

/// Uniform-norm distance between two signals of the same kind.
pub trait SupDistance {
    fn sup_distance(&self, other: &Self) -> Result<f64>;
}

impl SupDistance for FourierSignal {
    /// Maximum over [`DEFAULT_PROBES`] probe points; a lower bound of the true
    /// sup norm.
    fn sup_distance(&self, other: &Self) -> Result<f64> {
        self.sup_distance_with_probes(other, DEFAULT_PROBES)
    }
}

impl SupDistance for GridSignal {
    fn sup_distance(&self, other: &Self) -> Result<f64> {
        same_half_period(self.half_period, other.half_period)?;
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                what: "grid size",
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }
}

/// Free-function form of [`SupDistance::sup_distance`].
pub fn sup_distance<S: SupDistance>(a: &S, b: &S) -> Result<f64> {
    a.sup_distance(b)
}
