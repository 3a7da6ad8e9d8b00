//! Scenario files.
//!
//! A scenario is flat `key = value` text split into sections:
//!
//! ```text
//! # comments start with '#'
//! [theta]
//! half_period = pi
//! c0 = 1          # constant term is c0 / 2
//! c.1 = 5         # cos(k pi x / l) coefficient
//! d.5 = 5         # sin(k pi x / l) coefficient
//!
//! [operator]
//! A.0 = 2
//! A.1 = -1
//!
//! [noise]
//! sigma = 150
//! kernel = mean_reverting        # or growth
//! sampler = exact                # or series
//! series_variant = variance_matched
//! series_terms = 999
//!
//! [run]
//! t0 = pi/7
//! n = 4
//! modes = 20
//! grid = 200
//! observation = grid             # or fourier
//! seed = 42
//! sigma_sweep = 150, 1500        # optional
//! ```
//!
//! Real values accept arithmetic on numbers and `pi` (`pi/7`, `-2*pi`, `(1+pi)/2`).

use std::collections::BTreeMap;
use std::path::Path;

use oulab_core::fourier::{FourierSignal, DEFAULT_GRID, DEFAULT_MODES};
use oulab_core::noise::DEFAULT_SERIES_TERMS;
use oulab_core::{
    Kernel, NoiseParams, NoiseSampler, ObservationForm, OperatorSpec, Randomness, ScenarioConfig,
    SeriesVariant,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const PRESETS: &[(&str, &str)] = &[
    ("ex41", include_str!("../presets/ex41.conf")),
    ("ex42", include_str!("../presets/ex42.conf")),
    ("ex43", include_str!("../presets/ex43.conf")),
];

/// Fully resolved scenario, as recorded in run manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub half_period: f64,
    pub c0: f64,
    /// `(c_k, d_k)` for `k = 1..`.
    pub coefficients: Vec<(f64, f64)>,
    /// `A_0, A_1, ...`
    pub operator: Vec<f64>,
    pub sigma: f64,
    pub kernel: String,
    pub sampler: String,
    pub series_variant: String,
    pub series_terms: usize,
    pub t0: f64,
    pub n: usize,
    pub modes: usize,
    pub grid: usize,
    pub observation: String,
    pub seed: Option<u64>,
    pub sigma_sweep: Vec<f64>,
}

impl ScenarioFile {
    /// Loads `source` as a file path, falling back to a preset name.
    pub fn load(source: &str) -> Result<Self> {
        let path = Path::new(source);
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            return parse(&text, source);
        }
        match PRESETS.iter().find(|(name, _)| *name == source) {
            Some((name, text)) => parse(text, &format!("preset {name}")),
            None => Err(CliError::input(format!(
                "config `{source}` is neither a file nor a preset ({})",
                PRESETS.iter().map(|p| p.0).collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    pub fn scenario(&self, randomness: Randomness) -> Result<ScenarioConfig> {
        let kernel: Kernel = self.kernel.parse()?;
        let sampler = match self.sampler.as_str() {
            "exact" => NoiseSampler::Exact,
            "series" => NoiseSampler::Series(self.series_variant.parse::<SeriesVariant>()?),
            other => return Err(CliError::input(format!("unknown sampler `{other}`"))),
        };
        let op = OperatorSpec::padded(self.operator.clone())?;
        let config = ScenarioConfig {
            theta: FourierSignal::new(self.half_period, self.c0, self.coefficients.clone())?,
            noise: NoiseParams::new(self.sigma, op.a0(), kernel, self.series_terms)?,
            op,
            sampler,
            t0: self.t0,
            n: self.n,
            modes: self.modes,
            grid: self.grid,
            randomness,
            observation: self.observation.parse::<ObservationForm>()?,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Theta,
    Operator,
    Noise,
    Run,
}

pub fn parse(text: &str, origin: &str) -> Result<ScenarioFile> {
    let err = |line: usize, message: String| CliError::Config {
        path: origin.to_string(),
        line,
        message,
    };
    let mut section = None;
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut c: BTreeMap<usize, f64> = BTreeMap::new();
    let mut d: BTreeMap<usize, f64> = BTreeMap::new();
    let mut a: BTreeMap<usize, f64> = BTreeMap::new();
    let mut file = ScenarioFile {
        half_period: std::f64::consts::PI,
        c0: 0.0,
        coefficients: Vec::new(),
        operator: Vec::new(),
        sigma: f64::NAN,
        kernel: Kernel::default().as_str().into(),
        sampler: "exact".into(),
        series_variant: SeriesVariant::default().as_str().into(),
        series_terms: DEFAULT_SERIES_TERMS,
        t0: f64::NAN,
        n: 1,
        modes: DEFAULT_MODES,
        grid: DEFAULT_GRID,
        observation: ObservationForm::default().as_str().into(),
        seed: None,
        sigma_sweep: Vec::new(),
    };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(match name.trim() {
                "theta" => Section::Theta,
                "operator" => Section::Operator,
                "noise" => Section::Noise,
                "run" => Section::Run,
                other => return Err(err(line_no, format!("unknown section [{other}]"))),
            });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(
                line_no,
                format!("expected `key = value`, found `{line}`"),
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(section) = section else {
            return Err(err(
                line_no,
                format!("key `{key}` appears before any section"),
            ));
        };
        let qualified = format!("{}:{key}", section as u8);
        if let Some(first) = seen.insert(qualified, line_no) {
            return Err(err(
                line_no,
                format!("duplicate key `{key}` (first set on line {first})"),
            ));
        }
        let real = |v: &str| eval(v).map_err(|m| err(line_no, format!("{key}: {m}")));
        let int = |v: &str| {
            v.parse::<u64>().map_err(|_| {
                err(
                    line_no,
                    format!("{key}: expected a non-negative integer, found `{v}`"),
                )
            })
        };
        let index = |prefix: &str| -> Result<Option<usize>> {
            match key.strip_prefix(prefix) {
                Some(k) => k
                    .parse::<usize>()
                    .map(Some)
                    .map_err(|_| err(line_no, format!("bad index in `{key}`"))),
                None => Ok(None),
            }
        };
        match section {
            Section::Theta => match key {
                "half_period" => file.half_period = real(value)?,
                "c0" => file.c0 = real(value)?,
                _ => {
                    if let Some(k) = index("c.")? {
                        if k == 0 {
                            return Err(err(line_no, "use `c0` for the constant term".into()));
                        }
                        c.insert(k, real(value)?);
                    } else if let Some(k) = index("d.")? {
                        if k == 0 {
                            return Err(err(line_no, "there is no d.0 coefficient".into()));
                        }
                        d.insert(k, real(value)?);
                    } else {
                        return Err(err(line_no, format!("unknown theta key `{key}`")));
                    }
                }
            },
            Section::Operator => match index("A.")? {
                Some(k) => {
                    a.insert(k, real(value)?);
                }
                None => return Err(err(line_no, format!("unknown operator key `{key}`"))),
            },
            Section::Noise => match key {
                "sigma" => file.sigma = real(value)?,
                "kernel" => file.kernel = value.to_string(),
                "sampler" => file.sampler = value.to_string(),
                "series_variant" => file.series_variant = value.to_string(),
                "series_terms" => file.series_terms = int(value)? as usize,
                _ => return Err(err(line_no, format!("unknown noise key `{key}`"))),
            },
            Section::Run => match key {
                "t0" => file.t0 = real(value)?,
                "n" => file.n = int(value)? as usize,
                "modes" => file.modes = int(value)? as usize,
                "grid" => file.grid = int(value)? as usize,
                "observation" => file.observation = value.to_string(),
                "seed" => file.seed = Some(int(value)?),
                "sigma_sweep" => {
                    file.sigma_sweep = value
                        .split(',')
                        .map(|v| real(v.trim()))
                        .collect::<Result<Vec<_>>>()?
                }
                _ => return Err(err(line_no, format!("unknown run key `{key}`"))),
            },
        }
    }

    let end = text.lines().count().max(1);
    if !a.contains_key(&0) {
        return Err(err(end, "missing operator coefficient A.0".into()));
    }
    if file.sigma.is_nan() {
        return Err(err(end, "missing noise sigma".into()));
    }
    if file.t0.is_nan() {
        return Err(err(end, "missing run t0".into()));
    }
    let top = a.keys().max().copied().unwrap_or(0);
    file.operator = (0..=top)
        .map(|k| a.get(&k).copied().unwrap_or(0.0))
        .collect();
    let k_max = c.keys().chain(d.keys()).max().copied().unwrap_or(0);
    file.coefficients = (1..=k_max)
        .map(|k| {
            (
                c.get(&k).copied().unwrap_or(0.0),
                d.get(&k).copied().unwrap_or(0.0),
            )
        })
        .collect();
    Ok(file)
}

/// Evaluates `+ - * /` expressions over numbers, `pi` and parentheses.
pub fn eval(text: &str) -> std::result::Result<f64, String> {
    let mut p = ExprParser {
        chars: text.chars().filter(|c| !c.is_whitespace()).collect(),
        pos: 0,
    };
    if p.chars.is_empty() {
        return Err("empty value".into());
    }
    let v = p.expr()?;
    if p.pos != p.chars.len() {
        return Err(format!("unexpected `{}` in `{text}`", p.chars[p.pos]));
    }
    if !v.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    Ok(v)
}

struct ExprParser {
    chars: Vec<char>,
    pos: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> std::result::Result<f64, String> {
        let mut v = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            v = if op == '+' { v + rhs } else { v - rhs };
        }
        Ok(v)
    }

    fn term(&mut self) -> std::result::Result<f64, String> {
        let mut v = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            v = if op == '*' { v * rhs } else { v / rhs };
        }
        Ok(v)
    }

    fn unary(&mut self) -> std::result::Result<f64, String> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> std::result::Result<f64, String> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(')') {
                    return Err("missing `)`".into());
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
                    self.pos += 1;
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                match word.to_ascii_lowercase().as_str() {
                    "pi" => Ok(std::f64::consts::PI),
                    _ => Err(format!("unknown name `{word}`")),
                }
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
                    self.pos += 1;
                }
                if matches!(self.peek(), Some('e' | 'E')) {
                    let save = self.pos;
                    self.pos += 1;
                    if matches!(self.peek(), Some('+' | '-')) {
                        self.pos += 1;
                    }
                    if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                            self.pos += 1;
                        }
                    } else {
                        self.pos = save;
                    }
                }
                let token: String = self.chars[start..self.pos].iter().collect();
                token.parse().map_err(|_| format!("bad number `{token}`"))
            }
            Some(c) => Err(format!("unexpected `{c}`")),
            None => Err("unexpected end of value".into()),
        }
    }
}

/// Parses `start:end:count` (inclusive, evenly spaced) or a comma list.
pub fn parse_times(spec: &str) -> Result<Vec<f64>> {
    let bad = |m: String| CliError::input(format!("--times `{spec}`: {m}"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, end, count] => {
            let start = eval(start).map_err(bad)?;
            let end = eval(end).map_err(bad)?;
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad frame count `{count}`")))?;
            match count {
                0 => Err(bad("frame count must be positive".into())),
                1 => Ok(vec![start]),
                _ => Ok((0..count)
                    .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
                    .collect()),
            }
        }
        [list] => list.split(',').map(|v| eval(v).map_err(bad)).collect(),
        _ => Err(bad("expected start:end:count or a comma list".into())),
    }
}

/// Parses a comma list of positive integers, requiring ascending order.
pub fn parse_n_grid(spec: &str) -> Result<Vec<usize>> {
    let grid = spec
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| {
                    CliError::input(format!("--n-grid: `{v}` is not a positive integer"))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::input(format!(
            "--n-grid must be strictly ascending, got {spec}"
        )));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn expressions() {
        assert_eq!(eval("pi/7").unwrap(), PI / 7.0);
        assert_eq!(eval("-2*pi").unwrap(), -2.0 * PI);
        assert_eq!(eval("(1+pi)/2").unwrap(), (1.0 + PI) / 2.0);
        assert_eq!(eval("1.5e-3").unwrap(), 1.5e-3);
        assert!(eval("2e").is_err());
        assert_eq!(eval("3 - -1").unwrap(), 4.0);
        assert!(eval("").is_err());
        assert!(eval("1/0").is_err());
        assert!(eval("tau").is_err());
    }

    #[test]
    fn presets_parse() {
        for (name, _) in PRESETS {
            let f = ScenarioFile::load(name).unwrap();
            f.scenario(Randomness::Pseudo { seed: 1 }).unwrap();
        }
        let ex42 = ScenarioFile::load("ex42").unwrap();
        assert_eq!(ex42.operator, vec![2.0, -1.0]);
        assert_eq!(ex42.coefficients[0], (5.0, 0.0));
        assert_eq!(ex42.coefficients[4], (0.0, 5.0));
        assert_eq!(ex42.t0, PI / 7.0);
        assert_eq!(
            ScenarioFile::load("ex43").unwrap().sigma_sweep,
            vec![150.0, 1500.0, 7500.0, 15000.0]
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "[operator]\nA.0 = 2\n[noise]\nsigma = abc\n";
        match parse(text, "x.conf") {
            Err(CliError::Config { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let dup = "[operator]\nA.0 = 2\nA.0 = 3\n";
        assert!(matches!(
            parse(dup, "x"),
            Err(CliError::Config { line: 3, .. })
        ));
        assert!(matches!(
            parse("A.0 = 1", "x"),
            Err(CliError::Config { line: 1, .. })
        ));
        assert!(parse("[operator]\nA.0 = 2\n[noise]\nsigma = 1\n", "x").is_err());
    }

    #[test]
    fn times_and_grids() {
        let t = parse_times("0:pi/7:64").unwrap();
        assert_eq!(t.len(), 64);
        assert_eq!(t[0], 0.0);
        assert!((t[63] - PI / 7.0).abs() < 1e-15);
        assert_eq!(
            parse_times("0.1, pi/7,1").unwrap(),
            vec![0.1, PI / 7.0, 1.0]
        );
        assert!(parse_times("0:1:0").is_err());
        assert_eq!(parse_n_grid("100,1000").unwrap(), vec![100, 1000]);
        assert!(parse_n_grid("1000,100").is_err());
        assert!(parse_n_grid("0,1").is_err());
    }
}
