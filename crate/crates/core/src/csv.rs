//! Long-format CSV schemas.
//!
//! Reals are written with 17 significant digits so a file read back yields
//! the same doubles.
//!
//! | data            | header                                          |
//! |-----------------|-------------------------------------------------|
//! | grid signal     | `x,value`                                       |
//! | Fourier signal  | `k,c,d` (row `k = 0` holds `(c0, 0)`)           |
//! | spectrum        | `k,sigma,omega` (row `k = 0` holds `(A_0, 0)`)  |
//! | grid samples    | `sample_id,x,value`                             |
//! | Fourier samples | `sample_id,k,c,d`                               |
//! | frames          | `t,x,value`                                     |
//! | trials          | `n,trial,sup_error,c0_error,max_mode_error`     |
//! | summary         | `n,mean_error,sd_error`                         |

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::estimation::{SummaryRow, TrialRecord};
use crate::fourier::{FourierSignal, GridSignal};
use crate::model::{Frame, Observation};
use crate::spectral::ModeSpectrum;

pub const GRID_HEADER: &str = "x,value";
pub const FOURIER_HEADER: &str = "k,c,d";
pub const SPECTRUM_HEADER: &str = "k,sigma,omega";
pub const GRID_SAMPLES_HEADER: &str = "sample_id,x,value";
pub const FOURIER_SAMPLES_HEADER: &str = "sample_id,k,c,d";
pub const FRAMES_HEADER: &str = "t,x,value";
pub const TRIALS_HEADER: &str = "n,trial,sup_error,c0_error,max_mode_error";
pub const SUMMARY_HEADER: &str = "n,mean_error,sd_error";

/// Formats a real with 17 significant digits.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_grid<W: Write>(mut w: W, grid: &GridSignal) -> io::Result<()> {
    writeln!(w, "{GRID_HEADER}")?;
    for (x, v) in grid.points() {
        writeln!(w, "{},{}", real(x), real(v))?;
    }
    Ok(())
}

fn fourier_rows(s: &FourierSignal) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
    std::iter::once((0, s.c0(), 0.0)).chain(
        s.modes()
            .iter()
            .enumerate()
            .map(|(i, &(c, d))| (i + 1, c, d)),
    )
}

pub fn write_fourier<W: Write>(mut w: W, signal: &FourierSignal) -> io::Result<()> {
    writeln!(w, "{FOURIER_HEADER}")?;
    for (k, c, d) in fourier_rows(signal) {
        writeln!(w, "{k},{},{}", real(c), real(d))?;
    }
    Ok(())
}

pub fn write_spectrum<W: Write>(mut w: W, spectrum: &ModeSpectrum) -> io::Result<()> {
    writeln!(w, "{SPECTRUM_HEADER}")?;
    writeln!(w, "0,{},{}", real(spectrum.sigma0), real(0.0))?;
    for (i, (s, o)) in spectrum.sigma.iter().zip(&spectrum.omega).enumerate() {
        writeln!(w, "{},{},{}", i + 1, real(*s), real(*o))?;
    }
    Ok(())
}

/// Writes observations with 1-based sample ids. All observations must share
/// one form.
pub fn write_samples<W: Write>(mut w: W, samples: &[Observation]) -> io::Result<()> {
    let header = match samples.first() {
        Some(Observation::Fourier(_)) => FOURIER_SAMPLES_HEADER,
        _ => GRID_SAMPLES_HEADER,
    };
    writeln!(w, "{header}")?;
    for (i, obs) in samples.iter().enumerate() {
        let id = i + 1;
        match obs {
            Observation::Grid(g) => {
                for (x, v) in g.points() {
                    writeln!(w, "{id},{},{}", real(x), real(v))?;
                }
            }
            Observation::Fourier(s) => {
                for (k, c, d) in fourier_rows(s) {
                    writeln!(w, "{id},{k},{},{}", real(c), real(d))?;
                }
            }
        }
    }
    Ok(())
}

pub fn write_frames<W: Write>(mut w: W, frames: &[Frame]) -> io::Result<()> {
    writeln!(w, "{FRAMES_HEADER}")?;
    for frame in frames {
        for (x, v) in frame.grid.points() {
            writeln!(w, "{},{},{}", real(frame.t), real(x), real(v))?;
        }
    }
    Ok(())
}

pub fn write_trials<W: Write>(mut w: W, rows: &[TrialRecord]) -> io::Result<()> {
    writeln!(w, "{TRIALS_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.n,
            r.trial,
            real(r.sup_error),
            real(r.c0_error),
            real(r.max_mode_error)
        )?;
    }
    Ok(())
}

pub fn write_summary<W: Write>(mut w: W, rows: &[SummaryRow]) -> io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.n, real(r.mean_error), real(r.sd_error))?;
    }
    Ok(())
}

type Rows = Vec<(usize, Vec<f64>)>;

fn parse_error(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("line {line}: {msg}"))
}

fn split_row(line_no: usize, line: &str, columns: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != columns {
        return Err(parse_error(
            line_no,
            format!("expected {columns} columns, found {}", fields.len()),
        ));
    }
    Ok(fields)
}

fn parse_field<T: std::str::FromStr>(line_no: usize, name: &str, field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| parse_error(line_no, format!("cannot parse {name} `{field}`")))
}

/// Reads a samples file written by [`write_samples`]. Grid rows must list the
/// nodes of each sample in order; the half period is taken from the caller
/// and checked against the first node.
pub fn read_samples(text: &str, half_period: f64) -> Result<Vec<Observation>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument("samples file is empty".into()))?;
    let header = header.trim();

    // (sample id, [(line number, parsed fields)])
    let mut grouped: Vec<(usize, Rows)> = Vec::new();
    let columns = match header {
        GRID_SAMPLES_HEADER => 3,
        FOURIER_SAMPLES_HEADER => 4,
        other => {
            return Err(parse_error(
                1,
                format!(
                    "unrecognised header `{other}`; expected `{GRID_SAMPLES_HEADER}` or `{FOURIER_SAMPLES_HEADER}`"
                ),
            ))
        }
    };
    for (line_no, line) in lines {
        let fields = split_row(line_no, line, columns)?;
        let id: usize = parse_field(line_no, "sample_id", fields[0])?;
        let values = fields[1..]
            .iter()
            .map(|f| parse_field::<f64>(line_no, "value", f))
            .collect::<Result<Vec<_>>>()?;
        match grouped.last_mut() {
            Some((last, rows)) if *last == id => rows.push((line_no, values)),
            _ => {
                if grouped.iter().any(|(g, _)| *g == id) {
                    return Err(parse_error(
                        line_no,
                        format!("sample {id} is not contiguous"),
                    ));
                }
                grouped.push((id, vec![(line_no, values)]));
            }
        }
    }
    if grouped.is_empty() {
        return Err(Error::InvalidArgument("samples file has no rows".into()));
    }

    grouped
        .into_iter()
        .map(|(_, rows)| {
            if columns == 3 {
                let g = rows.len();
                for (i, (line_no, v)) in rows.iter().enumerate() {
                    let expected = crate::fourier::grid_node(half_period, g, i);
                    if (v[0] - expected).abs() > 1e-9 * half_period {
                        return Err(parse_error(
                            *line_no,
                            format!("node x = {} does not match grid node {expected}", v[0]),
                        ));
                    }
                }
                Ok(Observation::Grid(GridSignal::new(
                    half_period,
                    rows.into_iter().map(|(_, v)| v[1]).collect(),
                )?))
            } else {
                let mut c0 = None;
                let mut modes = Vec::new();
                for (i, (line_no, v)) in rows.iter().enumerate() {
                    if v[0] != i as f64 {
                        return Err(parse_error(
                            *line_no,
                            format!("expected k = {i}, found {}", v[0]),
                        ));
                    }
                    if i == 0 {
                        c0 = Some(v[1]);
                    } else {
                        modes.push((v[1], v[2]));
                    }
                }
                Ok(Observation::Fourier(FourierSignal::new(
                    half_period,
                    c0.unwrap_or(0.0),
                    modes,
                )?))
            }
        })
        .collect()
}
