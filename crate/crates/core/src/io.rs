//! CSV and JSON files.
//!
//! Every CSV has a header row and a leading `t` column; numbers are written
//! with 15 significant digits. Readers recover the grid from the `t` column
//! and insist that it is uniform.

use std::fs::File;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ControlSignal, CorrelationTrajectory, PulseSignal, TimeGrid, Trajectory};

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
            _ => Error::Config(e.to_string()),
        }
    }
}

/// 15 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.14e}")
}

fn write_table(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_num(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t, re_0, im_0, re_1, ...`.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut header = vec!["t".to_string()];
    for i in 0..traj.dim() {
        header.push(format!("re_{i}"));
        header.push(format!("im_{i}"));
    }
    let rows = traj.states.iter().enumerate().map(|(k, s)| {
        let mut row = vec![traj.grid.time(k)];
        row.extend(s.iter().flat_map(|z| [z.re, z.im]));
        row
    });
    write_table(path, &header, rows)
}

/// Columns `t, re, im`.
pub fn write_pulse(path: &Path, pulse: &PulseSignal) -> Result<()> {
    let header = ["t", "re", "im"].map(String::from);
    let rows = pulse.values.iter().enumerate().map(|(k, z)| vec![pulse.grid.time(k), z.re, z.im]);
    write_table(path, &header, rows)
}

/// Columns `t, u`.
pub fn write_control(path: &Path, u: &ControlSignal) -> Result<()> {
    let header = ["t", "u"].map(String::from);
    let rows = u.values.iter().enumerate().map(|(k, v)| vec![u.grid.time(k), *v]);
    write_table(path, &header, rows)
}

/// Per-mode photon numbers `t, n_0, n_1, ...` (the diagonal of `<N>`).
pub fn write_photon_numbers(path: &Path, corr: &CorrelationTrajectory) -> Result<()> {
    let n = corr.matrices.first().map_or(0, |m| m.nrows());
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("n_{i}")));
    let rows = corr.matrices.iter().enumerate().map(|(k, m)| {
        let mut row = vec![corr.grid.time(k)];
        row.extend((0..n).map(|i| m[(i, i)].re));
        row
    });
    write_table(path, &header, rows)
}

/// Columns `t, N_00, N_01, ...` with the real and imaginary parts of every
/// entry, row-major (`re_N_ij`, `im_N_ij`).
pub fn write_correlation(path: &Path, corr: &CorrelationTrajectory) -> Result<()> {
    let n = corr.matrices.first().map_or(0, |m| m.nrows());
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        for j in 0..n {
            header.push(format!("re_N_{i}{j}"));
            header.push(format!("im_N_{i}{j}"));
        }
    }
    let rows = corr.matrices.iter().enumerate().map(|(k, m)| {
        let mut row = vec![corr.grid.time(k)];
        for i in 0..n {
            for j in 0..n {
                row.push(m[(i, j)].re);
                row.push(m[(i, j)].im);
            }
        }
        row
    });
    write_table(path, &header, rows)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Header and numeric rows of a CSV file.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    Error::Config(format!("{}: row {}: cannot parse {f:?} as a number", path.display(), line + 2))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(Error::Config(format!("{}: row {} has {} fields", path.display(), line + 2, row.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Uniform grid spanned by a `t` column.
pub fn grid_from_times(times: &[f64]) -> Result<TimeGrid> {
    if times.len() < 2 {
        return Err(Error::Grid("need at least two time samples".into()));
    }
    let grid = TimeGrid::new(times[0], times[times.len() - 1], times.len() - 1)?;
    for (k, t) in times.iter().enumerate() {
        if grid.index_of(*t).ok() != Some(k) {
            return Err(Error::Grid(format!("time column is not uniform at row {}", k + 2)));
        }
    }
    Ok(grid)
}

fn expect_header(path: &Path, header: &[String], want: &[&str]) -> Result<()> {
    if header.len() != want.len() || header.iter().zip(want).any(|(a, b)| a != b) {
        return Err(Error::Config(format!("{}: expected columns {want:?}, found {header:?}", path.display())));
    }
    Ok(())
}

pub fn read_control(path: &Path) -> Result<ControlSignal> {
    let (header, rows) = read_table(path)?;
    expect_header(path, &header, &["t", "u"])?;
    let grid = grid_from_times(&rows.iter().map(|r| r[0]).collect::<Vec<_>>())?;
    ControlSignal::new(grid, rows.iter().map(|r| r[1]).collect())
}

pub fn read_pulse(path: &Path) -> Result<PulseSignal> {
    let (header, rows) = read_table(path)?;
    expect_header(path, &header, &["t", "re", "im"])?;
    let grid = grid_from_times(&rows.iter().map(|r| r[0]).collect::<Vec<_>>())?;
    PulseSignal::new(grid, rows.iter().map(|r| C64::new(r[1], r[2])).collect())
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let (header, rows) = read_table(path)?;
    if header.first().map(String::as_str) != Some("t") || header.len() % 2 != 1 || header.len() < 3 {
        return Err(Error::Config(format!("{}: not a trajectory file", path.display())));
    }
    let grid = grid_from_times(&rows.iter().map(|r| r[0]).collect::<Vec<_>>())?;
    let n = (header.len() - 1) / 2;
    let states = rows
        .iter()
        .map(|r| nalgebra::DVector::from_fn(n, |i, _| C64::new(r[1 + 2 * i], r[2 + 2 * i])))
        .collect();
    Ok(Trajectory { grid, states })
}
