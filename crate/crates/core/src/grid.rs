//! Uniform time grids and the sampled signals that live on them.
//!
//! Every simulation and optimization runs on a single fixed grid
//! `t_k = t0 + k dt`, `k = 0..=steps`. Controls and pulses are stored one
//! sample per grid point. Controls are piecewise linear between samples;
//! pulses are read at Runge-Kutta half steps through local cubics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when matching a time value to a grid point.
const GRID_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) {
            return Err(Error::Grid("endpoints must be finite".into()));
        }
        if t0 >= t1 {
            return Err(Error::Grid(format!("t0 = {t0} must be below t1 = {t1}")));
        }
        if steps == 0 {
            return Err(Error::Grid("steps must be positive".into()));
        }
        Ok(Self { t0, t1, steps })
    }

    /// Re-checks invariants on a grid that bypassed `new` (e.g. deserialized).
    pub fn validate(&self) -> Result<()> {
        Self::new(self.t0, self.t1, self.steps).map(|_| ())
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    /// Number of grid points, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t1
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    /// Index of the grid point at `t`, or `OffGrid` if `t` is not one.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let dt = self.dt();
        let x = (t - self.t0) / dt;
        let k = x.round();
        if k < 0.0 || k > self.steps as f64 || (x - k).abs() > GRID_SNAP * (1.0 + x.abs()) {
            return Err(Error::OffGrid { t });
        }
        Ok(k as usize)
    }

    pub fn matches(&self, other: &TimeGrid) -> bool {
        let tol = 1e-12 * (1.0 + self.t0.abs().max(self.t1.abs()));
        self.steps == other.steps
            && (self.t0 - other.t0).abs() <= tol
            && (self.t1 - other.t1).abs() <= tol
    }

    pub(crate) fn ensure_matches(&self, other: &TimeGrid, what: &str) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: [{}, {}]/{} vs [{}, {}]/{}",
                self.t0, self.t1, self.steps, other.t0, other.t1, other.steps
            )))
        }
    }

    /// Trapezoid weights `dt/2, dt, ..., dt, dt/2`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let dt = self.dt();
        let mut w = vec![dt; self.len()];
        w[0] = 0.5 * dt;
        w[self.steps] = 0.5 * dt;
        w
    }
}

/// Real control samples `u(t_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl ControlSignal {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "control has {} samples, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { signal: "control", index });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        Self { grid, values: grid.times().into_iter().map(f).collect() }
    }

    /// Value at the midpoint between samples `k` and `k + 1`.
    pub fn midpoint(&self, k: usize) -> f64 {
        0.5 * (self.values[k] + self.values[k + 1])
    }

    /// Linear interpolation at `t_k + s dt`, `0 <= s <= 1`.
    pub fn at_fraction(&self, k: usize, s: f64) -> f64 {
        (1.0 - s) * self.values[k] + s * self.values[k + 1]
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }
}

/// Complex pulse-shape samples `xi(t_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSignal {
    pub grid: TimeGrid,
    pub values: Vec<C64>,
}

impl PulseSignal {
    pub fn new(grid: TimeGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "pulse has {} samples, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { signal: "pulse", index });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self { grid, values: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> C64) -> Self {
        Self { grid, values: grid.times().into_iter().map(f).collect() }
    }

    /// Value halfway between `t_k` and `t_{k+1}` from four-point cubic
    /// interpolation (one-sided at the ends, linear below four samples).
    pub fn midpoint(&self, k: usize) -> C64 {
        let v = &self.values;
        let n = v.len();
        if n < 4 {
            return (v[k] + v[k + 1]) * 0.5;
        }
        let s = if k == 0 {
            v[0] * 5.0 + v[1] * 15.0 - v[2] * 5.0 + v[3]
        } else if k + 2 == n {
            v[k - 2] - v[k - 1] * 5.0 + v[k] * 15.0 + v[k + 1] * 5.0
        } else {
            -v[k - 1] + v[k] * 9.0 + v[k + 1] * 9.0 - v[k + 2]
        };
        s / 16.0
    }

    /// Value at `t_k + s dt` from the same four-point cubic as [`Self::midpoint`].
    pub fn at_fraction(&self, k: usize, s: f64) -> C64 {
        let v = &self.values;
        let n = v.len();
        if n < 4 {
            return v[k] * (1.0 - s) + v[k + 1] * s;
        }
        let first = k.saturating_sub(1).min(n - 4);
        let x = (k - first) as f64 + s;
        let mut out = C64::new(0.0, 0.0);
        for i in 0..4 {
            let mut w = 1.0;
            for j in 0..4 {
                if j != i {
                    w *= (x - j as f64) / (i as f64 - j as f64);
                }
            }
            out += v[first + i] * w;
        }
        out
    }

    /// `|xi(t_k)|^2` per sample.
    pub fn intensity(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// `int |xi|^2 dt` by the trapezoid rule.
    pub fn norm_sqr(&self) -> f64 {
        trapezoid(&self.intensity(), self.grid.dt())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// State vectors on a grid (`eta(t_k)` or the zero-dynamics state `x(t_k)`).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<DVector<C64>>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn first(&self) -> &DVector<C64> {
        &self.states[0]
    }

    pub fn last(&self) -> &DVector<C64> {
        &self.states[self.states.len() - 1]
    }

    /// One component across the whole grid.
    pub fn component(&self, i: usize) -> Vec<C64> {
        self.states.iter().map(|s| s[i]).collect()
    }

    pub fn populations(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(|s| s.iter().map(|v| v.norm_sqr()).collect()).collect()
    }
}

/// Correlation matrices `<N>(t_k)`, `N_ij = <a_i^* a_j>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTrajectory {
    pub grid: TimeGrid,
    pub matrices: Vec<DMatrix<C64>>,
}

impl CorrelationTrajectory {
    /// Mean photon number per mode at every grid point.
    pub fn diagonals(&self) -> Vec<Vec<f64>> {
        self.matrices.iter().map(|m| (0..m.nrows()).map(|i| m[(i, i)].re).collect()).collect()
    }

    pub fn last(&self) -> &DMatrix<C64> {
        &self.matrices[self.matrices.len() - 1]
    }
}

pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            dt * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Running trapezoid integral, starting at 0.
/// Running integral from four-point cubic interpolation on each cell
/// (one-sided on the end cells); falls back to the trapezoid rule below four
/// samples.
pub fn cumulative_cubic(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    if n < 4 {
        return cumulative_trapezoid(values, dt);
    }
    let f = values;
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 0..n - 1 {
        let cell = if k == 0 {
            9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]
        } else if k + 2 == n {
            f[k - 2] - 5.0 * f[k - 1] + 19.0 * f[k] + 9.0 * f[k + 1]
        } else {
            -f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2]
        };
        acc += dt * cell / 24.0;
        out.push(acc);
    }
    out
}

pub fn cumulative_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(values.len());
    if values.is_empty() {
        return out;
    }
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out
}
