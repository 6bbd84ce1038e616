//! Pulse-shape cost.
//!
//! The running cost is `L = alpha exp(h(t) d|xi|^2/dt) + beta u^2`, where the
//! step weight `h` is `-delta` before the desired peak time `t2` and `+delta`
//! from `t2` on. It is cheap when `|xi|^2` rises up to `t2` and falls after it.
//! `d|xi|^2/dt = 2 (xiR xiR' + xiI xiI')` is obtained by substituting the zero
//! dynamics, so `L` depends only on `(x, u, t)`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::zero_dynamics::ZeroDynamics;

use super::realsplit::{RealSplit, RealState};

/// Exponent ceiling for the shape penalty.
pub const EXP_CLAMP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub t2: f64,
}

impl CostWeights {
    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma), ("delta", self.delta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parameter(format!("{name} must be a finite non-negative weight, got {v}")));
            }
        }
        if !(self.t2 > grid.t0 && self.t2 < grid.t1) {
            return Err(Error::Parameter(format!(
                "t2 = {} must lie strictly inside ({}, {})",
                self.t2, grid.t0, grid.t1
            )));
        }
        Ok(())
    }

    pub fn with_t2(mut self, t2: f64) -> Self {
        self.t2 = t2;
        self
    }
}

/// `h(t)`: `-delta` on `[t0, t2)`, `+delta` on `[t2, t1]`.
pub fn step_weight(t: f64, w: &CostWeights, window: &TimeGrid) -> Result<f64> {
    let tol = 1e-12 * (1.0 + window.t0.abs().max(window.t1.abs()));
    if !(t >= window.t0 - tol && t <= window.t1 + tol) {
        return Err(Error::OutsideWindow { t, t0: window.t0, t1: window.t1 });
    }
    Ok(if t < w.t2 { -w.delta } else { w.delta })
}

/// First rows of `A0` and `A1`, which give `dxi/dt = (r0 + u r1) . x`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PulseRate {
    r0: Vec<C64>,
    r1: Vec<C64>,
}

impl PulseRate {
    pub(crate) fn new(zd: &ZeroDynamics) -> Self {
        let n = zd.dim();
        Self { r0: (0..n).map(|j| zd.a0[(0, j)]).collect(), r1: (0..n).map(|j| zd.a1[(0, j)]).collect() }
    }

    fn n(&self) -> usize {
        self.r0.len()
    }
}

/// Running cost and its partial derivatives at one point.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RunningCostPoint {
    pub value: f64,
    /// `dL/d[xR; xI]`.
    pub dx: Vec<f64>,
    pub du: f64,
    pub clamped: bool,
}

/// Evaluates `L(x, u, t)` with weight `h` from a packed state `[xR; xI]`.
pub(crate) fn running_cost_point(
    rate: &PulseRate,
    x: &[f64],
    u: f64,
    h: f64,
    alpha: f64,
    beta: f64,
    with_derivatives: bool,
) -> RunningCostPoint {
    let n = rate.n();
    let (xr, xi) = x.split_at(n);
    // dxi/dt as a complex number
    let mut d = C64::new(0.0, 0.0);
    let mut d1 = C64::new(0.0, 0.0);
    for j in 0..n {
        let xj = C64::new(xr[j], xi[j]);
        d += (rate.r0[j] + rate.r1[j] * u) * xj;
        d1 += rate.r1[j] * xj;
    }
    let q = xr[0] * d.re + xi[0] * d.im;
    let mut arg = 2.0 * h * q;
    let clamped = arg > EXP_CLAMP;
    if clamped {
        arg = EXP_CLAMP;
    }
    let e = alpha * arg.exp();
    let value = e + beta * u * u;
    if !with_derivatives {
        return RunningCostPoint { value, dx: Vec::new(), du: 0.0, clamped };
    }
    // a clamped exponent is flat in (x, u)
    let scale = if clamped { 0.0 } else { 2.0 * h * e };
    let mut dx = vec![0.0; 2 * n];
    for j in 0..n {
        let r = rate.r0[j] + rate.r1[j] * u;
        // dq/dxR_j and dq/dxI_j
        dx[j] = scale * (xr[0] * r.re + xi[0] * r.im);
        dx[n + j] = scale * (-xr[0] * r.im + xi[0] * r.re);
    }
    dx[0] += scale * d.re;
    dx[n] += scale * d.im;
    let du = 2.0 * beta * u + scale * (xr[0] * d1.re + xi[0] * d1.im);
    RunningCostPoint { value, dx, du, clamped }
}

/// `L(x, u, t) = alpha exp(2 h(t) (xiR xiR' + xiI xiI')) + beta u^2`.
///
/// Exponents above [`EXP_CLAMP`] are clamped.
pub fn running_cost(
    x: &RealState,
    u: f64,
    t: f64,
    zd: &ZeroDynamics,
    w: &CostWeights,
    window: &TimeGrid,
) -> Result<f64> {
    if x.dim() != zd.dim() {
        return Err(Error::Dimension(format!("state has {} modes, expected {}", x.dim(), zd.dim())));
    }
    let h = step_weight(t, w, window)?;
    Ok(running_cost_point(&PulseRate::new(zd), &x.packed(), u, h, w.alpha, w.beta, false).value)
}

/// `H = L + p^T f(x, u)` with `f` the real backward-time drift.
pub fn hamilton_function(
    x: &RealState,
    u: f64,
    p: &[f64],
    t: f64,
    zd: &ZeroDynamics,
    w: &CostWeights,
    window: &TimeGrid,
) -> Result<f64> {
    let split = RealSplit::new(&zd.a0, &zd.a1);
    if p.len() != split.dim() {
        return Err(Error::Dimension(format!("costate has length {}, expected {}", p.len(), split.dim())));
    }
    let l = running_cost(x, u, t, zd, w, window)?;
    let f = split.rhs(x, u);
    Ok(l + p.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>())
}

/// Pointwise `dH/du = dL/du + p^T (df/du)`.
pub fn hamilton_du(
    x: &RealState,
    u: f64,
    p: &[f64],
    t: f64,
    zd: &ZeroDynamics,
    w: &CostWeights,
    window: &TimeGrid,
) -> Result<f64> {
    let split = RealSplit::new(&zd.a0, &zd.a1);
    if p.len() != split.dim() || x.dim() != zd.dim() {
        return Err(Error::Dimension("costate or state has the wrong length".into()));
    }
    let h = step_weight(t, w, window)?;
    let packed = x.packed();
    let point = running_cost_point(&PulseRate::new(zd), &packed, u, h, w.alpha, w.beta, true);
    Ok(point.du + split.coupling_form(p, &packed))
}
