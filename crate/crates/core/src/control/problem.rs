//! The discretized transfer problem: cost, adjoint and gradient.
//!
//! The state is integrated backward from the fixed terminal state with RK4 on
//! the control grid, and `J` is the trapezoid sum of the running cost plus
//! `gamma |x(t0)|^2`. The costate is the exact reverse-mode derivative of that
//! discrete map, so it starts at `p(t0) = 2 gamma x(t0)` and is carried forward
//! step by step; the gradient it produces is the gradient of the discrete `J`.

use crate::error::{Error, Result};
use crate::grid::{ControlSignal, PulseSignal, TimeGrid, Trajectory};
use crate::zero_dynamics::{TerminalCondition, ZeroDynamics};

use super::cost::{running_cost_point, step_weight, CostWeights, PulseRate};
use super::realsplit::{RealSplit, RealState, RealTrajectory, StepWork};

/// Lagrange multipliers on the grid, stacked `[pR; pI]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointTrajectory {
    pub grid: TimeGrid,
    pub p: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CostBreakdown {
    pub running: f64,
    pub terminal: f64,
    pub total: f64,
    /// Some exponent hit the clamp.
    pub clamped: bool,
}

/// Cost, state and gradient at one control.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub cost: CostBreakdown,
    pub x: RealTrajectory,
    /// Pointwise `dH/du` on the grid.
    pub grad: Vec<f64>,
    /// `dJ/du_k` for the discrete cost (`grad` times the quadrature weights).
    pub dj: Vec<f64>,
}

impl Evaluation {
    /// `(int |dH/du|^2 dt)^(1/2)`.
    pub fn grad_norm(&self, weights: &[f64]) -> f64 {
        self.grad.iter().zip(weights).map(|(g, w)| w * g * g).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct TransferProblem {
    zd: ZeroDynamics,
    split: RealSplit,
    rate: PulseRate,
    terminal: Vec<f64>,
    grid: TimeGrid,
    weights: CostWeights,
    quad: Vec<f64>,
    h: Vec<f64>,
}

impl TransferProblem {
    pub fn new(zd: &ZeroDynamics, term: &TerminalCondition, grid: &TimeGrid, weights: CostWeights) -> Result<Self> {
        grid.validate()?;
        weights.validate(grid)?;
        if (term.t1 - grid.t1).abs() > 1e-12 * (1.0 + grid.t1.abs()) {
            return Err(Error::GridMismatch(format!("terminal time {} vs grid end {}", term.t1, grid.t1)));
        }
        let x1 = term.state(&zd.sys)?;
        let h = grid.times().into_iter().map(|t| step_weight(t, &weights, grid)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            zd: zd.clone(),
            split: RealSplit::new(&zd.a0, &zd.a1),
            rate: PulseRate::new(zd),
            terminal: RealState::from_complex(&x1).packed(),
            grid: *grid,
            weights,
            quad: grid.trapezoid_weights(),
            h,
        })
    }

    /// Same problem with a different peak time.
    pub fn with_t2(&self, t2: f64) -> Result<Self> {
        let weights = self.weights.with_t2(t2);
        weights.validate(&self.grid)?;
        let h = self.grid.times().into_iter().map(|t| step_weight(t, &weights, &self.grid)).collect::<Result<Vec<_>>>()?;
        Ok(Self { weights, h, ..self.clone() })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn weights(&self) -> &CostWeights {
        &self.weights
    }

    pub fn zero_dynamics(&self) -> &ZeroDynamics {
        &self.zd
    }

    pub fn split(&self) -> &RealSplit {
        &self.split
    }

    /// Trapezoid weights of the grid.
    pub fn quadrature(&self) -> &[f64] {
        &self.quad
    }

    fn check_control(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!("control has {} samples, grid has {}", u.len(), self.grid.len())));
        }
        if let Some(index) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { signal: "control", index });
        }
        Ok(())
    }

    fn check_signal(&self, u: &ControlSignal) -> Result<()> {
        u.grid.ensure_matches(&self.grid, "control vs problem grid")?;
        self.check_control(&u.values)
    }

    /// Backward solution of the real zero dynamics.
    pub fn solve_state(&self, u: &[f64]) -> Result<RealTrajectory> {
        self.check_control(u)?;
        Ok(self.split.solve_backward(u, &self.terminal, &self.grid))
    }

    pub fn cost_of(&self, u: &[f64], x: &RealTrajectory) -> CostBreakdown {
        let w = &self.weights;
        let mut running = 0.0;
        let mut clamped = false;
        for k in 0..self.grid.len() {
            let pt = running_cost_point(&self.rate, x.state(k), u[k], self.h[k], w.alpha, w.beta, false);
            running += self.quad[k] * pt.value;
            clamped |= pt.clamped;
        }
        let terminal = w.gamma * x.state(0).iter().map(|v| v * v).sum::<f64>();
        CostBreakdown { running, terminal, total: running + terminal, clamped }
    }

    /// `J[u]`.
    pub fn total_cost(&self, u: &ControlSignal) -> Result<CostBreakdown> {
        self.check_signal(u)?;
        let x = self.solve_state(&u.values)?;
        Ok(self.cost_of(&u.values, &x))
    }

    /// Costate and `dJ/du_k` in one sweep from `t0` to `t1`.
    fn sweep(&self, u: &[f64], x: &RealTrajectory, keep_p: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
        let m = self.split.dim();
        let w = &self.weights;
        let dt = self.grid.dt();
        let len = self.grid.len();
        let mut work = StepWork::new(m);
        let mut ps = Vec::with_capacity(if keep_p { len } else { 0 });
        let mut dj = vec![0.0; len];
        let mut p: Vec<f64> = x.state(0).iter().map(|v| 2.0 * w.gamma * v).collect();
        let mut bar = vec![0.0; m];
        let mut next = vec![0.0; m];
        for k in 0..len {
            let pt = running_cost_point(&self.rate, x.state(k), u[k], self.h[k], w.alpha, w.beta, true);
            dj[k] += self.quad[k] * pt.du;
            if keep_p {
                ps.push(p.clone());
            }
            if k + 1 == len {
                break;
            }
            for i in 0..m {
                bar[i] = p[i] + self.quad[k] * pt.dx[i];
            }
            // step k maps x_{k+1} to x_k with controls [u_{k+1}, mid, u_k]
            let uu = [u[k + 1], 0.5 * (u[k] + u[k + 1]), u[k]];
            let (gs, gm, ge) = self.split.step_adjoint(x.state(k + 1), uu, dt, &bar, &mut work, &mut next);
            dj[k + 1] += gs + 0.5 * gm;
            dj[k] += ge + 0.5 * gm;
            std::mem::swap(&mut p, &mut next);
        }
        (ps, dj)
    }

    fn check_state(&self, x: &RealTrajectory) -> Result<()> {
        x.grid.ensure_matches(&self.grid, "state trajectory vs problem grid")?;
        if x.dim != self.split.dim() || x.data.len() != x.dim * self.grid.len() {
            return Err(Error::Dimension("state trajectory has the wrong shape".into()));
        }
        Ok(())
    }

    pub fn solve_adjoint(&self, u: &ControlSignal, x: &RealTrajectory) -> Result<AdjointTrajectory> {
        self.check_signal(u)?;
        self.check_state(x)?;
        let (p, _) = self.sweep(&u.values, x, true);
        Ok(AdjointTrajectory { grid: self.grid, p })
    }

    /// Pointwise `dH/du(t_k)` from a state and costate.
    pub fn gradient(&self, u: &ControlSignal, x: &RealTrajectory, p: &AdjointTrajectory) -> Result<Vec<f64>> {
        self.check_signal(u)?;
        self.check_state(x)?;
        p.grid.ensure_matches(&self.grid, "costate vs problem grid")?;
        if p.p.len() != self.grid.len() {
            return Err(Error::GridMismatch("costate length".into()));
        }
        let m = self.split.dim();
        let w = &self.weights;
        let dt = self.grid.dt();
        let uv = &u.values;
        let mut work = StepWork::new(m);
        let mut bar = vec![0.0; m];
        let mut scratch = vec![0.0; m];
        let mut dj = vec![0.0; self.grid.len()];
        for k in 0..self.grid.len() {
            let pt = running_cost_point(&self.rate, x.state(k), uv[k], self.h[k], w.alpha, w.beta, true);
            dj[k] += self.quad[k] * pt.du;
            if k + 1 == self.grid.len() {
                break;
            }
            for i in 0..m {
                bar[i] = p.p[k][i] + self.quad[k] * pt.dx[i];
            }
            let uu = [uv[k + 1], 0.5 * (uv[k] + uv[k + 1]), uv[k]];
            let (gs, gm, ge) = self.split.step_adjoint(x.state(k + 1), uu, dt, &bar, &mut work, &mut scratch);
            dj[k + 1] += gs + 0.5 * gm;
            dj[k] += ge + 0.5 * gm;
        }
        Ok(self.to_grid_function(dj))
    }

    fn to_grid_function(&self, dj: Vec<f64>) -> Vec<f64> {
        dj.iter().zip(&self.quad).map(|(d, w)| d / w).collect()
    }

    /// Cost and gradient in one backward and one forward sweep.
    pub fn evaluate(&self, u: &[f64]) -> Result<Evaluation> {
        let x = self.solve_state(u)?;
        let cost = self.cost_of(u, &x);
        let (_, dj) = self.sweep(u, &x, false);
        let grad = self.to_grid_function(dj.clone());
        Ok(Evaluation { cost, x, grad, dj })
    }

    /// `(J, dJ/du_k)` for a raw sample vector.
    pub fn cost_and_gradient(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let e = self.evaluate(u)?;
        Ok((e.cost.total, e.dj))
    }

    pub fn pulse(&self, x: &RealTrajectory) -> PulseSignal {
        let n = self.split.dim() / 2;
        PulseSignal {
            grid: self.grid,
            values: (0..self.grid.len()).map(|k| num_complex::Complex64::new(x.state(k)[0], x.state(k)[n])).collect(),
        }
    }

    pub fn complex_trajectory(&self, x: &RealTrajectory) -> Trajectory {
        x.to_complex()
    }
}
