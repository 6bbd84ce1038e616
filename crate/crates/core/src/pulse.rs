//! Forward simulation of a single-photon pulse driving the memory.
//!
//! For a single photon with pulse shape `xi(t)` and the system starting in
//! its ground state, the classical vector `eta(t)` obeys
//!
//! ```text
//! d eta/dt = A(t) eta - C^dag xi(t),      xi_out(t) = C eta(t) + xi(t)
//! ```
//!
//! and the mode correlations `N_ij = <a_i^* a_j>` obey
//!
//! ```text
//! dN/dt = A^# N + N A^T - xi^* C^T eta^T - xi eta^# C^#
//! ```
//!
//! where `^#` is elementwise conjugation. All integrals use RK4 on the signal
//! grid, splitting cells where the drift is stiff relative to the step.
//! Controls are piecewise linear; pulses are interpolated with cubics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{cumulative_cubic, ControlSignal, CorrelationTrajectory, PulseSignal, Trajectory};
use crate::linalg::ZERO;
use crate::rk4::{rk4_step, Stage};
use crate::system::{DriftPair, MemorySystem};

/// Per-step drift matrices at the three RK4 stage times.
pub(crate) struct StageDrift {
    pair: DriftPair,
}

impl StageDrift {
    pub(crate) fn new(pair: DriftPair) -> Self {
        Self { pair }
    }

    /// Drifts at `t_k`, the midpoint and `t_{k+1}`.
    pub(crate) fn step(&self, u: &ControlSignal, k: usize) -> [DMatrix<C64>; 3] {
        [self.pair.at(u.values[k]), self.pair.at(u.midpoint(k)), self.pair.at(u.values[k + 1])]
    }
}

fn stage_index(stage: Stage) -> usize {
    match stage {
        Stage::Start => 0,
        Stage::Mid => 1,
        Stage::End => 2,
    }
}

fn check_inputs(sys: &MemorySystem, u: &ControlSignal, xi: &PulseSignal) -> Result<()> {
    sys.validate()?;
    u.grid.validate()?;
    u.grid.ensure_matches(&xi.grid, "control vs pulse")?;
    if u.values.len() != u.grid.len() {
        return Err(Error::GridMismatch("control length".into()));
    }
    if xi.values.len() != xi.grid.len() {
        return Err(Error::GridMismatch("pulse length".into()));
    }
    if let Some(index) = u.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { signal: "control", index });
    }
    if let Some(index) = xi.values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite { signal: "pulse", index });
    }
    Ok(())
}

/// Grid cells are split so that `h ||A||_inf` stays below this.
const SUBSTEP_TOL: f64 = 0.02;

fn inf_norm(m: &DMatrix<C64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Runs `f(h, drifts, pulses)` for the RK4 substeps covering cell `k`.
/// `A` is affine in `u`, so its norm over the cell peaks at an endpoint.
fn for_each_substep(
    pair: &DriftPair,
    u: &ControlSignal,
    xi: &PulseSignal,
    k: usize,
    mut f: impl FnMut(f64, &[DMatrix<C64>; 3], &[C64; 3]),
) {
    let dt = u.grid.dt();
    let norm = inf_norm(&pair.at(u.values[k])).max(inf_norm(&pair.at(u.values[k + 1])));
    let m = ((dt * norm / SUBSTEP_TOL).ceil() as usize).max(1);
    let h = dt / m as f64;
    for j in 0..m {
        let s = [j as f64 / m as f64, (j as f64 + 0.5) / m as f64, (j + 1) as f64 / m as f64];
        let a = s.map(|s| pair.at(u.at_fraction(k, s)));
        let x = s.map(|s| xi.at_fraction(k, s));
        f(h, &a, &x);
    }
}

/// Integrates `eta` forward from `eta0` at `t0`; returns the trajectory and
/// the output pulse `xi_out = C eta + xi`.
pub fn propagate_eta(
    sys: &MemorySystem,
    u: &ControlSignal,
    xi: &PulseSignal,
    eta0: &DVector<C64>,
) -> Result<(Trajectory, PulseSignal)> {
    check_inputs(sys, u, xi)?;
    let n = sys.dim();
    if eta0.len() != n {
        return Err(Error::Dimension(format!("eta0 has length {}, expected {n}", eta0.len())));
    }
    if eta0.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite { signal: "eta0", index: 0 });
    }
    let grid = u.grid;
    let pair = sys.heisenberg_drift_pair();
    let c_conj = sys.c.conj();

    let mut states = Vec::with_capacity(grid.len());
    states.push(eta0.clone());
    for k in 0..grid.steps {
        let mut eta = states[k].clone();
        for_each_substep(&pair, u, xi, k, |h, a, xis| {
            eta = rk4_step(&eta, h, |stage, e| {
                let s = stage_index(stage);
                let mut d = &a[s] * e;
                d[0] -= c_conj * xis[s];
                d
            });
        });
        states.push(eta);
    }
    let out: Vec<C64> = states.iter().zip(&xi.values).map(|(eta, x)| sys.c * eta[0] + x).collect();
    Ok((Trajectory { grid, states }, PulseSignal { grid, values: out }))
}

/// `(eta, N)` integrated as one state.
#[derive(Clone)]
struct Joint {
    eta: DVector<C64>,
    n: DMatrix<C64>,
}

impl std::ops::Add for Joint {
    type Output = Joint;
    fn add(self, o: Joint) -> Joint {
        Joint { eta: self.eta + o.eta, n: self.n + o.n }
    }
}

impl std::ops::Mul<C64> for Joint {
    type Output = Joint;
    fn mul(self, s: C64) -> Joint {
        Joint { eta: self.eta * s, n: self.n * s }
    }
}

/// Integrates the correlation matrix from `<N>(t0) = 0`, given the `eta`
/// trajectory produced by [`propagate_eta`] for the same inputs.
///
/// Within each cell `eta` is re-integrated alongside `N` from `eta(t_k)`,
/// with the same substeps as [`propagate_eta`]. Each accepted step is
/// symmetrized to `(N + N^dag) / 2`.
pub fn propagate_correlation(
    sys: &MemorySystem,
    u: &ControlSignal,
    xi: &PulseSignal,
    eta: &Trajectory,
) -> Result<CorrelationTrajectory> {
    check_inputs(sys, u, xi)?;
    u.grid.ensure_matches(&eta.grid, "control vs eta")?;
    let n = sys.dim();
    if eta.states.len() != u.grid.len() || eta.dim() != n {
        return Err(Error::GridMismatch("eta trajectory does not match the grid or system".into()));
    }
    let grid = u.grid;
    let pair = sys.heisenberg_drift_pair();
    let c = sys.c;
    let c_conj = c.conj();

    let mut mats = Vec::with_capacity(grid.len());
    mats.push(DMatrix::<C64>::zeros(n, n));
    for k in 0..grid.steps {
        let mut y = Joint { eta: eta.states[k].clone(), n: mats[k].clone() };
        for_each_substep(&pair, u, xi, k, |h, a, xis| {
            let a_conj = a.clone().map(|m| m.map(|z| z.conj()));
            let a_t = a.clone().map(|m| m.transpose());
            y = rk4_step(&y, h, |stage, j| {
                let s = stage_index(stage);
                let x = xis[s];
                let mut de = &a[s] * &j.eta;
                de[0] -= c_conj * x;
                let mut dn = &a_conj[s] * &j.n + &j.n * &a_t[s];
                // -xi^* C^T eta^T touches row 0; -xi eta^# C^# touches column 0.
                for i in 0..n {
                    dn[(0, i)] -= x.conj() * c * j.eta[i];
                    dn[(i, 0)] -= x * j.eta[i].conj() * c_conj;
                }
                Joint { eta: de, n: dn }
            });
        });
        mats.push((&y.n + y.n.adjoint()) * C64::from(0.5));
    }
    Ok(CorrelationTrajectory { grid, matrices: mats })
}

/// Transition matrix `Phi(tb, ta)` of `d Phi/dt = A(t) Phi`, `Phi(ta, ta) = I`.
///
/// Both endpoints must be grid points; `tb < ta` integrates backward.
pub fn transition_matrix(sys: &MemorySystem, u: &ControlSignal, ta: f64, tb: f64) -> Result<DMatrix<C64>> {
    sys.validate()?;
    let grid = u.grid;
    let ka = grid.index_of(ta)?;
    let kb = grid.index_of(tb)?;
    let n = sys.dim();
    let drift = StageDrift::new(sys.heisenberg_drift_pair());
    let dt = grid.dt();
    let mut phi = DMatrix::<C64>::identity(n, n);
    if kb >= ka {
        for k in ka..kb {
            let a = drift.step(u, k);
            phi = rk4_step(&phi, dt, |stage, m| &a[stage_index(stage)] * m);
        }
    } else {
        for k in (kb..ka).rev() {
            // stepping from t_{k+1} down to t_k
            let a = drift.step(u, k);
            phi = rk4_step(&phi, -dt, |stage, m| &a[2 - stage_index(stage)] * m);
        }
    }
    Ok(phi)
}

/// `||eta(t_k)||^2 - ||eta(t0)||^2 - int_{t0}^{t_k} (|xi|^2 - |xi_out|^2) dt`
/// at every grid point; zero for an exact solution.
pub fn photon_balance_residual(eta: &Trajectory, xi: &PulseSignal, xi_out: &PulseSignal) -> Vec<f64> {
    let flux: Vec<f64> = xi.values.iter().zip(&xi_out.values).map(|(a, b)| a.norm_sqr() - b.norm_sqr()).collect();
    let absorbed = cumulative_cubic(&flux, eta.grid.dt());
    let n0 = eta.first().norm_squared();
    eta.states.iter().zip(absorbed).map(|(s, a)| s.norm_squared() - n0 - a).collect()
}

/// Free emission from `eta_start` with no input photon.
pub fn free_emission(sys: &MemorySystem, u: &ControlSignal, eta_start: &DVector<C64>) -> Result<(Trajectory, PulseSignal)> {
    propagate_eta(sys, u, &PulseSignal::zeros(u.grid), eta_start)
}

/// The vacuum state of the memory.
pub fn ground_state(sys: &MemorySystem) -> DVector<C64> {
    DVector::from_element(sys.dim(), ZERO)
}
