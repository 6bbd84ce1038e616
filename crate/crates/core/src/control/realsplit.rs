//! Real-valued form of the zero dynamics.
//!
//! With `x = xR + i xI` the backward-time system `dx/dtau = -(A0 + A1 u) x`
//! becomes
//!
//! ```text
//! d/dtau [xR]   [-A0R - A1R u    A0I + A1I u] [xR]
//!        [xI] = [-A0I - A1I u   -A0R - A1R u] [xI]
//! ```
//!
//! which is the `f(x, u)` the adjoint equations are written against. Both the
//! forward RK4 step and its exact reverse-mode derivative live here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::grid::{TimeGrid, Trajectory};

/// Real and imaginary parts of a complex state.
#[derive(Debug, Clone, PartialEq)]
pub struct RealState {
    pub xr: Vec<f64>,
    pub xi: Vec<f64>,
}

impl RealState {
    pub fn from_complex(x: &DVector<C64>) -> Self {
        Self { xr: x.iter().map(|z| z.re).collect(), xi: x.iter().map(|z| z.im).collect() }
    }

    pub fn to_complex(&self) -> DVector<C64> {
        DVector::from_iterator(self.xr.len(), self.xr.iter().zip(&self.xi).map(|(r, i)| C64::new(*r, *i)))
    }

    /// Stacked `[xR; xI]`.
    pub fn packed(&self) -> Vec<f64> {
        self.xr.iter().chain(&self.xi).copied().collect()
    }

    pub fn from_packed(v: &[f64]) -> Self {
        let n = v.len() / 2;
        Self { xr: v[..n].to_vec(), xi: v[n..].to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.xr.len()
    }
}

/// The stacked real system `B(u) = drift + u coupling`, row-major `2n x 2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSplit {
    dim: usize,
    drift: Vec<f64>,
    coupling: Vec<f64>,
}

fn split_negated(m: &DMatrix<C64>) -> Vec<f64> {
    let n = m.nrows();
    let dim = 2 * n;
    let mut out = vec![0.0; dim * dim];
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            out[i * dim + j] = -z.re;
            out[i * dim + n + j] = z.im;
            out[(n + i) * dim + j] = -z.im;
            out[(n + i) * dim + n + j] = -z.re;
        }
    }
    out
}

impl RealSplit {
    pub fn new(a0: &DMatrix<C64>, a1: &DMatrix<C64>) -> Self {
        Self { dim: 2 * a0.nrows(), drift: split_negated(a0), coupling: split_negated(a1) }
    }

    /// Length of the stacked state, `2n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dense `B(u)`.
    pub fn matrix(&self, u: f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.drift[i * self.dim + j] + u * self.coupling[i * self.dim + j])
    }

    /// `out = B(u) x`.
    pub fn apply(&self, u: f64, x: &[f64], out: &mut [f64]) {
        let m = self.dim;
        for i in 0..m {
            let row = i * m;
            let mut acc = 0.0;
            for j in 0..m {
                acc += (self.drift[row + j] + u * self.coupling[row + j]) * x[j];
            }
            out[i] = acc;
        }
    }

    /// `out += B(u)^T v`.
    pub fn apply_transpose_add(&self, u: f64, v: &[f64], out: &mut [f64]) {
        let m = self.dim;
        for i in 0..m {
            let row = i * m;
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for j in 0..m {
                out[j] += (self.drift[row + j] + u * self.coupling[row + j]) * vi;
            }
        }
    }

    /// `v^T (dB/du) x`.
    pub fn coupling_form(&self, v: &[f64], x: &[f64]) -> f64 {
        let m = self.dim;
        let mut acc = 0.0;
        for i in 0..m {
            let row = i * m;
            let mut inner = 0.0;
            for j in 0..m {
                inner += self.coupling[row + j] * x[j];
            }
            acc += v[i] * inner;
        }
        acc
    }

    /// `[dxR/dtau; dxI/dtau] = f(x, u)`.
    pub fn rhs(&self, x: &RealState, u: f64) -> Vec<f64> {
        let packed = x.packed();
        let mut out = vec![0.0; self.dim];
        self.apply(u, &packed, &mut out);
        out
    }
}

/// Scratch space for one RK4 step and its adjoint.
#[derive(Debug, Clone)]
pub(crate) struct StepWork {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    y2: Vec<f64>,
    y3: Vec<f64>,
    y4: Vec<f64>,
    bk1: Vec<f64>,
    bk2: Vec<f64>,
    bk3: Vec<f64>,
    tmp: Vec<f64>,
}

impl StepWork {
    pub(crate) fn new(dim: usize) -> Self {
        let z = vec![0.0; dim];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            y2: z.clone(),
            y3: z.clone(),
            y4: z.clone(),
            bk1: z.clone(),
            bk2: z.clone(),
            bk3: z.clone(),
            tmp: z,
        }
    }
}

/// Control sensitivities of one step: `(d/du_start, d/du_mid, d/du_end)`.
pub(crate) type StepControlGrad = (f64, f64, f64);

impl RealSplit {
    /// Forward RK4 stages from `y`; fills `w.k*` and `w.y*`.
    fn stages(&self, y: &[f64], u: [f64; 3], h: f64, w: &mut StepWork) {
        let m = self.dim;
        self.apply(u[0], y, &mut w.k1);
        for i in 0..m {
            w.y2[i] = y[i] + 0.5 * h * w.k1[i];
        }
        self.apply(u[1], &w.y2, &mut w.k2);
        for i in 0..m {
            w.y3[i] = y[i] + 0.5 * h * w.k2[i];
        }
        self.apply(u[1], &w.y3, &mut w.k3);
        for i in 0..m {
            w.y4[i] = y[i] + h * w.k3[i];
        }
        self.apply(u[2], &w.y4, &mut w.k4);
    }

    /// One RK4 step `y -> out` with controls at start, midpoint and end.
    pub(crate) fn step(&self, y: &[f64], u: [f64; 3], h: f64, w: &mut StepWork, out: &mut [f64]) {
        self.stages(y, u, h, w);
        for i in 0..self.dim {
            out[i] = y[i] + h / 6.0 * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
        }
    }

    /// Reverse-mode derivative of [`Self::step`]: given `bar = dJ/d(out)`,
    /// writes `dJ/dy` into `bar_y` and returns the control sensitivities.
    pub(crate) fn step_adjoint(
        &self,
        y: &[f64],
        u: [f64; 3],
        h: f64,
        bar: &[f64],
        w: &mut StepWork,
        bar_y: &mut [f64],
    ) -> StepControlGrad {
        let m = self.dim;
        self.stages(y, u, h, w);
        bar_y.copy_from_slice(bar);
        for i in 0..m {
            w.bk1[i] = h / 6.0 * bar[i];
            w.bk2[i] = h / 3.0 * bar[i];
            w.bk3[i] = h / 3.0 * bar[i];
        }
        // k4 = B(u_end) y4, y4 = y + h k3; bk4 = h/6 bar
        let bk4: &[f64] = &w.bk1; // equal to h/6 bar
        let g_end = self.coupling_form(bk4, &w.y4);
        w.tmp.iter_mut().for_each(|v| *v = 0.0);
        self.apply_transpose_add(u[2], bk4, &mut w.tmp);
        for i in 0..m {
            bar_y[i] += w.tmp[i];
            w.bk3[i] += h * w.tmp[i];
        }
        // k3 = B(u_mid) y3, y3 = y + h/2 k2
        let mut g_mid = self.coupling_form(&w.bk3, &w.y3);
        w.tmp.iter_mut().for_each(|v| *v = 0.0);
        self.apply_transpose_add(u[1], &w.bk3, &mut w.tmp);
        for i in 0..m {
            bar_y[i] += w.tmp[i];
            w.bk2[i] += 0.5 * h * w.tmp[i];
        }
        // k2 = B(u_mid) y2, y2 = y + h/2 k1
        g_mid += self.coupling_form(&w.bk2, &w.y2);
        w.tmp.iter_mut().for_each(|v| *v = 0.0);
        self.apply_transpose_add(u[1], &w.bk2, &mut w.tmp);
        for i in 0..m {
            bar_y[i] += w.tmp[i];
        }
        // bk1 still holds h/6 bar; add the y2 contribution
        for i in 0..m {
            w.bk1[i] += 0.5 * h * w.tmp[i];
        }
        // k1 = B(u_start) y
        let g_start = self.coupling_form(&w.bk1, y);
        self.apply_transpose_add(u[0], &w.bk1, bar_y);
        (g_start, g_mid, g_end)
    }
}

/// Stacked real states on a grid, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTrajectory {
    pub grid: TimeGrid,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl RealTrajectory {
    pub fn state(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn real_state(&self, k: usize) -> RealState {
        RealState::from_packed(self.state(k))
    }

    pub fn to_complex(&self) -> Trajectory {
        Trajectory {
            grid: self.grid,
            states: (0..self.grid.len()).map(|k| self.real_state(k).to_complex()).collect(),
        }
    }
}

impl RealSplit {
    /// Backward solve from the stacked terminal state; controls sampled on `grid`.
    pub fn solve_backward(&self, u: &[f64], terminal: &[f64], grid: &TimeGrid) -> RealTrajectory {
        let m = self.dim;
        let len = grid.len();
        let dt = grid.dt();
        let mut data = vec![0.0; len * m];
        data[(len - 1) * m..].copy_from_slice(terminal);
        let mut w = StepWork::new(m);
        let mut out = vec![0.0; m];
        for k in (0..grid.steps).rev() {
            let uu = [u[k + 1], 0.5 * (u[k] + u[k + 1]), u[k]];
            let (head, tail) = data.split_at_mut((k + 1) * m);
            self.step(&tail[..m], uu, dt, &mut w, &mut out);
            head[k * m..].copy_from_slice(&out);
        }
        RealTrajectory { grid: *grid, dim: m, data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn random_complex(rng: &mut StdRng, n: usize) -> DMatrix<C64> {
        DMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn real_state_round_trip_is_exact() {
        let x = DVector::from_vec(vec![c(0.1, -2.0), c(3.5, 1e-300), c(-0.0, 7.25)]);
        let r = RealState::from_complex(&x);
        assert_eq!(r.to_complex(), x);
        assert_eq!(RealState::from_packed(&r.packed()), r);
    }

    #[test]
    fn split_matches_complex_product() {
        let mut rng = StdRng::seed_from_u64(4);
        let a0 = random_complex(&mut rng, 3);
        let a1 = random_complex(&mut rng, 3);
        let split = RealSplit::new(&a0, &a1);
        let x = DVector::from_fn(3, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let u = 0.37;
        let expected = -(&a0 + &a1 * C64::from(u)) * &x;
        let got = RealState::from_packed(&split.rhs(&RealState::from_complex(&x), u)).to_complex();
        assert!((got - expected).norm() < 1e-14);
    }

    #[test]
    fn step_adjoint_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(8);
        let a0 = random_complex(&mut rng, 2);
        let a1 = random_complex(&mut rng, 2);
        let split = RealSplit::new(&a0, &a1);
        let m = split.dim();
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bar: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = [0.3, -0.2, 0.9];
        let h = 0.1;
        let mut w = StepWork::new(m);
        let objective = |y: &[f64], u: [f64; 3], w: &mut StepWork| {
            let mut out = vec![0.0; m];
            split.step(y, u, h, w, &mut out);
            out.iter().zip(&bar).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut bar_y = vec![0.0; m];
        let (gs, gm, ge) = split.step_adjoint(&y, u, h, &bar, &mut w, &mut bar_y);
        let eps = 1e-6;
        for (idx, g) in [gs, gm, ge].into_iter().enumerate() {
            let mut up = u;
            let mut dn = u;
            up[idx] += eps;
            dn[idx] -= eps;
            let fd = (objective(&y, up, &mut w) - objective(&y, dn, &mut w)) / (2.0 * eps);
            assert!((fd - g).abs() < 1e-8, "u[{idx}]: {fd} vs {g}");
        }
        for j in 0..m {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[j] += eps;
            ym[j] -= eps;
            let fd = (objective(&yp, u, &mut w) - objective(&ym, u, &mut w)) / (2.0 * eps);
            assert!((fd - bar_y[j]).abs() < 1e-8, "y[{j}]: {fd} vs {}", bar_y[j]);
        }
    }
}
