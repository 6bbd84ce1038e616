//! Steepest descent on `J[u]` with a Wolfe line search.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ControlSignal, PulseSignal, TimeGrid, Trajectory};

use super::line_search::{wolfe_search, LineSearchOptions, LineSearchOutcome, LineTrial};
use super::problem::{CostBreakdown, Evaluation, TransferProblem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    /// Stop once `(int |dH/du|^2 dt)^(1/2)` drops to this; defaults to
    /// `1e-6 J[u_init]`.
    pub tol: Option<f64>,
    pub max_iters: usize,
    pub line_search: LineSearchOptions,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { tol: None, max_iters: 5000, line_search: LineSearchOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    GradientSmall,
    MaxIters,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub u_opt: ControlSignal,
    pub xi_opt: PulseSignal,
    /// Zero-dynamics state `[xi, eta1, eta2]` under `u_opt`.
    pub x_traj: Trajectory,
    /// Cost after each accepted step, starting with `J[u_init]`.
    pub cost_history: Vec<f64>,
    pub grad_norm_history: Vec<f64>,
    pub t2_used: f64,
    pub termination_reason: TerminationReason,
    pub iterations: usize,
    pub evaluations: usize,
    pub tol: f64,
    pub final_cost: CostBreakdown,
}

fn directional(dj: &[f64], s: &[f64]) -> f64 {
    dj.iter().zip(s).map(|(a, b)| a * b).sum()
}

pub fn optimize(prob: &TransferProblem, u_init: &ControlSignal, opts: &OptimizeOptions) -> Result<OptimizationResult> {
    if !u_init.grid.matches(prob.grid()) {
        return Err(Error::GridMismatch("initial control vs problem grid".into()));
    }
    let quad = prob.quadrature().to_vec();
    let mut u = u_init.values.clone();
    let mut e = prob.evaluate(&u)?;
    if !e.cost.total.is_finite() || e.cost.clamped {
        return Err(Error::Numerical(format!(
            "initial control has a non-finite or clamped cost ({})",
            e.cost.total
        )));
    }
    let tol = opts.tol.unwrap_or(1e-6 * e.cost.total);
    let mut cost_history = vec![e.cost.total];
    let mut grad_norm_history = Vec::new();
    let mut evaluations = 1;
    let mut iterations = 0;
    let mut prev: Option<(f64, f64)> = None;
    let reason = loop {
        let gnorm = e.grad_norm(&quad);
        grad_norm_history.push(gnorm);
        if gnorm <= tol {
            break TerminationReason::GradientSmall;
        }
        if iterations >= opts.max_iters {
            break TerminationReason::MaxIters;
        }
        let s: Vec<f64> = e.grad.iter().map(|g| -g).collect();
        let dphi0 = directional(&e.dj, &s);
        let a_init = match prev {
            Some((a, d)) => a * d / dphi0,
            None => 1.0 / e.grad.iter().fold(1.0_f64, |m, g| m.max(g.abs())),
        };
        let mut trials: Vec<(f64, Evaluation)> = Vec::new();
        let outcome = wolfe_search(e.cost.total, dphi0, a_init, &opts.line_search, |a| {
            let trial_u: Vec<f64> = u.iter().zip(&s).map(|(x, d)| x + a * d).collect();
            match prob.evaluate(&trial_u) {
                Ok(ev) if !ev.cost.clamped && ev.cost.total.is_finite() => {
                    let t = LineTrial { phi: ev.cost.total, dphi: directional(&ev.dj, &s) };
                    trials.push((a, ev));
                    t
                }
                _ => LineTrial { phi: f64::INFINITY, dphi: f64::NAN },
            }
        });
        match outcome {
            LineSearchOutcome::Accepted { step, trials: n, .. } => {
                evaluations += n;
                let pos = trials.iter().rposition(|(a, _)| *a == step).expect("accepted trial was evaluated");
                let (_, ev) = trials.swap_remove(pos);
                if ev.cost.total >= e.cost.total {
                    break TerminationReason::LineSearchFailed;
                }
                for (x, d) in u.iter_mut().zip(&s) {
                    *x += step * d;
                }
                e = ev;
                cost_history.push(e.cost.total);
                prev = Some((step, dphi0));
                iterations += 1;
            }
            LineSearchOutcome::Failed { trials: n } => {
                evaluations += n;
                break TerminationReason::LineSearchFailed;
            }
        }
    };
    let grid: TimeGrid = *prob.grid();
    Ok(OptimizationResult {
        xi_opt: prob.pulse(&e.x),
        x_traj: e.x.to_complex(),
        u_opt: ControlSignal { grid, values: u },
        cost_history,
        grad_norm_history,
        t2_used: prob.weights().t2,
        termination_reason: reason,
        iterations,
        evaluations,
        tol,
        final_cost: e.cost,
    })
}

/// Outcome of a scan over the peak time.
#[derive(Debug, Clone)]
pub struct T2Selection {
    pub t2_best: f64,
    pub result: OptimizationResult,
    /// `(t2, final J)` for every candidate, in input order.
    pub candidate_costs: Vec<(f64, f64)>,
}

/// Eight equispaced points covering the middle 80% of the window.
pub fn default_t2_candidates(grid: &TimeGrid) -> Vec<f64> {
    let span = grid.t1 - grid.t0;
    let lo = grid.t0 + 0.1 * span;
    let hi = grid.t1 - 0.1 * span;
    (0..8).map(|i| lo + (hi - lo) * i as f64 / 7.0).collect()
}

/// Optimizes once per candidate `t2` (in parallel) and keeps the cheapest.
pub fn select_t2(
    prob: &TransferProblem,
    u_init: &ControlSignal,
    candidates: &[f64],
    opts: &OptimizeOptions,
) -> Result<T2Selection> {
    if candidates.is_empty() {
        return Err(Error::Parameter("t2 candidate list is empty".into()));
    }
    let runs = candidates
        .par_iter()
        .map(|&t2| prob.with_t2(t2).and_then(|p| optimize(&p, u_init, opts)))
        .collect::<Result<Vec<_>>>()?;
    let candidate_costs: Vec<(f64, f64)> =
        candidates.iter().zip(&runs).map(|(t2, r)| (*t2, r.final_cost.total)).collect();
    let best = candidate_costs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .expect("non-empty");
    let result = runs.into_iter().nth(best).expect("index in range");
    Ok(T2Selection { t2_best: candidates[best], result, candidate_costs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::CostWeights;
    use crate::presets::{lambda_system, LambdaParams};
    use crate::zero_dynamics::{build_zero_dynamics, TerminalCondition};
    use nalgebra::DVector;
    use num_complex::Complex64 as C64;

    fn problem(weights: CostWeights, steps: usize) -> TransferProblem {
        let zd = build_zero_dynamics(&lambda_system(&LambdaParams::default()).unwrap()).unwrap();
        let term = TerminalCondition::new(DVector::from_element(1, C64::new(1.0, 0.0)), 0.0);
        TransferProblem::new(&zd, &term, &TimeGrid::new(-20.0, 0.0, steps).unwrap(), weights).unwrap()
    }

    #[test]
    fn energy_only_cost_goes_to_zero_control() {
        let w = CostWeights { alpha: 0.0, beta: 1.0, gamma: 0.0, delta: 20.0, t2: -2.6 };
        let prob = problem(w, 200);
        for init in [1.0, -3.0, 0.25] {
            let u0 = ControlSignal::from_fn(*prob.grid(), |t| init * (1.0 + 0.1 * t.sin()));
            let r = optimize(&prob, &u0, &OptimizeOptions { tol: Some(1e-10), ..Default::default() }).unwrap();
            assert!(r.iterations <= 2, "{} iterations", r.iterations);
            assert_eq!(r.termination_reason, TerminationReason::GradientSmall);
            assert!(r.u_opt.values.iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn costs_decrease_strictly() {
        let w = CostWeights { alpha: 10.0, beta: 1.0, gamma: 1e4, delta: 20.0, t2: -2.6 };
        let prob = problem(w, 400);
        let u0 = ControlSignal::constant(*prob.grid(), 1.0);
        let r = optimize(&prob, &u0, &OptimizeOptions { max_iters: 30, ..Default::default() }).unwrap();
        assert!(r.cost_history.windows(2).all(|p| p[1] < p[0]));
        assert_eq!(r.cost_history.len(), r.iterations + 1);
        assert_eq!(r.grad_norm_history.len(), r.cost_history.len());
    }

    #[test]
    fn single_candidate_matches_plain_run() {
        let w = CostWeights { alpha: 10.0, beta: 1.0, gamma: 1e4, delta: 20.0, t2: -2.6 };
        let prob = problem(w, 200);
        let u0 = ControlSignal::constant(*prob.grid(), 1.0);
        let opts = OptimizeOptions { max_iters: 10, ..Default::default() };
        let a = optimize(&prob.with_t2(-4.0).unwrap(), &u0, &opts).unwrap();
        let b = select_t2(&prob, &u0, &[-4.0], &opts).unwrap();
        assert_eq!(b.t2_best, -4.0);
        assert_eq!(a.cost_history, b.result.cost_history);
        assert!(select_t2(&prob, &u0, &[], &opts).is_err());
    }

    #[test]
    fn default_candidates_span_the_middle() {
        let g = TimeGrid::new(-20.0, 0.0, 10).unwrap();
        let c = default_t2_candidates(&g);
        assert_eq!(c.len(), 8);
        assert!((c[0] + 18.0).abs() < 1e-12 && (c[7] + 2.0).abs() < 1e-12);
    }
}
