//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{rngs::StdRng, Rng, SeedableRng};

use photon_memory::analysis::{shape_report, ShapeReport};
use photon_memory::config::Config;
use photon_memory::control::{optimize, OptimizationResult, OptimizeOptions, TransferProblem};
use photon_memory::grid::{cumulative_cubic, trapezoid};
use photon_memory::linalg::{expm, max_abs, max_abs_vec};
use photon_memory::presets::{lambda_system, LambdaParams};
use photon_memory::pulse::{
    ground_state, photon_balance_residual, propagate_correlation, propagate_eta, transition_matrix,
};
use photon_memory::zero_dynamics::{
    build_zero_dynamics, eta_of, pulse_of, rising_exponential, solve_backward, TerminalCondition,
};
use photon_memory::{ControlSignal, CorrelationTrajectory, MemorySystem, ModeDimensions, PulseSignal, TimeGrid, Trajectory};

// Written to the raw stderr handle so the line shows even for passing tests.
fn report(n: u32, ok: bool, detail: String) {
    let line = format!("{} criterion {n}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn lambda() -> MemorySystem {
    lambda_system(&LambdaParams::default()).unwrap()
}

fn smooth_random_control(rng: &mut StdRng, grid: TimeGrid, base: f64) -> ControlSignal {
    let a: Vec<f64> = (0..5).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let span = grid.t1 - grid.t0;
    ControlSignal::from_fn(grid, |t| {
        let s = (t - grid.t0) / span;
        base * (1.0 + (0..5).map(|j| a[j] * (std::f64::consts::PI * (j + 1) as f64 * s).sin()).sum::<f64>())
    })
}

struct PresetRun {
    sys: MemorySystem,
    result: OptimizationResult,
    shape: ShapeReport,
    eta: Trajectory,
    corr: CorrelationTrajectory,
    kappa: f64,
    seconds: f64,
}

fn run_preset(name: &str) -> PresetRun {
    let start = Instant::now();
    let cfg = Config::for_preset(name).unwrap();
    let sys = cfg.system.build().unwrap();
    let zd = build_zero_dynamics(&sys).unwrap();
    let target = cfg.target_vector(&sys).unwrap();
    let term = TerminalCondition::from_full_target(&sys, &target, cfg.grid.t1).unwrap();
    let weights = cfg.weights_spec().unwrap().with_t2(cfg.t2.unwrap());
    let prob = TransferProblem::new(&zd, &term, &cfg.grid, weights).unwrap();
    let kappa = cfg.system.kappa();
    let u0 = ControlSignal::constant(cfg.grid, kappa);
    let result = optimize(&prob, &u0, &OptimizeOptions::default()).unwrap();
    let (eta, _) = propagate_eta(&sys, &result.u_opt, &result.xi_opt, &ground_state(&sys)).unwrap();
    let corr = propagate_correlation(&sys, &result.u_opt, &result.xi_opt, &eta).unwrap();
    let shape = shape_report(&result.xi_opt);
    PresetRun { sys, result, shape, eta, corr, kappa, seconds: start.elapsed().as_secs_f64() }
}

fn lambda_run() -> &'static PresetRun {
    static RUN: OnceLock<PresetRun> = OnceLock::new();
    RUN.get_or_init(|| run_preset("lambda"))
}

fn network_run() -> &'static PresetRun {
    static RUN: OnceLock<PresetRun> = OnceLock::new();
    RUN.get_or_init(|| run_preset("network"))
}

fn final_photon_numbers(run: &PresetRun) -> Vec<f64> {
    let last = run.corr.last();
    (0..run.sys.dim()).map(|i| last[(i, i)].re).collect()
}

#[test]
fn criterion_01_rising_exponential_absorption() {
    let gamma: f64 = 1.0;
    let z = DMatrix::<C64>::zeros(1, 1);
    let sys = MemorySystem::new(
        ModeDimensions::new(1, 1).unwrap(),
        0.0,
        DVector::from_element(1, C64::new(0.0, 0.0)),
        z.clone(),
        z.clone(),
        z.clone(),
        z,
        C64::new(gamma.sqrt(), 0.0),
    )
    .unwrap();
    let grid = TimeGrid::new(-20.0, 0.0, 2000).unwrap();
    let xi = PulseSignal::from_fn(grid, |t| C64::new(gamma.sqrt() * (gamma * t / 2.0).exp(), 0.0));
    let u = ControlSignal::zeros(grid);
    let start = Instant::now();
    let (eta, out) = propagate_eta(&sys, &u, &xi, &ground_state(&sys)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pop = eta.last()[0].norm_sqr();
    let leak = out.max_abs();
    let ok = pop >= 0.999 && leak <= 1e-3 && secs < 1.0;
    report(1, ok, format!("|eta(0)|^2 = {pop:.8}, max|xi_out| = {leak:.3e}, {secs:.3} s"));
    assert!(ok);
}

#[test]
fn criterion_02_closed_form_matches_ode() {
    let sys = lambda();
    let kappa = LambdaParams::default().kappa;
    let grid = TimeGrid::new(-20.0 / kappa, 0.0, 2000).unwrap();
    let target = DVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
    let start = Instant::now();
    let (closed, _) = rising_exponential(&sys, kappa, &target, 0.0, &grid).unwrap();
    let zd = build_zero_dynamics(&sys).unwrap();
    let term = TerminalCondition::from_full_target(&sys, &target, 0.0).unwrap();
    let ode = pulse_of(&solve_backward(&zd, &ControlSignal::constant(grid, kappa), &term, &grid).unwrap());
    let secs = start.elapsed().as_secs_f64();
    let diff = closed.values.iter().zip(&ode.values).fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
    let rel = diff / closed.max_abs();
    let ok = rel <= 1e-6 && secs < 1.0;
    report(2, ok, format!("max|closed - ode| / max|closed| = {rel:.3e}, {secs:.3} s"));
    assert!(ok);
}

#[test]
fn criterion_03_lambda_end_to_end() {
    let run = lambda_run();
    let n = final_photon_numbers(run);
    let peak_ok = (run.shape.peak_time + 2.6 / run.kappa).abs() <= 0.5 / run.kappa;
    let transfer_ok = n[2] >= 0.99 && n[0] <= 0.01 && n[1] <= 0.01;
    let ok = run.shape.unimodal && peak_ok && transfer_ok && run.seconds < 300.0;
    report(
        3,
        ok,
        format!(
            "{:?} after {} iterations in {:.1} s; sign changes = {} (prominent peaks {}, ripple {:.2e}); \
             peak at {:.3}; N = {:?}",
            run.result.termination_reason,
            run.result.iterations,
            run.seconds,
            run.shape.sign_changes,
            run.shape.prominent_peaks,
            run.shape.ripple,
            run.shape.peak_time,
            n
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_04_network_end_to_end() {
    let run = network_run();
    let n = final_photon_numbers(run);
    let transfer_ok = n[3] >= 0.99 && n[..3].iter().all(|v| *v <= 0.01);
    let ok = run.shape.unimodal && transfer_ok && run.seconds < 900.0;
    report(
        4,
        ok,
        format!(
            "{:?} after {} iterations in {:.1} s; sign changes = {} (prominent peaks {}, ripple {:.2e}); \
             peak at {:.3}; N = {:?}",
            run.result.termination_reason,
            run.result.iterations,
            run.seconds,
            run.shape.sign_changes,
            run.shape.prominent_peaks,
            run.shape.ripple,
            run.shape.peak_time,
            n
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_05_norm_accounting() {
    let sys = lambda();
    let zd = build_zero_dynamics(&sys).unwrap();
    let grid = TimeGrid::new(-20.0, 0.0, 2000).unwrap();
    let term = TerminalCondition::new(DVector::from_element(1, C64::new(1.0, 0.0)), 0.0);
    let mut rng = StdRng::seed_from_u64(5);
    let (mut worst_zd, mut worst_fwd) = (0.0_f64, 0.0_f64);
    for _ in 0..20 {
        let u = smooth_random_control(&mut rng, grid, 1.0);
        let x = solve_backward(&zd, &u, &term, &grid).unwrap();
        let xi = pulse_of(&x);
        let eta = eta_of(&zd, &x);
        let gained = eta.last().norm_squared() - eta.first().norm_squared();
        let input = *cumulative_cubic(&xi.intensity(), grid.dt()).last().unwrap();
        worst_zd = worst_zd.max((input - gained).abs());
        let (fwd, out) = propagate_eta(&sys, &u, &xi, &ground_state(&sys)).unwrap();
        let res = photon_balance_residual(&fwd, &xi, &out);
        worst_fwd = res.iter().fold(worst_fwd, |m, r| m.max(r.abs()));
    }
    let ok = worst_zd <= 1e-4 && worst_fwd <= 1e-6;
    report(5, ok, format!("zero-dynamics defect {worst_zd:.3e}, forward balance defect {worst_fwd:.3e}"));
    assert!(ok);
}

#[test]
fn criterion_06_gradient_audit() {
    let cfg = Config::for_preset("lambda").unwrap();
    let sys = cfg.system.build().unwrap();
    let zd = build_zero_dynamics(&sys).unwrap();
    let grid = TimeGrid::new(-20.0, 0.0, 1000).unwrap();
    let term = TerminalCondition::new(DVector::from_element(1, C64::new(1.0, 0.0)), 0.0);
    let weights = cfg.weights_spec().unwrap().with_t2(-2.6);
    let prob = TransferProblem::new(&zd, &term, &grid, weights).unwrap();
    let mut rng = StdRng::seed_from_u64(6);
    let u = smooth_random_control(&mut rng, grid, 1.0);
    let e = prob.evaluate(&u.values).unwrap();
    let cost = |v: &[f64]| prob.total_cost(&ControlSignal { grid, values: v.to_vec() }).unwrap().total;
    let scale = e.dj.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let k = rng.gen_range(0..grid.len());
        let h = 1e-5;
        let mut up = u.values.clone();
        up[k] += h;
        let mut dn = u.values.clone();
        dn[k] -= h;
        let fd = (cost(&up) - cost(&dn)) / (2.0 * h);
        // components near zero are compared against the largest one
        let rel = (fd - e.dj[k]).abs() / e.dj[k].abs().max(1e-3 * scale);
        worst = worst.max(rel);
    }
    let ok = worst <= 1e-4;
    report(6, ok, format!("worst relative error over 50 bumps = {worst:.3e}"));
    assert!(ok);
}

#[test]
fn criterion_07_strict_descent() {
    let strict = |r: &OptimizationResult| r.cost_history.windows(2).all(|p| p[1] < p[0]);
    let (a, b) = (lambda_run(), network_run());
    let ok = strict(&a.result) && strict(&b.result);
    report(
        7,
        ok,
        format!(
            "lambda {} accepted steps, network {} accepted steps, all strictly decreasing: {ok}",
            a.result.iterations, b.result.iterations
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_08_transition_matrix() {
    let sys = lambda();
    let grid = TimeGrid::new(0.0, 6.0, 600).unwrap();
    let mut rng = StdRng::seed_from_u64(8);
    let u = smooth_random_control(&mut rng, grid, 1.0);
    let id = transition_matrix(&sys, &u, 3.0, 3.0).unwrap();
    let identity_ok = id == DMatrix::identity(3, 3);
    let p10 = transition_matrix(&sys, &u, 0.0, 2.5).unwrap();
    let p21 = transition_matrix(&sys, &u, 2.5, 6.0).unwrap();
    let p20 = transition_matrix(&sys, &u, 0.0, 6.0).unwrap();
    let comp = max_abs(&(p21 * p10 - &p20));
    let uc = ControlSignal::constant(grid, 1.3);
    let phi = transition_matrix(&sys, &uc, 0.0, 6.0).unwrap();
    let oracle = expm(&(sys.heisenberg_drift_pair().at(1.3) * C64::new(6.0, 0.0)));
    let expm_err = max_abs(&(phi - oracle));
    let ok = identity_ok && comp <= 1e-8 && expm_err <= 1e-8;
    report(8, ok, format!("Phi(t,t) = I: {identity_ok}, composition {comp:.3e}, expm oracle {expm_err:.3e}"));
    assert!(ok);
}

#[test]
fn criterion_09_correlation_diagonal() {
    let worst = [lambda_run(), network_run()]
        .iter()
        .map(|run| {
            run.corr
                .matrices
                .iter()
                .zip(&run.eta.states)
                .flat_map(|(m, e)| (0..e.len()).map(move |i| (m[(i, i)].re - e[i].norm_sqr()).abs()))
                .fold(0.0_f64, f64::max)
        })
        .collect::<Vec<_>>();
    let ok = worst.iter().all(|w| *w <= 1e-6);
    report(9, ok, format!("max |N_ii - |eta_i|^2|: lambda {:.3e}, network {:.3e}", worst[0], worst[1]));
    assert!(ok);
}

#[test]
fn criterion_10_real_split_fidelity() {
    let mut worst = 0.0_f64;
    for name in ["lambda", "network"] {
        let cfg = Config::for_preset(name).unwrap();
        let sys = cfg.system.build().unwrap();
        let zd = build_zero_dynamics(&sys).unwrap();
        let grid = TimeGrid::new(cfg.grid.t0, cfg.grid.t1, 1000).unwrap();
        let target = cfg.target_vector(&sys).unwrap();
        let term = TerminalCondition::from_full_target(&sys, &target, grid.t1).unwrap();
        let prob = TransferProblem::new(&zd, &term, &grid, cfg.weights_spec().unwrap().with_t2(cfg.t2.unwrap())).unwrap();
        let mut rng = StdRng::seed_from_u64(10);
        let u = smooth_random_control(&mut rng, grid, cfg.system.kappa());
        let real = prob.solve_state(&u.values).unwrap().to_complex();
        let complex = solve_backward(&zd, &u, &term, &grid).unwrap();
        for (a, b) in real.states.iter().zip(&complex.states) {
            worst = worst.max(max_abs_vec(&(a - b)));
        }
    }
    let ok = worst <= 1e-12;
    report(10, ok, format!("max |real - complex| = {worst:.3e}"));
    assert!(ok);
}

#[test]
fn lambda_pulse_transfers_its_norm() {
    let run = lambda_run();
    let norm = trapezoid(&run.result.xi_opt.intensity(), run.result.xi_opt.grid.dt());
    assert!((norm - 1.0).abs() < 1e-2, "pulse norm {norm}");
}
