use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use photon_memory::analysis::shape_report;
use photon_memory::config::{apply_override, control_from_spec, resolve, Config};
use photon_memory::control::{
    default_t2_candidates, optimize, select_t2, OptimizationResult, OptimizeOptions, TransferProblem,
};
use photon_memory::io;
use photon_memory::presets::PRESET_NAMES;
use photon_memory::pulse::{ground_state, photon_balance_residual, propagate_correlation, propagate_eta};
use photon_memory::zero_dynamics::{
    build_zero_dynamics, eta_of, pulse_of, rising_exponential, solve_backward, TerminalCondition,
};
use photon_memory::{ControlSignal, Error, MemorySystem, PulseSignal, Result};

#[derive(Parser)]
#[command(name = "photon-memory", version, about = "Single-photon write-in pulses and controls for linear quantum memories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Start from a preset's published setup (ignored with --config)
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Override a config field, e.g. --set weights.alpha=5
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Drive the memory with a pulse and record eta, the output field and photon numbers
    Simulate(Common),
    /// Compute the perfectly absorbed pulse for a given control
    ZeroDynamics(Common),
    /// Optimize the control for a unimodal absorbed pulse
    Optimize(Common),
    /// Built-in systems
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List preset names
    List,
    /// Print a preset's default run configuration
    Show {
        #[arg(value_enum)]
        name: PresetName,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetName {
    Lambda,
    Network,
}

impl PresetName {
    fn as_str(self) -> &'static str {
        match self {
            PresetName::Lambda => "lambda",
            PresetName::Network => "network",
        }
    }
}

struct Run {
    cfg: Config,
    base: PathBuf,
    out: PathBuf,
}

fn load(common: &Common) -> Result<Run> {
    let (mut value, base) = match (&common.config, &common.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            let v: Value = serde_json::from_str(&text)?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (v, base)
        }
        (None, Some(name)) => (Config::for_preset(name)?.to_value(), PathBuf::from(".")),
        (None, None) => return Err(Error::Config("pass --config PATH or --preset NAME".into())),
    };
    for s in &common.set {
        apply_override(&mut value, s)?;
    }
    let cfg = Config::from_value(value)?;
    std::fs::create_dir_all(&common.out)?;
    Ok(Run { cfg, base, out: common.out.clone() })
}

fn default_control(run: &Run, spec: Option<&String>) -> Result<ControlSignal> {
    let fallback = format!("constant:{}", run.cfg.system.kappa());
    control_from_spec(spec.unwrap_or(&fallback), &run.cfg.grid, &run.base)
}

fn terminal(run: &Run, sys: &MemorySystem) -> Result<TerminalCondition> {
    let target = run.cfg.target_vector(sys)?;
    TerminalCondition::from_full_target(sys, &target, run.cfg.grid.t1)
}

fn constant_value(u: &ControlSignal) -> Result<f64> {
    if u.is_constant() {
        Ok(u.values[0])
    } else {
        Err(Error::Config("the closed-form pulse needs a constant control".into()))
    }
}

/// Forward run from the ground state; writes eta, output field and photon numbers.
fn forward(run: &Run, sys: &MemorySystem, u: &ControlSignal, xi: &PulseSignal, prefix: &str) -> Result<Value> {
    let (eta, xi_out) = propagate_eta(sys, u, xi, &ground_state(sys))?;
    let corr = propagate_correlation(sys, u, xi, &eta)?;
    io::write_trajectory(&run.out.join(format!("{prefix}eta.csv")), &eta)?;
    io::write_pulse(&run.out.join(format!("{prefix}xi_out.csv")), &xi_out)?;
    io::write_photon_numbers(&run.out.join(format!("{prefix}photon_numbers.csv")), &corr)?;
    let labels = run.cfg.system.mode_labels(sys.dim());
    let last = corr.last();
    let numbers: serde_json::Map<String, Value> =
        labels.iter().enumerate().map(|(i, l)| (l.clone(), json!(last[(i, i)].re))).collect();
    let balance = photon_balance_residual(&eta, xi, &xi_out).iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    Ok(json!({
        "photon_numbers_t1": numbers,
        "input_norm": xi.norm_sqr(),
        "max_abs_xi_out": xi_out.max_abs(),
        "max_photon_balance_residual": balance,
    }))
}

fn simulate(common: &Common) -> Result<()> {
    let run = load(common)?;
    let sys = run.cfg.system.build()?;
    let u = default_control(&run, run.cfg.control.as_ref())?;
    let xi = match run.cfg.pulse.as_deref().unwrap_or("zero-dynamics") {
        "zero-dynamics" => {
            let zd = build_zero_dynamics(&sys)?;
            pulse_of(&solve_backward(&zd, &u, &terminal(&run, &sys)?, &run.cfg.grid)?)
        }
        "closed-form" => {
            let target = run.cfg.target_vector(&sys)?;
            rising_exponential(&sys, constant_value(&u)?, &target, run.cfg.grid.t1, &run.cfg.grid)?.0
        }
        path => {
            let p = io::read_pulse(&resolve(&run.base, path))?;
            if !p.grid.matches(&run.cfg.grid) {
                return Err(Error::GridMismatch(format!("pulse file {path} does not match the configured grid")));
            }
            p
        }
    };
    io::write_pulse(&run.out.join("xi.csv"), &xi)?;
    io::write_control(&run.out.join("u.csv"), &u)?;
    let summary = forward(&run, &sys, &u, &xi, "")?;
    io::write_json(&run.out.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
    Ok(())
}

fn zero_dynamics(common: &Common) -> Result<()> {
    let run = load(common)?;
    let sys = run.cfg.system.build()?;
    let u = default_control(&run, run.cfg.control.as_ref())?;
    let summary = match run.cfg.method.as_deref().unwrap_or("ode") {
        "ode" => {
            let zd = build_zero_dynamics(&sys)?;
            let x = solve_backward(&zd, &u, &terminal(&run, &sys)?, &run.cfg.grid)?;
            let xi = pulse_of(&x);
            io::write_pulse(&run.out.join("xi.csv"), &xi)?;
            io::write_trajectory(&run.out.join("x.csv"), &x)?;
            io::write_trajectory(&run.out.join("eta.csv"), &eta_of(&zd, &x))?;
            json!({
                "method": "ode",
                "norm": xi.norm_sqr(),
                "x_t0_norm_sqr": x.first().norm_squared(),
                "shape": shape_report(&xi),
            })
        }
        "closed-form" => {
            let target = run.cfg.target_vector(&sys)?;
            let (xi, report) = rising_exponential(&sys, constant_value(&u)?, &target, run.cfg.grid.t1, &run.cfg.grid)?;
            io::write_pulse(&run.out.join("xi.csv"), &xi)?;
            if let Some(w) = &report.warning {
                eprintln!("warning: {w}");
            }
            json!({ "method": "closed-form", "norm": xi.norm_sqr(), "report": report, "shape": shape_report(&xi) })
        }
        other => return Err(Error::Config(format!("unknown method {other:?} (use \"ode\" or \"closed-form\")"))),
    };
    io::write_json(&run.out.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
    Ok(())
}

fn result_json(r: &OptimizationResult, candidates: Option<&[(f64, f64)]>, sim: Value) -> Value {
    json!({
        "termination_reason": r.termination_reason,
        "iterations": r.iterations,
        "evaluations": r.evaluations,
        "t2_used": r.t2_used,
        "tol": r.tol,
        "initial_cost": r.cost_history[0],
        "final_cost": r.final_cost,
        "x_t0_norm_sqr": r.x_traj.first().norm_squared(),
        "pulse_norm": r.xi_opt.norm_sqr(),
        "shape": shape_report(&r.xi_opt),
        "t2_candidate_costs": candidates.map(|c| c.iter().map(|(t, j)| json!({"t2": t, "cost": j})).collect::<Vec<_>>()),
        "forward_simulation": sim,
        "cost_history": r.cost_history,
        "grad_norm_history": r.grad_norm_history,
    })
}

fn run_optimize(common: &Common) -> Result<()> {
    let run = load(common)?;
    let sys = run.cfg.system.build()?;
    let zd = build_zero_dynamics(&sys)?;
    let term = terminal(&run, &sys)?;
    let grid = run.cfg.grid;
    let u0 = default_control(&run, run.cfg.u_init.as_ref())?;
    let opts = OptimizeOptions {
        tol: run.cfg.tol,
        max_iters: run.cfg.max_iters.unwrap_or(OptimizeOptions::default().max_iters),
        ..Default::default()
    };
    let spec = run.cfg.weights_spec()?;
    let (result, candidates) = match (run.cfg.t2, &run.cfg.t2_candidates) {
        (Some(t2), _) => {
            let prob = TransferProblem::new(&zd, &term, &grid, spec.with_t2(t2))?;
            (optimize(&prob, &u0, &opts)?, None)
        }
        (None, given) => {
            let cands = given.clone().unwrap_or_else(|| default_t2_candidates(&grid));
            let first = *cands.first().ok_or_else(|| Error::Config("t2_candidates is empty".into()))?;
            let prob = TransferProblem::new(&zd, &term, &grid, spec.with_t2(first))?;
            let sel = select_t2(&prob, &u0, &cands, &opts)?;
            (sel.result, Some(sel.candidate_costs))
        }
    };
    io::write_control(&run.out.join("u_opt.csv"), &result.u_opt)?;
    io::write_pulse(&run.out.join("xi_opt.csv"), &result.xi_opt)?;
    io::write_trajectory(&run.out.join("x_opt.csv"), &result.x_traj)?;
    let sim = forward(&run, &sys, &result.u_opt, &result.xi_opt, "opt_")?;
    let doc = result_json(&result, candidates.as_deref(), sim);
    io::write_json(&run.out.join("result.json"), &doc)?;
    println!(
        "{:?} after {} iterations: J = {:.6e}, t2 = {}, sign changes = {}",
        result.termination_reason,
        result.iterations,
        result.final_cost.total,
        result.t2_used,
        doc["shape"]["sign_changes"]
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::ZeroDynamics(c) => zero_dynamics(c),
        Command::Optimize(c) => run_optimize(c),
        Command::Presets { action: PresetAction::List } => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Command::Presets { action: PresetAction::Show { name } } => Config::for_preset(name.as_str())
            .map(|c| println!("{}", serde_json::to_string_pretty(&c.to_value()).expect("json"))),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
