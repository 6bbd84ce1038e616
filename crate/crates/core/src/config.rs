//! Run configuration.
//!
//! A config is a JSON object; any field can be overridden from the command
//! line with `key.path=value`, where `value` is parsed as JSON when possible
//! and kept as a string otherwise. Complex numbers are `[re, im]` pairs.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::control::CostWeights;
use crate::error::{Error, Result};
use crate::grid::{ControlSignal, TimeGrid};
use crate::presets::Preset;
use crate::system::{MemorySystem, SystemJson};

/// A named preset (`{"name": "lambda", ...}`) or an explicit system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Preset(Preset),
    Inline(SystemJson),
}

impl SystemSpec {
    pub fn build(&self) -> Result<MemorySystem> {
        match self {
            SystemSpec::Preset(p) => p.build(),
            SystemSpec::Inline(j) => MemorySystem::try_from(j),
        }
    }

    /// Unit for default controls; 1 for inline systems.
    pub fn kappa(&self) -> f64 {
        match self {
            SystemSpec::Preset(p) => p.kappa(),
            SystemSpec::Inline(_) => 1.0,
        }
    }

    pub fn mode_labels(&self, n: usize) -> Vec<String> {
        match self {
            SystemSpec::Preset(p) => p.mode_labels().into_iter().map(String::from).collect(),
            SystemSpec::Inline(_) => (0..n).map(|i| format!("a{i}")).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl WeightsSpec {
    pub fn with_t2(&self, t2: f64) -> CostWeights {
        CostWeights { alpha: self.alpha, beta: self.beta, gamma: self.gamma, delta: self.delta, t2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: SystemSpec,
    pub grid: TimeGrid,
    /// Full `eta(t1)` (zero on buffer modes); defaults to the last mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<[f64; 2]>>,
    /// Control for `simulate` and `zero-dynamics`: `"constant:<v>"` or a CSV path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<String>,
    /// Input pulse for `simulate`: `"zero-dynamics"`, `"closed-form"` or a CSV path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<String>,
    /// `zero-dynamics` solver: `"ode"` or `"closed-form"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_candidates: Option<Vec<f64>>,
    /// Initial control for `optimize`; defaults to `constant:kappa`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_init: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
}

impl Config {
    /// The published setup for a preset, in units of `kappa = 1`.
    pub fn for_preset(name: &str) -> Result<Self> {
        let preset = Preset::by_name(name)?;
        let (grid, target, weights, t2) = match preset {
            Preset::Lambda { .. } => (
                TimeGrid::new(-20.0, 0.0, 2000)?,
                vec![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
                WeightsSpec { alpha: 10.0, beta: 1.0, gamma: 1e4, delta: 20.0 },
                -2.6,
            ),
            Preset::Network { .. } => (
                TimeGrid::new(-60.0, 0.0, 6000)?,
                vec![[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
                WeightsSpec { alpha: 100.0, beta: 0.1, gamma: 1e4, delta: 20.0 },
                -10.0,
            ),
        };
        Ok(Self {
            system: SystemSpec::Preset(preset),
            grid,
            target: Some(target),
            control: None,
            pulse: None,
            method: None,
            weights: Some(weights),
            t2: Some(t2),
            t2_candidates: None,
            u_init: None,
            tol: None,
            max_iters: None,
        })
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let cfg: Config = serde_json::from_value(v)?;
        cfg.grid.validate()?;
        if let Some(w) = cfg.weights {
            w.with_t2(0.5 * (cfg.grid.t0 + cfg.grid.t1)).validate(&cfg.grid)?;
        }
        Ok(cfg)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config is serializable")
    }

    pub fn target_vector(&self, sys: &MemorySystem) -> Result<DVector<C64>> {
        let n = sys.dim();
        match &self.target {
            None => {
                let mut v = DVector::from_element(n, C64::new(0.0, 0.0));
                v[n - 1] = C64::new(1.0, 0.0);
                Ok(v)
            }
            Some(t) if t.len() == n => Ok(DVector::from_iterator(n, t.iter().map(|p| C64::new(p[0], p[1])))),
            Some(t) => Err(Error::Config(format!("target has {} entries, the system has {n} modes", t.len()))),
        }
    }

    pub fn weights_spec(&self) -> Result<WeightsSpec> {
        self.weights.ok_or_else(|| Error::Config("optimize needs \"weights\"".into()))
    }
}

/// Parses `"constant:<v>"` or loads a control CSV (relative to `base`).
pub fn control_from_spec(spec: &str, grid: &TimeGrid, base: &Path) -> Result<ControlSignal> {
    if let Some(v) = spec.strip_prefix("constant:") {
        let value: f64 = v.trim().parse().map_err(|_| Error::Config(format!("bad constant control {spec:?}")))?;
        if !value.is_finite() {
            return Err(Error::Config(format!("bad constant control {spec:?}")));
        }
        return Ok(ControlSignal::constant(*grid, value));
    }
    let u = crate::io::read_control(&resolve(base, spec))?;
    if !u.grid.matches(grid) {
        return Err(Error::GridMismatch(format!("control file {spec} does not match the configured grid")));
    }
    Ok(u)
}

pub fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Applies one `a.b.c=value` override in place.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override {assignment:?} has an empty key")));
    }
    let value = serde_json::from_str::<Value>(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| Error::Config(format!("override {key}: {part:?} is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::Config(format!("override {key}: index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::Config(format!("override {key}: {part:?} is not inside an object"))),
        };
    }
    unreachable!("loop returns on the last key part")
}
