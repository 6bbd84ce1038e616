//! The two example memories: a Lambda-type ensemble in a cavity and a
//! network of three ensembles sharing one ring-cavity mode.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::c;
use crate::system::{zeros, MemorySystem, ModeDimensions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaParams {
    /// Cavity field decay; the intensity decay rate is `2 kappa`.
    pub kappa: f64,
    /// Collective coupling `g sqrt(N)`.
    #[serde(rename = "gN")]
    pub g_n: f64,
    #[serde(default)]
    pub delta_detuning: f64,
}

impl Default for LambdaParams {
    fn default() -> Self {
        Self { kappa: 1.0, g_n: 1.0, delta_detuning: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkParams {
    pub kappa: f64,
    /// Effective ensemble-cavity coupling `sqrt(N) mu omega / (2 delta)`.
    pub g: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self { kappa: 1.0, g: 0.5 }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive, got {v}")))
    }
}

/// Modes ordered `(E, P, S)`: cavity field, polarization, spin wave.
///
/// Uses the rephased field convention `b' = -i b`, which gives
/// `c = i sqrt(2 kappa)`. A nonzero detuning enters `F11`.
pub fn lambda_system(p: &LambdaParams) -> Result<MemorySystem> {
    positive("kappa", p.kappa)?;
    positive("gN", p.g_n)?;
    if !p.delta_detuning.is_finite() {
        return Err(Error::Parameter("detuning must be finite".into()));
    }
    MemorySystem::new(
        ModeDimensions::new(1, 1)?,
        0.0,
        DVector::from_element(1, c(-p.g_n, 0.0)),
        DMatrix::from_element(1, 1, c(p.delta_detuning, 0.0)),
        zeros(1, 1),
        DMatrix::from_element(1, 1, c(-1.0, 0.0)),
        zeros(1, 1),
        c(0.0, (2.0 * p.kappa).sqrt()),
    )
}

/// The basis change `a' = U^dag a` that separates the network into buffer
/// modes `(a'1, a'2)` and memory modes `(a'3, a'4)`.
pub fn network_unitary() -> DMatrix<C64> {
    let s3 = 1.0 / 3f64.sqrt();
    let s6 = 1.0 / 6f64.sqrt();
    let s2 = 1.0 / 2f64.sqrt();
    #[rustfmt::skip]
    let rows = [
        1.0, 0.0, 0.0,       0.0,
        0.0, s3,  2.0 * s6,  0.0,
        0.0, s3,  -s6,       s2,
        0.0, s3,  -s6,       -s2,
    ];
    DMatrix::from_row_iterator(4, 4, rows.into_iter().map(|x| c(x, 0.0)))
}

/// Physical-basis drift of the network, `A(u)`, modes `(a1, a2, a3, a4)`.
pub fn network_physical_drift(p: &NetworkParams, u: f64) -> DMatrix<C64> {
    let g = p.g;
    #[rustfmt::skip]
    let rows = [
        c(-p.kappa / 2.0, 0.0), c(g, 0.0),      c(g, 0.0),     c(g, 0.0),
        c(-g, 0.0),             c(0.0, -u),     c(0.0, 0.0),   c(0.0, 0.0),
        c(-g, 0.0),             c(0.0, 0.0),    c(0.0, u),     c(0.0, 0.0),
        c(-g, 0.0),             c(0.0, 0.0),    c(0.0, 0.0),   c(0.0, 0.0),
    ];
    DMatrix::from_row_iterator(4, 4, rows)
}

/// Physical-basis coupling row `C = [-sqrt(kappa), 0, 0, 0]`.
pub fn network_physical_coupling(p: &NetworkParams) -> DMatrix<C64> {
    let mut row = zeros(1, 4);
    row[(0, 0)] = c(-p.kappa.sqrt(), 0.0);
    row
}

/// The network memory in its transformed basis, together with `U`.
///
/// Buffer: `a'2` (n1 = 1); memory: `(a'3, a'4)` (n2 = 2). The stored port
/// coupling is `c = +sqrt(kappa)`; `C U` evaluates to `-sqrt(kappa)`, a
/// global sign that no photon-number quantity sees.
pub fn ensemble_network(p: &NetworkParams) -> Result<(MemorySystem, DMatrix<C64>)> {
    positive("kappa", p.kappa)?;
    positive("g", p.g)?;
    let r2 = 2f64.sqrt();
    let r3 = 3f64.sqrt();
    let r6 = 6f64.sqrt();
    let g12 = DMatrix::from_row_slice(1, 2, &[c(1.0 / r2, 0.0), c(-1.0 / r6, 0.0)]);
    #[rustfmt::skip]
    let g22 = DMatrix::from_row_slice(2, 2, &[
        c(0.5, 0.0),            c(0.5 / r3, 0.0),
        c(0.5 / r3, 0.0),       c(-0.5, 0.0),
    ]);
    let sys = MemorySystem::new(
        ModeDimensions::new(1, 2)?,
        0.0,
        DVector::from_element(1, c(0.0, r3 * p.g)),
        zeros(1, 1),
        zeros(1, 1),
        g12,
        g22,
        c(p.kappa.sqrt(), 0.0),
    )?;
    Ok((sys, network_unitary()))
}

/// Names accepted by the CLI and configuration files.
pub const PRESET_NAMES: [&str; 2] = ["lambda", "network"];

/// A named preset with optional parameter overrides, as it appears in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Preset {
    Lambda {
        #[serde(flatten, default)]
        params: LambdaParamsOpt,
    },
    Network {
        #[serde(flatten, default)]
        params: NetworkParamsOpt,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LambdaParamsOpt {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(rename = "gN", skip_serializing_if = "Option::is_none")]
    pub g_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_detuning: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkParamsOpt {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
}

impl Preset {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "lambda" => Ok(Preset::Lambda { params: Default::default() }),
            "network" => Ok(Preset::Network { params: Default::default() }),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (available: {})",
                PRESET_NAMES.join(", ")
            ))),
        }
    }

    pub fn build(&self) -> Result<MemorySystem> {
        match self {
            Preset::Lambda { params } => {
                let d = LambdaParams::default();
                lambda_system(&LambdaParams {
                    kappa: params.kappa.unwrap_or(d.kappa),
                    g_n: params.g_n.unwrap_or(d.g_n),
                    delta_detuning: params.delta_detuning.unwrap_or(d.delta_detuning),
                })
            }
            Preset::Network { params } => {
                let d = NetworkParams::default();
                ensemble_network(&NetworkParams {
                    kappa: params.kappa.unwrap_or(d.kappa),
                    g: params.g.unwrap_or(d.g),
                })
                .map(|(sys, _)| sys)
            }
        }
    }

    /// Field decay rate `kappa`, the natural unit of time and control.
    pub fn kappa(&self) -> f64 {
        match self {
            Preset::Lambda { params } => params.kappa.unwrap_or(LambdaParams::default().kappa),
            Preset::Network { params } => params.kappa.unwrap_or(NetworkParams::default().kappa),
        }
    }

    /// Mode labels in storage order.
    pub fn mode_labels(&self) -> Vec<&'static str> {
        match self {
            Preset::Lambda { .. } => vec!["E", "P", "S"],
            Preset::Network { .. } => vec!["a1'", "a2'", "a3'", "a4'"],
        }
    }
}
