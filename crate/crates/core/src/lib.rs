//! Input pulse shapes and control signals for writing a single photon into
//! a passive linear quantum memory.
//!
//! A memory is described by a block-structured Hamiltonian `Omega(u) = F + G u`
//! and a single field port. Perfect absorption requires the output field to
//! vanish at all times; for a given control `u(t)` this fixes the input pulse
//! through a bilinear "zero-output" ODE integrated backward from the target
//! memory state. The [`control`] module searches over `u(t)` so that the
//! resulting pulse is unimodal while keeping the transfer exact.

pub mod analysis;
pub mod config;
pub mod control;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod presets;
pub mod pulse;
pub mod rk4;
pub mod system;
pub mod zero_dynamics;

pub use error::{Error, Result};
pub use grid::{ControlSignal, CorrelationTrajectory, PulseSignal, TimeGrid, Trajectory};
pub use system::{MemorySystem, ModeDimensions};
