//! Control synthesis from Signal Temporal Logic specifications by maximizing
//! smooth cumulative robustness.
//!
//! * [`stl`]: formula syntax and parser.
//! * [`semantics`]: boolean, traditional, cumulative and smoothed robustness.
//! * [`diff`]: reverse-mode gradients and the adjoint pull-back to controls.
//! * [`plant`]: discrete-time dynamics, policies, costs and noise.
//! * [`synth`]: projected gradient ascent and the three-stage optimizer.
//! * [`mpc`]: receding-horizon control and loop-closure search.
//! * [`smc`]: Bayesian statistical model checking.

pub mod diff;
mod error;
pub mod mpc;
pub mod plant;
pub mod presets;
pub mod semantics;
pub mod smc;
pub mod stl;
pub mod synth;

pub use error::{Error, Result};
