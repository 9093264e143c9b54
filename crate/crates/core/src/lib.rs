//! Steady-state simulator for two hopping-coupled microwave cavities, each
//! hosting a magnon mode coupled magnetostrictively to a phonon mode.
//!
//! The pipeline: parameters -> mean-field working point -> linearized drift
//! and diffusion matrices -> Lyapunov solve for the stationary covariance ->
//! logarithmic negativity for every bipartition of the six modes.

pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod lyapunov;
pub mod meanfield;
pub mod params;
pub mod pipeline;
pub mod render;
pub mod sweep;

pub use error::{Error, Result};
pub use params::{PhysicalConstants, SystemParams};
