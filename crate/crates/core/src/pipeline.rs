//! Single-point evaluation: working point, stability gate, stationary
//! covariance, and the 15 pair negativities, with the status distinctions the
//! sweep layer needs.

use crate::dynamics::{build_diffusion, build_drift, stability_margin, DiffusionDiag, Drift};
use crate::entanglement::{all_pair_negativities, ModePair};
use crate::error::Result;
use crate::lyapunov::{lyapunov_residual, physicality_offset, solve_stationary_covariance, Covariance};
use crate::meanfield::{resolve_omega, solve_self_consistent, MeanField};
use crate::params::{PhysicalConstants, SystemParams};

/// Covariances whose symplectic offset drops below -PHYSICALITY_TOL are
/// reported as unphysical instead of being fed to the negativity.
pub const PHYSICALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    Unstable,
    Unphysical,
}

impl PointStatus {
    pub fn label(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Unstable => "unstable",
            PointStatus::Unphysical => "unphysical",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub status: PointStatus,
    pub mean_field: MeanField,
    pub drift: Drift,
    pub diffusion: DiffusionDiag,
    /// Largest real part of the drift spectrum.
    pub margin: f64,
    /// Stationary covariance; absent when the drift is unstable.
    pub covariance: Option<Covariance>,
    pub lyapunov_residual: Option<f64>,
    /// Smallest eigenvalue of V + (i/2) Omega.
    pub physicality: Option<f64>,
    /// One negativity per catalog pair; absent unless the point is Ok.
    pub negativities: Option<Vec<(ModePair, f64)>>,
}

/// Evaluate one parameter point with externally fixed Rabi rates.
pub fn evaluate_point(
    params: &SystemParams,
    consts: &PhysicalConstants,
    omega: [f64; 2],
) -> Result<PointResult> {
    let mean_field = solve_self_consistent(params, omega)?;
    let drift = build_drift(params, &mean_field);
    let diffusion = build_diffusion(params, consts)?;
    let margin = stability_margin(&drift)?;
    if margin >= 0.0 {
        return Ok(PointResult {
            status: PointStatus::Unstable,
            mean_field,
            drift,
            diffusion,
            margin,
            covariance: None,
            lyapunov_residual: None,
            physicality: None,
            negativities: None,
        });
    }
    let v = solve_stationary_covariance(&drift, &diffusion)?;
    let residual = lyapunov_residual(&drift, &diffusion, &v);
    let offset = physicality_offset(&v)?;
    if offset < -PHYSICALITY_TOL {
        return Ok(PointResult {
            status: PointStatus::Unphysical,
            mean_field,
            drift,
            diffusion,
            margin,
            covariance: Some(v),
            lyapunov_residual: Some(residual),
            physicality: Some(offset),
            negativities: None,
        });
    }
    let negativities = all_pair_negativities(&v)?;
    Ok(PointResult {
        status: PointStatus::Ok,
        mean_field,
        drift,
        diffusion,
        margin,
        covariance: Some(v),
        lyapunov_residual: Some(residual),
        physicality: Some(offset),
        negativities: Some(negativities),
    })
}

/// Resolve the drive from the parameter set itself, then evaluate.
pub fn evaluate_config(
    params: &SystemParams,
    consts: &PhysicalConstants,
) -> Result<([f64; 2], PointResult)> {
    let omega = resolve_omega(params, consts)?;
    let point = evaluate_point(params, consts, omega)?;
    Ok((omega, point))
}
