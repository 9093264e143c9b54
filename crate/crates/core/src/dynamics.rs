//! Linearized quadrature dynamics around the classical working point: the
//! 12x12 drift matrix, the diagonal diffusion matrix, and the spectral
//! stability margin.
//!
//! Quadrature ordering (one column per mode, cavity X/Y, magnon x/y, phonon
//! q/p): X1, Y1, X2, Y2, x1, y1, x2, y2, q1, p1, q2, p2.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::meanfield::MeanField;
use crate::params::{thermal_occupation, HoppingConvention, PhysicalConstants, SystemParams};

pub type Drift = SMatrix<f64, 12, 12>;
pub type DiffusionDiag = SVector<f64, 12>;

/// Quadrature labels in column order.
pub const MODE_ORDER: [&str; 12] = [
    "X1", "Y1", "X2", "Y2", "x1", "y1", "x2", "y2", "q1", "p1", "q2", "p2",
];

/// Drift matrix of d r / dt = M r + noise at the given working point.
pub fn build_drift(params: &SystemParams, mf: &MeanField) -> Drift {
    let mut m = Drift::zeros();
    let gam = params.hop_gamma;
    let delta_c = [params.delta_c(0), params.delta_c(1)];

    for k in 0..2 {
        let (cx, cy) = (2 * k, 2 * k + 1); // cavity X/Y columns
        let (mx, my) = (4 + 2 * k, 5 + 2 * k); // magnon x/y
        let (bq, bp) = (8 + 2 * k, 9 + 2 * k); // phonon q/p
        let g = params.g_cm[k];
        let (gr, gi) = (mf.g_eff[k].re, mf.g_eff[k].im);

        m[(cx, cx)] = -params.kappa_c[k];
        m[(cx, cy)] = delta_c[k];
        m[(cx, my)] = g;
        m[(cy, cx)] = -delta_c[k];
        m[(cy, cy)] = -params.kappa_c[k];
        m[(cy, mx)] = -g;

        m[(mx, cy)] = g;
        m[(mx, mx)] = -params.kappa_m[k];
        m[(mx, my)] = mf.delta_m_eff[k];
        m[(mx, bq)] = -gr;
        m[(my, cx)] = -g;
        m[(my, mx)] = -mf.delta_m_eff[k];
        m[(my, my)] = -params.kappa_m[k];
        m[(my, bq)] = -gi;

        m[(bq, bp)] = params.omega_b[k];
        m[(bp, mx)] = -gi;
        m[(bp, my)] = gr;
        m[(bp, bq)] = -params.omega_b[k];
        m[(bp, bp)] = -params.gamma_b[k];
    }

    match params.hopping_convention {
        HoppingConvention::Hamiltonian => {
            m[(0, 3)] = gam;
            m[(1, 2)] = -gam;
            m[(2, 1)] = gam;
            m[(3, 0)] = -gam;
        }
        HoppingConvention::AsPrinted => {
            m[(0, 2)] = gam;
            m[(1, 3)] = gam;
            m[(2, 0)] = gam;
            m[(3, 1)] = gam;
        }
    }
    m
}

/// Diagonal of the diffusion matrix. Each dissipative channel contributes
/// rate * (2 n_thermal + 1) with the occupation evaluated at that mode's own
/// lab frequency; the phonon q quadrature carries no noise.
pub fn build_diffusion(
    params: &SystemParams,
    consts: &PhysicalConstants,
) -> Result<DiffusionDiag> {
    let t = params.temperature;
    let mut d = DiffusionDiag::zeros();
    for k in 0..2 {
        let n_c = thermal_occupation(params.omega_c[k], t, consts)?;
        let n_m = thermal_occupation(params.omega_m[k], t, consts)?;
        let n_b = thermal_occupation(params.omega_b[k], t, consts)?;
        d[2 * k] = params.kappa_c[k] * (2.0 * n_c + 1.0);
        d[2 * k + 1] = d[2 * k];
        d[4 + 2 * k] = params.kappa_m[k] * (2.0 * n_m + 1.0);
        d[5 + 2 * k] = d[4 + 2 * k];
        d[9 + 2 * k] = params.gamma_b[k] * (2.0 * n_b + 1.0);
    }
    Ok(d)
}

/// Largest real part among the drift eigenvalues. The fluctuation dynamics is
/// asymptotically stable iff this is strictly negative.
pub fn stability_margin(m: &Drift) -> Result<f64> {
    let schur = nalgebra::linalg::Schur::try_new(*m, f64::EPSILON, 100_000).ok_or_else(|| {
        Error::EigenFailure {
            context: "drift matrix",
            matrix_dump: format!("{:.6e}", m),
        }
    })?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Symplectic form for the 12-dimensional quadrature vector: block-diagonal
/// copies of [[0, 1], [-1, 0]].
pub fn symplectic_form() -> Drift {
    let mut omega = Drift::zeros();
    for k in 0..6 {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}
