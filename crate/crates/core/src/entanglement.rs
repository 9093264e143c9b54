//! Bipartite entanglement of mode pairs: reduced two-mode covariances and
//! logarithmic negativity.
//!
//! The negativity follows from the smallest symplectic eigenvalue of the
//! partially transposed two-mode state. It is computed along two independent
//! routes, a closed form in the block invariants and the spectrum of
//! Omega * V_pt, which must agree; disagreement indicates a numerical
//! breakdown and is reported as an error rather than silently averaged.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix4;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lyapunov::Covariance;

/// Quantities this far below zero, relative to their natural scale, are
/// treated as rounding; anything lower is an unphysical input. The
/// discriminant inherits the Lyapunov solve's noise amplified through
/// fourth-order products, so the slack must sit well above that.
const NEGATIVE_TOL: f64 = 1e-8;

/// Maximum relative disagreement tolerated between the two eta routes. A
/// genuine convention error disagrees at order one; the routes themselves
/// only agree to the eigensolver's accuracy on badly scaled covariances,
/// which degrades to ~1e-8 when mode variances span several decades.
const ROUTE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    C1,
    C2,
    M1,
    M2,
    B1,
    B2,
}

pub const ALL_MODES: [Mode; 6] = [Mode::C1, Mode::C2, Mode::M1, Mode::M2, Mode::B1, Mode::B2];

impl Mode {
    /// Position in the mode ordering (cavities, magnons, phonons).
    pub fn index(self) -> usize {
        match self {
            Mode::C1 => 0,
            Mode::C2 => 1,
            Mode::M1 => 2,
            Mode::M2 => 3,
            Mode::B1 => 4,
            Mode::B2 => 5,
        }
    }

    /// Quadrature rows of this mode in the 12x12 covariance.
    pub fn rows(self) -> (usize, usize) {
        (2 * self.index(), 2 * self.index() + 1)
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::C1 => "c1",
            Mode::C2 => "c2",
            Mode::M1 => "m1",
            Mode::M2 => "m2",
            Mode::B1 => "b1",
            Mode::B2 => "b2",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c1" => Ok(Mode::C1),
            "c2" => Ok(Mode::C2),
            "m1" => Ok(Mode::M1),
            "m2" => Ok(Mode::M2),
            "b1" => Ok(Mode::B1),
            "b2" => Ok(Mode::B2),
            other => Err(Error::UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ModePair {
    pub a: Mode,
    pub b: Mode,
}

impl ModePair {
    pub const fn new(a: Mode, b: Mode) -> Self {
        Self { a, b }
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.a.label(), self.b.label())
    }
}

impl fmt::Display for ModePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

impl FromStr for ModePair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| Error::UnknownMode(s.to_string()))?;
        Ok(Self::new(a.parse()?, b.parse()?))
    }
}

/// Every unordered pair of distinct modes, lexicographic in the mode order.
pub const ALL_PAIRS: [ModePair; 15] = [
    ModePair::new(Mode::C1, Mode::C2),
    ModePair::new(Mode::C1, Mode::M1),
    ModePair::new(Mode::C1, Mode::M2),
    ModePair::new(Mode::C1, Mode::B1),
    ModePair::new(Mode::C1, Mode::B2),
    ModePair::new(Mode::C2, Mode::M1),
    ModePair::new(Mode::C2, Mode::M2),
    ModePair::new(Mode::C2, Mode::B1),
    ModePair::new(Mode::C2, Mode::B2),
    ModePair::new(Mode::M1, Mode::M2),
    ModePair::new(Mode::M1, Mode::B1),
    ModePair::new(Mode::M1, Mode::B2),
    ModePair::new(Mode::M2, Mode::B1),
    ModePair::new(Mode::M2, Mode::B2),
    ModePair::new(Mode::B1, Mode::B2),
];

/// Extract the 4x4 covariance of a mode pair, rows ordered (a.x, a.y, b.x, b.y).
pub fn reduce_covariance(v: &Covariance, pair: ModePair) -> Matrix4<f64> {
    let (ax, ay) = pair.a.rows();
    let (bx, by) = pair.b.rows();
    let idx = [ax, ay, bx, by];
    Matrix4::from_fn(|r, c| v[(idx[r], idx[c])])
}

/// Closed-form smallest symplectic eigenvalue of the partial transpose from
/// the block invariants of the original covariance.
fn closed_form_eta(delta_tilde: f64, det_v: f64) -> Result<f64> {
    let disc = delta_tilde * delta_tilde - 4.0 * det_v;
    // The subtraction cancels completely for uncorrelated equal-variance
    // modes, so the rounding floor scales with the operands, not with 1.
    let disc_scale = (delta_tilde * delta_tilde).max(4.0 * det_v.abs()).max(1.0);
    let disc = if disc < 0.0 {
        if disc < -NEGATIVE_TOL * disc_scale {
            return Err(Error::UnphysicalCovariance { discriminant: disc });
        }
        0.0
    } else {
        disc
    };
    let eta_sq = (delta_tilde - disc.sqrt()) / 2.0;
    let eta_scale = delta_tilde.abs().max(1.0);
    let eta_sq = if eta_sq < 0.0 {
        if eta_sq < -NEGATIVE_TOL * eta_scale {
            return Err(Error::UnphysicalCovariance { discriminant: eta_sq });
        }
        0.0
    } else {
        eta_sq
    };
    Ok(eta_sq.sqrt())
}

/// Smallest |eigenvalue| of Omega * V_pt; equals the smallest symplectic
/// eigenvalue of the partially transposed state.
fn spectral_eta(v_pt: &Matrix4<f64>) -> Result<f64> {
    let mut omega = Matrix4::<f64>::zeros();
    for k in 0..2 {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    let prod = omega * v_pt;
    let schur = nalgebra::linalg::Schur::try_new(prod, f64::EPSILON, 100_000).ok_or_else(|| {
        Error::EigenFailure {
            context: "partial transpose spectrum",
            matrix_dump: format!("{:.6e}", v_pt),
        }
    })?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(f64::INFINITY, f64::min))
}

/// Smallest symplectic eigenvalue of the partial transpose of a two-mode
/// covariance, cross-checked between the closed form and the spectrum.
pub fn min_ptranspose_eigenvalue(v4: &Matrix4<f64>) -> Result<f64> {
    let a = v4.fixed_view::<2, 2>(0, 0);
    let b = v4.fixed_view::<2, 2>(2, 2);
    let c = v4.fixed_view::<2, 2>(0, 2);
    let delta_tilde =
        (a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)])
            + (b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)])
            - 2.0 * (c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)]);
    let det_v = v4.determinant();
    let closed = closed_form_eta(delta_tilde, det_v)?;

    // Momentum flip of the first mode.
    let p = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, 1.0, 1.0));
    let v_pt = p * v4 * p;
    let spectral = spectral_eta(&v_pt)?;

    if (closed - spectral).abs() > ROUTE_TOL * closed.max(spectral).max(1e-12) {
        return Err(Error::SymplecticInconsistency {
            spectral,
            closed_form: closed,
        });
    }
    Ok(closed)
}

/// Logarithmic negativity of a two-mode covariance: max(0, -ln(2 eta-)).
pub fn log_negativity(v4: &Matrix4<f64>) -> Result<f64> {
    let eta = min_ptranspose_eigenvalue(v4)?;
    Ok((-(2.0 * eta).ln()).max(0.0))
}

/// Logarithmic negativity of every mode pair of the full state.
pub fn all_pair_negativities(v: &Covariance) -> Result<Vec<(ModePair, f64)>> {
    ALL_PAIRS
        .iter()
        .map(|&pair| Ok((pair, log_negativity(&reduce_covariance(v, pair))?)))
        .collect()
}
