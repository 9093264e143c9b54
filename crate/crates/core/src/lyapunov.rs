//! Stationary covariance from the Lyapunov equation M V + V M^T = -D.
//!
//! The symmetric unknown is vectorized (n(n+1)/2 components) and the dense
//! linear system solved by LU. Inputs are normalized by the largest drift
//! entry first; the equation is linear, so the solution is unchanged and the
//! system matrix is better scaled.

use nalgebra::{DMatrix, DVector, SMatrix};
use num_complex::Complex64;

use crate::dynamics::{DiffusionDiag, Drift};
use crate::error::{Error, Result};

pub type Covariance = SMatrix<f64, 12, 12>;

/// Condition estimates above this trip a diagnostics warning.
pub const CONDITION_WARN_THRESHOLD: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovDiagnostics {
    /// Frobenius residual of M V + V M^T + D relative to the Frobenius norm
    /// of D.
    pub residual: f64,
    /// One-norm condition estimate of the vectorized system.
    pub condition_estimate: f64,
    pub condition_warning: bool,
}

fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * (2 * n - a + 1) / 2 + (b - a)
}

/// Vectorized coefficient matrix of the Lyapunov operator V -> M V + V M^T.
fn assemble(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let nv = n * (n + 1) / 2;
    let mut a = DMatrix::<f64>::zeros(nv, nv);
    for i in 0..n {
        for j in i..n {
            let row = upper_index(n, i, j);
            for k in 0..n {
                a[(row, upper_index(n, k, j))] += m[(i, k)];
                a[(row, upper_index(n, i, k))] += m[(j, k)];
            }
        }
    }
    a
}

/// Solve M V + V M^T = -D for symmetric V, any even or odd dimension.
pub fn solve_lyapunov_general(m: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    assert_eq!((m.ncols(), d.nrows(), d.ncols()), (n, n, n), "shape mismatch");
    let scale = m.amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::EigenFailure {
            context: "lyapunov system",
            matrix_dump: format!("{:.6e}", m),
        });
    }
    let ms = m / scale;
    let a = assemble(&ms);
    let nv = n * (n + 1) / 2;
    let mut rhs = DVector::<f64>::zeros(nv);
    for i in 0..n {
        for j in i..n {
            rhs[upper_index(n, i, j)] = -d[(i, j)] / scale;
        }
    }
    let x = a.lu().solve(&rhs).ok_or_else(|| Error::EigenFailure {
        context: "lyapunov system",
        matrix_dump: format!("{:.6e}", m),
    })?;
    let mut v = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let val = x[upper_index(n, i, j)];
            v[(i, j)] = val;
            v[(j, i)] = val;
        }
    }
    Ok(v)
}

/// Stationary covariance of the 12-mode fluctuation dynamics.
pub fn solve_stationary_covariance(m: &Drift, d: &DiffusionDiag) -> Result<Covariance> {
    let md = DMatrix::from_iterator(12, 12, m.iter().copied());
    let dd = DMatrix::from_diagonal(&DVector::from_iterator(12, d.iter().copied()));
    let v = solve_lyapunov_general(&md, &dd)?;
    Ok(Covariance::from_iterator(v.iter().copied()))
}

/// Relative Frobenius residual of the Lyapunov equation.
pub fn residual_general(m: &DMatrix<f64>, d: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let r = m * v + v * m.transpose() + d;
    let dn = d.norm();
    if dn > 0.0 {
        r.norm() / dn
    } else {
        r.norm()
    }
}

pub fn lyapunov_residual(m: &Drift, d: &DiffusionDiag, v: &Covariance) -> f64 {
    let md = DMatrix::from_iterator(12, 12, m.iter().copied());
    let dd = DMatrix::from_diagonal(&DVector::from_iterator(12, d.iter().copied()));
    let vd = DMatrix::from_iterator(12, 12, v.iter().copied());
    residual_general(&md, &dd, &vd)
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum())
        .fold(0.0, f64::max)
}

/// Hager's one-norm condition estimator. Returns None if a solve fails.
fn hager_condition_estimate(a: &DMatrix<f64>) -> Option<f64> {
    let n = a.nrows();
    let lu = a.clone().lu();
    let lut = a.transpose().lu();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut estimate = 0.0_f64;
    for _ in 0..5 {
        let y = lu.solve(&x)?;
        estimate = y.iter().map(|v| v.abs()).sum();
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let z = lut.solve(&xi)?;
        let (jmax, zmax) = z
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.abs()))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if zmax <= z.dot(&x) {
            break;
        }
        x = DVector::zeros(n);
        x[jmax] = 1.0;
    }
    Some(one_norm(a) * estimate)
}

/// Residual plus conditioning diagnostics for an already computed solution.
pub fn diagnose(m: &Drift, d: &DiffusionDiag, v: &Covariance) -> LyapunovDiagnostics {
    let residual = lyapunov_residual(m, d, v);
    let scale = m.amax();
    let md = DMatrix::from_iterator(12, 12, m.iter().map(|x| x / scale));
    let condition_estimate = hager_condition_estimate(&assemble(&md)).unwrap_or(f64::INFINITY);
    LyapunovDiagnostics {
        residual,
        condition_estimate,
        condition_warning: condition_estimate > CONDITION_WARN_THRESHOLD,
    }
}

/// Smallest eigenvalue of V + (i/2) Omega; nonnegative (up to tolerance) iff
/// V is a physical covariance matrix.
pub fn min_symplectic_offset(v: &DMatrix<f64>) -> Result<f64> {
    let n = v.nrows();
    assert!(n % 2 == 0 && v.ncols() == n, "even square matrix required");
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = Complex64::new(v[(i, j)], 0.0);
        }
    }
    for k in 0..n / 2 {
        h[(2 * k, 2 * k + 1)] += Complex64::new(0.0, 0.5);
        h[(2 * k + 1, 2 * k)] += Complex64::new(0.0, -0.5);
    }
    let eig = nalgebra::SymmetricEigen::try_new(h, f64::EPSILON, 100_000).ok_or_else(|| {
        Error::EigenFailure {
            context: "physicality check",
            matrix_dump: format!("{:.6e}", v),
        }
    })?;
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

pub fn physicality_offset(v: &Covariance) -> Result<f64> {
    let vd = DMatrix::from_iterator(12, 12, v.iter().copied());
    min_symplectic_offset(&vd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_diffusion, build_drift};
    use crate::meanfield::{resolve_omega, solve_self_consistent};
    use crate::params::{PhysicalConstants, SystemParams};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// RK4 integration of dV/dt = M V + V M^T + D from V = 0; converges to
    /// the stationary covariance for stable M.
    fn integrate_lyapunov(m: &DMatrix<f64>, d: &DMatrix<f64>, t_end: f64, dt: f64) -> DMatrix<f64> {
        let n = m.nrows();
        let mut v = DMatrix::<f64>::zeros(n, n);
        let f = |v: &DMatrix<f64>| m * v + v * m.transpose() + d;
        let steps = (t_end / dt).ceil() as usize;
        for _ in 0..steps {
            let k1 = f(&v);
            let k2 = f(&(&v + &k1 * (dt / 2.0)));
            let k3 = f(&(&v + &k2 * (dt / 2.0)));
            let k4 = f(&(&v + &k3 * dt));
            v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
        v
    }

    fn random_stable_system(rng: &mut ChaCha8Rng, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        // Random matrix shifted to guarantee eigenvalues left of -0.2.
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = rng.random_range(-1.0..1.0);
            }
        }
        let eigs = m.clone().complex_eigenvalues();
        let max_re = eigs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        for i in 0..n {
            m[(i, i)] -= max_re + 0.2;
        }
        // Random PSD diffusion: B B^T.
        let mut b = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] = rng.random_range(-1.0..1.0);
            }
        }
        let d = &b * b.transpose();
        (m, d)
    }

    #[test]
    fn damped_mode_blocks_give_thermal_covariance() {
        // Uncoupled modes: cavity/magnon pairs reach (n + 1/2) I exactly, and
        // so do the underdamped phonon pairs despite one-sided noise.
        let occupations = [0.0, 1.0, 20.3];
        for &n_th in &occupations {
            let mut p = SystemParams::table1();
            p.g_cm = [0.0; 2];
            p.g_mb = [0.0; 2];
            p.hop_gamma = 0.0;
            let mf = solve_self_consistent(&p, [0.0; 2]).unwrap();
            let m = build_drift(&p, &mf);
            let mut d = DiffusionDiag::zeros();
            for k in 0..2 {
                d[2 * k] = p.kappa_c[k] * (2.0 * n_th + 1.0);
                d[2 * k + 1] = d[2 * k];
                d[4 + 2 * k] = p.kappa_m[k] * (2.0 * n_th + 1.0);
                d[5 + 2 * k] = d[4 + 2 * k];
                d[9 + 2 * k] = p.gamma_b[k] * (2.0 * n_th + 1.0);
            }
            let v = solve_stationary_covariance(&m, &d).unwrap();
            let expect = Covariance::identity() * (n_th + 0.5);
            let err = (v - expect).amax();
            assert!(err < 1e-12 * (n_th + 0.5), "n={n_th}: err={err}");
        }
    }

    #[test]
    fn general_solver_matches_rk4_integration() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..3 {
            let (m, d) = random_stable_system(&mut rng, 4);
            let direct = solve_lyapunov_general(&m, &d).unwrap();
            let integrated = integrate_lyapunov(&m, &d, 60.0, 0.005);
            let err = (&direct - &integrated).amax() / direct.amax();
            assert!(err < 1e-6, "trial {trial}: err={err}");
            assert!(residual_general(&m, &d, &direct) < 1e-12, "trial {trial}");
        }
    }

    #[test]
    fn solution_invariant_under_joint_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (m, d) = random_stable_system(&mut rng, 6);
        let v1 = solve_lyapunov_general(&m, &d).unwrap();
        let v2 = solve_lyapunov_general(&(&m * 1e8), &(&d * 1e8)).unwrap();
        assert!((v1.clone() - v2).amax() < 1e-10 * v1.amax());
    }

    #[test]
    fn marginal_drift_is_rejected() {
        let m = DMatrix::<f64>::zeros(4, 4);
        let d = DMatrix::<f64>::identity(4, 4);
        assert!(solve_lyapunov_general(&m, &d).is_err());
    }

    #[test]
    fn reference_point_residual_and_physicality() {
        let p = SystemParams::table1();
        let consts = PhysicalConstants::default();
        let omega = resolve_omega(&p, &consts).unwrap();
        let mf = solve_self_consistent(&p, omega).unwrap();
        let m = build_drift(&p, &mf);
        let d = build_diffusion(&p, &consts).unwrap();
        let v = solve_stationary_covariance(&m, &d).unwrap();
        assert!(lyapunov_residual(&m, &d, &v) < 1e-10);
        let offset = physicality_offset(&v).unwrap();
        assert!(offset > -1e-9, "offset = {offset}");
    }

    #[test]
    fn diagnostics_condition_estimate_tracks_exact_value() {
        let p = SystemParams::table1();
        let consts = PhysicalConstants::default();
        let omega = resolve_omega(&p, &consts).unwrap();
        let mf = solve_self_consistent(&p, omega).unwrap();
        let m = build_drift(&p, &mf);
        let d = build_diffusion(&p, &consts).unwrap();
        let v = solve_stationary_covariance(&m, &d).unwrap();
        let diag = diagnose(&m, &d, &v);

        let scale = m.amax();
        let md = DMatrix::from_iterator(12, 12, m.iter().map(|x| x / scale));
        let a = assemble(&md);
        let exact = one_norm(&a) * one_norm(&a.clone().try_inverse().unwrap());
        // Hager never overestimates and rarely misses by much.
        assert!(diag.condition_estimate <= exact * (1.0 + 1e-9));
        assert!(diag.condition_estimate >= 0.01 * exact);
        assert!(!diag.condition_warning, "cond = {:.3e}", diag.condition_estimate);
    }

    #[test]
    fn vacuum_covariance_sits_exactly_on_the_physical_boundary() {
        let v = DMatrix::<f64>::identity(4, 4) * 0.5;
        let offset = min_symplectic_offset(&v).unwrap();
        assert!(offset.abs() < 1e-14, "offset = {offset}");
    }

    #[test]
    fn unphysical_matrix_has_negative_offset() {
        let v = DMatrix::<f64>::identity(4, 4) * 0.3;
        let offset = min_symplectic_offset(&v).unwrap();
        assert_relative_eq!(offset, -0.2, max_relative = 1e-12);
    }

    #[test]
    fn upper_index_is_a_bijection() {
        let n = 12;
        let mut seen = vec![false; n * (n + 1) / 2];
        for i in 0..n {
            for j in i..n {
                let idx = upper_index(n, i, j);
                assert!(!seen[idx]);
                seen[idx] = true;
                assert_eq!(idx, upper_index(n, j, i));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }
}
