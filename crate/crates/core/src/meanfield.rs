//! Classical working point: stationary amplitudes of the four driven modes
//! and the self-consistent static phonon displacements.
//!
//! In the frame rotating at the drive frequencies the stationary amplitudes
//! satisfy a 4x4 complex linear system coupling (c1, c2, m1, m2); the phonon
//! displacement q_k = -(g_mb/omega_b)|<m_k>|^2 feeds back into the magnon
//! detuning, so the pair is iterated to a fixed point.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{derive_drive, HoppingConvention, PhysicalConstants, SystemParams};

/// Global budget of linear solves per self-consistency call. Well-behaved
/// points need fewer than ten; the bracketing fallback on strongly pulled
/// points can run into the hundreds.
const MAX_ITER: usize = 20_000;
const TOL: f64 = 1e-12;

/// Converged classical working point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanField {
    /// Rabi rates actually applied, rad/s.
    pub omega_rabi: [f64; 2],
    /// Stationary cavity amplitudes.
    pub c: [Complex64; 2],
    /// Stationary magnon amplitudes.
    pub m: [Complex64; 2],
    /// Static phonon displacements (dimensionless quadrature units).
    pub q: [f64; 2],
    /// Effective magnomechanical coupling G_k = i sqrt(2) g_mb <m_k>, rad/s.
    pub g_eff: [Complex64; 2],
    /// Magnon detuning including the static displacement shift, rad/s.
    pub delta_m_eff: [f64; 2],
    /// Linear solves performed by the fixed-point iteration.
    pub iterations: usize,
    /// Final fixed-point residual.
    pub residual: f64,
}

/// Stationary (c1, c2, m1, m2) for fixed phonon displacements.
fn solve_linear(
    params: &SystemParams,
    omega: [f64; 2],
    q: [f64; 2],
) -> Result<([Complex64; 2], [Complex64; 2])> {
    let i = Complex64::I;
    let zero = Complex64::ZERO;
    let hop = match params.hopping_convention {
        HoppingConvention::Hamiltonian => i * params.hop_gamma,
        HoppingConvention::AsPrinted => Complex64::from(-params.hop_gamma),
    };
    let dm = [
        params.delta_m0(0) + params.g_mb[0] * q[0],
        params.delta_m0(1) + params.g_mb[1] * q[1],
    ];
    let a = Matrix4::new(
        i * params.delta_c(0) + params.kappa_c[0],
        hop,
        i * params.g_cm[0],
        zero,
        hop,
        i * params.delta_c(1) + params.kappa_c[1],
        zero,
        i * params.g_cm[1],
        i * params.g_cm[0],
        zero,
        i * dm[0] + params.kappa_m[0],
        zero,
        zero,
        i * params.g_cm[1],
        zero,
        i * dm[1] + params.kappa_m[1],
    );
    let b = Vector4::new(zero, zero, Complex64::from(omega[0]), Complex64::from(omega[1]));
    let x = a.lu().solve(&b).ok_or(Error::MeanFieldSingular)?;
    Ok(([x[0], x[1]], [x[2], x[3]]))
}

struct Probe {
    c: [Complex64; 2],
    m: [Complex64; 2],
    /// Fixed-point defect q - q_target(q), componentwise.
    defect: [f64; 2],
    /// Infinity norm of the defect, scaled by 1 + |q|.
    norm: f64,
}

fn probe(params: &SystemParams, omega: [f64; 2], q: [f64; 2]) -> Result<Probe> {
    let (c, m) = solve_linear(params, omega, q)?;
    let mut defect = [0.0; 2];
    let mut norm = 0.0_f64;
    for k in 0..2 {
        let target = -params.g_mb[k] / params.omega_b[k] * m[k].norm_sqr();
        defect[k] = q[k] - target;
        norm = norm.max(defect[k].abs() / (1.0 + target.abs()));
    }
    Ok(Probe { c, m, defect, norm })
}

fn finish(params: &SystemParams, omega: [f64; 2], q: [f64; 2], p: Probe, iterations: usize) -> MeanField {
    let g_eff = [
        Complex64::I * 2.0_f64.sqrt() * params.g_mb[0] * p.m[0],
        Complex64::I * 2.0_f64.sqrt() * params.g_mb[1] * p.m[1],
    ];
    MeanField {
        omega_rabi: omega,
        c: p.c,
        m: p.m,
        q,
        g_eff,
        delta_m_eff: [
            params.delta_m0(0) + params.g_mb[0] * q[0],
            params.delta_m0(1) + params.g_mb[1] * q[1],
        ],
        iterations,
        residual: p.norm,
    }
}

/// Newton iteration on the fixed-point defect with central-difference
/// Jacobian and backtracking line search. Ok(None) means the search stalled
/// in a local minimum of the defect norm; hard solver errors propagate.
fn newton(
    params: &SystemParams,
    omega: [f64; 2],
    start: [f64; 2],
    iterations: &mut usize,
) -> Result<Option<([f64; 2], Probe)>> {
    let mut q = start;
    let mut p = probe(params, omega, q)?;
    *iterations += 1;
    while *iterations < MAX_ITER {
        if p.norm < TOL {
            return Ok(Some((q, p)));
        }
        let mut jac = [[0.0_f64; 2]; 2];
        for l in 0..2 {
            let h = 1e-6 * (1.0 + q[l].abs());
            let mut qp = q;
            qp[l] += h;
            let mut qm = q;
            qm[l] -= h;
            let pp = probe(params, omega, qp)?;
            let pm = probe(params, omega, qm)?;
            *iterations += 2;
            for k in 0..2 {
                jac[k][l] = (pp.defect[k] - pm.defect[k]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-300 {
            return Ok(None);
        }
        let step = [
            (-p.defect[0] * jac[1][1] + p.defect[1] * jac[0][1]) / det,
            (-p.defect[1] * jac[0][0] + p.defect[0] * jac[1][0]) / det,
        ];
        let mut t = 1.0_f64;
        loop {
            if *iterations >= MAX_ITER {
                return Ok(None);
            }
            let q_try = [q[0] + t * step[0], q[1] + t * step[1]];
            let p_try = probe(params, omega, q_try)?;
            *iterations += 1;
            if p_try.norm < p.norm {
                q = q_try;
                p = p_try;
                break;
            }
            t *= 0.5;
            if t < 1e-6 {
                return Ok(None);
            }
        }
    }
    if p.norm < TOL {
        return Ok(Some((q, p)));
    }
    Ok(None)
}

/// Brent root finder on a bracketed sign change. `fa` and `fb` are the
/// already evaluated endpoint values with fa * fb <= 0.
fn brent(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
) -> Result<f64> {
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs().max(1.0);
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation, secant when two points
            // coincide; fall back to bisection if the step is not sane.
            let s = fb / fa;
            let (p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0)),
                    (qq - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            let p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1 * xm.signum() };
        fb = f(b)?;
    }
    Ok(b)
}

/// Gauss-Seidel sweep with a bracketed scalar solve per displacement: each
/// component's equation q_k = -(g_mb/omega_b)|m_k|^2 has a guaranteed sign
/// change between a sufficiently negative displacement and zero because the
/// amplitude response is bounded.
fn gauss_seidel_bracketed(
    params: &SystemParams,
    omega: [f64; 2],
    iterations: &mut usize,
) -> Result<([f64; 2], Probe)> {
    let count = std::cell::Cell::new(*iterations);
    let mut q = [0.0_f64; 2];
    let mut p = probe(params, omega, q)?;
    count.set(count.get() + 1);
    for _ in 0..60 {
        if p.norm < TOL || count.get() >= MAX_ITER {
            break;
        }
        for k in 0..2 {
            let mut eval = |x: f64| -> Result<f64> {
                let mut qx = q;
                qx[k] = x;
                let pr = probe(params, omega, qx)?;
                count.set(count.get() + 1);
                Ok(pr.defect[k])
            };
            // G_k(0) = |t_k| >= 0; grow the lower end until the sign flips.
            let hi = 0.0;
            let f_hi = eval(hi)?;
            if f_hi == 0.0 {
                q[k] = 0.0;
                continue;
            }
            let mut lo = -2.0 * (1.0 + q[k].abs());
            let mut f_lo = eval(lo)?;
            let mut grow = 0;
            while f_lo > 0.0 && grow < 80 && count.get() < MAX_ITER {
                lo *= 2.0;
                f_lo = eval(lo)?;
                grow += 1;
            }
            if f_lo > 0.0 {
                break;
            }
            q[k] = brent(&mut eval, lo, hi, f_lo, f_hi)?;
            if count.get() >= MAX_ITER {
                break;
            }
        }
        p = probe(params, omega, q)?;
        count.set(count.get() + 1);
    }
    *iterations = count.get();
    Ok((q, p))
}

/// Iterate the amplitude solve and displacement update to a joint fixed point.
///
/// A Newton search from zero displacement settles the weakly nonlinear bulk
/// of parameter space in a few solves. Where the static pull is strong enough
/// to destroy that root (the response folds over), the solver falls back to
/// coordinate-wise bracketed root finding, which is insensitive to the local
/// defect landscape.
pub fn solve_self_consistent(params: &SystemParams, omega: [f64; 2]) -> Result<MeanField> {
    let mut iterations = 0usize;
    if let Some((q, p)) = newton(params, omega, [0.0; 2], &mut iterations)? {
        return Ok(finish(params, omega, q, p, iterations));
    }
    let (q, p) = gauss_seidel_bracketed(params, omega, &mut iterations)?;
    if p.norm < TOL {
        return Ok(finish(params, omega, q, p, iterations));
    }
    // Polish with Newton from the Gauss-Seidel point before giving up.
    if let Some((q, p)) = newton(params, omega, q, &mut iterations)? {
        return Ok(finish(params, omega, q, p, iterations));
    }
    Err(Error::NoConvergence {
        iterations,
        residual: p.norm,
    })
}

/// Determine the Rabi rates to apply, in priority order: calibration against a
/// target |G_eff|, explicit per-drive overrides, then the field-derived value.
///
/// Calibration adjusts both Rabi rates until |G_eff| of each subsystem meets
/// the target, so the effective coupling is held at the same value at every
/// parameter point regardless of how the local susceptibility varies.
pub fn resolve_omega(params: &SystemParams, consts: &PhysicalConstants) -> Result<[f64; 2]> {
    if let Some(target) = params.g_eff_target {
        if params.g_mb[0] <= 0.0 || params.g_mb[1] <= 0.0 {
            return Err(Error::Config(
                "g_eff target requires nonzero magnomechanical couplings".into(),
            ));
        }
        // Linear estimate at zero displacement seeds a Newton iteration on
        // log|G_k| as a function of log Omega_k. Working in logs keeps the
        // drives positive and makes the map nearly linear; the drives are
        // coupled through the cavity hopping, so the 2x2 Jacobian is taken
        // jointly by finite differences.
        let (_, m_unit) = solve_linear(params, [1.0, 1.0], [0.0, 0.0])?;
        let mut w = [0.0f64; 2];
        for k in 0..2 {
            let per_unit = 2.0_f64.sqrt() * params.g_mb[k] * m_unit[k].norm();
            if per_unit <= 0.0 {
                return Err(Error::Config(format!(
                    "g_eff target unreachable: drive does not couple to magnon {}",
                    k + 1
                )));
            }
            w[k] = (target / per_unit).ln();
        }
        match calibrate_newton(params, target, w, core::f64::consts::LN_10) {
            Ok(w) => Ok([w[0].exp(), w[1].exp()]),
            // Where the drive response is bistable, a large Newton step can
            // land on the far branch with a residual below the seed's, and
            // backtracking accepts the jump even though the target only
            // exists on the branch it left. Re-approach the target from the
            // weak-drive side instead.
            Err(_) => {
                let w = calibrate_continuation(params, target, w)?;
                Ok([w[0].exp(), w[1].exp()])
            }
        }
    } else {
        let derived = derive_drive(params, consts);
        Ok([
            params.omega_rabi_override[0].unwrap_or(derived.omega_rabi[0]),
            params.omega_rabi_override[1].unwrap_or(derived.omega_rabi[1]),
        ])
    }
}

/// One damped Newton search on log-drives `w` for ln(|G_k|/target) = 0.
///
/// The Jacobian is taken by forward differences, the step is capped at `cap`
/// per iteration, and a halving line search only accepts residual decrease.
/// An infeasible seed (mean-field solve fails) is backed off until it
/// evaluates. Accepts at 1e-12, or 1e-9 when progress stalls.
fn calibrate_newton(
    params: &SystemParams,
    target: f64,
    seed: [f64; 2],
    cap: f64,
) -> Result<[f64; 2]> {
    let log_gap = |w: &[f64; 2]| -> Result<[f64; 2]> {
        let mf = solve_self_consistent(params, [w[0].exp(), w[1].exp()])?;
        let mut f = [0.0f64; 2];
        for k in 0..2 {
            let achieved = mf.g_eff[k].norm();
            if achieved <= 0.0 {
                return Err(Error::Config(format!(
                    "g_eff target unreachable: magnon {} stays undriven",
                    k + 1
                )));
            }
            f[k] = (achieved / target).ln();
        }
        Ok(f)
    };
    let mut w = seed;
    let mut fw = loop {
        match log_gap(&w) {
            Ok(f) => break f,
            Err(e) => {
                w[0] -= core::f64::consts::LN_2;
                w[1] -= core::f64::consts::LN_2;
                if w[0] < -700.0 {
                    return Err(e);
                }
            }
        }
    };
    let mut norm = fw[0].abs().max(fw[1].abs());
    for _ in 0..60 {
        if norm <= 1e-12 {
            return Ok(w);
        }
        let h = 1e-7;
        // Finite-difference Jacobian; a failed probe falls back to the
        // identity column (pure ratio step in that drive).
        let mut jac = [[0.0f64; 2]; 2];
        for col in 0..2 {
            let mut wp = w;
            wp[col] += h;
            match log_gap(&wp) {
                Ok(fp) => {
                    jac[0][col] = (fp[0] - fw[0]) / h;
                    jac[1][col] = (fp[1] - fw[1]) / h;
                }
                Err(_) => {
                    jac[0][col] = if col == 0 { 1.0 } else { 0.0 };
                    jac[1][col] = if col == 1 { 1.0 } else { 0.0 };
                }
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let mut step = if det.abs() > 1e-300 {
            [
                -(jac[1][1] * fw[0] - jac[0][1] * fw[1]) / det,
                -(jac[0][0] * fw[1] - jac[1][0] * fw[0]) / det,
            ]
        } else {
            [-fw[0], -fw[1]]
        };
        let step_norm = step[0].abs().max(step[1].abs());
        if step_norm > cap {
            step[0] *= cap / step_norm;
            step[1] *= cap / step_norm;
        }
        let mut t = 1.0f64;
        let mut advanced = false;
        while t >= 1e-6 {
            let wt = [w[0] + t * step[0], w[1] + t * step[1]];
            if let Ok(ft) = log_gap(&wt) {
                let nt = ft[0].abs().max(ft[1].abs());
                if nt < norm {
                    w = wt;
                    fw = ft;
                    norm = nt;
                    advanced = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    if norm <= 1e-9 {
        // Accept a slightly loose calibration rather than fail outright;
        // the residual is far below any physical tolerance.
        return Ok(w);
    }
    Err(Error::NoConvergence {
        iterations: 60,
        residual: norm,
    })
}

/// Walk the calibration target up from the weakly driven regime in geometric
/// stages, warm-starting each Newton search from the last stage's drives.
///
/// Every stage starts within a factor 1.3 of its goal, so its residual is
/// small and any step that jumps a fold of the drive response raises the
/// residual by an order of magnitude and is rejected; the search therefore
/// tracks one connected branch all the way to the target.
fn calibrate_continuation(
    params: &SystemParams,
    target: f64,
    seed: [f64; 2],
) -> Result<[f64; 2]> {
    let retreat = 8.0 * core::f64::consts::LN_2;
    let mut w = [seed[0] - retreat, seed[1] - retreat];
    let achieved = loop {
        match solve_self_consistent(params, [w[0].exp(), w[1].exp()]) {
            Ok(mf) => break mf.g_eff[0].norm().min(mf.g_eff[1].norm()),
            Err(e) => {
                w[0] -= core::f64::consts::LN_2;
                w[1] -= core::f64::consts::LN_2;
                if w[0] < -700.0 {
                    return Err(e);
                }
            }
        }
    };
    if achieved <= 0.0 {
        return Err(Error::Config(
            "g_eff target unreachable: magnon stays undriven".into(),
        ));
    }
    let deficit = (target / achieved).ln().max(0.0);
    let stages = (deficit / 1.3f64.ln()).ceil().max(1.0) as usize;
    for j in 1..=stages {
        let stage_target = achieved * (deficit * j as f64 / stages as f64).exp();
        w = calibrate_newton(params, stage_target, w, 1.5f64.ln())?;
    }
    w = calibrate_newton(params, target, w, 1.5f64.ln())?;
    Ok(w)
}
