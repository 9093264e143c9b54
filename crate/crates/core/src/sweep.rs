//! Grid sweeps over detunings and the hopping rate, with figure presets.
//!
//! Axes and overrides are expressed in multiples of the phonon frequency of
//! subsystem 1, the natural unit for every swept quantity. Points are
//! evaluated independently (row-parallel) and assembled in grid order, so the
//! emitted CSV is byte-identical for any worker count.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{build_drift, stability_margin};
use crate::entanglement::ModePair;
use crate::error::{Error, Result};
use crate::meanfield::resolve_omega;
use crate::params::{validate, PhysicalConstants, RawConfig, SystemParams};
use crate::pipeline::{evaluate_point, PointStatus};

/// A sweepable parameter. Values are multiples of omega_b of subsystem 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AxisParam {
    /// Cavity 1 detuning.
    Delta1,
    /// Cavity 2 detuning.
    Delta2,
    /// Bare magnon 1 detuning.
    DeltaM1,
    /// Bare magnon 2 detuning.
    DeltaM2,
    /// Photon hopping rate.
    HopGamma,
    /// Common cavity detuning: Delta1 = Delta2 = value.
    DeltaSym,
    /// Opposed cavity detunings: Delta1 = -Delta2 = value.
    DeltaAntisym,
}

impl AxisParam {
    pub const ALL: [AxisParam; 7] = [
        AxisParam::Delta1,
        AxisParam::Delta2,
        AxisParam::DeltaM1,
        AxisParam::DeltaM2,
        AxisParam::HopGamma,
        AxisParam::DeltaSym,
        AxisParam::DeltaAntisym,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AxisParam::Delta1 => "Delta1",
            AxisParam::Delta2 => "Delta2",
            AxisParam::DeltaM1 => "Delta_m1",
            AxisParam::DeltaM2 => "Delta_m2",
            AxisParam::HopGamma => "hop_Gamma",
            AxisParam::DeltaSym => "Delta_sym",
            AxisParam::DeltaAntisym => "Delta_antisym",
        }
    }

    /// Which plain parameters this axis writes (for collision checks).
    fn touches(self) -> &'static [AxisParam] {
        match self {
            AxisParam::DeltaSym | AxisParam::DeltaAntisym => {
                &[AxisParam::Delta1, AxisParam::Delta2]
            }
            p => match p {
                AxisParam::Delta1 => &[AxisParam::Delta1],
                AxisParam::Delta2 => &[AxisParam::Delta2],
                AxisParam::DeltaM1 => &[AxisParam::DeltaM1],
                AxisParam::DeltaM2 => &[AxisParam::DeltaM2],
                AxisParam::HopGamma => &[AxisParam::HopGamma],
                _ => unreachable!(),
            },
        }
    }

    /// Write `value` (in omega_b multiples) into the parameter set.
    pub fn apply(self, params: &mut SystemParams, value: f64) {
        let wb = params.omega_b[0];
        match self {
            AxisParam::Delta1 => params.set_delta_c(0, value * wb),
            AxisParam::Delta2 => params.set_delta_c(1, value * wb),
            AxisParam::DeltaM1 => params.set_delta_m0(0, value * wb),
            AxisParam::DeltaM2 => params.set_delta_m0(1, value * wb),
            AxisParam::HopGamma => params.hop_gamma = value * wb,
            AxisParam::DeltaSym => {
                params.set_delta_c(0, value * wb);
                params.set_delta_c(1, value * wb);
            }
            AxisParam::DeltaAntisym => {
                params.set_delta_c(0, value * wb);
                params.set_delta_c(1, -value * wb);
            }
        }
    }
}

impl fmt::Display for AxisParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AxisParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AxisParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::InvalidSweep(format!(
                    "unknown axis `{s}` (valid: {})",
                    AxisParam::ALL.map(|p| p.name()).join(", ")
                ))
            })
    }
}

/// One swept axis: `count` equally spaced values from `start` to `stop`,
/// both in omega_b multiples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub param: AxisParam,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(param: AxisParam, start: f64, stop: f64, count: usize) -> Self {
        Self {
            param,
            start,
            stop,
            count,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// A full sweep description: one or two axes, fixed-parameter overrides
/// applied before the axes, and the mode pairs to report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    pub overrides: Vec<(AxisParam, f64)>,
    pub pairs: Vec<ModePair>,
    /// Evaluate the stability margin only; skip covariance and negativities.
    pub stability_only: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::InvalidSweep(format!(
                "need 1 or 2 axes, got {}",
                self.axes.len()
            )));
        }
        for axis in &self.axes {
            if axis.count < 2 {
                return Err(Error::InvalidSweep(format!(
                    "axis {} needs at least 2 points, got {}",
                    axis.param, axis.count
                )));
            }
            if !(axis.start.is_finite() && axis.stop.is_finite()) || axis.start == axis.stop {
                return Err(Error::InvalidSweep(format!(
                    "axis {} needs distinct finite endpoints, got [{}, {}]",
                    axis.param, axis.start, axis.stop
                )));
            }
        }
        let mut touched: Vec<AxisParam> = Vec::new();
        for axis in &self.axes {
            for &t in axis.param.touches() {
                if touched.contains(&t) {
                    return Err(Error::InvalidSweep(format!(
                        "axes overlap on {t}: each parameter may be swept once"
                    )));
                }
                touched.push(t);
            }
        }
        for &(p, v) in &self.overrides {
            if !v.is_finite() {
                return Err(Error::InvalidSweep(format!("override {p} must be finite")));
            }
            for &t in p.touches() {
                if touched.contains(&t) {
                    return Err(Error::InvalidSweep(format!(
                        "override {p} collides with a swept axis"
                    )));
                }
            }
        }
        if self.pairs.is_empty() && !self.stability_only {
            return Err(Error::InvalidSweep("no mode pairs requested".into()));
        }
        Ok(())
    }

    /// Grid shape (rows, cols); cols = 1 for 1-D sweeps.
    pub fn shape(&self) -> (usize, usize) {
        let rows = self.axes[0].count;
        let cols = self.axes.get(1).map_or(1, |a| a.count);
        (rows, cols)
    }

    /// Replace every axis count (the CLI `--grid` override).
    pub fn with_counts(mut self, count: usize) -> Self {
        for axis in &mut self.axes {
            axis.count = count;
        }
        self
    }
}

/// Per-point outcome flag, CSV `flag` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFlag {
    Ok,
    Unstable,
    Unphysical,
    Error,
}

impl PointFlag {
    pub fn label(self) -> &'static str {
        match self {
            PointFlag::Ok => "ok",
            PointFlag::Unstable => "unstable",
            PointFlag::Unphysical => "unphysical",
            PointFlag::Error => "error",
        }
    }
}

impl From<PointStatus> for PointFlag {
    fn from(s: PointStatus) -> Self {
        match s {
            PointStatus::Ok => PointFlag::Ok,
            PointStatus::Unstable => PointFlag::Unstable,
            PointStatus::Unphysical => PointFlag::Unphysical,
        }
    }
}

/// One evaluated grid point. `negativities` aligns with the spec's pair list;
/// entries are `None` wherever the point did not produce a value.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub coords: Vec<f64>,
    pub flag: PointFlag,
    pub margin: Option<f64>,
    pub lyapunov_residual: Option<f64>,
    pub negativities: Vec<Option<f64>>,
    pub error: Option<String>,
}

/// A completed sweep: every grid point exactly once, row-major in the axes.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub points: Vec<SweepPoint>,
    pub elapsed: Duration,
}

impl SweepResult {
    pub fn count(&self, flag: PointFlag) -> usize {
        self.points.iter().filter(|p| p.flag == flag).count()
    }

    /// Value of one pair at one point, if the point produced it.
    pub fn negativity(&self, point: usize, pair: ModePair) -> Option<f64> {
        let col = self.spec.pairs.iter().position(|&p| p == pair)?;
        self.points[point].negativities.get(col).copied().flatten()
    }
}

fn point_params(base: &SystemParams, spec: &SweepSpec, coords: &[f64]) -> SystemParams {
    let mut p = base.clone();
    for &(param, value) in &spec.overrides {
        param.apply(&mut p, value);
    }
    for (axis, &value) in spec.axes.iter().zip(coords) {
        axis.param.apply(&mut p, value);
    }
    p
}

fn eval_one(
    base: &SystemParams,
    consts: &PhysicalConstants,
    spec: &SweepSpec,
    coords: Vec<f64>,
) -> SweepPoint {
    let params = point_params(base, spec, &coords);
    let evaluated: Result<SweepPoint> = (|| {
        let omega = resolve_omega(&params, consts)?;
        if spec.stability_only {
            let mean_field = crate::meanfield::solve_self_consistent(&params, omega)?;
            let drift = build_drift(&params, &mean_field);
            let margin = stability_margin(&drift)?;
            let flag = if margin < 0.0 {
                PointFlag::Ok
            } else {
                PointFlag::Unstable
            };
            return Ok(SweepPoint {
                coords: coords.clone(),
                flag,
                margin: Some(margin),
                lyapunov_residual: None,
                negativities: Vec::new(),
                error: None,
            });
        }
        let point = evaluate_point(&params, consts, omega)?;
        let negativities = spec
            .pairs
            .iter()
            .map(|pair| {
                point.negativities.as_ref().and_then(|all| {
                    all.iter().find(|(p, _)| p == pair).map(|&(_, e)| e)
                })
            })
            .collect();
        Ok(SweepPoint {
            coords: coords.clone(),
            flag: point.status.into(),
            margin: Some(point.margin),
            lyapunov_residual: point.lyapunov_residual,
            negativities,
            error: None,
        })
    })();
    evaluated.unwrap_or_else(|e| SweepPoint {
        coords,
        flag: PointFlag::Error,
        margin: None,
        lyapunov_residual: None,
        negativities: vec![None; spec.pairs.len()],
        error: Some(e.to_string()),
    })
}

/// Evaluate the grid. Rows are distributed over `workers` threads; the
/// result vector is assembled in grid order regardless of scheduling.
pub fn run_sweep(
    spec: &SweepSpec,
    base: &SystemParams,
    consts: &PhysicalConstants,
    workers: usize,
) -> Result<SweepResult> {
    spec.validate()?;
    validate(base, consts).into_result()?;
    let t0 = std::time::Instant::now();
    let rows_vals = spec.axes[0].values();
    let col_vals = spec.axes.get(1).map(|a| a.values());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let points: Vec<SweepPoint> = pool.install(|| {
        rows_vals
            .par_iter()
            .map(|&r| match &col_vals {
                Some(cols) => cols
                    .iter()
                    .map(|&c| eval_one(base, consts, spec, vec![r, c]))
                    .collect::<Vec<_>>(),
                None => vec![eval_one(base, consts, spec, vec![r])],
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    Ok(SweepResult {
        spec: spec.clone(),
        points,
        elapsed: t0.elapsed(),
    })
}

// ── CSV and metadata emission ───────────────────────────────────────────────

/// Missing-value sentinel: unstable or failed points must not print as zero,
/// because zero is a meaningful negativity.
pub const NA: &str = "NA";

fn fmt_value(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.12e}"),
        None => NA.to_string(),
    }
}

/// Write the sweep as CSV: axis columns (omega_b units), stability margin
/// (omega_b units), flag, then one column per requested pair.
pub fn write_csv<W: Write>(result: &SweepResult, base: &SystemParams, mut w: W) -> Result<()> {
    let spec = &result.spec;
    let mut header: Vec<String> = spec.axes.iter().map(|a| a.param.name().into()).collect();
    header.push("stability_margin".into());
    header.push("flag".into());
    for pair in &spec.pairs {
        header.push(pair.label());
    }
    writeln!(w, "{}", header.join(","))?;
    let wb = base.omega_b[0];
    for point in &result.points {
        let mut row: Vec<String> = point.coords.iter().map(|c| format!("{c:.8}")).collect();
        row.push(fmt_value(point.margin.map(|m| m / wb)));
        row.push(point.flag.label().into());
        for &e in &point.negativities {
            row.push(fmt_value(e));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Hex SHA-256 of a byte string (CSV fingerprint for the sidecar).
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Sidecar metadata: everything needed to reproduce and audit one sweep.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a> {
    pub version: &'static str,
    pub preset: Option<&'a str>,
    pub spec: &'a SweepSpec,
    pub grid: (usize, usize),
    pub counts: SidecarCounts,
    pub workers: usize,
    pub elapsed_seconds: f64,
    pub csv_sha256: String,
    /// The raw `--set` strings as given on the command line.
    pub set_overrides: &'a [String],
    /// Fully resolved base parameters in config (Hz) units.
    pub params: RawConfig,
}

#[derive(Debug, Serialize)]
pub struct SidecarCounts {
    pub ok: usize,
    pub unstable: usize,
    pub unphysical: usize,
    pub error: usize,
}

impl<'a> Sidecar<'a> {
    pub fn new(
        result: &'a SweepResult,
        base: &SystemParams,
        preset: Option<&'a str>,
        workers: usize,
        csv_bytes: &[u8],
        set_overrides: &'a [String],
    ) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            preset,
            spec: &result.spec,
            grid: result.spec.shape(),
            counts: SidecarCounts {
                ok: result.count(PointFlag::Ok),
                unstable: result.count(PointFlag::Unstable),
                unphysical: result.count(PointFlag::Unphysical),
                error: result.count(PointFlag::Error),
            },
            workers,
            elapsed_seconds: result.elapsed.as_secs_f64(),
            csv_sha256: sha256_hex(csv_bytes),
            set_overrides,
            params: RawConfig::from_params(base),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sidecar serialization cannot fail")
    }
}

// ── Figure presets ──────────────────────────────────────────────────────────

type Mode2 = (crate::entanglement::Mode, crate::entanglement::Mode);

fn pairs(list: &[Mode2]) -> Vec<ModePair> {
    list.iter().map(|&(a, b)| ModePair::new(a, b)).collect()
}

mod panel {
    use crate::entanglement::Mode::*;

    use super::Mode2;

    /// Cavity-cavity panel.
    pub const CC: &[Mode2] = &[(C1, C2)];
    /// Cross cavity-magnon panels (the pair the captions call equal).
    pub const CM: &[Mode2] = &[(C1, M2), (C2, M1)];
    /// Cross cavity-phonon panels.
    pub const CB: &[Mode2] = &[(C1, B2), (C2, B1)];
    /// Detuning line plots: every pair the caption tracks.
    pub const LINE: &[Mode2] = &[
        (C1, C2),
        (M1, B1),
        (M2, B2),
        (C1, M2),
        (C2, M1),
        (C1, B2),
        (C2, B1),
    ];
}

/// All preset names, in figure order.
pub const PRESET_NAMES: [&str; 31] = [
    "fig2a", "fig2b", "fig2c", "fig2d", "fig2e", "fig2f", "fig3a", "fig3b", "fig3c", "fig3d",
    "fig3e", "fig3f", "fig3g", "fig3h", "fig3i", "fig4a", "fig4b", "fig4c", "fig4d", "fig4e",
    "fig4f", "fig4g", "fig4h", "fig4i", "fig4j", "fig5a", "fig5b", "fig5c", "fig5d", "fig5e",
    "fig5f",
];

/// Default grid resolution: 2-D presets.
pub const DEFAULT_GRID_2D: usize = 201;
/// Default grid resolution: 1-D presets.
pub const DEFAULT_GRID_1D: usize = 801;

fn cavity_detuning_grid(pair_set: &[Mode2], hop_wb: f64) -> SweepSpec {
    SweepSpec {
        axes: vec![
            Axis::new(AxisParam::Delta1, -2.0, 2.0, DEFAULT_GRID_2D),
            Axis::new(AxisParam::Delta2, -2.0, 2.0, DEFAULT_GRID_2D),
        ],
        overrides: vec![
            (AxisParam::DeltaM1, 1.0),
            (AxisParam::DeltaM2, 1.0),
            (AxisParam::HopGamma, hop_wb),
        ],
        pairs: pairs(pair_set),
        stability_only: false,
    }
}

fn magnon_detuning_grid(pair_set: &[Mode2], opt: (f64, f64)) -> SweepSpec {
    SweepSpec {
        axes: vec![
            Axis::new(AxisParam::DeltaM1, 0.8, 1.1, DEFAULT_GRID_2D),
            Axis::new(AxisParam::DeltaM2, 0.8, 1.1, DEFAULT_GRID_2D),
        ],
        overrides: vec![
            (AxisParam::Delta1, opt.0),
            (AxisParam::Delta2, opt.1),
            (AxisParam::HopGamma, 1.0),
        ],
        pairs: pairs(pair_set),
        stability_only: false,
    }
}

/// Hopping-rate panels: Delta1 against the hopping rate from 0 to 10 cavity
/// linewidths. With the reference rates (kappa_c = omega_b/10) that upper
/// edge is exactly one omega_b, so the axis stays in omega_b units.
fn hopping_grid(pair_set: &[Mode2], delta2: f64, kappa_over_wb: f64) -> SweepSpec {
    SweepSpec {
        axes: vec![
            Axis::new(AxisParam::Delta1, -2.0, 2.0, DEFAULT_GRID_2D),
            Axis::new(AxisParam::HopGamma, 0.0, 10.0 * kappa_over_wb, DEFAULT_GRID_2D),
        ],
        overrides: vec![
            (AxisParam::DeltaM1, 1.0),
            (AxisParam::DeltaM2, 1.0),
            (AxisParam::Delta2, delta2),
        ],
        pairs: pairs(pair_set),
        stability_only: false,
    }
}

fn detuning_line(axis: AxisParam, hop_wb: f64) -> SweepSpec {
    SweepSpec {
        axes: vec![Axis::new(axis, -2.0, 2.0, DEFAULT_GRID_1D)],
        overrides: vec![
            (AxisParam::DeltaM1, 1.0),
            (AxisParam::DeltaM2, 1.0),
            (AxisParam::HopGamma, hop_wb),
        ],
        pairs: pairs(panel::LINE),
        stability_only: false,
    }
}

/// Coarse scan of the cavity-detuning plane; returns the argmax of the
/// given pair (first occurrence in row-major order on ties).
fn optimal_cavity_detunings(
    pair_set: &[Mode2],
    base: &SystemParams,
    consts: &PhysicalConstants,
) -> Result<(f64, f64)> {
    let coarse = SweepSpec {
        pairs: pairs(&pair_set[..1]),
        ..cavity_detuning_grid(pair_set, 1.0)
    }
    .with_counts(21);
    let probe_pair = coarse.pairs[0];
    let result = run_sweep(&coarse, base, consts, rayon::current_num_threads())?;
    let mut best = (f64::NEG_INFINITY, (0.0, 0.0));
    for (i, point) in result.points.iter().enumerate() {
        if let Some(e) = result.negativity(i, probe_pair) {
            if e > best.0 {
                best = (e, (point.coords[0], point.coords[1]));
            }
        }
    }
    if best.0.is_finite() {
        Ok(best.1)
    } else {
        Err(Error::InvalidSweep(
            "no stable point found while locating the optimal cavity detunings".into(),
        ))
    }
}

/// Build the sweep spec for a named figure panel.
///
/// The magnon-detuning panels (fig2d-f) place the cavity detunings at the
/// argmax of their pair over a coarse cavity-detuning scan, which is why the
/// base parameters are needed here.
pub fn preset(
    name: &str,
    base: &SystemParams,
    consts: &PhysicalConstants,
) -> Result<SweepSpec> {
    let kappa_over_wb = base.kappa_c[0] / base.omega_b[0];
    let spec = match name {
        // Cavity-detuning planes at the reference hopping rate.
        "fig2a" => cavity_detuning_grid(panel::CC, 1.0),
        "fig2b" => cavity_detuning_grid(panel::CM, 1.0),
        "fig2c" => cavity_detuning_grid(panel::CB, 1.0),
        // Magnon-detuning planes at the per-pair optimal cavity detunings.
        "fig2d" => magnon_detuning_grid(panel::CC, optimal_cavity_detunings(panel::CC, base, consts)?),
        "fig2e" => magnon_detuning_grid(panel::CM, optimal_cavity_detunings(panel::CM, base, consts)?),
        "fig2f" => magnon_detuning_grid(panel::CB, optimal_cavity_detunings(panel::CB, base, consts)?),
        // The cavity-detuning planes again at three hopping rates.
        "fig3a" => cavity_detuning_grid(panel::CC, 0.5),
        "fig3b" => cavity_detuning_grid(panel::CM, 0.5),
        "fig3c" => cavity_detuning_grid(panel::CB, 0.5),
        "fig3d" => cavity_detuning_grid(panel::CC, 0.8),
        "fig3e" => cavity_detuning_grid(panel::CM, 0.8),
        "fig3f" => cavity_detuning_grid(panel::CB, 0.8),
        "fig3g" => cavity_detuning_grid(panel::CC, 1.0),
        "fig3h" => cavity_detuning_grid(panel::CM, 1.0),
        "fig3i" => cavity_detuning_grid(panel::CB, 1.0),
        // Delta1 against hopping rate at fixed Delta2 = +/- omega_b, one
        // cross pair per panel.
        "fig4a" => hopping_grid(panel::CC, 1.0, kappa_over_wb),
        "fig4b" => hopping_grid(&panel::CM[..1], 1.0, kappa_over_wb),
        "fig4c" => hopping_grid(&panel::CM[1..], 1.0, kappa_over_wb),
        "fig4d" => hopping_grid(&panel::CB[..1], 1.0, kappa_over_wb),
        "fig4e" => hopping_grid(&panel::CB[1..], 1.0, kappa_over_wb),
        "fig4f" => hopping_grid(panel::CC, -1.0, kappa_over_wb),
        "fig4g" => hopping_grid(&panel::CM[..1], -1.0, kappa_over_wb),
        "fig4h" => hopping_grid(&panel::CM[1..], -1.0, kappa_over_wb),
        "fig4i" => hopping_grid(&panel::CB[..1], -1.0, kappa_over_wb),
        "fig4j" => hopping_grid(&panel::CB[1..], -1.0, kappa_over_wb),
        // Detuning lines, common then opposed, at three hopping rates.
        "fig5a" => detuning_line(AxisParam::DeltaSym, 0.5),
        "fig5b" => detuning_line(AxisParam::DeltaSym, 0.8),
        "fig5c" => detuning_line(AxisParam::DeltaSym, 1.0),
        "fig5d" => detuning_line(AxisParam::DeltaAntisym, 0.5),
        "fig5e" => detuning_line(AxisParam::DeltaAntisym, 0.8),
        "fig5f" => detuning_line(AxisParam::DeltaAntisym, 1.0),
        other => {
            return Err(Error::UnknownPreset {
                name: other.to_string(),
                valid: PRESET_NAMES.join(", "),
            })
        }
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::Mode;
    use crate::params::TWO_PI;

    fn small_params() -> SystemParams {
        let mut p = SystemParams::table1();
        p.g_eff_target = Some(TWO_PI * 4.8e6);
        p
    }

    fn tiny_spec() -> SweepSpec {
        SweepSpec {
            axes: vec![
                Axis::new(AxisParam::Delta1, -1.0, 1.0, 3),
                Axis::new(AxisParam::Delta2, -1.0, 1.0, 3),
            ],
            overrides: vec![(AxisParam::DeltaM1, 1.0), (AxisParam::DeltaM2, 1.0)],
            pairs: vec![ModePair::new(Mode::C1, Mode::C2)],
            stability_only: false,
        }
    }

    #[test]
    fn axis_values_hit_endpoints_exactly() {
        let axis = Axis::new(AxisParam::Delta1, -2.0, 2.0, 5);
        assert_eq!(axis.values(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn axis_names_roundtrip() {
        for p in AxisParam::ALL {
            assert_eq!(p.name().parse::<AxisParam>().unwrap(), p);
        }
        assert!("Delta3".parse::<AxisParam>().is_err());
    }

    #[test]
    fn sym_and_antisym_axes_write_both_detunings() {
        let mut p = SystemParams::table1();
        AxisParam::DeltaSym.apply(&mut p, 0.7);
        assert_eq!(p.delta_c(0), p.delta_c(1));
        assert!((p.delta_c(0) / p.omega_b[0] - 0.7).abs() < 1e-12);
        AxisParam::DeltaAntisym.apply(&mut p, 0.4);
        assert!((p.delta_c(0) + p.delta_c(1)).abs() < 1e-9);
        assert!((p.delta_c(0) / p.omega_b[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn spec_validation_rejects_malformed_axes() {
        let mut s = tiny_spec();
        s.axes[0].count = 1;
        assert!(s.validate().is_err());
        let mut s = tiny_spec();
        s.axes[0].stop = s.axes[0].start;
        assert!(s.validate().is_err());
        let mut s = tiny_spec();
        s.axes.push(Axis::new(AxisParam::HopGamma, 0.0, 1.0, 3));
        assert!(s.validate().is_err(), "three axes must be rejected");
        let mut s = tiny_spec();
        s.axes[1] = Axis::new(AxisParam::DeltaSym, -1.0, 1.0, 3);
        assert!(s.validate().is_err(), "Delta_sym collides with Delta1");
        let mut s = tiny_spec();
        s.overrides.push((AxisParam::Delta1, 0.5));
        assert!(s.validate().is_err(), "override collides with axis");
        let mut s = tiny_spec();
        s.pairs.clear();
        assert!(s.validate().is_err());
        s.stability_only = true;
        assert!(s.validate().is_ok(), "stability sweeps need no pairs");
    }

    #[test]
    fn every_grid_point_present_exactly_once_in_order() {
        let spec = tiny_spec();
        let result = run_sweep(
            &spec,
            &small_params(),
            &PhysicalConstants::default(),
            2,
        )
        .unwrap();
        assert_eq!(result.points.len(), 9);
        let mut expect = Vec::new();
        for r in [-1.0, 0.0, 1.0] {
            for c in [-1.0, 0.0, 1.0] {
                expect.push(vec![r, c]);
            }
        }
        let got: Vec<Vec<f64>> = result.points.iter().map(|p| p.coords.clone()).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn worker_count_does_not_change_the_csv() {
        let spec = tiny_spec();
        let base = small_params();
        let consts = PhysicalConstants::default();
        let mut csv1 = Vec::new();
        let mut csv4 = Vec::new();
        write_csv(&run_sweep(&spec, &base, &consts, 1).unwrap(), &base, &mut csv1).unwrap();
        write_csv(&run_sweep(&spec, &base, &consts, 4).unwrap(), &base, &mut csv4).unwrap();
        assert!(!csv1.is_empty());
        assert_eq!(csv1, csv4);
    }

    #[test]
    fn csv_layout_matches_schema() {
        let spec = tiny_spec();
        let base = small_params();
        let result = run_sweep(&spec, &base, &PhysicalConstants::default(), 2).unwrap();
        let mut buf = Vec::new();
        write_csv(&result, &base, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "Delta1,Delta2,stability_margin,flag,c1-c2"
        );
        let body: Vec<&str> = lines.collect();
        assert_eq!(body.len(), 9);
        for line in &body {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 5);
            assert!(fields[3] == "ok" || fields[3] == "unstable" || fields[3] == "error");
            if fields[3] == "ok" {
                assert!(fields[4].parse::<f64>().unwrap() >= 0.0);
                assert!(fields[2].parse::<f64>().unwrap() < 0.0);
            } else {
                assert_eq!(fields[4], NA);
            }
        }
    }

    #[test]
    fn unstable_points_are_flagged_not_dropped() {
        // The printed-sign hopping convention is gain-like and unstable at
        // the reference hopping rate, so every point lands in the unstable
        // branch: present, flagged, with NA negativities.
        let mut base = small_params();
        base.hopping_convention = crate::params::HoppingConvention::AsPrinted;
        base.g_eff_target = None;
        let spec = tiny_spec();
        let result = run_sweep(&spec, &base, &PhysicalConstants::default(), 2).unwrap();
        assert_eq!(result.points.len(), 9);
        assert!(result.count(PointFlag::Unstable) > 0);
        for p in &result.points {
            if p.flag == PointFlag::Unstable {
                assert!(p.margin.unwrap() >= 0.0);
                assert!(p.negativities.iter().all(|e| e.is_none()));
            }
        }
        let mut buf = Vec::new();
        write_csv(&result, &base, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains(",unstable,NA"));
    }

    #[test]
    fn grid_point_evaluation_is_pure_across_sweeps() {
        // Two sweeps sharing the point Delta1 = Delta2 = 0 must agree there.
        let base = small_params();
        let consts = PhysicalConstants::default();
        let shared = |axis0: (f64, f64)| SweepSpec {
            axes: vec![
                Axis::new(AxisParam::Delta1, axis0.0, axis0.1, 2),
                Axis::new(AxisParam::Delta2, 0.0, 1.0, 2),
            ],
            overrides: vec![(AxisParam::DeltaM1, 1.0), (AxisParam::DeltaM2, 1.0)],
            pairs: vec![ModePair::new(Mode::C1, Mode::C2)],
            stability_only: false,
        };
        let a = run_sweep(&shared((0.0, 1.0)), &base, &consts, 1).unwrap();
        let b = run_sweep(&shared((-1.0, 0.0)), &base, &consts, 1).unwrap();
        // Point (0, 0) is index 0 in sweep a and index 2 in sweep b.
        assert_eq!(a.points[0].coords, vec![0.0, 0.0]);
        assert_eq!(b.points[2].coords, vec![0.0, 0.0]);
        assert_eq!(a.points[0].margin, b.points[2].margin);
        assert_eq!(a.points[0].negativities, b.points[2].negativities);
    }

    #[test]
    fn stability_only_skips_negativities() {
        let mut spec = tiny_spec();
        spec.stability_only = true;
        spec.pairs.clear();
        let base = small_params();
        let result = run_sweep(&spec, &base, &PhysicalConstants::default(), 1).unwrap();
        assert_eq!(result.points.len(), 9);
        for p in &result.points {
            assert!(p.negativities.is_empty());
            assert!(p.margin.unwrap().is_finite());
        }
        let mut buf = Vec::new();
        write_csv(&result, &base, &mut buf).unwrap();
        let header = String::from_utf8(buf).unwrap();
        assert!(header.starts_with("Delta1,Delta2,stability_margin,flag\n"));
    }

    #[test]
    fn decoupled_cavities_have_zero_cross_negativity_on_a_grid() {
        // hop_Gamma = 0 splits the chains; every cross-cavity pair must be
        // exactly zero across the whole grid.
        let base = small_params();
        let spec = SweepSpec {
            axes: vec![
                Axis::new(AxisParam::Delta1, -1.0, 1.0, 3),
                Axis::new(AxisParam::Delta2, -1.0, 1.0, 3),
            ],
            overrides: vec![(AxisParam::HopGamma, 0.0)],
            pairs: pairs(&[
                (Mode::C1, Mode::C2),
                (Mode::C1, Mode::M2),
                (Mode::C1, Mode::B2),
                (Mode::C2, Mode::M1),
                (Mode::M1, Mode::M2),
                (Mode::B1, Mode::B2),
            ]),
            stability_only: false,
        };
        let result = run_sweep(&spec, &base, &PhysicalConstants::default(), 2).unwrap();
        for p in &result.points {
            assert_eq!(p.flag, PointFlag::Ok);
            for e in &p.negativities {
                assert_eq!(e.unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn preset_catalog_is_complete_and_unknown_names_error() {
        let base = SystemParams::table1();
        let consts = PhysicalConstants::default();
        for name in PRESET_NAMES {
            if name.starts_with("fig2d") || name.starts_with("fig2e") || name.starts_with("fig2f")
            {
                continue; // exercised separately: these run a coarse scan
            }
            let spec = preset(name, &base, &consts).unwrap();
            spec.validate().unwrap();
        }
        let err = preset("fig9z", &base, &consts).unwrap_err();
        assert!(err.to_string().contains("fig2a"));
    }

    #[test]
    fn preset_axes_match_figure_protocols() {
        let base = SystemParams::table1();
        let consts = PhysicalConstants::default();
        let fig2a = preset("fig2a", &base, &consts).unwrap();
        assert_eq!(fig2a.axes.len(), 2);
        assert_eq!(fig2a.axes[0].param, AxisParam::Delta1);
        assert_eq!(fig2a.axes[1].param, AxisParam::Delta2);
        assert_eq!((fig2a.axes[0].start, fig2a.axes[0].stop), (-2.0, 2.0));
        assert_eq!(fig2a.axes[0].count, DEFAULT_GRID_2D);
        assert_eq!(fig2a.pairs, pairs(panel::CC));
        assert!(fig2a
            .overrides
            .contains(&(AxisParam::HopGamma, 1.0)));

        let fig3e = preset("fig3e", &base, &consts).unwrap();
        assert!(fig3e.overrides.contains(&(AxisParam::HopGamma, 0.8)));
        assert_eq!(fig3e.pairs, pairs(panel::CM));

        let fig5a = preset("fig5a", &base, &consts).unwrap();
        assert_eq!(fig5a.axes.len(), 1);
        assert_eq!(fig5a.axes[0].param, AxisParam::DeltaSym);
        assert_eq!(fig5a.axes[0].count, DEFAULT_GRID_1D);
        assert!(fig5a.overrides.contains(&(AxisParam::HopGamma, 0.5)));
        assert_eq!(fig5a.pairs.len(), 7);
        assert!(fig5a.pairs.contains(&ModePair::new(Mode::M1, Mode::B1)));
        assert!(fig5a.pairs.contains(&ModePair::new(Mode::M2, Mode::B2)));

        let fig5f = preset("fig5f", &base, &consts).unwrap();
        assert_eq!(fig5f.axes[0].param, AxisParam::DeltaAntisym);
        assert!(fig5f.overrides.contains(&(AxisParam::HopGamma, 1.0)));

        // Hopping-rate panels: 10 cavity linewidths = one omega_b here.
        let fig4f = preset("fig4f", &base, &consts).unwrap();
        assert_eq!(fig4f.axes[1].param, AxisParam::HopGamma);
        assert_eq!(fig4f.axes[1].start, 0.0);
        // Upper edge is ten cavity linewidths, one omega_b up to rounding.
        assert!((fig4f.axes[1].stop - 1.0).abs() < 1e-12);
        assert!(fig4f.overrides.contains(&(AxisParam::Delta2, -1.0)));
        assert_eq!(fig4f.pairs, pairs(panel::CC));
    }

    #[test]
    fn magnon_detuning_preset_sits_at_the_coarse_argmax() {
        let mut base = SystemParams::table1();
        base.g_eff_target = Some(TWO_PI * 4.8e6);
        let consts = PhysicalConstants::default();
        let spec = preset("fig2d", &base, &consts).unwrap();
        assert_eq!(spec.axes[0].param, AxisParam::DeltaM1);
        assert_eq!(spec.axes[1].param, AxisParam::DeltaM2);
        assert_eq!((spec.axes[0].start, spec.axes[0].stop), (0.8, 1.1));
        // The optimum must be a grid point of the 21-point coarse scan, i.e.
        // a multiple of 0.2 in omega_b units inside [-2, 2].
        let d1 = spec
            .overrides
            .iter()
            .find(|(p, _)| *p == AxisParam::Delta1)
            .unwrap()
            .1;
        let d2 = spec
            .overrides
            .iter()
            .find(|(p, _)| *p == AxisParam::Delta2)
            .unwrap()
            .1;
        for v in [d1, d2] {
            assert!((-2.0..=2.0).contains(&v));
            let steps = (v + 2.0) / 0.2;
            assert!((steps - steps.round()).abs() < 1e-9, "off-grid optimum {v}");
        }
    }

    #[test]
    fn sidecar_captures_counts_hash_and_params() {
        let spec = tiny_spec();
        let base = small_params();
        let result = run_sweep(&spec, &base, &PhysicalConstants::default(), 2).unwrap();
        let mut csv = Vec::new();
        write_csv(&result, &base, &mut csv).unwrap();
        let sets = vec!["Delta_m1=1".to_string()];
        let sidecar = Sidecar::new(&result, &base, Some("tiny"), 2, &csv, &sets);
        let json = sidecar.to_json();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["grid"][0], 3);
        assert_eq!(parsed["counts"]["ok"], 9);
        assert_eq!(parsed["csv_sha256"], sha256_hex(&csv));
        assert_eq!(parsed["preset"], "tiny");
        assert_eq!(parsed["set_overrides"][0], "Delta_m1=1");
        assert!(parsed["params"]["drive"]["g_eff_target"].as_f64().unwrap() > 0.0);
        // Hash actually fingerprints the content.
        let mut other = csv.clone();
        other.push(b'x');
        assert_ne!(sha256_hex(&csv), sha256_hex(&other));
    }
}
