//! Physical parameters, unit conversion, and derived drive quantities.
//!
//! Config files carry ordinary frequencies in Hz (the way experimental tables
//! quote them); everything internal is angular (rad/s). The conversion happens
//! exactly once, at the config boundary.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Fundamental constants (CODATA 2018 values).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Speed of light, m/s.
    pub c_light: f64,
    /// Vacuum permeability, T²·m³/J.
    pub mu0: f64,
    /// Gyromagnetic ratio of the YIG Kittel mode, rad/(s·T).
    pub gamma0: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.054_571_817e-34,
            k_b: 1.380_649e-23,
            c_light: 2.997_924_58e8,
            mu0: 1.256_637_062_12e-6,
            gamma0: TWO_PI * 28.0e9,
        }
    }
}

/// Sign convention for the photon-hopping term in the equations of motion.
///
/// The beam-splitter Hamiltonian Γ(c1 c2† + c1† c2) produces a −iΓ c_j term in
/// the Langevin equation for c_k. `AsPrinted` instead uses a bare +Γ c_j, kept
/// runnable so the two conventions can be compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoppingConvention {
    #[default]
    Hamiltonian,
    AsPrinted,
}

/// Full physical parameter set. All rates and frequencies are angular (rad/s);
/// field in T, lengths in m, temperature in K. Index 0 is subsystem 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub omega_c: [f64; 2],
    pub omega_m: [f64; 2],
    pub omega_b: [f64; 2],
    pub omega_drive: [f64; 2],
    pub kappa_c: [f64; 2],
    pub kappa_m: [f64; 2],
    pub gamma_b: [f64; 2],
    pub g_cm: [f64; 2],
    pub g_mb: [f64; 2],
    /// Photon hopping rate between the two cavities, rad/s.
    pub hop_gamma: f64,
    /// Drive magnetic field amplitude, T.
    pub b0: f64,
    pub sphere_diameter: f64,
    pub rho_spin: f64,
    pub temperature: f64,
    pub hopping_convention: HoppingConvention,
    /// Direct Rabi-rate override (rad/s); bypasses the field-derived value.
    pub omega_rabi_override: [Option<f64>; 2],
    /// Calibrate the drive so |G_eff| of subsystem 1 reaches this value (rad/s).
    pub g_eff_target: Option<f64>,
}

/// The bundled reference config: the experimental table plus the per-point
/// drive calibration used by the figure presets.
pub const TABLE1_TOML: &str = include_str!("../table1.toml");

impl SystemParams {
    /// Reference experimental parameter set, uncalibrated: the drive follows
    /// from the field amplitude. The bundled `table1.toml` layers the
    /// |G_eff| calibration target on top of these numbers.
    pub fn table1() -> Self {
        let omega_c = TWO_PI * 10.0e9;
        let omega_b = TWO_PI * 10.0e6;
        // Drive red of the cavity by one phonon frequency: Delta_c = +omega_b,
        // and the magnon tuned so Delta_m0 = +omega_b as well.
        let omega_drive = omega_c - omega_b;
        Self {
            omega_c: [omega_c; 2],
            omega_m: [omega_drive + omega_b; 2],
            omega_b: [omega_b; 2],
            omega_drive: [omega_drive; 2],
            kappa_c: [TWO_PI * 1.0e6; 2],
            kappa_m: [TWO_PI * 1.0e6; 2],
            gamma_b: [TWO_PI * 100.0; 2],
            g_cm: [TWO_PI * 3.2e6; 2],
            g_mb: [TWO_PI * 0.3; 2],
            hop_gamma: omega_b,
            b0: 3.9e-5,
            sphere_diameter: 250.0e-6,
            rho_spin: 4.22e27,
            temperature: 0.010,
            hopping_convention: HoppingConvention::Hamiltonian,
            omega_rabi_override: [None; 2],
            g_eff_target: None,
        }
    }

    /// Cavity detuning Delta_k = omega_c[k] - omega_drive[k].
    pub fn delta_c(&self, k: usize) -> f64 {
        self.omega_c[k] - self.omega_drive[k]
    }

    /// Bare magnon detuning Delta_m0[k] = omega_m[k] - omega_drive[k].
    pub fn delta_m0(&self, k: usize) -> f64 {
        self.omega_m[k] - self.omega_drive[k]
    }

    /// Set the cavity detuning by moving the cavity frequency, keeping the
    /// drive fixed.
    pub fn set_delta_c(&mut self, k: usize, delta: f64) {
        self.omega_c[k] = self.omega_drive[k] + delta;
    }

    /// Set the bare magnon detuning by moving the magnon frequency (bias
    /// field), keeping the drive fixed.
    pub fn set_delta_m0(&mut self, k: usize, delta: f64) {
        self.omega_m[k] = self.omega_drive[k] + delta;
    }

    /// Sphere volume, m³.
    pub fn sphere_volume(&self) -> f64 {
        let r = self.sphere_diameter / 2.0;
        4.0 / 3.0 * PI * r.powi(3)
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::table1()
    }
}

/// Quantities derived from the drive field and sphere geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedDrive {
    /// Total number of spins in the sphere.
    pub n_spin: f64,
    /// Rabi rate of the magnon drive, rad/s.
    pub omega_rabi: [f64; 2],
    /// Drive power through the sphere cross-section, W.
    pub drive_power: f64,
}

/// Reference drive power quoted alongside the experimental parameter set, W.
/// The printed power formula has an ambiguous permeability symbol, so the
/// evaluated power is reported against this value, never asserted equal.
pub const REFERENCE_DRIVE_POWER_W: f64 = 9.8e-3;

/// Outcome of parameter validation. Collects every violation instead of
/// stopping at the first; `notes` carries informational diagnostics.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(self.violations.join("\n")))
        }
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Check every invariant of the parameter set; never aborts early.
pub fn validate(params: &SystemParams, consts: &PhysicalConstants) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut violation = |msg: String| report.violations.push(msg);

    let pairs: [(&str, &[f64; 2]); 9] = [
        ("cavity frequency omega_c", &params.omega_c),
        ("magnon frequency omega_m", &params.omega_m),
        ("phonon frequency omega_b", &params.omega_b),
        ("drive frequency omega_drive", &params.omega_drive),
        ("cavity decay kappa_c", &params.kappa_c),
        ("magnon decay kappa_m", &params.kappa_m),
        ("mechanical damping gamma_b", &params.gamma_b),
        ("cavity-magnon coupling g_cm", &params.g_cm),
        ("magnomechanical coupling g_mb", &params.g_mb),
    ];
    for (name, values) in pairs {
        for (k, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                violation(format!("{name}[{}] must be finite, got {v}", k + 1));
            } else if v < 0.0 {
                violation(format!("{name}[{}] must be nonnegative, got {v}", k + 1));
            }
        }
    }
    for (k, &wb) in params.omega_b.iter().enumerate() {
        if wb <= 0.0 {
            violation(format!("phonon frequency must be positive (omega_b[{}] = {wb})", k + 1));
        }
    }
    if !params.hop_gamma.is_finite() || params.hop_gamma < 0.0 {
        violation(format!("hopping rate must be nonnegative, got {}", params.hop_gamma));
    }
    if !params.temperature.is_finite() || params.temperature < 0.0 {
        violation(format!("temperature must be nonnegative, got {} K", params.temperature));
    }
    if !params.b0.is_finite() || params.b0 < 0.0 {
        violation(format!("drive field amplitude must be nonnegative, got {} T", params.b0));
    }
    if !(params.sphere_diameter > 0.0) {
        violation(format!("sphere diameter must be positive, got {} m", params.sphere_diameter));
    }
    if !(params.rho_spin > 0.0) {
        violation(format!("spin density must be positive, got {} m^-3", params.rho_spin));
    }
    for k in 0..2 {
        if let Some(omega) = params.omega_rabi_override[k] {
            if !omega.is_finite() || omega < 0.0 {
                violation(format!("Rabi override [{}] must be nonnegative, got {omega}", k + 1));
            }
        }
    }
    if let Some(target) = params.g_eff_target {
        if !(target > 0.0) {
            violation(format!("g_eff target must be positive, got {target}"));
        }
    }

    if report.is_ok() {
        let drive = derive_drive(params, consts);
        report.notes.push(format!(
            "derived N_spin = {:.6e}, Omega_rabi/2pi = {:.6e} Hz",
            drive.n_spin,
            drive.omega_rabi[0] / TWO_PI
        ));
        report.notes.push(format!(
            "drive power from field amplitude = {:.4e} W ({:.4}x the {:.1} mW reference)",
            drive.drive_power,
            drive.drive_power / REFERENCE_DRIVE_POWER_W,
            REFERENCE_DRIVE_POWER_W * 1e3
        ));
    }
    report
}

/// Spin count, Rabi rate, and drive power from field amplitude and geometry.
///
/// The Rabi rate here is always the field-derived formula value; runtime
/// overrides are applied where the drive is resolved, not here.
pub fn derive_drive(params: &SystemParams, consts: &PhysicalConstants) -> DerivedDrive {
    let n_spin = params.rho_spin * params.sphere_volume();
    let omega = 5.0_f64.sqrt() / 4.0 * consts.gamma0 * n_spin.sqrt() * params.b0;
    let r = params.sphere_diameter / 2.0;
    let drive_power = params.b0.powi(2) * PI * r * r * consts.c_light / (2.0 * consts.mu0);
    DerivedDrive {
        n_spin,
        omega_rabi: [omega; 2],
        drive_power,
    }
}

/// Bose occupation of a mode at angular frequency `omega` and temperature `t`.
/// Returns exactly 0 at t = 0.
pub fn thermal_occupation(omega: f64, t: f64, consts: &PhysicalConstants) -> Result<f64> {
    if omega <= 0.0 {
        return Err(Error::NonPositiveFrequency { omega });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let x = consts.hbar * omega / (consts.k_b * t);
    Ok((x.exp_m1()).recip())
}

// ── Config file handling ────────────────────────────────────────────────────
//
// Sections: [cavity1], [cavity2], [drive], [bath]. Frequency-like keys are
// ordinary frequencies in Hz. [cavity2] defaults to a copy of [cavity1].

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCavity {
    /// Cavity resonance, Hz.
    #[serde(default = "default_omega_c")]
    omega_c: f64,
    /// Magnon resonance, Hz. Defaults to drive + omega_b.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega_m: Option<f64>,
    /// Phonon resonance, Hz.
    #[serde(default = "default_omega_b")]
    omega_b: f64,
    /// Cavity amplitude decay rate, Hz.
    #[serde(default = "default_kappa")]
    kappa_c: f64,
    /// Magnon decay rate, Hz.
    #[serde(default = "default_kappa")]
    kappa_m: f64,
    /// Mechanical damping rate, Hz.
    #[serde(default = "default_gamma_b")]
    gamma_b: f64,
    /// Cavity-magnon coupling, Hz.
    #[serde(default = "default_g_cm")]
    g_cm: f64,
    /// Bare magnomechanical coupling, Hz.
    #[serde(default = "default_g_mb")]
    g_mb: f64,
}

fn default_omega_c() -> f64 {
    10.0e9
}
fn default_omega_b() -> f64 {
    10.0e6
}
fn default_kappa() -> f64 {
    1.0e6
}
fn default_gamma_b() -> f64 {
    100.0
}
fn default_g_cm() -> f64 {
    3.2e6
}
fn default_g_mb() -> f64 {
    0.3
}

impl Default for RawCavity {
    fn default() -> Self {
        Self {
            omega_c: default_omega_c(),
            omega_m: None,
            omega_b: default_omega_b(),
            kappa_c: default_kappa(),
            kappa_m: default_kappa(),
            gamma_b: default_gamma_b(),
            g_cm: default_g_cm(),
            g_mb: default_g_mb(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    /// Drive frequency on magnon 1, Hz. Defaults to cavity1 omega_c - omega_b.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega_1: Option<f64>,
    /// Drive frequency on magnon 2, Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega_2: Option<f64>,
    /// Drive magnetic field amplitude, T.
    #[serde(default = "default_b0")]
    b0: f64,
    /// YIG sphere diameter, m.
    #[serde(default = "default_diameter")]
    sphere_diameter: f64,
    /// Spin density, m^-3.
    #[serde(default = "default_rho_spin")]
    rho_spin: f64,
    /// Optional direct Rabi-rate overrides, Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega_rabi_1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega_rabi_2: Option<f64>,
    /// Optional drive calibration target for |G_eff|, Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g_eff_target: Option<f64>,
}

fn default_b0() -> f64 {
    3.9e-5
}
fn default_diameter() -> f64 {
    250.0e-6
}
fn default_rho_spin() -> f64 {
    4.22e27
}

impl Default for RawDrive {
    fn default() -> Self {
        Self {
            omega_1: None,
            omega_2: None,
            b0: default_b0(),
            sphere_diameter: default_diameter(),
            rho_spin: default_rho_spin(),
            omega_rabi_1: None,
            omega_rabi_2: None,
            g_eff_target: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBath {
    /// Bath temperature, K.
    #[serde(default = "default_temperature")]
    temperature: f64,
}

fn default_temperature() -> f64 {
    0.010
}

impl Default for RawBath {
    fn default() -> Self {
        Self {
            temperature: default_temperature(),
        }
    }
}

/// On-disk config schema (Hz units).
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    /// Photon hopping rate between the cavities, Hz.
    #[serde(default = "default_hop_gamma")]
    hop_gamma: f64,
    #[serde(default)]
    hopping_convention: HoppingConvention,
    #[serde(default)]
    cavity1: RawCavity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cavity2: Option<RawCavity>,
    #[serde(default)]
    drive: RawDrive,
    #[serde(default)]
    bath: RawBath,
}

fn default_hop_gamma() -> f64 {
    10.0e6
}

impl RawConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Convert to angular-frequency parameters.
    pub fn to_params(&self) -> SystemParams {
        let c1 = &self.cavity1;
        let c2 = self.cavity2.clone().unwrap_or_else(|| c1.clone());
        let drive_1 = self.drive.omega_1.unwrap_or(c1.omega_c - c1.omega_b);
        let drive_2 = self.drive.omega_2.unwrap_or(c2.omega_c - c2.omega_b);
        let omega_m_1 = c1.omega_m.unwrap_or(drive_1 + c1.omega_b);
        let omega_m_2 = c2.omega_m.unwrap_or(drive_2 + c2.omega_b);
        SystemParams {
            omega_c: [TWO_PI * c1.omega_c, TWO_PI * c2.omega_c],
            omega_m: [TWO_PI * omega_m_1, TWO_PI * omega_m_2],
            omega_b: [TWO_PI * c1.omega_b, TWO_PI * c2.omega_b],
            omega_drive: [TWO_PI * drive_1, TWO_PI * drive_2],
            kappa_c: [TWO_PI * c1.kappa_c, TWO_PI * c2.kappa_c],
            kappa_m: [TWO_PI * c1.kappa_m, TWO_PI * c2.kappa_m],
            gamma_b: [TWO_PI * c1.gamma_b, TWO_PI * c2.gamma_b],
            g_cm: [TWO_PI * c1.g_cm, TWO_PI * c2.g_cm],
            g_mb: [TWO_PI * c1.g_mb, TWO_PI * c2.g_mb],
            hop_gamma: TWO_PI * self.hop_gamma,
            b0: self.drive.b0,
            sphere_diameter: self.drive.sphere_diameter,
            rho_spin: self.drive.rho_spin,
            temperature: self.bath.temperature,
            hopping_convention: self.hopping_convention,
            omega_rabi_override: [
                self.drive.omega_rabi_1.map(|v| TWO_PI * v),
                self.drive.omega_rabi_2.map(|v| TWO_PI * v),
            ],
            g_eff_target: self.drive.g_eff_target.map(|v| TWO_PI * v),
        }
    }

    /// Rebuild the Hz-unit view of a parameter set (used for the metadata
    /// sidecar and round-trip checks).
    pub fn from_params(p: &SystemParams) -> Self {
        let cavity = |k: usize| RawCavity {
            omega_c: p.omega_c[k] / TWO_PI,
            omega_m: Some(p.omega_m[k] / TWO_PI),
            omega_b: p.omega_b[k] / TWO_PI,
            kappa_c: p.kappa_c[k] / TWO_PI,
            kappa_m: p.kappa_m[k] / TWO_PI,
            gamma_b: p.gamma_b[k] / TWO_PI,
            g_cm: p.g_cm[k] / TWO_PI,
            g_mb: p.g_mb[k] / TWO_PI,
        };
        Self {
            hop_gamma: p.hop_gamma / TWO_PI,
            hopping_convention: p.hopping_convention,
            cavity1: cavity(0),
            cavity2: Some(cavity(1)),
            drive: RawDrive {
                omega_1: Some(p.omega_drive[0] / TWO_PI),
                omega_2: Some(p.omega_drive[1] / TWO_PI),
                b0: p.b0,
                sphere_diameter: p.sphere_diameter,
                rho_spin: p.rho_spin,
                omega_rabi_1: p.omega_rabi_override[0].map(|v| v / TWO_PI),
                omega_rabi_2: p.omega_rabi_override[1].map(|v| v / TWO_PI),
                g_eff_target: p.g_eff_target.map(|v| v / TWO_PI),
            },
            bath: RawBath {
                temperature: p.temperature,
            },
        }
    }
}

/// Load parameters from a TOML config file.
pub fn load_config(path: &std::path::Path) -> Result<SystemParams> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(RawConfig::from_toml_str(&text)?.to_params())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn table1_defaults_validate_clean() {
        let p = SystemParams::table1();
        let report = validate(&p, &PhysicalConstants::default());
        assert!(report.is_ok(), "unexpected violations: {report}");
        assert_eq!(report.notes.len(), 2);
    }

    #[test]
    fn zero_phonon_frequency_is_violation() {
        let mut p = SystemParams::table1();
        p.omega_b[0] = 0.0;
        let report = validate(&p, &PhysicalConstants::default());
        assert!(report
            .violations
            .iter()
            .any(|v| v.contains("phonon frequency must be positive")));
    }

    #[test]
    fn negative_temperature_is_violation() {
        let mut p = SystemParams::table1();
        p.temperature = -1.0;
        let report = validate(&p, &PhysicalConstants::default());
        assert!(report
            .violations
            .iter()
            .any(|v| v.contains("temperature must be nonnegative")));
    }

    #[test]
    fn violations_are_collected_not_short_circuited() {
        let mut p = SystemParams::table1();
        p.omega_b[1] = 0.0;
        p.temperature = -0.5;
        p.kappa_c[0] = -1.0;
        let report = validate(&p, &PhysicalConstants::default());
        assert!(report.violations.len() >= 3, "{report}");
    }

    #[test]
    fn spin_count_matches_direct_evaluation() {
        let p = SystemParams::table1();
        let drive = derive_drive(&p, &PhysicalConstants::default());
        // (4/3) pi (125 um)^3 * 4.22e27 evaluated independently
        assert_relative_eq!(drive.n_spin, 3.452_479_426_6e16, max_relative = 1e-9);
    }

    #[test]
    fn zero_field_gives_zero_drive() {
        let mut p = SystemParams::table1();
        p.b0 = 0.0;
        let drive = derive_drive(&p, &PhysicalConstants::default());
        assert_eq!(drive.omega_rabi, [0.0; 2]);
        assert_eq!(drive.drive_power, 0.0);
    }

    #[test]
    fn drive_power_reported_against_reference_not_asserted() {
        let p = SystemParams::table1();
        let consts = PhysicalConstants::default();
        let drive = derive_drive(&p, &consts);
        // Independent evaluation of B^2 pi r^2 c / (2 mu0).
        let r = 125.0e-6;
        let expected = 3.9e-5_f64.powi(2) * PI * r * r * consts.c_light / (2.0 * consts.mu0);
        assert_relative_eq!(drive.drive_power, expected, max_relative = 1e-12);
        // Close to, but not equal to, the quoted 9.8 mW; the ratio lands in
        // the validation notes.
        let report = validate(&p, &consts);
        assert!(report.notes.iter().any(|n| n.contains("drive power")));
        let ratio = drive.drive_power / REFERENCE_DRIVE_POWER_W;
        assert!(ratio > 0.8 && ratio < 1.0, "ratio = {ratio}");
    }

    #[test]
    fn rabi_rate_scales_linearly_in_field_and_sqrt_volume() {
        let consts = PhysicalConstants::default();
        let p1 = SystemParams::table1();
        let mut p2 = p1.clone();
        p2.b0 *= 3.0;
        let d1 = derive_drive(&p1, &consts);
        let d2 = derive_drive(&p2, &consts);
        assert_relative_eq!(d2.omega_rabi[0], 3.0 * d1.omega_rabi[0], max_relative = 1e-12);

        // Volume ratio 8 (diameter ratio 2) -> Rabi ratio 2*sqrt(2).
        let mut p3 = p1.clone();
        p3.sphere_diameter *= 2.0;
        let d3 = derive_drive(&p3, &consts);
        assert_relative_eq!(
            d3.omega_rabi[0],
            2.0 * 2.0_f64.sqrt() * d1.omega_rabi[0],
            max_relative = 1e-12
        );
    }

    #[test]
    fn thermal_occupation_frozen_values() {
        let consts = PhysicalConstants::default();
        // 10 GHz mode at 10 mK: hbar*omega/kT ~ 48, occupation is negligible.
        let n_ghz = thermal_occupation(TWO_PI * 10.0e9, 0.010, &consts).unwrap();
        assert!(n_ghz < 1e-20, "n = {n_ghz}");
        // 10 MHz mode at 10 mK: direct evaluation of the Bose factor.
        let x = consts.hbar * TWO_PI * 10.0e6 / (consts.k_b * 0.010);
        let expected = (x.exp() - 1.0).recip();
        let n_mhz = thermal_occupation(TWO_PI * 10.0e6, 0.010, &consts).unwrap();
        assert_relative_eq!(n_mhz, expected, max_relative = 1e-12);
        assert_abs_diff_eq!(n_mhz, 20.34, epsilon = 0.01);
    }

    #[test]
    fn thermal_occupation_zero_temperature_is_exactly_zero() {
        let consts = PhysicalConstants::default();
        assert_eq!(thermal_occupation(1.0, 0.0, &consts).unwrap(), 0.0);
        assert_eq!(thermal_occupation(1e12, 0.0, &consts).unwrap(), 0.0);
    }

    #[test]
    fn thermal_occupation_rejects_nonpositive_frequency() {
        let consts = PhysicalConstants::default();
        assert!(thermal_occupation(0.0, 1.0, &consts).is_err());
        assert!(thermal_occupation(-1.0, 1.0, &consts).is_err());
    }

    #[test]
    fn thermal_occupation_monotone_in_temperature_and_frequency() {
        let consts = PhysicalConstants::default();
        let omegas = [1.0e6, 1.0e7, 1.0e8, 1.0e9, 1.0e10];
        let temps = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 1.0];
        for &omega in &omegas {
            let mut prev = -1.0;
            for &t in &temps {
                let n = thermal_occupation(omega, t, &consts).unwrap();
                assert!(n > prev, "not increasing in T at omega={omega}, T={t}");
                prev = n;
            }
        }
        for &t in &temps {
            let mut prev = f64::INFINITY;
            for &omega in &omegas {
                let n = thermal_occupation(omega, t, &consts).unwrap();
                assert!(n < prev, "not decreasing in omega at omega={omega}, T={t}");
                prev = n;
            }
        }
    }

    #[test]
    fn detuning_accessors_and_setters() {
        let mut p = SystemParams::table1();
        assert_relative_eq!(p.delta_c(0), p.omega_b[0], max_relative = 1e-12);
        assert_relative_eq!(p.delta_m0(0), p.omega_b[0], max_relative = 1e-12);
        p.set_delta_c(0, -0.5 * p.omega_b[0]);
        assert_relative_eq!(p.delta_c(0), -0.5 * p.omega_b[0], max_relative = 1e-12);
        p.set_delta_m0(1, 0.8 * p.omega_b[1]);
        assert_relative_eq!(p.delta_m0(1), 0.8 * p.omega_b[1], max_relative = 1e-12);
    }

    #[test]
    fn bundled_config_is_table1_plus_calibration() {
        let params = RawConfig::from_toml_str(TABLE1_TOML).unwrap().to_params();
        let mut expected = SystemParams::table1();
        expected.g_eff_target = Some(TWO_PI * 4.8e6);
        assert_relative_eq!(params.omega_c[0], expected.omega_c[0], max_relative = 1e-14);
        assert_relative_eq!(params.omega_m[0], expected.omega_m[0], max_relative = 1e-14);
        assert_relative_eq!(params.omega_drive[1], expected.omega_drive[1], max_relative = 1e-14);
        assert_relative_eq!(params.hop_gamma, expected.hop_gamma, max_relative = 1e-14);
        assert_relative_eq!(params.gamma_b[0], expected.gamma_b[0], max_relative = 1e-14);
        assert_relative_eq!(
            params.g_eff_target.unwrap(),
            expected.g_eff_target.unwrap(),
            max_relative = 1e-14
        );
        assert_eq!(params.temperature, expected.temperature);
        assert_eq!(params.b0, expected.b0);
        let report = validate(&params, &PhysicalConstants::default());
        assert!(report.is_ok(), "{report}");
    }

    #[test]
    fn config_defaults_match_table1() {
        let params = RawConfig::from_toml_str("").unwrap().to_params();
        let expected = SystemParams::table1();
        assert_relative_eq!(params.omega_c[0], expected.omega_c[0], max_relative = 1e-14);
        assert_relative_eq!(params.omega_m[1], expected.omega_m[1], max_relative = 1e-14);
        assert_relative_eq!(params.hop_gamma, expected.hop_gamma, max_relative = 1e-14);
        assert_relative_eq!(params.g_cm[0], expected.g_cm[0], max_relative = 1e-14);
        assert_eq!(params.temperature, expected.temperature);
        assert_eq!(params.b0, expected.b0);
    }

    #[test]
    fn cavity2_defaults_to_cavity1() {
        let text = "[cavity1]\nkappa_c = 2.5e6\n";
        let params = RawConfig::from_toml_str(text).unwrap().to_params();
        assert_eq!(params.kappa_c[0], params.kappa_c[1]);
        assert_relative_eq!(params.kappa_c[0], TWO_PI * 2.5e6, max_relative = 1e-14);
    }

    #[test]
    fn asymmetric_cavities_are_expressible() {
        let text = "[cavity1]\ng_cm = 3.2e6\n\n[cavity2]\ng_cm = 1.6e6\nkappa_m = 0.5e6\n";
        let params = RawConfig::from_toml_str(text).unwrap().to_params();
        assert_relative_eq!(params.g_cm[0], TWO_PI * 3.2e6, max_relative = 1e-14);
        assert_relative_eq!(params.g_cm[1], TWO_PI * 1.6e6, max_relative = 1e-14);
        assert_relative_eq!(params.kappa_m[1], TWO_PI * 0.5e6, max_relative = 1e-14);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RawConfig::from_toml_str("[cavity1]\nomega_x = 1.0\n").is_err());
    }

    #[test]
    fn hz_roundtrip_preserves_inputs() {
        let text = "\
hop_gamma = 5.0e6
[cavity1]
omega_c = 10.0e9
omega_b = 10.0e6
kappa_c = 1.0e6
g_mb = 0.3
[drive]
b0 = 3.9e-5
[bath]
temperature = 0.01
";
        let cfg = RawConfig::from_toml_str(text).unwrap();
        let params = cfg.to_params();
        let back = RawConfig::from_params(&params);
        let again = back.to_params();
        assert_relative_eq!(params.omega_c[0], again.omega_c[0], max_relative = 1e-12);
        assert_relative_eq!(params.omega_b[0], again.omega_b[0], max_relative = 1e-12);
        assert_relative_eq!(params.kappa_c[0], again.kappa_c[0], max_relative = 1e-12);
        assert_relative_eq!(params.g_mb[0], again.g_mb[0], max_relative = 1e-12);
        assert_relative_eq!(params.hop_gamma, again.hop_gamma, max_relative = 1e-12);
    }
}
