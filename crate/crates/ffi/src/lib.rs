//! C ABI for the steady-state simulator: opaque handles for parameter sets
//! and evaluated points, numeric error codes, and a thread-local error
//! message. The generated header lives in `include/mmsim.h`.
//!
//! Ownership rules: every `*_new`/`*_from_*`/`*_clone` result must be
//! released with the matching `*_free`; strings returned by the library are
//! borrowed and valid until the next library call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mmsim::entanglement::ModePair;
use mmsim::params::{
    validate, HoppingConvention, PhysicalConstants, RawConfig, SystemParams, TABLE1_TOML, TWO_PI,
};
use mmsim::pipeline::{evaluate_config, PointResult, PointStatus};
use mmsim::sweep::AxisParam;

/// Status codes returned by fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmsimStatus {
    MmsimOk = 0,
    /// A required pointer argument was null.
    MmsimErrNullArg = 1,
    /// Configuration text failed to parse or validate.
    MmsimErrConfig = 2,
    /// The steady-state solver failed to converge.
    MmsimErrSolver = 3,
    /// The working point is unstable; no stationary covariance exists.
    MmsimErrUnstable = 4,
    /// The covariance violated the uncertainty bound beyond tolerance.
    MmsimErrUnphysical = 5,
    /// A string argument was not valid UTF-8.
    MmsimErrUtf8 = 6,
    /// Unknown parameter or mode-pair key.
    MmsimErrUnknownKey = 7,
    /// Internal panic; details in mmsim_last_error.
    MmsimErrInternal = 8,
}

/// Opaque parameter-set handle.
pub struct MmsimParams {
    params: SystemParams,
}

/// Opaque evaluated-point handle.
pub struct MmsimPoint {
    point: PointResult,
    omega: [f64; 2],
    omega_b: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("nul bytes stripped");
    });
}

fn guard<T>(fallback: T, body: impl FnOnce() -> T) -> T {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(value) => value,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal panic".to_string());
            set_error(&msg);
            fallback
        }
    }
}

/// # Safety
/// `text` must be a valid nul-terminated string or null.
unsafe fn utf8_arg<'a>(text: *const c_char) -> Result<&'a str, MmsimStatus> {
    if text.is_null() {
        set_error("null string argument");
        return Err(MmsimStatus::MmsimErrNullArg);
    }
    CStr::from_ptr(text).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        MmsimStatus::MmsimErrUtf8
    })
}

fn status_of(err: &mmsim::Error) -> MmsimStatus {
    use mmsim::Error;
    set_error(&err.to_string());
    match err {
        Error::Config(_) | Error::Validation(_) | Error::Io(_) => MmsimStatus::MmsimErrConfig,
        Error::UnstableDrift { .. } => MmsimStatus::MmsimErrUnstable,
        Error::UnphysicalCovariance { .. } => MmsimStatus::MmsimErrUnphysical,
        Error::UnknownMode(_) | Error::UnknownPreset { .. } => MmsimStatus::MmsimErrUnknownKey,
        _ => MmsimStatus::MmsimErrSolver,
    }
}

/// Last error message for this thread; empty string if none. Borrowed:
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn mmsim_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mmsim_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Bundled reference parameter set (drive calibrated per working point).
#[no_mangle]
pub extern "C" fn mmsim_params_default() -> *mut MmsimParams {
    guard(ptr::null_mut(), || {
        let params = RawConfig::from_toml_str(TABLE1_TOML)
            .expect("bundled config parses")
            .to_params();
        Box::into_raw(Box::new(MmsimParams { params }))
    })
}

/// Parse a TOML configuration. Returns null on error; see mmsim_last_error.
///
/// # Safety
/// `text` must be a valid nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mmsim_params_from_toml(text: *const c_char) -> *mut MmsimParams {
    guard(ptr::null_mut(), || {
        let text = match utf8_arg(text) {
            Ok(t) => t,
            Err(_) => return ptr::null_mut(),
        };
        match RawConfig::from_toml_str(text) {
            Ok(raw) => Box::into_raw(Box::new(MmsimParams {
                params: raw.to_params(),
            })),
            Err(e) => {
                status_of(&e);
                ptr::null_mut()
            }
        }
    })
}

/// Deep copy of a parameter set.
///
/// # Safety
/// `handle` must be a live pointer from this library or null.
#[no_mangle]
pub unsafe extern "C" fn mmsim_params_clone(handle: *const MmsimParams) -> *mut MmsimParams {
    guard(ptr::null_mut(), || {
        if handle.is_null() {
            set_error("null params handle");
            return ptr::null_mut();
        }
        let params = (*handle).params.clone();
        Box::into_raw(Box::new(MmsimParams { params }))
    })
}

/// Release a parameter set. Null is a no-op.
///
/// # Safety
/// `handle` must be a pointer from this library, released exactly once.
#[no_mangle]
pub unsafe extern "C" fn mmsim_params_free(handle: *mut MmsimParams) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

fn axis_value(params: &SystemParams, key: AxisParam) -> f64 {
    let wb = params.omega_b[0];
    match key {
        AxisParam::Delta1 | AxisParam::DeltaSym | AxisParam::DeltaAntisym => {
            params.delta_c(0) / wb
        }
        AxisParam::Delta2 => params.delta_c(1) / wb,
        AxisParam::DeltaM1 => params.delta_m0(0) / wb,
        AxisParam::DeltaM2 => params.delta_m0(1) / wb,
        AxisParam::HopGamma => params.hop_gamma / wb,
    }
}

fn dotted_get(params: &SystemParams, key: &str) -> Option<f64> {
    let raw = RawConfig::from_params(params);
    let tree: toml::Value = toml::Value::try_from(raw).ok()?;
    let mut cursor = &tree;
    for part in key.split('.') {
        cursor = cursor.get(part)?;
    }
    cursor.as_float().or_else(|| cursor.as_integer().map(|i| i as f64))
}

fn dotted_set(params: &mut SystemParams, key: &str, value: f64) -> Result<(), MmsimStatus> {
    let raw = RawConfig::from_params(params);
    let mut tree: toml::Value = toml::Value::try_from(raw).map_err(|e| {
        set_error(&format!("re-encode: {e}"));
        MmsimStatus::MmsimErrConfig
    })?;
    let segments: Vec<&str> = key.split('.').collect();
    let (leaf, path) = segments.split_last().expect("split yields at least one");
    let mut cursor = &mut tree;
    for part in path {
        cursor = match cursor.get_mut(*part) {
            Some(next) => next,
            None => {
                set_error(&format!("unknown parameter `{key}`"));
                return Err(MmsimStatus::MmsimErrUnknownKey);
            }
        };
    }
    let table = cursor.as_table_mut().ok_or_else(|| {
        set_error(&format!("`{key}` is not inside a table"));
        MmsimStatus::MmsimErrUnknownKey
    })?;
    if !table.contains_key(*leaf) && !matches!(*leaf, "g_eff_target" | "omega_rabi_1" | "omega_rabi_2") {
        set_error(&format!("unknown parameter `{key}`"));
        return Err(MmsimStatus::MmsimErrUnknownKey);
    }
    table.insert(leaf.to_string(), toml::Value::Float(value));
    let text = toml::to_string(&tree).map_err(|e| {
        set_error(&format!("re-encode: {e}"));
        MmsimStatus::MmsimErrConfig
    })?;
    match RawConfig::from_toml_str(&text) {
        Ok(raw) => {
            *params = raw.to_params();
            Ok(())
        }
        Err(e) => Err(status_of(&e)),
    }
}

/// Set a parameter. `key` is either an axis key in omega_b multiples
/// (Delta1, Delta2, Delta_m1, Delta_m2, hop_Gamma, Delta_sym, Delta_antisym)
/// or a dotted configuration path in file units (e.g. "drive.g_eff_target",
/// "cavity1.kappa_c", "bath.temperature").
///
/// # Safety
/// `handle` must be a live pointer from this library; `key` a valid
/// nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mmsim_params_set(
    handle: *mut MmsimParams,
    key: *const c_char,
    value: c_double,
) -> MmsimStatus {
    guard(MmsimStatus::MmsimErrInternal, || {
        if handle.is_null() {
            set_error("null params handle");
            return MmsimStatus::MmsimErrNullArg;
        }
        let key = match utf8_arg(key) {
            Ok(k) => k,
            Err(status) => return status,
        };
        let params = &mut (*handle).params;
        if let Ok(axis) = key.parse::<AxisParam>() {
            axis.apply(params, value);
            return MmsimStatus::MmsimOk;
        }
        match dotted_set(params, key, value) {
            Ok(()) => MmsimStatus::MmsimOk,
            Err(status) => status,
        }
    })
}

/// Read a parameter; same keys as mmsim_params_set.
///
/// # Safety
/// `handle` and `out` must be valid; `key` a valid nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mmsim_params_get(
    handle: *const MmsimParams,
    key: *const c_char,
    out: *mut c_double,
) -> MmsimStatus {
    guard(MmsimStatus::MmsimErrInternal, || {
        if handle.is_null() || out.is_null() {
            set_error("null argument");
            return MmsimStatus::MmsimErrNullArg;
        }
        let key = match utf8_arg(key) {
            Ok(k) => k,
            Err(status) => return status,
        };
        let params = &(*handle).params;
        if let Ok(axis) = key.parse::<AxisParam>() {
            *out = axis_value(params, axis);
            return MmsimStatus::MmsimOk;
        }
        match dotted_get(params, key) {
            Some(value) => {
                *out = value;
                MmsimStatus::MmsimOk
            }
            None => {
                set_error(&format!("unknown parameter `{key}`"));
                MmsimStatus::MmsimErrUnknownKey
            }
        }
    })
}

/// Use the Hamiltonian-derived hopping sign (nonzero) or the bare printed
/// sign (zero), which is gain-like and typically unstable.
///
/// # Safety
/// `handle` must be a live pointer from this library.
#[no_mangle]
pub unsafe extern "C" fn mmsim_params_set_hamiltonian_hopping(
    handle: *mut MmsimParams,
    hamiltonian: c_int,
) -> MmsimStatus {
    guard(MmsimStatus::MmsimErrInternal, || {
        if handle.is_null() {
            set_error("null params handle");
            return MmsimStatus::MmsimErrNullArg;
        }
        (*handle).params.hopping_convention = if hamiltonian != 0 {
            HoppingConvention::Hamiltonian
        } else {
            HoppingConvention::AsPrinted
        };
        MmsimStatus::MmsimOk
    })
}

/// Solve the working point and stationary state. On success `*out` owns a
/// new point handle (release with mmsim_point_free). An unstable point still
/// succeeds; check mmsim_point_is_stable before reading entanglement.
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mmsim_evaluate(
    handle: *const MmsimParams,
    out: *mut *mut MmsimPoint,
) -> MmsimStatus {
    guard(MmsimStatus::MmsimErrInternal, || {
        if handle.is_null() || out.is_null() {
            set_error("null argument");
            return MmsimStatus::MmsimErrNullArg;
        }
        let params = &(*handle).params;
        let consts = PhysicalConstants::default();
        if let Err(e) = validate(params, &consts).into_result() {
            return status_of(&e);
        }
        match evaluate_config(params, &consts) {
            Ok((omega, point)) => {
                *out = Box::into_raw(Box::new(MmsimPoint {
                    point,
                    omega,
                    omega_b: params.omega_b[0],
                }));
                MmsimStatus::MmsimOk
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Release an evaluated point. Null is a no-op.
///
/// # Safety
/// `handle` must be a pointer from this library, released exactly once.
#[no_mangle]
pub unsafe extern "C" fn mmsim_point_free(handle: *mut MmsimPoint) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Nonzero when the drift is stable (stationary state exists and passed the
/// physicality check).
///
/// # Safety
/// `handle` must be a live pointer from this library.
#[no_mangle]
pub unsafe extern "C" fn mmsim_point_is_stable(handle: *const MmsimPoint) -> c_int {
    guard(0, || {
        if handle.is_null() {
            set_error("null point handle");
            return 0;
        }
        ((*handle).point.status == PointStatus::Ok) as c_int
    })
}

/// Stability margin (largest drift-eigenvalue real part) in omega_b units;
/// negative means stable. NaN on a null handle.
///
/// # Safety
/// `handle` must be a live pointer from this library.
#[no_mangle]
pub unsafe extern "C" fn mmsim_point_margin_wb(handle: *const MmsimPoint) -> c_double {
    guard(f64::NAN, || {
        if handle.is_null() {
            set_error("null point handle");
            return f64::NAN;
        }
        (*handle).point.margin / (*handle).omega_b
    })
}

/// Drive Rabi rate actually applied to subsystem 1 or 2, rad/s.
///
/// # Safety
/// `handle` must be a live pointer from this library.
#[no_mangle]
pub unsafe extern "C" fn mmsim_point_omega_rabi(
    handle: *const MmsimPoint,
    subsystem: c_int,
) -> c_double {
    guard(f64::NAN, || {
        if handle.is_null() || !(1..=2).contains(&subsystem) {
            set_error("null point handle or subsystem outside {1, 2}");
            return f64::NAN;
        }
        (*handle).omega[(subsystem - 1) as usize]
    })
}

/// Effective magnomechanical coupling |G_eff|/2pi of subsystem 1 or 2, Hz.
///
/// # Safety
/// `handle` must be a live pointer from this library.
#[no_mangle]
pub unsafe extern "C" fn mmsim_point_g_eff_hz(
    handle: *const MmsimPoint,
    subsystem: c_int,
) -> c_double {
    guard(f64::NAN, || {
        if handle.is_null() || !(1..=2).contains(&subsystem) {
            set_error("null point handle or subsystem outside {1, 2}");
            return f64::NAN;
        }
        (*handle).point.mean_field.g_eff[(subsystem - 1) as usize].norm() / TWO_PI
    })
}

/// Logarithmic negativity of one mode pair, e.g. "c1-c2" (modes c1, c2, m1,
/// m2, b1, b2 in either order). Fails with MMSIM_ERR_UNSTABLE when the point
/// has no stationary state.
///
/// # Safety
/// `handle` and `out` must be valid; `pair` a valid nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mmsim_point_negativity(
    handle: *const MmsimPoint,
    pair: *const c_char,
    out: *mut c_double,
) -> MmsimStatus {
    guard(MmsimStatus::MmsimErrInternal, || {
        if handle.is_null() || out.is_null() {
            set_error("null argument");
            return MmsimStatus::MmsimErrNullArg;
        }
        let text = match utf8_arg(pair) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let pair: ModePair = match text.parse() {
            Ok(p) => p,
            Err(e) => return status_of(&e),
        };
        let point = &(*handle).point;
        let Some(all) = point.negativities.as_ref() else {
            set_error(&format!(
                "no stationary state: point is {} (margin {:+.3e} omega_b)",
                point.status.label(),
                point.margin / (*handle).omega_b
            ));
            return match point.status {
                PointStatus::Unphysical => MmsimStatus::MmsimErrUnphysical,
                _ => MmsimStatus::MmsimErrUnstable,
            };
        };
        match all
            .iter()
            .find(|(p, _)| *p == pair || (p.a == pair.b && p.b == pair.a))
        {
            Some(&(_, e)) => {
                *out = e;
                MmsimStatus::MmsimOk
            }
            None => {
                set_error(&format!("pair `{text}` not in the catalog"));
                MmsimStatus::MmsimErrUnknownKey
            }
        }
    })
}
