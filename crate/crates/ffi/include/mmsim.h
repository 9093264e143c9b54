#ifndef MMSIM_H
#define MMSIM_H

/* Generated from the mmsim-ffi crate by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by fallible calls.
 */
typedef enum MmsimStatus {
  MMSIM_OK = 0,
  /**
   * A required pointer argument was null.
   */
  MMSIM_ERR_NULL_ARG = 1,
  /**
   * Configuration text failed to parse or validate.
   */
  MMSIM_ERR_CONFIG = 2,
  /**
   * The steady-state solver failed to converge.
   */
  MMSIM_ERR_SOLVER = 3,
  /**
   * The working point is unstable; no stationary covariance exists.
   */
  MMSIM_ERR_UNSTABLE = 4,
  /**
   * The covariance violated the uncertainty bound beyond tolerance.
   */
  MMSIM_ERR_UNPHYSICAL = 5,
  /**
   * A string argument was not valid UTF-8.
   */
  MMSIM_ERR_UTF8 = 6,
  /**
   * Unknown parameter or mode-pair key.
   */
  MMSIM_ERR_UNKNOWN_KEY = 7,
  /**
   * Internal panic; details in mmsim_last_error.
   */
  MMSIM_ERR_INTERNAL = 8,
} MmsimStatus;

/**
 * Opaque parameter-set handle.
 */
typedef struct MmsimParams MmsimParams;

/**
 * Opaque evaluated-point handle.
 */
typedef struct MmsimPoint MmsimPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread; empty string if none. Borrowed:
 * valid until the next library call on the same thread.
 */
const char *mmsim_last_error(void);

/**
 * Library version as a static string.
 */
const char *mmsim_version(void);

/**
 * Bundled reference parameter set (drive calibrated per working point).
 */
struct MmsimParams *mmsim_params_default(void);

/**
 * Parse a TOML configuration. Returns null on error; see mmsim_last_error.
 *
 * # Safety
 * `text` must be a valid nul-terminated string.
 */
struct MmsimParams *mmsim_params_from_toml(const char *text);

/**
 * Deep copy of a parameter set.
 *
 * # Safety
 * `handle` must be a live pointer from this library or null.
 */
struct MmsimParams *mmsim_params_clone(const struct MmsimParams *handle);

/**
 * Release a parameter set. Null is a no-op.
 *
 * # Safety
 * `handle` must be a pointer from this library, released exactly once.
 */
void mmsim_params_free(struct MmsimParams *handle);

/**
 * Set a parameter. `key` is either an axis key in omega_b multiples
 * (Delta1, Delta2, Delta_m1, Delta_m2, hop_Gamma, Delta_sym, Delta_antisym)
 * or a dotted configuration path in file units (e.g. "drive.g_eff_target",
 * "cavity1.kappa_c", "bath.temperature").
 *
 * # Safety
 * `handle` must be a live pointer from this library; `key` a valid
 * nul-terminated string.
 */
enum MmsimStatus mmsim_params_set(struct MmsimParams *handle, const char *key, double value);

/**
 * Read a parameter; same keys as mmsim_params_set.
 *
 * # Safety
 * `handle` and `out` must be valid; `key` a valid nul-terminated string.
 */
enum MmsimStatus mmsim_params_get(const struct MmsimParams *handle, const char *key, double *out);

/**
 * Use the Hamiltonian-derived hopping sign (nonzero) or the bare printed
 * sign (zero), which is gain-like and typically unstable.
 *
 * # Safety
 * `handle` must be a live pointer from this library.
 */
enum MmsimStatus mmsim_params_set_hamiltonian_hopping(struct MmsimParams *handle, int hamiltonian);

/**
 * Solve the working point and stationary state. On success `*out` owns a
 * new point handle (release with mmsim_point_free). An unstable point still
 * succeeds; check mmsim_point_is_stable before reading entanglement.
 *
 * # Safety
 * `handle` and `out` must be valid pointers.
 */
enum MmsimStatus mmsim_evaluate(const struct MmsimParams *handle, struct MmsimPoint **out);

/**
 * Release an evaluated point. Null is a no-op.
 *
 * # Safety
 * `handle` must be a pointer from this library, released exactly once.
 */
void mmsim_point_free(struct MmsimPoint *handle);

/**
 * Nonzero when the drift is stable (stationary state exists and passed the
 * physicality check).
 *
 * # Safety
 * `handle` must be a live pointer from this library.
 */
int mmsim_point_is_stable(const struct MmsimPoint *handle);

/**
 * Stability margin (largest drift-eigenvalue real part) in omega_b units;
 * negative means stable. NaN on a null handle.
 *
 * # Safety
 * `handle` must be a live pointer from this library.
 */
double mmsim_point_margin_wb(const struct MmsimPoint *handle);

/**
 * Drive Rabi rate actually applied to subsystem 1 or 2, rad/s.
 *
 * # Safety
 * `handle` must be a live pointer from this library.
 */
double mmsim_point_omega_rabi(const struct MmsimPoint *handle, int subsystem);

/**
 * Effective magnomechanical coupling |G_eff|/2pi of subsystem 1 or 2, Hz.
 *
 * # Safety
 * `handle` must be a live pointer from this library.
 */
double mmsim_point_g_eff_hz(const struct MmsimPoint *handle, int subsystem);

/**
 * Logarithmic negativity of one mode pair, e.g. "c1-c2" (modes c1, c2, m1,
 * m2, b1, b2 in either order). Fails with MMSIM_ERR_UNSTABLE when the point
 * has no stationary state.
 *
 * # Safety
 * `handle` and `out` must be valid; `pair` a valid nul-terminated string.
 */
enum MmsimStatus mmsim_point_negativity(const struct MmsimPoint *handle,
                                        const char *pair,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MMSIM_H */
