#ifndef HAPFSO_H
#define HAPFSO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HapfsoStatus {
  HAPFSO_STATUS_OK = 0,
  HAPFSO_STATUS_NULL_POINTER = 1,
  HAPFSO_STATUS_INVALID_ARGUMENT = 2,
  HAPFSO_STATUS_CONFIG = 3,
  HAPFSO_STATUS_QUADRATURE = 4,
  HAPFSO_STATUS_DEGENERATE_JITTER = 5,
  HAPFSO_STATUS_PARAMETER_REGION = 6,
  HAPFSO_STATUS_PANIC = 7,
} HapfsoStatus;

/**
 * Opaque scenario plus simulation settings.
 */
typedef struct HapfsoScenario HapfsoScenario;

/**
 * Closed-form outage and its parts.
 */
typedef struct HapfsoOutage {
  double p_out;
  double floor;
  double ln_smooth;
  double h_th;
  bool beyond_validity;
} HapfsoOutage;

/**
 * Summary of one Monte-Carlo run.
 */
typedef struct HapfsoSimSummary {
  uint64_t n_trials;
  double outage;
  double ci_half_width;
  bool insufficient_trials;
  double zero_mass;
  double mean_snr;
  double mean_snr_db_given_link;
} HapfsoSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *hapfso_last_error_message(void);

void hapfso_clear_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hapfso_version(void);

/**
 * New handle holding the nominal scenario.
 *
 * # Safety
 * `out_handle` must be null or valid for writes.
 */
enum HapfsoStatus hapfso_scenario_default(struct HapfsoScenario **out_handle);

/**
 * New handle from TOML text in the run-configuration format.
 *
 * # Safety
 * `toml` must be null or a NUL-terminated string; `out_handle` must be null
 * or valid for writes.
 */
enum HapfsoStatus hapfso_scenario_from_toml(const char *toml, struct HapfsoScenario **out_handle);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `handle` must be null or come from a constructor above, and not be used
 * afterwards.
 */
void hapfso_scenario_free(struct HapfsoScenario *handle);

/**
 * Sets the transmit power (dBm).
 *
 * # Safety
 * `handle` must be null or a live handle.
 */
enum HapfsoStatus hapfso_scenario_set_transmit_power_dbm(struct HapfsoScenario *handle,
                                                         double p_t_dbm);

/**
 * Sets the beam radius at the receiver (m).
 *
 * # Safety
 * `handle` must be null or a live handle.
 */
enum HapfsoStatus hapfso_scenario_set_beam_width(struct HapfsoScenario *handle, double w_z_m);

/**
 * Sets the receiver field of view (rad).
 *
 * # Safety
 * `handle` must be null or a live handle.
 */
enum HapfsoStatus hapfso_scenario_set_fov(struct HapfsoScenario *handle, double theta_fov_rad);

/**
 * Sets the sampler trial count and seed.
 *
 * # Safety
 * `handle` must be null or a live handle.
 */
enum HapfsoStatus hapfso_scenario_set_simulation(struct HapfsoScenario *handle,
                                                 uint64_t n_trials,
                                                 uint64_t seed);

/**
 * Hufnagel–Valley `C_n²` at `altitude_m` (m⁻²ᐟ³).
 *
 * # Safety
 * `out_cn2` must be null or valid for writes.
 */
enum HapfsoStatus hapfso_cn2(double altitude_m,
                             double wind_speed_mps,
                             double ground_cn2,
                             double *out_cn2);

/**
 * Rytov variance of the handle's path.
 *
 * # Safety
 * `handle` must be null or a live handle; `out_rytov` null or writable.
 */
enum HapfsoStatus hapfso_rytov_variance(const struct HapfsoScenario *handle, double *out_rytov);

/**
 * Gamma-gamma `α`, `β` for a Rytov variance.
 *
 * # Safety
 * `out_alpha` and `out_beta` must be null or valid for writes.
 */
enum HapfsoStatus hapfso_gg_params(double rytov, double *out_alpha, double *out_beta);

/**
 * Fraction of Airy-pattern power inside radius `ψ`, given as `ψ / λ`.
 */
double hapfso_airy_fraction(double psi_over_lambda);

/**
 * Far-field pointing loss; NaN for non-positive widths.
 */
double hapfso_pointing_loss(double w_z_m,
                            double aperture_radius_m,
                            double r_d_m,
                            double theta_d_rad);

/**
 * Closed-form outage at the handle's transmit power.
 *
 * # Safety
 * `handle` must be null or a live handle; `out_outage` null or writable.
 */
enum HapfsoStatus hapfso_outage(const struct HapfsoScenario *handle,
                                struct HapfsoOutage *out_outage);

/**
 * Monte-Carlo run with the handle's simulation settings.
 *
 * # Safety
 * `handle` must be null or a live handle; `out_summary` null or writable.
 */
enum HapfsoStatus hapfso_simulate(const struct HapfsoScenario *handle,
                                  struct HapfsoSimSummary *out_summary);

/**
 * Field of view minimizing closed-form outage over a linear grid.
 *
 * # Safety
 * `handle` must be null or a live handle; the output pointers null or
 * writable.
 */
enum HapfsoStatus hapfso_optimize_fov(const struct HapfsoScenario *handle,
                                      double lo_rad,
                                      double hi_rad,
                                      size_t n_points,
                                      double *out_theta_rad,
                                      double *out_p_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAPFSO_H */
