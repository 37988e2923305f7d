#ifndef UPLINK_COMP_H
#define UPLINK_COMP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum UcStatus {
  UC_STATUS_OK = 0,
  UC_STATUS_NULL_POINTER = 1,
  UC_STATUS_INVALID_ARGUMENT = 2,
  UC_STATUS_UNSUPPORTED = 3,
  UC_STATUS_NUMERICAL = 4,
  UC_STATUS_PANIC = 5,
} UcStatus;

typedef enum UcScheme {
  UC_SCHEME_NO_COOP = 0,
  UC_SCHEME_MAC = 1,
  UC_SCHEME_DIS = 2,
  UC_SCHEME_CIF = 3,
  UC_SCHEME_DAS_D = 4,
  UC_SCHEME_DAS_C = 5,
  UC_SCHEME_FDM = 6,
  UC_SCHEME_DAS_N = 7,
} UcScheme;

typedef enum UcQuantizer {
  UC_QUANTIZER_PRACTICAL = 0,
  UC_QUANTIZER_RATE_DISTORTION = 1,
  UC_QUANTIZER_SOURCE_CODED = 2,
} UcQuantizer;

/**
 * Opaque scenario handle.
 */
typedef struct UcScenario UcScenario;

/**
 * Two-cell geometry and channel knowledge. `n_pilots = 0` means perfect CSI.
 */
typedef struct UcScenarioParams {
  double d1;
  double d2;
  double theta;
  double phi1;
  double phi2;
  double phi12;
  double sigma2;
  uint32_t n_pilots;
  double pilot_power;
  double pilot_noise;
} UcScenarioParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *uc_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t uc_last_error(char *buf, size_t len);

/**
 * Cell-edge defaults: d = 0.5, θ = 3.5, all phases π/2, σ² = 0.1, perfect CSI.
 */
struct UcScenarioParams uc_scenario_params_default(void);

/**
 * Builds the two-cell channel with two antennas per base station.
 *
 * # Safety
 * `params` and `out` must be valid pointers; `*out` receives a handle to
 * release with `uc_scenario_free`.
 */
enum UcStatus uc_scenario_new(const struct UcScenarioParams *params, struct UcScenario **out);

/**
 * Explicit channel from row-major real and imaginary parts (`im` may be
 * null for a real channel). Rows are antennas, grouped by base station.
 *
 * # Safety
 * `re` (and `im` unless null) must hold `rows * cols` values; `out` must be valid.
 */
enum UcStatus uc_scenario_from_matrix(const double *re,
                                      const double *im,
                                      size_t rows,
                                      size_t cols,
                                      size_t n_bs_antennas,
                                      double sigma2,
                                      double estimation_error_variance,
                                      struct UcScenario **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `s` must come from a constructor of this library and not be used afterwards.
 */
void uc_scenario_free(struct UcScenario *s);

/**
 * Best sum rate without cooperation, over assignments and on/off powers.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum UcStatus uc_nocoop_sum_rate(const struct UcScenario *s, double *out);

/**
 * Sum rate of joint decoding over all antennas at full power.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum UcStatus uc_mac_sum_rate(const struct UcScenario *s, double *out);

/**
 * Best sum rate of a scheme at backhaul `beta`. `scheme` and `quantizer`
 * take `UcScheme` and `UcQuantizer` values; `power_steps = 0` selects the
 * default search grid.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum UcStatus uc_scheme_sum_rate(const struct UcScenario *s,
                                 uint32_t scheme,
                                 uint32_t quantizer,
                                 bool spc,
                                 double beta,
                                 uint32_t power_steps,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UPLINK_COMP_H */
