#ifndef ACFID_H
#define ACFID_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum AcfidStatus {
  ACFID_STATUS_OK = 0,
  ACFID_STATUS_NULL_POINTER = 1,
  ACFID_STATUS_INVALID_ARGUMENT = 2,
  ACFID_STATUS_NUMERICAL = 3,
  ACFID_STATUS_RESOURCE_CAP = 4,
  ACFID_STATUS_PARSE = 5,
  ACFID_STATUS_IO = 6,
  ACFID_STATUS_PANIC = 7,
} AcfidStatus;

/**
 * Detected avoided crossings.
 */
typedef struct AcfidDetection AcfidDetection;

/**
 * A parametric family H(lambda).
 */
typedef struct AcfidSpec AcfidSpec;

/**
 * S, f and level tracks on a lambda grid.
 */
typedef struct AcfidSweep AcfidSweep;

/**
 * One avoided crossing.
 */
typedef struct AcfidEvent {
  size_t level_lo;
  size_t level_hi;
  double lambda_star;
  double s_max;
  double c_est;
  double gap;
  /**
   * 1 when both levels of the pair showed the peak.
   */
  int paired;
} AcfidEvent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on this thread.
 */
const char *acfid_last_error(void);

/**
 * Library version, a static string.
 */
const char *acfid_version(void);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void acfid_string_free(char *s);

/**
 * # Safety
 * `out` must be writable.
 */
enum AcfidStatus acfid_spec_two_level(double g, struct AcfidSpec **out);

/**
 * # Safety
 * `out` must be writable.
 */
enum AcfidStatus acfid_spec_triple(double a, double b, double c, struct AcfidSpec **out);

/**
 * cos(l) H1 + sin(l) H2 with H1, H2 drawn from the GOE with the given seeds.
 *
 * # Safety
 * `out` must be writable.
 */
enum AcfidStatus acfid_spec_goe_interp(size_t dim,
                                       uint64_t seed1,
                                       uint64_t seed2,
                                       struct AcfidSpec **out);

/**
 * H1 + lambda H2 from two real symmetric row-major dim x dim arrays.
 *
 * # Safety
 * `h1` and `h2` must point to dim*dim doubles; `out` must be writable.
 */
enum AcfidStatus acfid_spec_linear_pair(size_t dim,
                                        const double *h1,
                                        const double *h2,
                                        struct AcfidSpec **out);

/**
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum AcfidStatus acfid_spec_from_json(const char *json, struct AcfidSpec **out);

/**
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum AcfidStatus acfid_spec_to_json(const struct AcfidSpec *spec, char **out);

/**
 * Matrix dimension, 0 for a null handle.
 *
 * # Safety
 * `spec` must be a live handle or null.
 */
size_t acfid_spec_dim(const struct AcfidSpec *spec);

/**
 * # Safety
 * `spec` must come from this library or be null; it is invalid afterwards.
 */
void acfid_spec_free(struct AcfidSpec *spec);

/**
 * S_n = (1 - f_n)/dl^2 between lambda and lambda + dl.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum AcfidStatus acfid_fidelity_change(const struct AcfidSpec *spec,
                                       double lambda,
                                       double dl,
                                       size_t level,
                                       double *out);

/**
 * Sweep `points` values over [lo, hi]. `delta_lambda <= 0` picks the
 * default probe step.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum AcfidStatus acfid_sweep(const struct AcfidSpec *spec,
                             double lo,
                             double hi,
                             size_t points,
                             double delta_lambda,
                             struct AcfidSweep **out);

/**
 * # Safety
 * `sweep` must be a live handle or null.
 */
size_t acfid_sweep_points(const struct AcfidSweep *sweep);

/**
 * # Safety
 * `sweep` must be a live handle or null.
 */
size_t acfid_sweep_levels(const struct AcfidSweep *sweep);

/**
 * Copy the lambda grid into `buf` (at least `acfid_sweep_points` values).
 *
 * # Safety
 * `sweep` must be a live handle; `buf` must hold `len` doubles.
 */
enum AcfidStatus acfid_sweep_lambda(const struct AcfidSweep *sweep, double *buf, size_t len);

/**
 * Copy S of one tracked row into `buf`.
 *
 * # Safety
 * `sweep` must be a live handle; `buf` must hold `len` doubles.
 */
enum AcfidStatus acfid_sweep_s_row(const struct AcfidSweep *sweep,
                                   size_t row,
                                   double *buf,
                                   size_t len);

/**
 * # Safety
 * `sweep` must come from this library or be null.
 */
void acfid_sweep_free(struct AcfidSweep *sweep);

/**
 * Detect, refine and pair peaks. `threshold <= 0` selects the automatic
 * rule.
 *
 * # Safety
 * `spec` and `sweep` must be live handles from the same family; `out`
 * must be writable.
 */
enum AcfidStatus acfid_detect(const struct AcfidSpec *spec,
                              const struct AcfidSweep *sweep,
                              double threshold,
                              struct AcfidDetection **out);

/**
 * # Safety
 * `det` must be a live handle or null.
 */
size_t acfid_detection_len(const struct AcfidDetection *det);

/**
 * # Safety
 * `det` must be a live handle; `out` must be writable.
 */
enum AcfidStatus acfid_detection_event(const struct AcfidDetection *det,
                                       size_t index,
                                       struct AcfidEvent *out);

/**
 * Events as a JSON array.
 *
 * # Safety
 * `det` must be a live handle; `out` must be writable.
 */
enum AcfidStatus acfid_detection_to_json(const struct AcfidDetection *det, char **out);

/**
 * # Safety
 * `det` must come from this library or be null.
 */
void acfid_detection_free(struct AcfidDetection *det);

/**
 * CDF of unit-mean GOE widths, erf(c/sqrt(pi)); NaN for invalid input.
 */
double acfid_goe_width_cdf(double c);

/**
 * Normalize `widths` to unit mean and fit the chaotic weight gamma.
 *
 * # Safety
 * `widths` must hold `n` doubles; `gamma` must be writable.
 */
enum AcfidStatus acfid_fit_gamma(const double *widths, size_t n, double *gamma);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACFID_H */
