#ifndef RISS_H
#define RISS_H

/* Generated by cbindgen from riss-ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RissFirstBeam {
  RISS_FIRST_BEAM_EDGE_AT_ENDFIRE = 0,
  RISS_FIRST_BEAM_PEAK_AT_ENDFIRE = 1,
} RissFirstBeam;

typedef enum RissStatus {
  RISS_STATUS_OK = 0,
  RISS_STATUS_NULL_POINTER = 1,
  RISS_STATUS_INVALID_ARGUMENT = 2,
  RISS_STATUS_DIMENSION = 3,
  RISS_STATUS_INFEASIBLE = 4,
  RISS_STATUS_EIGEN = 5,
  RISS_STATUS_CONFIG = 6,
  RISS_STATUS_IO = 7,
  RISS_STATUS_BUFFER_TOO_SMALL = 8,
  RISS_STATUS_PANIC = 9,
} RissStatus;

/**
 * Beam rotation plan.
 */
typedef struct RissBeamPlan RissBeamPlan;

/**
 * Scenario configuration.
 */
typedef struct RissConfig RissConfig;

/**
 * Rows and cell accounting of one experiment run.
 */
typedef struct RissRun RissRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf`; see the
 * buffer convention of [`riss_run_csv`]. An empty string when none is set.
 *
 * # Safety
 * `buf` must point to `len` writable bytes or be null; `written` may be null.
 */
enum RissStatus riss_last_error_message(char *buf, size_t len, size_t *written);

/**
 * Built-in default configuration.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum RissStatus riss_config_default(struct RissConfig **out);

/**
 * Configuration parsed from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` a valid handle slot.
 */
enum RissStatus riss_config_from_toml(const char *toml, struct RissConfig **out);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum RissStatus riss_config_set_seed(struct RissConfig *cfg, uint64_t seed);

/**
 * Sets the trial count of one experiment, named by its CLI id.
 *
 * # Safety
 * `cfg` must be a live handle; `experiment` a NUL-terminated string.
 */
enum RissStatus riss_config_set_trials(struct RissConfig *cfg,
                                       const char *experiment,
                                       size_t trials);

/**
 * # Safety
 * `cfg` must be a handle from this library or null; it is invalid afterwards.
 */
void riss_config_free(struct RissConfig *cfg);

/**
 * Runs one experiment, named by its CLI id.
 *
 * # Safety
 * `cfg` must be a live handle; `experiment` a NUL-terminated string; `out` a valid handle slot.
 */
enum RissStatus riss_run(const struct RissConfig *cfg,
                         const char *experiment,
                         struct RissRun **out);

/**
 * # Safety
 * `run` must be a live handle; the out pointers must be valid or null.
 */
enum RissStatus riss_run_counts(const struct RissRun *run,
                                size_t *rows,
                                size_t *cells,
                                size_t *failed_cells);

/**
 * Aggregate value of `metric` at the parameter cell `params`, written as
 * `name=value` pairs joined by `;` (empty for unparameterized metrics).
 *
 * # Safety
 * `run` must be a live handle; strings NUL-terminated; `value` valid.
 */
enum RissStatus riss_run_aggregate(const struct RissRun *run,
                                   const char *metric,
                                   const char *params,
                                   double *value);

/**
 * CSV text of the run. Pass a null `buf` to query the length through
 * `written`; the buffer needs `written + 1` bytes for the NUL.
 *
 * # Safety
 * `run` must be a live handle; `buf` must point to `len` bytes or be null.
 */
enum RissStatus riss_run_csv(const struct RissRun *run, char *buf, size_t len, size_t *written);

/**
 * # Safety
 * `run` must be a live handle; `path` NUL-terminated.
 */
enum RissStatus riss_run_write_csv(const struct RissRun *run, const char *path);

/**
 * # Safety
 * `run` must be a handle from this library or null; it is invalid afterwards.
 */
void riss_run_free(struct RissRun *run);

/**
 * Normalized array factor of an `n`-element ULA steered to `direction`.
 */
double riss_beam_gain(double direction, double omega, size_t n);

/**
 * Harvested power of the default nonlinear model, watts.
 */
double riss_harvest(double input_power);

/**
 * Evenly stitched plan of `n_beams` beams for an `n`-element array.
 *
 * # Safety
 * `out` must be a valid handle slot.
 */
enum RissStatus riss_uniform_plan(size_t n_beams,
                                  size_t n,
                                  enum RissFirstBeam first,
                                  struct RissBeamPlan **out);

/**
 * Beam count and threshold of a plan.
 *
 * # Safety
 * `plan` must be a live handle; out pointers valid or null.
 */
enum RissStatus riss_plan_info(const struct RissBeamPlan *plan, size_t *n_beams, double *gamma);

/**
 * Copies the beam directions, ascending, into `out` of length `len`.
 *
 * # Safety
 * `plan` must be a live handle; `out` must point to `len` doubles.
 */
enum RissStatus riss_plan_directions(const struct RissBeamPlan *plan, double *out, size_t len);

/**
 * # Safety
 * `plan` must be a handle from this library or null; it is invalid afterwards.
 */
void riss_plan_free(struct RissBeamPlan *plan);

/**
 * Rotation order minimizing the waiting cost, and that cost averaged per device.
 *
 * # Safety
 * `counts` and `times` must point to `n` elements, `order` to `n` writable
 * slots; `average_wait` may be null.
 */
enum RissStatus riss_optimal_order(const size_t *counts,
                                   const double *times,
                                   size_t n,
                                   size_t *order,
                                   double *average_wait);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RISS_H */
