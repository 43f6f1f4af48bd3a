#ifndef CFLAB_H
#define CFLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CFLAB_MODEL_GHR 0

#define CFLAB_MODEL_GIPPS 1

#define CFLAB_MODEL_IDM 2

#define CFLAB_MODEL_FVD 3

#define CFLAB_MODEL_W99 4

// Result of every fallible call.
typedef enum CflabStatus {
  CFLAB_STATUS_OK = 0,
  CFLAB_STATUS_NULL_POINTER = 1,
  CFLAB_STATUS_INVALID_ARGUMENT = 2,
  CFLAB_STATUS_IO = 3,
  CFLAB_STATUS_COMPUTATION = 4,
  CFLAB_STATUS_PANIC = 5,
} CflabStatus;

// Parameters of one model.
typedef struct CflabParams CflabParams;

// One car-following period.
typedef struct CflabPeriod CflabPeriod;

// Simulated follower of one period.
typedef struct CflabSimResult CflabSimResult;

typedef struct CflabSimOptions {
  // Integration step in seconds; must divide 0.1.
  double dt;
  // A gap at or below this counts as a collision.
  double collision_threshold;
  // Seed of the W99 random stream.
  uint64_t rng_seed;
  // Non-zero freezes the W99 random term at 0.
  int32_t w99_frozen_rnd;
} CflabSimOptions;

typedef struct CflabObjectiveOptions {
  // Added per collided period.
  double penalty;
  // Non-zero averages per-period RMSPEs instead of pooling the sums.
  int32_t per_period_mean;
} CflabObjectiveOptions;

typedef struct CflabGaOptions {
  size_t pop_size;
  size_t max_generations;
  size_t stall_generations;
  double function_tolerance;
  size_t n_restarts;
  uint64_t seed;
} CflabGaOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *cflab_last_error(void);

struct CflabSimOptions cflab_sim_options_default(void);

struct CflabObjectiveOptions cflab_objective_options_default(void);

// Defaults for `model`; an unknown code gives the GHR/Gipps/IDM/FVD ones.
struct CflabGaOptions cflab_ga_options_default(uint32_t model_code);

// Loads a period CSV (with its optional JSON sidecar).
//
// # Safety
// `path` must be a NUL-terminated string; `out_period` must be writable.
enum CflabStatus cflab_period_load(const char *path, struct CflabPeriod **out_period);

// Builds a period from `n` samples at 10 Hz. `lv_length <= 0` uses the
// default leader length.
//
// # Safety
// The three arrays must hold `n` values each.
enum CflabStatus cflab_period_from_arrays(const double *fv_speed,
                                          const double *gap,
                                          const double *lv_speed,
                                          size_t n,
                                          double lv_length,
                                          struct CflabPeriod **out_period);

// Number of samples, or 0 for a null handle.
//
// # Safety
// `period` must be null or a live handle.
size_t cflab_period_len(const struct CflabPeriod *period);

// # Safety
// `period` must be null or a handle not yet freed.
void cflab_period_free(struct CflabPeriod *period);

// Reference median parameters of a model.
//
// # Safety
// `out_params` must be writable.
enum CflabStatus cflab_params_median(uint32_t model_code, struct CflabParams **out_params);

// Parameters from a genome in the model's field order; checked against
// the calibration bounds.
//
// # Safety
// `genome` must hold `len` values.
enum CflabStatus cflab_params_from_genome(uint32_t model_code,
                                          const double *genome,
                                          size_t len,
                                          struct CflabParams **out_params);

// Parameters from a JSON object keyed by field name; checked against the
// calibration bounds.
//
// # Safety
// `json` must be a NUL-terminated string.
enum CflabStatus cflab_params_from_json(uint32_t model_code,
                                        const char *json,
                                        struct CflabParams **out_params);

// Model code of the parameters, or `UINT32_MAX` for a null handle.
//
// # Safety
// `params` must be null or a live handle.
uint32_t cflab_params_model(const struct CflabParams *params);

// Number of parameters, or 0 for a null handle.
//
// # Safety
// `params` must be null or a live handle.
size_t cflab_params_dim(const struct CflabParams *params);

// Copies the genome into `buf`, which must hold `cflab_params_dim` values.
//
// # Safety
// `buf` must be writable for `len` values.
enum CflabStatus cflab_params_genome(const struct CflabParams *params, double *buf, size_t len);

// JSON object keyed by field name. Free with `cflab_string_free`.
//
// # Safety
// `out_json` must be writable.
enum CflabStatus cflab_params_to_json(const struct CflabParams *params, char **out_json);

// # Safety
// `s` must be null or a string returned by this library.
void cflab_string_free(char *s);

// # Safety
// `params` must be null or a handle not yet freed.
void cflab_params_free(struct CflabParams *params);

// Replays `period` with `params`. `opts` may be null for the defaults.
//
// # Safety
// Handles must be live; `out_result` must be writable.
enum CflabStatus cflab_simulate(const struct CflabParams *params,
                                const struct CflabPeriod *period,
                                const struct CflabSimOptions *opts,
                                struct CflabSimResult **out_result);

// Number of simulated samples, or 0 for a null handle.
//
// # Safety
// `result` must be null or a live handle.
size_t cflab_sim_result_len(const struct CflabSimResult *result);

// Copies the simulated gaps (m) into `buf`.
//
// # Safety
// `buf` must be writable for `len` values.
enum CflabStatus cflab_sim_result_gap(const struct CflabSimResult *result, double *buf, size_t len);

// Copies the simulated follower speeds (m/s) into `buf`.
//
// # Safety
// `buf` must be writable for `len` values.
enum CflabStatus cflab_sim_result_speed(const struct CflabSimResult *result,
                                        double *buf,
                                        size_t len);

// Copies the accelerations (m/s²) into `buf`.
//
// # Safety
// `buf` must be writable for `len` values.
enum CflabStatus cflab_sim_result_accel(const struct CflabSimResult *result,
                                        double *buf,
                                        size_t len);

// Writes 1 to `collided` if the gap closed, else 0, and the collision
// time to `time` (NaN without a collision). `time` may be null.
//
// # Safety
// `collided` must be writable; `time` null or writable.
enum CflabStatus cflab_sim_result_collision(const struct CflabSimResult *result,
                                            int32_t *collided,
                                            double *time);

// # Safety
// `result` must be null or a handle not yet freed.
void cflab_sim_result_free(struct CflabSimResult *result);

// Root mean square percentage error of `sim` against `obs`.
//
// # Safety
// Both arrays must hold `n` values.
enum CflabStatus cflab_rmspe(const double *sim, const double *obs, size_t n, double *out_value);

// Calibration objective of `params` over `n` periods: spacing RMSPE plus
// the penalty per collided period. Options may be null.
//
// # Safety
// `periods` must hold `n` live handles.
enum CflabStatus cflab_objective(const struct CflabParams *params,
                                 const struct CflabPeriod *const *periods,
                                 size_t n,
                                 const struct CflabSimOptions *sim,
                                 const struct CflabObjectiveOptions *obj,
                                 double *out_value);

// Multistart GA calibration of `model_code` over the full parameter box
// on `n` periods. Options may be null for the defaults.
//
// # Safety
// `periods` must hold `n` live handles; outputs must be writable
// (`out_fitness` may be null).
enum CflabStatus cflab_calibrate(uint32_t model_code,
                                 const struct CflabPeriod *const *periods,
                                 size_t n,
                                 const struct CflabGaOptions *ga,
                                 const struct CflabSimOptions *sim,
                                 const struct CflabObjectiveOptions *obj,
                                 struct CflabParams **out_params,
                                 double *out_fitness);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CFLAB_H */
