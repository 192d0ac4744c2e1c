#ifndef DCC_SIM_H
#define DCC_SIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DccMode {
  DCC_MODE_ADAPTIVE_DCC = 0,
  DCC_MODE_DPA = 1,
} DccMode;

typedef enum DccPriorities {
  DCC_PRIORITIES_EQUAL = 0,
  DCC_PRIORITIES_DIFFERENTIATED = 1,
} DccPriorities;

typedef enum DccScenario {
  DCC_SCENARIO_SINGLE_HOP = 0,
  DCC_SCENARIO_HIGHWAY = 1,
} DccScenario;

/**
 * Result code of every fallible call.
 */
typedef enum DccStatus {
  DCC_STATUS_OK = 0,
  DCC_STATUS_NULL_POINTER = 1,
  DCC_STATUS_INVALID_UTF8 = 2,
  DCC_STATUS_INVALID_ARGUMENT = 3,
  DCC_STATUS_CONFIG = 4,
  DCC_STATUS_IO = 5,
  DCC_STATUS_NOT_FOUND = 6,
  DCC_STATUS_SIMULATION = 7,
  DCC_STATUS_PANIC = 8,
} DccStatus;

/**
 * Opaque scenario configuration.
 */
typedef struct DccConfig DccConfig;

/**
 * Opaque results of one run.
 */
typedef struct DccResults DccResults;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last error raised on this thread, or NULL if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *dcc_last_error_message(void);

/**
 * Creates a configuration with all defaults for a scenario and controller.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DccStatus dcc_config_new(enum DccScenario scenario, enum DccMode mode, struct DccConfig **out);

/**
 * Parses a TOML configuration.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum DccStatus dcc_config_from_toml(const char *toml, struct DccConfig **out);

/**
 * Reads and parses a TOML configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum DccStatus dcc_config_from_file(const char *path, struct DccConfig **out);

/**
 * # Safety
 * `config` must be a handle from this library or NULL.
 */
enum DccStatus dcc_config_set_seed(struct DccConfig *config, uint64_t seed);

/**
 * # Safety
 * `config` must be a handle from this library or NULL.
 */
enum DccStatus dcc_config_set_duration(struct DccConfig *config,
                                       double duration_s,
                                       double warmup_s);

/**
 * # Safety
 * `config` must be a handle from this library or NULL.
 */
enum DccStatus dcc_config_set_priorities(struct DccConfig *config, enum DccPriorities priorities);

/**
 * # Safety
 * `config` must be a handle from this library or NULL; it must not be used
 * afterwards.
 */
void dcc_config_free(struct DccConfig *config);

/**
 * Runs the configured scenario to completion.
 *
 * # Safety
 * `config` must be a handle from this library; `out` must be writable.
 */
enum DccStatus dcc_simulate(const struct DccConfig *config, struct DccResults **out);

/**
 * # Safety
 * `results` must be a handle from this library or NULL; it must not be used
 * afterwards.
 */
void dcc_results_free(struct DccResults *results);

/**
 * Writes the CSV files and `summary.json` into `out_dir`.
 *
 * # Safety
 * `results` must be a handle from this library; `out_dir` a NUL-terminated
 * string.
 */
enum DccStatus dcc_results_export(const struct DccResults *results, const char *out_dir);

/**
 * Post-warm-up payload satisfaction of `service` ("s1", "s2", "s3", "cas",
 * "cps") on vehicles of `group` ("type1".."type3", "cas_cps_low",
 * "cas_cps_high").
 *
 * # Safety
 * `results` must be a handle from this library; strings NUL-terminated;
 * `out` writable.
 */
enum DccStatus dcc_results_satisfaction(const struct DccResults *results,
                                        const char *group,
                                        const char *service,
                                        double *out);

/**
 * Post-warm-up mean delta of vehicles of `group`.
 *
 * # Safety
 * As for [`dcc_results_satisfaction`].
 */
enum DccStatus dcc_results_mean_delta(const struct DccResults *results,
                                      const char *group,
                                      double *out);

/**
 * Nearest-rank percentile `pct` (0..=100) of all post-warm-up CBR samples.
 *
 * # Safety
 * `results` must be a handle from this library; `out` writable.
 */
enum DccStatus dcc_results_cbr_percentile(const struct DccResults *results,
                                          double pct,
                                          double *out);

/**
 * The run's `summary.json` document. Release it with [`dcc_string_free`].
 *
 * # Safety
 * `results` must be a handle from this library; `out` writable.
 */
enum DccStatus dcc_results_summary_json(const struct DccResults *results, char **out);

/**
 * # Safety
 * `s` must come from this library or be NULL.
 */
void dcc_string_free(char *s);

/**
 * Airtime in seconds of a `size_bytes` payload with the default channel
 * parameters (6 Mbit/s, 60 B of headers, 40 us fixed overhead).
 */
double dcc_airtime_of(uint32_t size_bytes);

/**
 * Value of information of an object at `distance` for a sensor of range
 * `d_max`.
 */
double dcc_voi(double distance, double d_max);

/**
 * One LIMERIC step with the default controller parameters and the given
 * gain `beta`. Writes the new delta to `out`.
 *
 * # Safety
 * `out` must be writable.
 */
enum DccStatus dcc_limeric_update(double delta, double beta, double cbr, double *out);

/**
 * Demand-proportional gain for a vehicle whose services require
 * `rates_bps[i]`, counting only entries with `served[i]` set. Uses the
 * default base gain and reference rate.
 *
 * # Safety
 * `rates_bps` and `served` must point to `n` readable elements (or be NULL
 * when `n` is 0); `out` must be writable.
 */
enum DccStatus dcc_compute_beta(const double *rates_bps, const bool *served, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DCC_SIM_H */
