#ifndef VESONET_H
#define VESONET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  VESONET_POLICY_VESONET = 0,
  VESONET_POLICY_BASELINE_NO_REROUTE = 1,
} VesonetPolicy;

typedef enum {
  VESONET_STATUS_OK = 0,
  VESONET_STATUS_NULL_POINTER = 1,
  VESONET_STATUS_INVALID_UTF8 = 2,
  VESONET_STATUS_INVALID_SCENARIO = 3,
  VESONET_STATUS_RUNTIME = 4,
  VESONET_STATUS_IO = 5,
  /**
   * The metric exists but has no value for this run.
   */
  VESONET_STATUS_NOT_AVAILABLE = 6,
  VESONET_STATUS_UNKNOWN_METRIC = 7,
  VESONET_STATUS_BUFFER_TOO_SMALL = 8,
  VESONET_STATUS_AUDIT_FAILED = 9,
  VESONET_STATUS_PANIC = 10,
} VesonetStatus;

/**
 * The result of one simulation run.
 */
typedef struct VesonetRun VesonetRun;

/**
 * A validated scenario.
 */
typedef struct VesonetScenario VesonetScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *vesonet_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *vesonet_version(void);

/**
 * Parses and validates a scenario JSON document. Relative file paths in the
 * document are resolved against `base_dir` when it is not null.
 *
 * # Safety
 * `json` and `base_dir` must be null or NUL-terminated strings; `out` must
 * be a valid pointer to write the handle to.
 */
VesonetStatus vesonet_scenario_from_json(const char *json,
                                         const char *base_dir,
                                         VesonetScenario **out);

/**
 * # Safety
 * `sc` must be null or a handle from [`vesonet_scenario_from_json`] not yet freed.
 */
void vesonet_scenario_free(VesonetScenario *sc);

/**
 * # Safety
 * `sc` must be a live scenario handle.
 */
VesonetStatus vesonet_scenario_set_seed(VesonetScenario *sc, uint64_t seed);

/**
 * # Safety
 * `sc` must be a live scenario handle.
 */
VesonetStatus vesonet_scenario_set_policy(VesonetScenario *sc, VesonetPolicy policy);

/**
 * Runs the scenario to completion.
 *
 * # Safety
 * `sc` must be a live scenario handle and `out` a valid pointer.
 */
VesonetStatus vesonet_run(const VesonetScenario *sc, VesonetRun **out);

/**
 * # Safety
 * `run` must be null or a handle from [`vesonet_run`] not yet freed.
 */
void vesonet_run_free(VesonetRun *run);

/**
 * Reads one metric by its `metrics.csv` name, e.g. `delivery_rate`.
 *
 * # Safety
 * `run` must be a live run handle, `name` a NUL-terminated string and
 * `value` a valid pointer.
 */
VesonetStatus vesonet_run_metric(const VesonetRun *run, const char *name, double *value);

/**
 * Number of rows in the event log, header excluded.
 *
 * # Safety
 * `run` must be a live run handle.
 */
size_t vesonet_run_event_count(const VesonetRun *run);

/**
 * Copies the event-log CSV into `buf` with a trailing NUL. `needed` receives
 * the required size including the NUL, so a first call with a null buffer
 * and zero capacity sizes the second.
 *
 * # Safety
 * `run` must be a live run handle, `buf` null or writable for `cap` bytes,
 * `needed` null or a valid pointer.
 */
VesonetStatus vesonet_run_events_csv(const VesonetRun *run, char *buf, size_t cap, size_t *needed);

/**
 * Writes the event-log CSV to `path`.
 *
 * # Safety
 * `run` must be a live run handle and `path` a NUL-terminated string.
 */
VesonetStatus vesonet_run_write_events(const VesonetRun *run, const char *path);

/**
 * Audits an event-log CSV: recomputes the metrics, checks invariants and,
 * when `metrics_csv` is not null, compares against that runner report.
 * `problems` receives the number of violations and mismatches found.
 *
 * # Safety
 * `events_csv` must be a NUL-terminated string, `metrics_csv` null or one,
 * and `problems` null or a valid pointer.
 */
VesonetStatus vesonet_audit(const char *events_csv, const char *metrics_csv, size_t *problems);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VESONET_H */
