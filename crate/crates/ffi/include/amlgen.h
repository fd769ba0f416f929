/* amlgen C ABI. Generated by cbindgen; do not edit. */

#ifndef AMLGEN_H
#define AMLGEN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.
typedef enum AmlgenStatus {
  AMLGEN_STATUS_OK = 0,
  AMLGEN_STATUS_NULL_ARGUMENT = 1,
  AMLGEN_STATUS_INVALID_UTF8 = 2,
  AMLGEN_STATUS_CONFIG_ERROR = 3,
  AMLGEN_STATUS_GENERATION_ERROR = 4,
  // The export directory was readable but at least one pattern instance
  // failed structural validation.
  AMLGEN_STATUS_VALIDATION_FAILED = 5,
  AMLGEN_STATUS_IO_ERROR = 6,
  // A result accessor was called before a successful execute.
  AMLGEN_STATUS_NOT_RUN = 7,
} AmlgenStatus;

// One configured generation run. Opaque to C callers.
typedef struct AmlgenRun AmlgenRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a run handle from the two config file paths. Returns null when
// either argument is null or not UTF-8 (details via
// [`amlgen_last_error_message`]).
//
// # Safety
// `graph_config` and `patterns_config` must be valid NUL-terminated
// strings or null.
struct AmlgenRun *amlgen_run_new(const char *graph_config, const char *patterns_config);

// Overrides the master seed from the config file.
//
// # Safety
// `run` must be a live handle from [`amlgen_run_new`].
enum AmlgenStatus amlgen_run_set_seed(struct AmlgenRun *run, uint64_t seed);

// Bounds worker parallelism (0 = library default). Output is invariant to
// this setting.
//
// # Safety
// `run` must be a live handle from [`amlgen_run_new`].
enum AmlgenStatus amlgen_run_set_threads(struct AmlgenRun *run, size_t threads);

// Aborts on the first failed pattern instance instead of skipping it.
//
// # Safety
// `run` must be a live handle from [`amlgen_run_new`].
enum AmlgenStatus amlgen_run_set_strict(struct AmlgenRun *run, bool strict);

// Executes the full pipeline and exports the dataset into `out_dir`.
//
// # Safety
// `run` must be a live handle; `out_dir` a valid NUL-terminated string.
enum AmlgenStatus amlgen_run_execute(struct AmlgenRun *run, const char *out_dir);

// Node count of the last successful run, or 0.
//
// # Safety
// `run` must be a live handle or null.
uint64_t amlgen_run_node_count(const struct AmlgenRun *run);

// Total edge count of the last successful run, or 0.
//
// # Safety
// `run` must be a live handle or null.
uint64_t amlgen_run_edge_count(const struct AmlgenRun *run);

// Fraud transaction edge count of the last successful run, or 0.
//
// # Safety
// `run` must be a live handle or null.
uint64_t amlgen_run_fraud_edge_count(const struct AmlgenRun *run);

// Achieved illicit ratio of the last successful run, or NaN.
//
// # Safety
// `run` must be a live handle or null.
double amlgen_run_achieved_ratio(const struct AmlgenRun *run);

// The manifest of the last successful run as a JSON string, or null if the
// run has not executed. Free with [`amlgen_string_free`].
//
// # Safety
// `run` must be a live handle or null.
char *amlgen_run_manifest_json(const struct AmlgenRun *run);

// Releases a run handle. Null is a no-op.
//
// # Safety
// `run` must come from [`amlgen_run_new`] and not be freed twice.
void amlgen_run_free(struct AmlgenRun *run);

// Re-validates every pattern instance in an export directory. On success
// (even a failing validation) and when `report_json_out` is non-null, it
// receives the full report as JSON; free it with [`amlgen_string_free`].
//
// # Safety
// `dir` must be a valid NUL-terminated string; `report_json_out` must be
// null or point to writable `char*` storage.
enum AmlgenStatus amlgen_validate_dir(const char *dir, char **report_json_out);

// Releases a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must come from an amlgen function and not be freed twice.
void amlgen_string_free(char *s);

// The last error message on this thread, or null. Free with
// [`amlgen_string_free`].
char *amlgen_last_error_message(void);

// Library version as a static string; do not free.
const char *amlgen_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AMLGEN_H */
