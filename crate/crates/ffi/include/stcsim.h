#ifndef STCSIM_H
#define STCSIM_H

/* Generated by cbindgen from crates/ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// The run completed (possibly truncated at the event cap; see the summary).
#define STCSIM_OK 0

// The configuration failed to parse or validate.
#define STCSIM_ERR_CONFIG 1

// The run completed but a verification monitor flagged the trace. The
// handle is still valid so the violation details can be read.
#define STCSIM_ERR_MONITOR 2

// `stcsim_check`: the parameters carry no convergence guarantee.
#define STCSIM_ERR_INFEASIBLE 3

// A required pointer was null or a string was not valid UTF-8.
#define STCSIM_ERR_ARGUMENT 4

// An internal invariant failed; the operation was aborted safely.
#define STCSIM_ERR_INTERNAL 5

// A completed simulation: trace, events, summary, and monitor verdicts.
// Opaque; create with `stcsim_run_new`, release with `stcsim_run_free`.
typedef struct StcsimRun StcsimRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parse `config_json` and simulate it. On `STCSIM_OK` and
// `STCSIM_ERR_MONITOR`, `*out_run` receives a handle the caller must free;
// on any other status `*out_run` is set to null.
//
// # Safety
// `config_json` must be a NUL-terminated string or null; `out_run` must be
// a valid pointer to writable memory or null.
int stcsim_run_new(const char *config_json, struct StcsimRun **out_run);

// Release a handle returned by `stcsim_run_new`. Null is a no-op.
//
// # Safety
// `run` must be a handle from `stcsim_run_new` not yet freed, or null.
void stcsim_run_free(struct StcsimRun *run);

// The run summary as pretty-printed JSON, or null on a null handle.
// Release with `stcsim_string_free`.
//
// # Safety
// `run` must be a live handle from `stcsim_run_new`, or null.
char *stcsim_run_summary_json(const struct StcsimRun *run);

// The state/control trace as CSV (`t,x_0..,u_0..`), or null on a null
// handle. Release with `stcsim_string_free`.
//
// # Safety
// `run` must be a live handle from `stcsim_run_new`, or null.
char *stcsim_run_trace_csv(const struct StcsimRun *run);

// The discrete-event log as CSV (`t,kind,id,value,control,wait`), or null
// on a null handle. Release with `stcsim_string_free`.
//
// # Safety
// `run` must be a live handle from `stcsim_run_new`, or null.
char *stcsim_run_events_csv(const struct StcsimRun *run);

// 1 if every applicable verification monitor passed, 0 if any flagged the
// trace, -1 on a null handle.
//
// # Safety
// `run` must be a live handle from `stcsim_run_new`, or null.
int stcsim_run_monitors_passed(const struct StcsimRun *run);

// Evaluate the configuration's dwell floors and feasibility margins
// without simulating. Returns `STCSIM_OK` when the guarantees hold,
// `STCSIM_ERR_INFEASIBLE` when some condition fails, `STCSIM_ERR_CONFIG`
// on malformed input. If `out_report_json` is non-null it receives the
// report as JSON on both OK and INFEASIBLE (release with
// `stcsim_string_free`).
//
// # Safety
// `config_json` must be a NUL-terminated string or null; `out_report_json`
// must be a valid pointer to writable memory or null.
int stcsim_check(const char *config_json, char **out_report_json);

// Release a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must be a string returned by this library not yet freed, or null.
void stcsim_string_free(char *s);

// The library version as a static string; do not free.
const char *stcsim_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STCSIM_H */
