#ifndef NPP_H
#define NPP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum NppStatus {
  NPP_STATUS_OK = 0,
  NPP_STATUS_NULL_POINTER = 1,
  NPP_STATUS_INVALID_UTF8 = 2,
  NPP_STATUS_PARSE = 3,
  NPP_STATUS_VALIDATION = 4,
  NPP_STATUS_BUDGET = 5,
  NPP_STATUS_NUMERICAL = 6,
  NPP_STATUS_INVALID_ARGUMENT = 7,
  NPP_STATUS_PANIC = 8,
} NppStatus;

/**
 * Opaque instance handle.
 */
typedef struct NppInstance NppInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread. The pointer stays valid until
 * the next failing call on the same thread; never free it.
 */
const char *npp_last_error_message(void);

/**
 * Parses an instance from a nul-terminated JSON document.
 *
 * # Safety
 * `json` must be a valid C string and `out` a writable pointer.
 */
enum NppStatus npp_instance_from_json(const char *json, struct NppInstance **out);

/**
 * Generates a random grid instance with default generator parameters.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum NppStatus npp_instance_generate_grid(uintptr_t side,
                                          uintptr_t commodities,
                                          uint64_t seed,
                                          struct NppInstance **out);

/**
 * Releases an instance. Null is ignored.
 *
 * # Safety
 * `h` must come from this library and not be used afterwards.
 */
void npp_instance_free(struct NppInstance *h);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void npp_string_free(char *s);

/**
 * Serializes an instance to JSON.
 *
 * # Safety
 * `h` must be a live handle and `out` a writable pointer.
 */
enum NppStatus npp_instance_to_json(const struct NppInstance *h, char **out);

/**
 * Sizes of an instance. Any output pointer may be null.
 *
 * # Safety
 * `h` must be a live handle; non-null outputs must be writable.
 */
enum NppStatus npp_instance_counts(const struct NppInstance *h,
                                   uintptr_t *nodes,
                                   uintptr_t *arcs,
                                   uintptr_t *tolled,
                                   uintptr_t *commodities);

/**
 * Solves the instance by branch-and-bound with cuts on `cut_pairs`
 * commodity pairs and writes the solve report as JSON. A non-positive
 * `time_limit_seconds` means no limit.
 *
 * # Safety
 * `h` must be a live handle and `out` a writable pointer.
 */
enum NppStatus npp_solve_report_json(const struct NppInstance *h,
                                     uintptr_t cut_pairs,
                                     double time_limit_seconds,
                                     char **out);

/**
 * Minimum base cost under tolled-arc capacities `w` (one per tolled arc).
 *
 * # Safety
 * `h` must be a live handle, `w` must point to `len` doubles and `out` must
 * be writable.
 */
enum NppStatus npp_conjugate_g(const struct NppInstance *h,
                               const double *w,
                               uintptr_t len,
                               double *out);

/**
 * Classifies an integral reduced reaction; `*is_strong` is set to 1 for
 * strong and 0 for weak.
 *
 * # Safety
 * `h` must be a live handle, `w` must point to `len` doubles and
 * `is_strong` must be writable.
 */
enum NppStatus npp_classify_w(const struct NppInstance *h,
                              const double *w,
                              uintptr_t len,
                              int *is_strong);

/**
 * Demand-weighted follower cost at tolls `t`. `INFINITY` marks an
 * unbounded toll.
 *
 * # Safety
 * `h` must be a live handle, `t` must point to `len` doubles and `out` must
 * be writable.
 */
enum NppStatus npp_follower_cost(const struct NppInstance *h,
                                 const double *t,
                                 uintptr_t len,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NPP_H */
