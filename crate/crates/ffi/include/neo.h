#ifndef NEO_H
#define NEO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Number of numeric features expected by [`neo_predict`].
#define NEO_NUM_FEATURES 8

typedef enum NeoStatus {
  NEO_STATUS_OK = 0,
  NEO_STATUS_NULL_ARGUMENT = 1,
  NEO_STATUS_CONFIG = 2,
  NEO_STATUS_DATA = 3,
  NEO_STATUS_RUNTIME = 4,
  NEO_STATUS_INVALID_UTF8 = 5,
  NEO_STATUS_PANIC = 6,
} NeoStatus;

// Opaque handle to a loaded model bundle.
typedef struct NeoBundle NeoBundle;

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next call into this library on the same thread.
const char *neo_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *neo_version(void);

// Load a bundle file. On success `*out` owns a handle to release with
// [`neo_bundle_free`].
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum NeoStatus neo_bundle_load(const char *path, struct NeoBundle **out);

// Release a handle from [`neo_bundle_load`]. Null is ignored.
//
// # Safety
// `bundle` must be null or a live handle not yet freed.
void neo_bundle_free(struct NeoBundle *bundle);

// Decision threshold stored in the bundle.
//
// # Safety
// `bundle` must be a live handle; `out` must be writable.
enum NeoStatus neo_bundle_threshold(const struct NeoBundle *bundle, double *out);

// Score one candidate. `numeric` points to [`NEO_NUM_FEATURES`] values in
// schema order; NaN marks a missing value.
//
// # Safety
// String arguments must be NUL-terminated; `numeric` must point to
// `NEO_NUM_FEATURES` readable doubles; outputs must be writable.
enum NeoStatus neo_predict(const struct NeoBundle *bundle,
                           const char *peptide_mut,
                           const char *peptide_wt,
                           const char *hla,
                           const double *numeric,
                           double *out_probability,
                           uint8_t *out_label);

// Area under the ROC curve of `scores` against 0/1 `labels`.
//
// # Safety
// `scores` and `labels` must each point to `n` readable values; `out` must
// be writable.
enum NeoStatus neo_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

#endif  /* NEO_H */
