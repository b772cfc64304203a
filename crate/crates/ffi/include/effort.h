#ifndef EFFORT_H
#define EFFORT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EffortStatus {
  EFFORT_STATUS_OK = 0,
  EFFORT_STATUS_NULL_POINTER = 1,
  EFFORT_STATUS_INVALID_ARGUMENT = 2,
  EFFORT_STATUS_DATA_ERROR = 3,
  EFFORT_STATUS_NUMERIC_ERROR = 4,
  EFFORT_STATUS_NETWORK_ERROR = 5,
  EFFORT_STATUS_PANIC = 6,
} EffortStatus;

// Loaded dataset.
typedef struct EffortDataset EffortDataset;

// Trained estimator.
typedef struct EffortModel EffortModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *effort_version(void);

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call into the library from the same thread.
const char *effort_last_error(void);

// Loads a bundled dataset by name.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum EffortStatus effort_dataset_builtin(const char *name, struct EffortDataset **out);

// Loads a CSV file described by a schema sidecar.
//
// # Safety
// Both paths must be NUL-terminated strings and `out` a valid pointer.
enum EffortStatus effort_dataset_load(const char *csv_path,
                                      const char *schema_path,
                                      struct EffortDataset **out);

// # Safety
// `dataset` must come from this library and not be used afterwards.
void effort_dataset_free(struct EffortDataset *dataset);

// Number of rows; 0 for a null handle.
//
// # Safety
// `dataset` must be null or a live handle.
size_t effort_dataset_rows(const struct EffortDataset *dataset);

// Number of predictor columns; 0 for a null handle.
//
// # Safety
// `dataset` must be null or a live handle.
size_t effort_dataset_cols(const struct EffortDataset *dataset);

// Trains a regression tree. `max_depth` of 0 means unbounded.
//
// # Safety
// `dataset` must be a live handle and `out` a valid pointer.
enum EffortStatus effort_cart_train(const struct EffortDataset *dataset,
                                    double max_features_fraction,
                                    size_t max_depth,
                                    size_t min_sample_split,
                                    size_t min_samples_leaf,
                                    uint64_t seed,
                                    struct EffortModel **out);

// Tunes a tree with FLASH on a validation split, then refits it on the
// whole dataset.
//
// # Safety
// `dataset` must be a live handle and `out` a valid pointer.
enum EffortStatus effort_rome_tune(const struct EffortDataset *dataset,
                                   size_t budget,
                                   uint64_t seed,
                                   struct EffortModel **out);

// Predicts one row of `len` predictor values.
//
// # Safety
// `model` must be a live handle, `row` must point to `len` doubles and
// `out` must be a valid pointer.
enum EffortStatus effort_model_predict(const struct EffortModel *model,
                                       const double *row,
                                       size_t len,
                                       double *out);

// # Safety
// `model` must come from this library and not be used afterwards.
void effort_model_free(struct EffortModel *model);

// Magnitude of relative error.
//
// # Safety
// `out` must be a valid pointer.
enum EffortStatus effort_mre(double actual, double predicted, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EFFORT_H */
