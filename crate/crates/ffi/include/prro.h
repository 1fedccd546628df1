#ifndef PRRO_H
#define PRRO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Column layout requested from [`prro_reorder`].
 */
typedef enum {
  PRRO_REORDER_MODE_PREDICTOR_LAST = 0,
  PRRO_REORDER_MODE_PREDICTOR_FIRST = 1,
} PrroReorderMode;

/**
 * Result code of every fallible call.
 */
typedef enum {
  PRRO_STATUS_OK = 0,
  PRRO_STATUS_NULL_POINTER = 1,
  PRRO_STATUS_INVALID_UTF8 = 2,
  PRRO_STATUS_INVALID_ARGUMENT = 3,
  /**
   * Configuration or usage problem.
   */
  PRRO_STATUS_CONFIG = 4,
  /**
   * Input data failed validation.
   */
  PRRO_STATUS_DATA = 5,
  /**
   * A pipeline stage failed.
   */
  PRRO_STATUS_STAGE = 6,
  /**
   * The result is undefined (e.g. zero-variance correlation).
   */
  PRRO_STATUS_UNDEFINED = 7,
  PRRO_STATUS_PANIC = 8,
} PrroStatus;

typedef struct PrroChainModel PrroChainModel;

/**
 * Loaded table together with its positive label.
 */
typedef struct PrroDataset PrroDataset;

typedef struct PrroPermutation PrroPermutation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *prro_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *prro_version(void);

/**
 * Loads a CSV. `label` and `positive` may be null when a schema sidecar
 * next to the file provides them.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
PrroStatus prro_dataset_load(const char *path,
                             const char *label,
                             const char *positive,
                             PrroDataset **out);

/**
 * # Safety
 * `ds` must come from this library and not be used afterwards.
 */
void prro_dataset_free(PrroDataset *ds);

/**
 * Row count, 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t prro_dataset_n_rows(const PrroDataset *ds);

/**
 * Column count (label included), 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t prro_dataset_n_columns(const PrroDataset *ds);

/**
 * Writes the position of the label column.
 *
 * # Safety
 * `ds` must be a live handle and `out` writable.
 */
PrroStatus prro_dataset_label_index(const PrroDataset *ds, size_t *out);

/**
 * Share of rows carrying the positive label.
 *
 * # Safety
 * `ds` must be a live handle and `out` writable.
 */
PrroStatus prro_dataset_positive_rate(const PrroDataset *ds, double *out);

/**
 * # Safety
 * `ds` must be a live handle; `path` NUL-terminated.
 */
PrroStatus prro_dataset_save(const PrroDataset *ds, const char *path);

/**
 * Three-way split with the default 0.4/0.4/0.2 ratios.
 *
 * # Safety
 * `ds` must be a live handle; all three out pointers writable.
 */
PrroStatus prro_split(const PrroDataset *ds,
                      uint64_t seed,
                      bool stratified,
                      PrroDataset **out_generator_train,
                      PrroDataset **out_holdout,
                      PrroDataset **out_validation);

/**
 * Signal-based pruning of the non-positive rows at threshold `tau`.
 *
 * # Safety
 * `ds` must be a live handle and `out` writable.
 */
PrroStatus prro_prune_signal(const PrroDataset *ds, double tau, PrroDataset **out);

/**
 * Moves the label last or first and returns the permutation record.
 *
 * # Safety
 * `ds` must be a live handle; out pointers writable.
 */
PrroStatus prro_reorder(const PrroDataset *ds,
                        PrroReorderMode mode,
                        PrroDataset **out,
                        PrroPermutation **out_permutation);

/**
 * # Safety
 * Handles must be live; `out` writable.
 */
PrroStatus prro_inverse_reorder(const PrroDataset *ds,
                                const PrroPermutation *permutation,
                                PrroDataset **out);

/**
 * # Safety
 * `p` must come from this library and not be used afterwards.
 */
void prro_permutation_free(PrroPermutation *p);

/**
 * Writes row `row` as a `name: value, ...` sentence. Free the string
 * with [`prro_string_free`].
 *
 * # Safety
 * `ds` must be a live handle and `out` writable.
 */
PrroStatus prro_encode_row(const PrroDataset *ds, size_t row, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void prro_string_free(char *s);

/**
 * # Safety
 * `ds` must be a live handle and `out` writable.
 */
PrroStatus prro_chain_fit(const PrroDataset *ds, size_t bins, double alpha, PrroChainModel **out);

/**
 * Draws `n` rows. The result carries `positive` as its positive label
 * (null keeps the label's first category).
 *
 * # Safety
 * `model` must be a live handle, `positive` null or NUL-terminated, `out` writable.
 */
PrroStatus prro_chain_sample(const PrroChainModel *model,
                             size_t n,
                             uint64_t seed,
                             const char *positive,
                             PrroDataset **out);

/**
 * # Safety
 * `m` must come from this library and not be used afterwards.
 */
void prro_chain_free(PrroChainModel *m);

/**
 * Spearman correlation of two equal-length vectors. Returns
 * `Undefined` when either vector is constant.
 *
 * # Safety
 * `a` and `b` must point to `len` readable doubles; `out` writable.
 */
PrroStatus prro_spearman(const double *a, const double *b, size_t len, double *out);

/**
 * `(original - synthetic) / original`.
 *
 * # Safety
 * `out` must be writable.
 */
PrroStatus prro_discount_rate(double original_rate, double synthetic_rate, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRRO_H */
