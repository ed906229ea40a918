#ifndef MDI_H
#define MDI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MdiStatus {
  MDI_STATUS_OK = 0,
  MDI_STATUS_NULL_POINTER = 1,
  MDI_STATUS_INVALID_UTF8 = 2,
  MDI_STATUS_IO = 3,
  MDI_STATUS_PARSE = 4,
  MDI_STATUS_INVALID_ARGUMENT = 5,
  MDI_STATUS_NO_COMPLETE_CASES = 6,
  MDI_STATUS_SCHEMA = 7,
  MDI_STATUS_PANIC = 8,
} MdiStatus;

/**
 * Opaque dataset handle.
 */
typedef struct MdiDataset MdiDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Owned by the
 * library; valid until the next failing call on the thread.
 */
const char *mdi_last_error(void);

/**
 * Load a UCI benchmark file with a preset layout ("adult" or "cvrs").
 *
 * # Safety
 * `path` and `preset` must be nul-terminated strings; `out` must be valid
 * for writes.
 */
enum MdiStatus mdi_dataset_load_uci(const char *path, const char *preset, struct MdiDataset **out);

/**
 * Read a dataset in the native format.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be valid for writes.
 */
enum MdiStatus mdi_dataset_read(const char *path, struct MdiDataset **out);

/**
 * Write a dataset in the native format, missing cells as `?`.
 *
 * # Safety
 * `ds` must be a live handle; `path` a nul-terminated string.
 */
enum MdiStatus mdi_dataset_write(const struct MdiDataset *ds, const char *path);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void mdi_dataset_free(struct MdiDataset *ds);

/**
 * # Safety
 * `ds` must be a live handle; `rows` and `features` valid for writes.
 */
enum MdiStatus mdi_dataset_shape(const struct MdiDataset *ds, size_t *rows, size_t *features);

/**
 * # Safety
 * `ds` must be a live handle; `out` valid for writes.
 */
enum MdiStatus mdi_dataset_missing_count(const struct MdiDataset *ds, size_t *out);

/**
 * Missing-pattern summary as a JSON string, freed with `mdi_string_free`.
 *
 * # Safety
 * `ds` must be a live handle; `out` valid for writes.
 */
enum MdiStatus mdi_dataset_pattern_json(const struct MdiDataset *ds, char **out);

/**
 * Raise categorical missingness to `delta` under `mechanism` ("mcar" or
 * "mnar", the latter focused on each feature's mode). The input is left
 * unchanged.
 *
 * # Safety
 * `ds` must be a live handle; `mechanism` a nul-terminated string; `out`
 * valid for writes.
 */
enum MdiStatus mdi_perturb(const struct MdiDataset *ds,
                           const char *mechanism,
                           double delta,
                           uint64_t seed,
                           struct MdiDataset **out);

/**
 * Fit `method` on `train` and fill the missing cells of `target`. `k` is
 * used by "knn" only.
 *
 * # Safety
 * `train` and `target` must be live handles; `method` a nul-terminated
 * string; `out` valid for writes.
 */
enum MdiStatus mdi_impute(const struct MdiDataset *train,
                          const struct MdiDataset *target,
                          const char *method,
                          size_t k,
                          uint64_t seed,
                          struct MdiDataset **out);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void mdi_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MDI_H */
