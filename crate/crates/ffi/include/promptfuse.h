#ifndef PROMPTFUSE_H
#define PROMPTFUSE_H

/* Generated by cbindgen from the promptfuse-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code returned by every `pf_` function.
 */
typedef enum {
  /**
   * The call succeeded.
   */
  PF_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PF_STATUS_NULL_ARGUMENT = 1,
  /**
   * A scalar or buffer argument was outside its documented domain.
   */
  PF_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Two rasters that must share a shape did not.
   */
  PF_STATUS_DIMENSION_MISMATCH = 3,
  /**
   * The prediction set holds no maps.
   */
  PF_STATUS_EMPTY_SET = 4,
  /**
   * A file could not be read, written, or decoded.
   */
  PF_STATUS_IO = 5,
  /**
   * An internal panic was caught at the boundary.
   */
  PF_STATUS_PANIC = 6,
} PfStatus;

/**
 * A probability map: a width x height row-major plane of floats in [0, 1].
 *
 * Uncertainty outputs reuse this container because normalized entropy lies
 * in [0, 1] bits and binary variance in [0, 0.25].
 */
typedef struct PfMap PfMap;

/**
 * An ordered collection of equally sized probability maps awaiting fusion.
 */
typedef struct PfSet PfSet;

/**
 * An axis-aligned box prompt with exclusive lower-right corner.
 */
typedef struct {
  uint32_t x0;
  uint32_t y0;
  uint32_t x1;
  uint32_t y1;
} PfBox;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *pf_version(void);

/**
 * Explanation of the most recent failure on this thread.
 *
 * The pointer stays valid until the next failing `pf_` call on the same
 * thread. Before any failure it is the empty string.
 */
const char *pf_last_error_message(void);

/**
 * Creates a probability map from `len` row-major floats in [0, 1].
 *
 * # Safety
 * `values` must point to `len` readable floats; `out_map` must be writable.
 */
PfStatus pf_map_create(uint32_t width,
                       uint32_t height,
                       const float *values,
                       size_t len,
                       PfMap **out_map);

/**
 * Reads a probability map from a PMAP container file.
 *
 * # Safety
 * `path` must be nul-terminated; `out_map` must be writable.
 */
PfStatus pf_map_load(const char *path, PfMap **out_map);

/**
 * Writes a probability map to a PMAP container file.
 *
 * # Safety
 * `map` must be a live handle; `path` must be nul-terminated.
 */
PfStatus pf_map_save(const PfMap *map, const char *path);

/**
 * Reports a map's width in pixels.
 *
 * # Safety
 * `map` must be a live handle; `out_width` must be writable.
 */
PfStatus pf_map_width(const PfMap *map, uint32_t *out_width);

/**
 * Reports a map's height in pixels.
 *
 * # Safety
 * `map` must be a live handle; `out_height` must be writable.
 */
PfStatus pf_map_height(const PfMap *map, uint32_t *out_height);

/**
 * Exposes a map's row-major pixel buffer without copying.
 *
 * The pointer borrows from the handle and dies with it.
 *
 * # Safety
 * `map` must be a live handle; both out pointers must be writable.
 */
PfStatus pf_map_values(const PfMap *map, const float **out_values, size_t *out_len);

/**
 * Releases a map handle. Null is a no-op.
 *
 * # Safety
 * `map` must be null or an unreleased handle from this library.
 */
void pf_map_free(PfMap *map);

/**
 * Creates an empty prediction set.
 *
 * # Safety
 * `out_set` must be writable.
 */
PfStatus pf_set_create(PfSet **out_set);

/**
 * Appends a copy of `map` to the set.
 *
 * Every member must share the first member's shape.
 *
 * # Safety
 * `set` and `map` must be live handles.
 */
PfStatus pf_set_push(PfSet *set, const PfMap *map);

/**
 * Reports how many maps the set holds.
 *
 * # Safety
 * `set` must be a live handle; `out_len` must be writable.
 */
PfStatus pf_set_len(const PfSet *set, size_t *out_len);

/**
 * Releases a set handle. Null is a no-op.
 *
 * # Safety
 * `set` must be null or an unreleased handle from this library.
 */
void pf_set_free(PfSet *set);

/**
 * Fuses the set into one map by per-pixel arithmetic mean.
 *
 * # Safety
 * `set` must be a live handle; `out_map` must be writable.
 */
PfStatus pf_fuse_mean(const PfSet *set, PfMap **out_map);

/**
 * Entropy of the mean prediction, in bits within [0, 1].
 *
 * # Safety
 * `set` must be a live handle; `out_map` must be writable.
 */
PfStatus pf_predictive_entropy(const PfSet *set, PfMap **out_map);

/**
 * Mean of the per-member entropies, in bits within [0, 1].
 *
 * # Safety
 * `set` must be a live handle; `out_map` must be writable.
 */
PfStatus pf_expected_entropy(const PfSet *set, PfMap **out_map);

/**
 * Per-pixel population variance of the members, within [0, 0.25].
 *
 * # Safety
 * `set` must be a live handle; `out_map` must be writable.
 */
PfStatus pf_variance_map(const PfSet *set, PfMap **out_map);

/**
 * Dice overlap between `pred` binarized at `threshold` and `gt` binarized
 * at 0.5. Two empty masks score 1.
 *
 * # Safety
 * `pred` and `gt` must be live handles; `out_value` must be writable.
 */
PfStatus pf_dice(const PfMap *pred, const PfMap *gt, float threshold, double *out_value);

/**
 * Expected calibration error over `bins` confidence bins.
 *
 * # Safety
 * `pred` and `gt` must be live handles; `out_value` must be writable.
 */
PfStatus pf_ece(const PfMap *pred, const PfMap *gt, uint32_t bins, double *out_value);

/**
 * Structure measure with foreground/region trade-off `alpha`.
 *
 * # Safety
 * `pred` and `gt` must be live handles; `out_value` must be writable.
 */
PfStatus pf_s_measure(const PfMap *pred, const PfMap *gt, double alpha, double *out_value);

/**
 * Weighted F-measure with trade-off `beta2` (beta squared).
 *
 * # Safety
 * `pred` and `gt` must be live handles; `out_value` must be writable.
 */
PfStatus pf_weighted_fmeasure(const PfMap *pred, const PfMap *gt, double beta2, double *out_value);

/**
 * All four metrics in the standard configuration: Dice at threshold 0.5,
 * ECE over 10 bins, S-measure at alpha 0.5, weighted F-measure at beta2 1.
 *
 * # Safety
 * `pred` and `gt` must be live handles; all out pointers must be writable.
 */
PfStatus pf_metric_report(const PfMap *pred,
                          const PfMap *gt,
                          double *out_dice,
                          double *out_ece,
                          double *out_sm,
                          double *out_wfm);

/**
 * Samples `m` jittered copies of `base` into `out_boxes`.
 *
 * Each edge displaces by `trunc(u * side)` pixels with `u` uniform in
 * `[-jitter_ratio, jitter_ratio)`, clamped to the image; degenerate draws
 * are resampled. The same arguments always produce the same boxes.
 *
 * # Safety
 * `out_boxes` must point to at least `capacity` writable elements;
 * `out_len` must be writable.
 */
PfStatus pf_jitter_boxes(PfBox base,
                         uint32_t m,
                         double jitter_ratio,
                         uint64_t seed,
                         uint32_t image_width,
                         uint32_t image_height,
                         PfBox *out_boxes,
                         size_t capacity,
                         size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROMPTFUSE_H */
