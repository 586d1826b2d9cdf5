#ifndef CANDID_H
#define CANDID_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CANDID_STATUS_OK = 0,
  CANDID_STATUS_NULL_POINTER = 1,
  CANDID_STATUS_INVALID_ARGUMENT = 2,
  CANDID_STATUS_DIMENSION_MISMATCH = 3,
  CANDID_STATUS_CONFIG_ERROR = 4,
  CANDID_STATUS_IO_ERROR = 5,
  CANDID_STATUS_DATA_ERROR = 6,
  CANDID_STATUS_PANIC = 7,
} CandidStatus;

/**
 * Opaque segmentation engine.
 */
typedef struct CandidEngine CandidEngine;

/**
 * Engine parameters. Obtain defaults from [`candid_params_default`].
 */
typedef struct {
  uint32_t init_frames;
  double alpha;
  double beta;
  uint32_t samples;
  double gamma;
  double xi;
  uint32_t min_matches;
  double t_min;
  double t_max;
  uint32_t median_window;
  uint64_t seed;
} CandidParams;

typedef struct {
  double precision;
  double recall;
  double f_measure;
  double specificity;
  double pwc;
  /**
   * Non-zero when any ratio had a zero denominator and was reported as 0.
   */
  uint8_t degenerate;
} CandidMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *candid_last_error_message(void);

/**
 * # Safety
 * `out` must be NULL or point to writable memory for one `CandidParams`.
 */
CandidStatus candid_params_default(CandidParams *out);

/**
 * Create an engine for `width` x `height` frames.
 *
 * # Safety
 * `params` must point to a valid `CandidParams`; `out` must be writable.
 */
CandidStatus candid_engine_new(const CandidParams *params,
                               uint32_t width,
                               uint32_t height,
                               CandidEngine **out);

/**
 * Create an engine from a `key = value` config file.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
 */
CandidStatus candid_engine_new_from_config(const char *path,
                                           uint32_t width,
                                           uint32_t height,
                                           CandidEngine **out);

/**
 * Feed one 8-bit grayscale frame of `len` bytes, row-major without padding.
 * Writes the binary mask (0 or 255 per pixel) into `mask_out`, which must
 * hold the same number of bytes, and sets `*warmup` to 1 while the model is
 * still being initialized.
 *
 * # Safety
 * `engine` must come from `candid_engine_new*`. `frame` and `mask_out` must
 * each be valid for `len` bytes. `warmup` may be NULL.
 */
CandidStatus candid_engine_push_frame(CandidEngine *engine,
                                      const uint8_t *frame,
                                      size_t len,
                                      uint8_t *mask_out,
                                      uint8_t *warmup);

/**
 * Number of frames consumed so far.
 *
 * # Safety
 * `engine` must be NULL or a live handle.
 */
uint64_t candid_engine_frame_index(const CandidEngine *engine);

/**
 * # Safety
 * `engine` must be NULL or a handle not yet freed.
 */
void candid_engine_free(CandidEngine *engine);

/**
 * Precision, recall, F-measure, specificity and PWC from confusion counts.
 *
 * # Safety
 * `out` must point to writable memory for one `CandidMetrics`.
 */
CandidStatus candid_metrics_from_counts(uint64_t tp,
                                        uint64_t fp,
                                        uint64_t tn,
                                        uint64_t fn_,
                                        CandidMetrics *out);

/**
 * Square median filter with edge replication. `window` must be odd.
 *
 * # Safety
 * `src` and `dst` must each be valid for `width * height` bytes and must not
 * overlap.
 */
CandidStatus candid_median_filter(const uint8_t *src,
                                  uint8_t *dst,
                                  uint32_t width,
                                  uint32_t height,
                                  uint32_t window);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CANDID_H */
