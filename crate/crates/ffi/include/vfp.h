#ifndef VFP_H
#define VFP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define VFP_STRATEGY_NONE 0

#define VFP_STRATEGY_ZPOS1 1

#define VFP_STRATEGY_ZPOS2 2

#define VFP_STRATEGY_DISTANCING 3

#define VFP_DIRECTION_ASCENDING 0

#define VFP_DIRECTION_DESCENDING 1

#define VFP_SCOPE_TRAIN 0

#define VFP_SCOPE_FULL 1

/**
 * Length of the histogram filled by the convolution budget functions.
 * Entry `i` counts 3x3 windows covering exactly `i` attribute pixels.
 */
#define VFP_COUNTS_LEN 10

/**
 * Number of channels in every rendered image.
 */
#define VFP_CHANNELS 3

/**
 * Result of every fallible call.
 */
typedef enum VfpStatus {
  VFP_STATUS_OK = 0,
  VFP_STATUS_NULL_POINTER = 1,
  VFP_STATUS_INVALID_ARGUMENT = 2,
  VFP_STATUS_FILE_NOT_FOUND = 3,
  VFP_STATUS_IO = 4,
  VFP_STATUS_PARSE = 5,
  VFP_STATUS_INVALID_DATA = 6,
  VFP_STATUS_UNSUPPORTED_DIMS = 7,
  VFP_STATUS_FORMAT = 8,
  VFP_STATUS_NOT_FOUND = 9,
  VFP_STATUS_BUFFER_TOO_SMALL = 10,
  VFP_STATUS_PANIC = 11,
  VFP_STATUS_INTERNAL = 12,
} VfpStatus;

/**
 * A loaded, split, imputed, scaled and ranked dataset.
 */
typedef struct VfpPipeline VfpPipeline;

/**
 * A decoded tensor file.
 */
typedef struct VfpTensor VfpTensor;

typedef struct VfpOptions {
  uint32_t strategy;
  uint32_t direction;
  /**
   * Training fraction, strictly between 0 and 1.
   */
  double ratio;
  uint64_t seed;
  uint32_t corr_scope;
} VfpOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *vfp_version(void);

/**
 * Message for the last failed call on this thread, or NULL if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *vfp_last_error_message(void);

/**
 * Static name of a status code, e.g. `"VFP_STATUS_OK"`, or NULL for a
 * value outside the enum.
 */
const char *vfp_status_name(int32_t status);

/**
 * Defaults: distancing, ascending, ratio 0.8, seed 1000, train scope.
 */
struct VfpOptions vfp_options_default(void);

/**
 * Grid dimensions for `k` attributes.
 */
enum VfpStatus vfp_derive_dims(size_t k, size_t *m, size_t *n);

/**
 * Image height and width for an `m` x `n` grid under `strategy`.
 */
enum VfpStatus vfp_image_size(uint32_t strategy_code,
                              size_t m,
                              size_t n,
                              size_t *height,
                              size_t *width);

/**
 * Closed-form window-coverage histogram. `counts` must hold
 * `VFP_COUNTS_LEN` entries; `total` may be NULL.
 */
enum VfpStatus vfp_conv_closed_form(uint32_t strategy_code,
                                    size_t m,
                                    size_t n,
                                    uint64_t *counts,
                                    uint64_t *total);

/**
 * Same as [`vfp_conv_closed_form`] but by sliding a 3x3 window over the
 * occupancy mask.
 */
enum VfpStatus vfp_conv_brute_force(uint32_t strategy_code,
                                    size_t m,
                                    size_t n,
                                    uint64_t *counts,
                                    uint64_t *total);

/**
 * Pearson correlation of two equally long series.
 */
enum VfpStatus vfp_pearson(const double *a, const double *b, size_t len, double *out);

/**
 * Load a CSV and prepare it for rendering. `options` may be NULL for
 * defaults. Missing-value tokens are the empty string, `NA` and `NaN`.
 * On success `*out` receives a handle to free with [`vfp_pipeline_free`].
 */
enum VfpStatus vfp_pipeline_load(const char *csv_path,
                                 const char *label_column,
                                 const struct VfpOptions *options,
                                 struct VfpPipeline **out);

void vfp_pipeline_free(struct VfpPipeline *pipeline);

enum VfpStatus vfp_pipeline_num_samples(const struct VfpPipeline *pipeline, size_t *out);

enum VfpStatus vfp_pipeline_num_attributes(const struct VfpPipeline *pipeline, size_t *out);

/**
 * Shape of every rendered tensor. Any output pointer may be NULL.
 */
enum VfpStatus vfp_pipeline_image_shape(const struct VfpPipeline *pipeline,
                                        size_t *channels,
                                        size_t *height,
                                        size_t *width);

/**
 * Attribute rank order: `order[r]` is the column index placed at rank `r`.
 * `order` must hold as many entries as there are attributes.
 */
enum VfpStatus vfp_pipeline_order(const struct VfpPipeline *pipeline, size_t *order, size_t len);

/**
 * 1 if the sample belongs to the training split, 0 otherwise.
 */
enum VfpStatus vfp_pipeline_is_train(const struct VfpPipeline *pipeline,
                                     size_t sample_id,
                                     int32_t *out);

/**
 * Copy the label of a sample into `buf` as a NUL-terminated string.
 * `needed` (may be NULL) receives the required size including the NUL.
 * Passing a NULL `buf` with `cap` 0 only queries the size.
 */
enum VfpStatus vfp_pipeline_label(const struct VfpPipeline *pipeline,
                                  size_t sample_id,
                                  char *buf,
                                  size_t cap,
                                  size_t *needed);

/**
 * Render one sample as a channel-major `3 x H x W` float tensor into `buf`,
 * which must hold at least `3 * H * W` floats.
 */
enum VfpStatus vfp_pipeline_render(const struct VfpPipeline *pipeline,
                                   size_t sample_id,
                                   float *buf,
                                   size_t len);

/**
 * Write manifests, tensors and optionally PNG previews under `out_dir`.
 * `written` (may be NULL) receives the number of samples emitted.
 */
enum VfpStatus vfp_pipeline_emit(const struct VfpPipeline *pipeline,
                                 const char *out_dir,
                                 bool emit_png,
                                 size_t *written);

/**
 * Read a tensor file. On success `*out` receives a handle to free with
 * [`vfp_tensor_free`].
 */
enum VfpStatus vfp_tensor_read(const char *path, struct VfpTensor **out);

void vfp_tensor_free(struct VfpTensor *tensor);

/**
 * Any output pointer may be NULL.
 */
enum VfpStatus vfp_tensor_shape(const struct VfpTensor *tensor,
                                size_t *channels,
                                size_t *height,
                                size_t *width);

/**
 * Borrowed pointer to the channel-major payload, valid until the handle
 * is freed. `len` (may be NULL) receives the number of floats.
 */
const float *vfp_tensor_data(const struct VfpTensor *tensor, size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VFP_H */
