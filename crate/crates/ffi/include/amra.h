#ifndef AMRA_H
#define AMRA_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum AmraStatus {
  AMRA_STATUS_OK = 0,
  AMRA_STATUS_NULL_POINTER = 1,
  AMRA_STATUS_INVALID_SPEC = 2,
  AMRA_STATUS_INVALID_ARGUMENT = 3,
  AMRA_STATUS_SIZE = 4,
  AMRA_STATUS_LAYOUT = 5,
  AMRA_STATUS_SHAPE = 6,
  AMRA_STATUS_FORMAT = 7,
  AMRA_STATUS_IO = 8,
  AMRA_STATUS_INTERNAL = 9,
} AmraStatus;

// Coefficients plus their sub-band layout.
typedef struct AmraCoefficients AmraCoefficients;

// A feature tensor or image.
typedef struct AmraImage AmraImage;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Forward transform of a `rows × cols × channels` image.
//
// # Safety
// `data` must point to `rows·cols·channels` doubles, `spec` to a
// NUL-terminated string and `out` to writable storage for one pointer.
enum AmraStatus amra_transform(const double *data,
                               size_t rows,
                               size_t cols,
                               size_t channels,
                               const char *spec,
                               struct AmraCoefficients **out);

// Inverse transform into a caller buffer of `len` doubles; the required
// size comes from [`amra_coefficients_input_shape`].
//
// # Safety
// `c` must be a live handle and `buf` must hold `len` doubles.
enum AmraStatus amra_inverse(const struct AmraCoefficients *c, double *buf, size_t len);

// Block-wise normalized copy of `c`.
//
// # Safety
// `c` must be a live handle and `out` writable.
enum AmraStatus amra_normalize(const struct AmraCoefficients *c, struct AmraCoefficients **out);

// Classifier-ready features (transform, optional normalization, packet
// stacking) of an image.
//
// # Safety
// As for [`amra_transform`].
enum AmraStatus amra_extract_features(const double *data,
                                      size_t rows,
                                      size_t cols,
                                      size_t channels,
                                      const char *spec,
                                      struct AmraImage **out);

// Canvas shape of the coefficients.
//
// # Safety
// `c` must be a live handle; the out pointers must be writable.
enum AmraStatus amra_coefficients_shape(const struct AmraCoefficients *c,
                                        size_t *rows,
                                        size_t *cols,
                                        size_t *channels);

// Shape of the image the coefficients reconstruct to.
//
// # Safety
// As for [`amra_coefficients_shape`].
enum AmraStatus amra_coefficients_input_shape(const struct AmraCoefficients *c,
                                              size_t *rows,
                                              size_t *cols,
                                              size_t *channels);

// Borrowed pointer to the canvas values (valid until the handle is freed);
// null for a null handle.
//
// # Safety
// `c` must be null or a live handle.
const double *amra_coefficients_data(const struct AmraCoefficients *c);

// Layout record as JSON; free with [`amra_string_free`]. Null on error.
//
// # Safety
// `c` must be null or a live handle.
char *amra_coefficients_layout_json(const struct AmraCoefficients *c);

// Rebuilds a handle from canvas values and a layout JSON string.
//
// # Safety
// `data` must hold `rows·cols·channels` doubles; `layout_json` must be
// NUL-terminated; `out` writable.
enum AmraStatus amra_coefficients_from_parts(const double *data,
                                             size_t rows,
                                             size_t cols,
                                             size_t channels,
                                             const char *layout_json,
                                             struct AmraCoefficients **out);

// # Safety
// `c` must be null or a handle not freed before.
void amra_coefficients_free(struct AmraCoefficients *c);

// # Safety
// `img` must be a live handle; the out pointers must be writable.
enum AmraStatus amra_image_shape(const struct AmraImage *img,
                                 size_t *rows,
                                 size_t *cols,
                                 size_t *channels);

// Borrowed pointer to the image values; null for a null handle.
//
// # Safety
// `img` must be null or a live handle.
const double *amra_image_data(const struct AmraImage *img);

// # Safety
// `img` must be null or a handle not freed before.
void amra_image_free(struct AmraImage *img);

// Message of the last failed call on this thread (null if none). The
// pointer stays valid until the next call on this thread.
const char *amra_last_error_message(void);

// Library version (static string).
const char *amra_version(void);

// # Safety
// `s` must be null or a string returned by this library, not freed before.
void amra_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AMRA_H */
