#ifndef CARAVEL_H
#define CARAVEL_H

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum CaravelStatus {
  CARAVEL_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CARAVEL_STATUS_NULL_ARGUMENT = 1,
  /**
   * Arguments were readable but not acceptable (bad dims, spacing, config, UTF-8, region).
   */
  CARAVEL_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A file could not be read.
   */
  CARAVEL_STATUS_IO = 3,
  /**
   * A file or JSON document was malformed.
   */
  CARAVEL_STATUS_FORMAT = 4,
  /**
   * Mask and atlas grids differ.
   */
  CARAVEL_STATUS_DIMENSION_MISMATCH = 5,
  /**
   * The name is not one of the feature names.
   */
  CARAVEL_STATUS_UNKNOWN_FEATURE = 6,
  /**
   * The feature exists but is undefined for this input; the value is NaN.
   */
  CARAVEL_STATUS_UNDEFINED = 7,
  /**
   * A bug inside the library; the handle arguments are left untouched.
   */
  CARAVEL_STATUS_PANIC = 8,
} CaravelStatus;

/**
 * Global and per-territory features of one mask.
 */
typedef struct CaravelFeatures CaravelFeatures;

/**
 * A binary vessel mask with its voxel spacing.
 */
typedef struct CaravelVolume CaravelVolume;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *caravel_version(void);

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next library call on this thread.
 */
const char *caravel_last_error(void);

/**
 * Number of scalar features per scope.
 */
size_t caravel_feature_count(void);

/**
 * Static name of feature `index`, or null when out of range.
 */
const char *caravel_feature_name(size_t index);

/**
 * Loads a mask from a NIfTI (`.nii`, `.nii.gz`) or CVOL file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CaravelStatus caravel_volume_load(const char *path, struct CaravelVolume **out);

/**
 * Builds a mask from `dims[0]*dims[1]*dims[2]` bytes, x fastest, 0 or 1 each.
 *
 * # Safety
 * `dims` and `spacing` must point to 3 values, `data` to the full voxel
 * count, and `out` must be writable. The data is copied.
 */
enum CaravelStatus caravel_volume_from_buffer(const uint8_t *data,
                                              const size_t *dims,
                                              const double *spacing,
                                              struct CaravelVolume **out);

/**
 * Grid size, spacing (mm) and foreground voxel count. Any output may be null.
 *
 * # Safety
 * `volume` must be a live handle; non-null `dims` and `spacing` must hold 3
 * values and `foreground` 1.
 */
enum CaravelStatus caravel_volume_info(const struct CaravelVolume *volume,
                                       size_t *dims,
                                       double *spacing,
                                       size_t *foreground);

/**
 * Releases a volume; null is ignored.
 *
 * # Safety
 * `volume` must come from this library and not be used afterwards.
 */
void caravel_volume_free(struct CaravelVolume *volume);

/**
 * Global features of a mask. `config_json` (a run configuration as written
 * next to CLI outputs) and `subject_id` may be null for defaults.
 *
 * # Safety
 * `volume` must be a live handle, string arguments NUL-terminated or null,
 * and `out` writable.
 */
enum CaravelStatus caravel_extract(const struct CaravelVolume *volume,
                                   const char *config_json,
                                   const char *subject_id,
                                   struct CaravelFeatures **out);

/**
 * Global and per-territory features. `labels` holds one territory id per
 * voxel on the mask grid, x fastest; 0 is background.
 *
 * # Safety
 * As [`caravel_extract`]; `labels` must hold `labels_len` values.
 */
enum CaravelStatus caravel_extract_regional(const struct CaravelVolume *volume,
                                            const uint32_t *labels,
                                            size_t labels_len,
                                            const char *config_json,
                                            const char *subject_id,
                                            struct CaravelFeatures **out);

/**
 * Number of territories reported (0 for a global-only extraction).
 *
 * # Safety
 * `features` must be a live handle and `count` writable.
 */
enum CaravelStatus caravel_features_region_count(const struct CaravelFeatures *features,
                                                 size_t *count);

/**
 * Territory id at `index`, ascending.
 *
 * # Safety
 * `features` must be a live handle and `region_id` writable.
 */
enum CaravelStatus caravel_features_region_id(const struct CaravelFeatures *features,
                                              size_t index,
                                              uint32_t *region_id);

/**
 * One scalar feature of a scope: `region_id` 0 is the whole mask. Undefined
 * features write NaN and return `CARAVEL_STATUS_UNDEFINED` with the reason.
 *
 * # Safety
 * `features` must be a live handle, `name` NUL-terminated and `value` writable.
 */
enum CaravelStatus caravel_features_get(const struct CaravelFeatures *features,
                                        uint32_t region_id,
                                        const char *name,
                                        double *value);

/**
 * JSON records for every scope, as written by `caravel extract`. Release
 * the string with [`caravel_string_free`].
 *
 * # Safety
 * `features` must be a live handle and `json` writable.
 */
enum CaravelStatus caravel_features_to_json(const struct CaravelFeatures *features, char **json);

/**
 * Releases a feature set; null is ignored.
 *
 * # Safety
 * `features` must come from this library and not be used afterwards.
 */
void caravel_features_free(struct CaravelFeatures *features);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void caravel_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CARAVEL_H */
