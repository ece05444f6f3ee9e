#ifndef CSI_H
#define CSI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  /**
   * The call succeeded.
   */
  CSI_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CSI_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument value was out of range or malformed.
   */
  CSI_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A shape or pose failed geometric validation.
   */
  CSI_STATUS_INVALID_GEOMETRY = 3,
  /**
   * Raster bytes could not be parsed.
   */
  CSI_STATUS_PARSE_ERROR = 4,
  /**
   * Detector rates are mutually inconsistent.
   */
  CSI_STATUS_INCONSISTENT = 5,
  /**
   * The requested distribution carries no usable mass.
   */
  CSI_STATUS_DEGENERATE = 6,
  /**
   * The request exceeds a resource budget.
   */
  CSI_STATUS_RESOURCE_LIMIT = 7,
  /**
   * Unexpected internal failure.
   */
  CSI_STATUS_INTERNAL = 8,
} CsiStatus;

/**
 * Opaque transmission map handle.
 */
typedef struct CsiMap CsiMap;

/**
 * Opaque joint spectrum handle.
 */
typedef struct CsiSpectrum CsiSpectrum;

/**
 * Opaque amplitude table handle.
 */
typedef struct CsiTable CsiTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a map from a shape description such as `disc:1` or `star:5`.
 * On success writes a new handle to `out`.
 *
 * # Safety
 * `desc` must be a valid NUL-terminated string; `out` must be writable.
 */
CsiStatus csi_map_shape(const char *desc, CsiMap **out);

/**
 * Create a map from PGM bytes (P2 or P5). `pitch` is the world width of
 * one pixel; (`origin_x`, `origin_y`) is the world position of the raster
 * center. On success writes a new handle to `out`.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; `out` must be writable.
 */
CsiStatus csi_map_raster_pgm(const uint8_t *bytes,
                             size_t len,
                             double pitch,
                             double origin_x,
                             double origin_y,
                             CsiMap **out);

/**
 * Replace the map's pose: scale, then clockwise rotation by `rotation`
 * radians, then translation.
 *
 * # Safety
 * `map` must be a live handle from a `csi_map_*` constructor.
 */
CsiStatus csi_map_pose(CsiMap *map, double rotation, double dx, double dy, double scale);

/**
 * Set or clear the inverted transmission convention (T -> 1 - T).
 *
 * # Safety
 * `map` must be a live handle from a `csi_map_*` constructor.
 */
CsiStatus csi_map_set_invert(CsiMap *map, int invert);

/**
 * Sample the transmission at a world point.
 *
 * # Safety
 * `map` must be a live handle; `out` must be writable.
 */
CsiStatus csi_map_sample(const CsiMap *map, double x, double y, double *out);

/**
 * Release a map handle. A null pointer is ignored.
 *
 * # Safety
 * `map` must be null or a live handle; it must not be used afterwards.
 */
void csi_map_free(CsiMap *map);

/**
 * Compute the transition-amplitude table of `map` for |l| <= l_max,
 * p <= p_max on an (half_width, n) midpoint grid. Pass
 * `grid_half_width <= 0` or `grid_n == 0` to use the defaults.
 *
 * # Safety
 * `map` must be a live handle; `out` must be writable.
 */
CsiStatus csi_table_compute(const CsiMap *map,
                            uint32_t l_max,
                            uint32_t p_max,
                            double grid_half_width,
                            size_t grid_n,
                            CsiTable **out);

/**
 * Read one complex entry of the table.
 *
 * # Safety
 * `table` must be a live handle; `re` and `im` must be writable.
 */
CsiStatus csi_table_get(const CsiTable *table,
                        int32_t l_out,
                        uint32_t p_out,
                        int32_t l_in,
                        uint32_t p_in,
                        double *re,
                        double *im);

/**
 * Release a table handle. A null pointer is ignored.
 *
 * # Safety
 * `table` must be null or a live handle; it must not be used afterwards.
 */
void csi_table_free(CsiTable *table);

/**
 * Singles rates of the two detection ports for amplitude (re, im).
 *
 * # Safety
 * `n_plus` and `n_minus` must be writable.
 */
CsiStatus csi_singles_rates(double re, double im, double *n_plus, double *n_minus);

/**
 * Recover the amplitude from the two singles rates. `re_magnitude`
 * receives |Re a| — the sign is not observable; `im` is exact.
 *
 * # Safety
 * `re_magnitude` and `im` must be writable.
 */
CsiStatus csi_invert_rates(double n_plus, double n_minus, double *re_magnitude, double *im);

/**
 * Build the joint coincidence spectrum of a table. `gamma <= 0` selects
 * flat source weights, otherwise weights decay as gamma^(|l|+p). Nonzero
 * `zero_diagonal` removes the conserved diagonal and renormalizes.
 *
 * # Safety
 * `table` must be a live handle; `out` must be writable.
 */
CsiStatus csi_spectrum_compute(const CsiTable *table,
                               double gamma,
                               int zero_diagonal,
                               CsiSpectrum **out);

/**
 * Read one probability of the joint spectrum.
 *
 * # Safety
 * `spectrum` must be a live handle; `out` must be writable.
 */
CsiStatus csi_spectrum_get(const CsiSpectrum *spectrum,
                           int32_t l_obj,
                           uint32_t p_obj,
                           int32_t l_ref,
                           uint32_t p_ref,
                           double *out);

/**
 * Mutual information of the joint spectrum, in bits.
 *
 * # Safety
 * `spectrum` must be a live handle; `out` must be writable.
 */
CsiStatus csi_spectrum_mutual_information(const CsiSpectrum *spectrum, double *out);

/**
 * Release a spectrum handle. A null pointer is ignored.
 *
 * # Safety
 * `spectrum` must be null or a live handle; it must not be used afterwards.
 */
void csi_spectrum_free(CsiSpectrum *spectrum);

/**
 * Reconstruct the image into caller-owned buffers of `resolution *
 * resolution` doubles each (row-major, x fastest, y ascending).
 *
 * # Safety
 * `table` must be a live handle; `re_out` and `im_out` must each point to
 * `resolution * resolution` writable doubles.
 */
CsiStatus csi_reconstruct(const CsiTable *table,
                          size_t resolution,
                          double half_width,
                          double *re_out,
                          double *im_out);

/**
 * Fraction of off-diagonal |a|^2 mass violating the N-fold selection rule.
 *
 * # Safety
 * `table` must be a live handle; `out` must be writable.
 */
CsiStatus csi_symmetry_audit(const CsiTable *table, uint32_t n_fold, double *out);

/**
 * Static description of a status code. Never null.
 */
const char *csi_status_message(CsiStatus status);

/**
 * Library version as a static NUL-terminated string.
 */
const char *csi_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CSI_H */
