#ifndef PRODRAMSEY_H
#define PRODRAMSEY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PrsMethod {
  PRS_METHOD_EXHAUSTIVE = 0,
  PRS_METHOD_BRANCH_AND_BOUND = 1,
} PrsMethod;

typedef enum PrsStatus {
  PRS_STATUS_OK = 0,
  PRS_STATUS_IO = 1,
  PRS_STATUS_VALIDATION = 2,
  PRS_STATUS_CAPACITY = 3,
  PRS_STATUS_INTEGRITY = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  PRS_STATUS_INTERNAL = 5,
} PrsStatus;

/**
 * Opaque spectrum report.
 */
typedef struct PrsSpectrum PrsSpectrum;

/**
 * Result of a QIP solve. `third` is meaningful only when `unbounded` is false.
 */
typedef struct PrsQipResult {
  int64_t t;
  uint64_t third;
  bool unbounded;
  uint64_t nodes_explored;
} PrsQipResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy of the last error message on this thread, or null if none. Free with [`prs_string_free`].
 */
char *prs_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library that was not freed yet.
 */
void prs_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *prs_version(void);

/**
 * Writes `M_r(S, T)` for subset masks `s` and `t` to `out`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum PrsStatus prs_matrix_entry(uint32_t r, uint32_t s, uint32_t t, int64_t *out);

/**
 * Computes `M_r x` without materializing `M_r`. Both buffers hold `2^r` values.
 *
 * # Safety
 * `input` must be readable and `out` writable for `len` values.
 */
enum PrsStatus prs_apply(uint32_t r, const int64_t *input, int64_t *out, size_t len);

/**
 * Builds and verifies the spectrum of `M_r`. Release with [`prs_spectrum_free`].
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum PrsStatus prs_spectrum_new(uint32_t r, struct PrsSpectrum **out);

/**
 * # Safety
 * `h` must be null or a handle from [`prs_spectrum_new`] that was not freed yet.
 */
void prs_spectrum_free(struct PrsSpectrum *h);

/**
 * Number of distinct eigenvalue classes, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live spectrum handle.
 */
size_t prs_spectrum_class_count(const struct PrsSpectrum *h);

/**
 * Reads class `index`. Any output pointer may be null.
 *
 * # Safety
 * `h` must be a live spectrum handle; non-null outputs must be valid for one write.
 */
enum PrsStatus prs_spectrum_class(const struct PrsSpectrum *h,
                                  size_t index,
                                  int64_t *eigenvalue,
                                  uint64_t *multiplicity,
                                  bool *verified);

/**
 * True when every class is verified and the trace identity holds.
 *
 * # Safety
 * `h` must be null or a live spectrum handle.
 */
bool prs_spectrum_is_consistent(const struct PrsSpectrum *h);

/**
 * The report as JSON, or null on error. Free with [`prs_string_free`].
 *
 * # Safety
 * `h` must be null or a live spectrum handle.
 */
char *prs_spectrum_to_json(const struct PrsSpectrum *h);

/**
 * Solves the QIP for `(r, s)`. When `argmin` is non-null it receives the `s`
 * minimizing subset masks in ascending order; `argmin_len` must then be at least `s`.
 *
 * # Safety
 * `out` must be valid for one write; `argmin`, if non-null, for `argmin_len` writes.
 */
enum PrsStatus prs_qip_solve(uint32_t r,
                             uint32_t s,
                             enum PrsMethod method,
                             bool symmetry,
                             uint64_t budget,
                             struct PrsQipResult *out,
                             uint32_t *argmin,
                             size_t argmin_len);

/**
 * Decides whether the grid `dims[0] x ... x dims[d-1]` is `colors`-guaranteed.
 * When it is not and `witness` is non-null, a box-free coloring is written there
 * in row-major order (last axis fastest); `witness_len` must cover every cell.
 *
 * # Safety
 * `dims` must be readable for `d` values; `guaranteed` valid for one write;
 * `witness`, if non-null, valid for `witness_len` writes.
 */
enum PrsStatus prs_is_guaranteed(const uint32_t *dims,
                                 size_t d,
                                 uint32_t colors,
                                 bool symmetry,
                                 bool *guaranteed,
                                 uint8_t *witness,
                                 size_t witness_len);

/**
 * Checks binomial identity `id` (1-5) at the given parameters.
 *
 * # Safety
 * `params` must be readable for `len` values; `holds` valid for one write.
 */
enum PrsStatus prs_check_identity(uint8_t id, const int64_t *params, size_t len, bool *holds);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRODRAMSEY_H */
