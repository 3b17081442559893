#ifndef EQK_H
#define EQK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EqkStatus {
  EQK_STATUS_OK = 0,
  EQK_STATUS_NULL_POINTER = 1,
  EQK_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed or invalid JSON input.
   */
  EQK_STATUS_PARSE = 3,
  EQK_STATUS_PARAMETER = 4,
  /**
   * Input outside the domain (wrong length, non-finite entry, off the hyperplane).
   */
  EQK_STATUS_DOMAIN = 5,
  /**
   * The norm lacks the structure the operation needs.
   */
  EQK_STATUS_CAPABILITY = 6,
  /**
   * A hypothesis of the construction is violated.
   */
  EQK_STATUS_HYPOTHESIS = 7,
  /**
   * A numerical procedure failed to reach its tolerance.
   */
  EQK_STATUS_NUMERICAL = 8,
  /**
   * Output would exceed the size cap.
   */
  EQK_STATUS_SCALE = 9,
  EQK_STATUS_PANIC = 10,
} EqkStatus;

/**
 * Opaque norm handle.
 */
typedef struct EqkNorm EqkNorm;

/**
 * Opaque point-set handle.
 */
typedef struct EqkPointSet EqkPointSet;

/**
 * Summary of an equilateral certificate.
 */
typedef struct EqkCertificate {
  size_t m;
  double claimed;
  double min_distance;
  double max_distance;
  double max_relative_deviation;
  double tolerance;
  bool pass;
} EqkCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *eqk_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *eqk_last_error_message(void);

/**
 * Parses a JSON norm specification.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EqkStatus eqk_norm_from_json(const char *json, struct EqkNorm **out);

/**
 * # Safety
 * `norm` must be NULL or a handle from [`eqk_norm_from_json`] not freed before.
 */
void eqk_norm_free(struct EqkNorm *norm);

/**
 * Ambient dimension, or 0 for NULL.
 *
 * # Safety
 * `norm` must be NULL or a live handle.
 */
size_t eqk_norm_dim(const struct EqkNorm *norm);

/**
 * `‖x‖` for `x` of length `len`.
 *
 * # Safety
 * `norm` must be a live handle, `x` must point to `len` doubles and `out` be valid.
 */
enum EqkStatus eqk_norm_eval(const struct EqkNorm *norm, const double *x, size_t len, double *out);

/**
 * Builds the equilateral set for `norm` with the construction that applies.
 * `k` is the number of dominant coefficients for hyperplane norms; pass 0
 * for the smallest valid value.
 *
 * # Safety
 * `norm` must be a live handle and `out` valid.
 */
enum EqkStatus eqk_construct(const struct EqkNorm *norm, size_t k, struct EqkPointSet **out);

/**
 * Solves the fixed-point problem moving the base equilateral set to the
 * target norm. `variant` is "symmetric", "orlicz" or "subspace"; `k` as in
 * [`eqk_construct`] (subspace only, 0 for default).
 *
 * # Safety
 * Handles must be live, `variant` NUL-terminated and `out` valid.
 */
enum EqkStatus eqk_perturb(const struct EqkNorm *base,
                           const struct EqkNorm *target,
                           const char *variant,
                           size_t k,
                           uint64_t seed,
                           struct EqkPointSet **out);

/**
 * `R(p, n)` for `ℓp`, `1 < p < ∞`, `n ≥ 3`.
 *
 * # Safety
 * `out` must be valid.
 */
enum EqkStatus eqk_radius_lp(double p, uint64_t n, double *out);

/**
 * # Safety
 * `set` must be NULL or a handle not freed before.
 */
void eqk_point_set_free(struct EqkPointSet *set);

/**
 * Number of points, or 0 for NULL.
 *
 * # Safety
 * `set` must be NULL or a live handle.
 */
size_t eqk_point_set_len(const struct EqkPointSet *set);

/**
 * Coordinates per point, or 0 for NULL.
 *
 * # Safety
 * `set` must be NULL or a live handle.
 */
size_t eqk_point_set_dim(const struct EqkPointSet *set);

/**
 * Claimed common distance, or NaN for NULL.
 *
 * # Safety
 * `set` must be NULL or a live handle.
 */
double eqk_point_set_distance(const struct EqkPointSet *set);

/**
 * Copies point `index` into `out`, which holds `len` doubles (at least the
 * set dimension).
 *
 * # Safety
 * `set` must be a live handle and `out` point to `len` writable doubles.
 */
enum EqkStatus eqk_point_set_point(const struct EqkPointSet *set,
                                   size_t index,
                                   double *out,
                                   size_t len);

/**
 * Certifies that all pairwise `norm` distances equal the claimed distance
 * within relative tolerance `tol`. A failed certificate is not an error:
 * the call returns `EQK_STATUS_OK` with `pass = false`.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum EqkStatus eqk_certify(const struct EqkPointSet *set,
                           const struct EqkNorm *norm,
                           double tol,
                           struct EqkCertificate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EQK_H */
