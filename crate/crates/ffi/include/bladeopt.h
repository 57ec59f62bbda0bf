#ifndef BLADEOPT_H
#define BLADEOPT_H

/* Generated by cbindgen; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum BoStatus {
  BO_STATUS_OK = 0,
  BO_STATUS_NULL_POINTER = 1,
  BO_STATUS_INVALID_ARGUMENT = 2,
  BO_STATUS_OUT_OF_DOMAIN = 3,
  BO_STATUS_FIT_FAILED = 4,
  BO_STATUS_NOT_CONVERGED = 5,
  BO_STATUS_SAMPLING_FAILED = 6,
  BO_STATUS_DEGENERATE_COVARIANCE = 7,
  BO_STATUS_INFEASIBLE = 8,
  BO_STATUS_IO = 9,
  BO_STATUS_PARSE = 10,
  BO_STATUS_BUFFER_TOO_SMALL = 11,
  BO_STATUS_PANIC = 99,
} BoStatus;

/**
 * Opaque B-spline curve.
 */
typedef struct BoSpline BoSpline;

/**
 * Opaque active subspace.
 */
typedef struct BoSubspace BoSubspace;

/**
 * Opaque one-dimensional polynomial response surface.
 */
typedef struct BoSurface BoSurface;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message (NUL-terminated, truncated
 * to fit) into `buf` and returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t bo_last_error_message(char *buf, size_t len);

/**
 * Advance ratio, thrust and torque coefficients and open-water efficiency
 * from dimensional thrust (N) and torque (N m). `eta` is NaN when undefined.
 *
 * # Safety
 * Out pointers must be valid for writes.
 */
enum BoStatus bo_hydrodynamic_coefficients(double thrust,
                                           double torque,
                                           double va,
                                           double n_rps,
                                           double diameter,
                                           double rho,
                                           double *j,
                                           double *kt,
                                           double *kq,
                                           double *eta);

/**
 * Least-squares fit of `values` at parameters `params`
 * with averaged knots. `interpolate_ends` pins the end control points to the
 * end data.
 *
 * # Safety
 * `params` and `values` must hold `n` doubles; `curve` must be valid for writes.
 */
enum BoStatus bo_spline_fit(const double *params,
                            const double *values,
                            size_t n,
                            size_t degree,
                            size_t n_ctrl,
                            bool interpolate_ends,
                            struct BoSpline **curve);

/**
 * Scalar curve from explicit knots and control values.
 *
 * # Safety
 * `knots` must hold `n_knots` doubles and `values` `n_values`; `curve` must be valid for writes.
 */
enum BoStatus bo_spline_new(size_t degree,
                            const double *knots,
                            size_t n_knots,
                            const double *values,
                            size_t n_values,
                            struct BoSpline **curve);

/**
 * Value (`order` 0) or derivative of a scalar curve at `t`.
 *
 * # Safety
 * `curve` must come from `bo_spline_fit`/`bo_spline_new`; `value` must be valid for writes.
 */
enum BoStatus bo_spline_eval(const struct BoSpline *curve, double t, size_t order, double *value);

/**
 * # Safety
 * `curve` must be null or a live handle.
 */
size_t bo_spline_n_ctrl(const struct BoSpline *curve);

/**
 * # Safety
 * `curve` must be null or a handle not yet freed.
 */
void bo_spline_free(struct BoSpline *curve);

/**
 * Active subspace of the uncentered covariance of `n` gradient rows of
 * length `m` (row-major). `active_dim` 0 selects the largest eigenvalue gap.
 *
 * # Safety
 * `gradients` must hold `n * m` doubles; `subspace` must be valid for writes.
 */
enum BoStatus bo_subspace_from_gradients(const double *gradients,
                                         size_t n,
                                         size_t m,
                                         size_t active_dim,
                                         struct BoSubspace **subspace);

/**
 * # Safety
 * `subspace` must be null or a live handle.
 */
size_t bo_subspace_dim(const struct BoSubspace *subspace);

/**
 * # Safety
 * `subspace` must be null or a live handle.
 */
size_t bo_subspace_active_dim(const struct BoSubspace *subspace);

/**
 * Eigenvalues in descending order.
 *
 * # Safety
 * `values` must point to `len` writable doubles.
 */
enum BoStatus bo_subspace_eigenvalues(const struct BoSubspace *subspace,
                                      double *values,
                                      size_t len);

/**
 * Eigenvector `k` (zero-based).
 *
 * # Safety
 * `vector` must point to `len` writable doubles.
 */
enum BoStatus bo_subspace_eigenvector(const struct BoSubspace *subspace,
                                      size_t k,
                                      double *vector,
                                      size_t len);

/**
 * Active variables `W1^T mu` for a design of length `m`.
 *
 * # Safety
 * `mu` must hold `m` doubles and `active` `len` writable doubles.
 */
enum BoStatus bo_subspace_project(const struct BoSubspace *subspace,
                                  const double *mu,
                                  size_t m,
                                  double *active,
                                  size_t len);

/**
 * Minimum-norm design `W1 y` for active variables `y`.
 *
 * # Safety
 * `active` must hold `n_active` doubles and `mu` `len` writable doubles.
 */
enum BoStatus bo_subspace_reconstruct(const struct BoSubspace *subspace,
                                      const double *active,
                                      size_t n_active,
                                      double *mu,
                                      size_t len);

/**
 * # Safety
 * `subspace` must be null or a handle not yet freed.
 */
void bo_subspace_free(struct BoSubspace *subspace);

/**
 * Polynomial of `degree` fitted to 80% of the `n` points, chosen by a
 * shuffle seeded with `split_seed`.
 *
 * # Safety
 * `x` and `y` must hold `n` doubles; `surface` must be valid for writes.
 */
enum BoStatus bo_surface_fit(const double *x,
                             const double *y,
                             size_t n,
                             size_t degree,
                             uint64_t split_seed,
                             struct BoSurface **surface);

/**
 * # Safety
 * `value` must be valid for writes; `extrapolated` may be null.
 */
enum BoStatus bo_surface_eval(const struct BoSurface *surface,
                              double x,
                              double *value,
                              bool *extrapolated);

/**
 * Validation R^2 of the fitted surface.
 *
 * # Safety
 * `r2` must be valid for writes.
 */
enum BoStatus bo_surface_validation_r2(const struct BoSurface *surface, double *r2);

/**
 * # Safety
 * `surface` must be null or a handle not yet freed.
 */
void bo_surface_free(struct BoSurface *surface);

/**
 * Surrogate performance `[kt, eta, pmax, fmax]` of a design deforming the
 * bundled baseline blade, fitted with `m / 2` control points per curve.
 *
 * # Safety
 * `mu` must hold `m` doubles and `outputs` 4 writable doubles.
 */
enum BoStatus bo_evaluate_design(const double *mu,
                                 size_t m,
                                 double pitch_scale,
                                 double camber_scale,
                                 double diameter,
                                 size_t n_blades,
                                 double va,
                                 double n_rps,
                                 double rho,
                                 double *outputs);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLADEOPT_H */
