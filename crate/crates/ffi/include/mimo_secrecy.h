#ifndef MIMO_SECRECY_H
#define MIMO_SECRECY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum {
  MS_STATUS_OK = 0,
  MS_STATUS_NULL_POINTER = 1,
  MS_STATUS_INVALID_ARGUMENT = 2,
  MS_STATUS_DIMENSION = 3,
  MS_STATUS_NOT_PSD = 4,
  MS_STATUS_INFEASIBLE = 5,
  MS_STATUS_BUDGET_EXCEEDED = 6,
  MS_STATUS_INDEX_OUT_OF_RANGE = 7,
  MS_STATUS_NUMERICAL = 8,
  MS_STATUS_PANIC = 9,
} MsStatus;

/**
 * Selects the region computed by `ms_wiretap_region`.
 */
typedef enum {
  /**
   * `(R, Re)`.
   */
  MS_REGION_KIND_CAPACITY_EQUIVOCATION = 0,
  /**
   * `(Rp, Rs)`.
   */
  MS_REGION_KIND_PRIVATE_CONFIDENTIAL = 1,
} MsRegionKind;

/**
 * Two-receiver broadcast channel in canonical form.
 */
typedef struct MsBroadcast MsBroadcast;

/**
 * Convex rate region with vertices counterclockwise from the origin.
 */
typedef struct MsRegion MsRegion;

/**
 * Wiretap channel with a matrix power constraint.
 */
typedef struct MsWiretap MsWiretap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ms_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ms_version(void);

/**
 * `½·log det(I + H·S·Hᵀ)` for an `rows × cols` channel and `cols × cols` `S`.
 *
 * # Safety
 * `h` must point to `rows * cols` doubles, `s` to `cols * cols` doubles,
 * and `out` must be writable.
 */
MsStatus ms_capacity(const double *h, size_t rows, size_t cols, const double *s, double *out);

/**
 * Creates a wiretap channel. `h_r` is `n_r × n_t`, `h_e` is `n_e × n_t`,
 * `s` is `n_t × n_t`. `seed` drives the optimizer's random starts.
 *
 * # Safety
 * Matrix pointers must cover their stated sizes; `out` must be writable.
 */
MsStatus ms_wiretap_new(const double *h_r,
                        size_t n_r,
                        const double *h_e,
                        size_t n_e,
                        size_t n_t,
                        const double *s,
                        uint64_t seed,
                        MsWiretap **out);

/**
 * # Safety
 * `w` must be NULL or a handle from `ms_wiretap_new` not yet freed.
 */
void ms_wiretap_free(MsWiretap *w);

/**
 * Capacity of the legitimate receiver's channel.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
MsStatus ms_wiretap_capacity(const MsWiretap *w, double *out);

/**
 * Secrecy capacity. `b_star` may be NULL or point to `n_t * n_t` doubles
 * that receive the optimal input covariance.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
MsStatus ms_wiretap_secrecy_capacity(const MsWiretap *w, double *out, double *b_star);

/**
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
MsStatus ms_wiretap_region(const MsWiretap *w, MsRegionKind kind, MsRegion **out);

/**
 * # Safety
 * `r` must be NULL or a live region handle.
 */
void ms_region_free(MsRegion *r);

/**
 * Number of vertices, or 0 for a NULL handle.
 *
 * # Safety
 * `r` must be NULL or a live region handle.
 */
size_t ms_region_vertex_count(const MsRegion *r);

/**
 * # Safety
 * `r` must be a live region handle; `x` and `y` must be writable.
 */
MsStatus ms_region_vertex(const MsRegion *r, size_t index, double *x, double *y);

/**
 * Writes 1 to `out` if `(x, y)` lies in the region within `tol`, else 0.
 *
 * # Safety
 * `r` must be a live region handle; `out` must be writable.
 */
MsStatus ms_region_contains(const MsRegion *r, double x, double y, double tol, int32_t *out);

/**
 * Creates a broadcast channel from square `dim × dim` gains `h1`, `h2` and
 * power constraint `s`. Singular gains are perturbed by `eps·I`.
 *
 * # Safety
 * Matrix pointers must cover `dim * dim` doubles; `out` must be writable.
 */
MsStatus ms_broadcast_new(const double *h1,
                          const double *h2,
                          const double *s,
                          size_t dim,
                          double eps,
                          uint64_t seed,
                          MsBroadcast **out);

/**
 * # Safety
 * `b` must be NULL or a live broadcast handle.
 */
void ms_broadcast_free(MsBroadcast *b);

/**
 * Largest achievable common rate.
 *
 * # Safety
 * `b` must be a live handle; `out` must be writable.
 */
MsStatus ms_broadcast_r0_max(const MsBroadcast *b, double *out);

/**
 * Maximizes `λ1·R1 + λ2·R2` subject to a common rate of at least `r0`.
 * `rates` receives `(R0, R1, R2)`; `b0` and `b1` may be NULL or point to
 * `dim * dim` doubles for the optimal split.
 *
 * # Safety
 * `b` must be a live handle; `rates` must point to 3 writable doubles.
 */
MsStatus ms_broadcast_weighted_sum(const MsBroadcast *b,
                                   double lambda1,
                                   double lambda2,
                                   double r0,
                                   double *rates,
                                   double *b0,
                                   double *b1);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIMO_SECRECY_H */
