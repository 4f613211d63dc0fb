#ifndef LGEOM_H
#define LGEOM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes mirrored from the library's error taxonomy.
 */
typedef enum LgeomStatus {
  LGEOM_STATUS_OK = 0,
  /**
   * Invalid configuration, domain, or argument.
   */
  LGEOM_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The computation ran but did not converge or lost accuracy.
   */
  LGEOM_STATUS_NUMERICAL = 2,
  /**
   * A required pointer was null.
   */
  LGEOM_STATUS_NULL_POINTER = 3,
} LgeomStatus;

/**
 * Opaque backward-flow handle.
 */
typedef struct LgeomFlow LgeomFlow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static flat flow on R^n over backward times [0, tau_end].
 */
enum LgeomStatus lgeom_flow_flat(size_t n, double tau_end, struct LgeomFlow **out);

/**
 * Round-sphere flow with r^2(tau) = r0^2 + 2(n-1) tau.
 */
enum LgeomStatus lgeom_flow_sphere(size_t n, double r0, double tau_end, struct LgeomFlow **out);

/**
 * Round-cylinder flow with sphere-factor r^2(tau) = r0^2 + 2(n-2) tau.
 */
enum LgeomStatus lgeom_flow_cylinder(size_t n, double r0, double tau_end, struct LgeomFlow **out);

/**
 * Release a flow handle. Passing null is a no-op.
 */
void lgeom_flow_free(struct LgeomFlow *flow);

/**
 * Number of reduced coordinates the flow's points carry.
 */
enum LgeomStatus lgeom_flow_coord_dim(const struct LgeomFlow *flow, size_t *out);

/**
 * Scalar curvature R at (coords, tau).
 */
enum LgeomStatus lgeom_flow_scalar_curvature(const struct LgeomFlow *flow,
                                             const double *coords,
                                             size_t coords_len,
                                             double tau,
                                             double *out);

/**
 * sup_M |Rm| at backward time tau.
 */
enum LgeomStatus lgeom_flow_riemann_sup(const struct LgeomFlow *flow, double tau, double *out);

/**
 * Reduced distance l(base -> target, tau1) by curve minimization; `seed`
 * fixes the optimizer restarts for reproducibility.
 */
enum LgeomStatus lgeom_reduced_distance(const struct LgeomFlow *flow,
                                        const double *base,
                                        const double *target,
                                        size_t coords_len,
                                        double tau1,
                                        uint64_t seed,
                                        double *out);

/**
 * Reduced volume V(tau) about `base`, truncating the integral at `cutoff`.
 */
enum LgeomStatus lgeom_reduced_volume(const struct LgeomFlow *flow,
                                      const double *base,
                                      size_t coords_len,
                                      double tau,
                                      double cutoff,
                                      double *out);

/**
 * Fill `out_taus` (length i_max + 1) with the ladder tau_i = sum alpha^{-j}.
 */
enum LgeomStatus lgeom_tau_ladder(double alpha, size_t i_max, double *out_taus, size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LGEOM_H */
