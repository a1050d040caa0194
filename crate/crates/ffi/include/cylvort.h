#ifndef CYLVORT_H
#define CYLVORT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CvStatus {
  CV_STATUS_OK = 0,
  CV_STATUS_NULL_POINTER = 1,
  CV_STATUS_INVALID_ARGUMENT = 2,
  CV_STATUS_COLLISION = 3,
  CV_STATUS_NO_CONVERGENCE = 4,
  CV_STATUS_SINGULAR = 5,
  CV_STATUS_IO = 6,
  CV_STATUS_PANIC = 7,
} CvStatus;

typedef struct CvConfiguration CvConfiguration;

typedef struct CvTrajectory CvTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *cv_last_error(void);

/**
 * # Safety
 * `xs`, `ys` and `gammas` point to `n` doubles; `out` is writable.
 */
enum CvStatus cv_configuration_new(double radius,
                                   const double *xs,
                                   const double *ys,
                                   const double *gammas,
                                   size_t n,
                                   struct CvConfiguration **out_cfg);

/**
 * # Safety
 * `cfg` is null or came from `cv_configuration_new` and is not used again.
 */
void cv_configuration_free(struct CvConfiguration *cfg);

/**
 * # Safety
 * `cfg` is a live handle; `out_h` is writable.
 */
enum CvStatus cv_hamiltonian(const struct CvConfiguration *cfg, double *out_h);

/**
 * Writes the velocity of every vortex; `vx` and `vy` hold `n` doubles,
 * `n` equal to the vortex count.
 *
 * # Safety
 * `cfg` is a live handle; `vx` and `vy` point to `n` writable doubles.
 */
enum CvStatus cv_velocities(const struct CvConfiguration *cfg, double *vx, double *vy, size_t n);

/**
 * Adaptive integration to `t_final` with tolerance `tol` (relative to the
 * radius). `output_every > 0` records equally spaced samples, otherwise
 * every accepted step.
 *
 * # Safety
 * `cfg` is a live handle; `out_traj` is writable.
 */
enum CvStatus cv_integrate(const struct CvConfiguration *cfg,
                           double t_final,
                           double tol,
                           double output_every,
                           struct CvTrajectory **out_traj);

/**
 * # Safety
 * `traj` is null or came from `cv_integrate` and is not used again.
 */
void cv_trajectory_free(struct CvTrajectory *traj);

/**
 * Number of samples; 0 for a null handle.
 *
 * # Safety
 * `traj` is null or a live handle.
 */
size_t cv_trajectory_len(const struct CvTrajectory *traj);

/**
 * Time, lifted positions and energy of sample `i`.
 *
 * # Safety
 * `traj` is a live handle; `x` and `y` point to `n` writable doubles with
 * `n` equal to the vortex count; `t` and `energy` may be null.
 */
enum CvStatus cv_trajectory_sample(const struct CvTrajectory *traj,
                                   size_t i,
                                   double *t,
                                   double *x,
                                   double *y,
                                   size_t n,
                                   double *energy);

/**
 * Writes the trajectory CSV to `path` and the unwrapped companion next to
 * it. Nothing is left behind on failure.
 *
 * # Safety
 * `traj` is a live handle; `path` is a NUL-terminated UTF-8 string.
 */
enum CvStatus cv_trajectory_write_csv(const struct CvTrajectory *traj, const char *path);

/**
 * Ring equilibrium of same-sign vortices on `y = 0`. `order` lists the
 * 0-based cyclic order (null for `0, 1, …, n−1`); `x_out` receives the
 * positions indexed by vortex.
 *
 * # Safety
 * `gammas` and `x_out` point to `n` doubles, `order` is null or points to
 * `n` indices; the remaining outputs are writable.
 */
enum CvStatus cv_ring_equilibrium(double radius,
                                  const double *gammas,
                                  const size_t *order,
                                  size_t n,
                                  double *x_out,
                                  double *residual,
                                  bool *certified);

/**
 * Reduced energy of two antipodal pairs on the unit cylinder.
 *
 * # Safety
 * `out_h` is writable.
 */
enum CvStatus cv_reduced_h4(double b,
                            double gamma,
                            double gamma_prime,
                            double xi,
                            double eta,
                            double *out_h);

/**
 * Leapfrogging threshold on the unit cylinder.
 *
 * # Safety
 * `out_rho` is writable.
 */
enum CvStatus cv_rho_critical(double b, double gamma, double gamma_prime, double *out_rho);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CYLVORT_H */
