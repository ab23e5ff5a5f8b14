#ifndef MOGRO_H
#define MOGRO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MogroStatus {
  MOGRO_STATUS_OK = 0,
  MOGRO_STATUS_NULL_POINTER = 1,
  MOGRO_STATUS_INVALID_INPUT = 2,
  MOGRO_STATUS_INVALID_CONFIG = 3,
  MOGRO_STATUS_NUMERICAL = 4,
  MOGRO_STATUS_IO = 5,
  MOGRO_STATUS_FORMAT = 6,
  MOGRO_STATUS_PANIC = 7,
} MogroStatus;

typedef enum MogroPolicyKind {
  MOGRO_POLICY_KIND_MOGRO_RW = 0,
  MOGRO_POLICY_KIND_MOGRO_RR = 1,
  MOGRO_POLICY_KIND_MOGRO_GENERAL = 2,
  MOGRO_POLICY_KIND_EPSILON_GREEDY = 3,
  MOGRO_POLICY_KIND_UCB = 4,
  MOGRO_POLICY_KIND_THOMPSON = 5,
} MogroPolicyKind;

/**
 * Opaque problem instance.
 */
typedef struct MogroInstance MogroInstance;

/**
 * Opaque episode trajectory.
 */
typedef struct MogroTrajectory MogroTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *mogro_last_error_message(void);

/**
 * Generates a synthetic instance with `k` arms in dimension `d` and `m`
 * objectives.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum MogroStatus mogro_instance_generate(size_t d,
                                         size_t k,
                                         size_t m,
                                         double sigma,
                                         uint64_t seed,
                                         struct MogroInstance **out);

/**
 * Builds an instance from row-major `features` (k×d) and `objectives` (m×d).
 *
 * # Safety
 * `features` must point to `k*d` doubles, `objectives` to `m*d` doubles and
 * `out` to writable storage for one handle.
 */
enum MogroStatus mogro_instance_from_arrays(size_t d,
                                            size_t k,
                                            size_t m,
                                            const double *features,
                                            const double *objectives,
                                            double sigma,
                                            struct MogroInstance **out);

/**
 * Loads an instance JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable storage for one
 * handle.
 */
enum MogroStatus mogro_instance_load(const char *path, struct MogroInstance **out);

/**
 * Saves an instance as JSON.
 *
 * # Safety
 * `inst` must be a live handle and `path` a NUL-terminated string.
 */
enum MogroStatus mogro_instance_save(const struct MogroInstance *inst, const char *path);

/**
 * Writes the dimensions of an instance. Any output pointer may be NULL.
 *
 * # Safety
 * `inst` must be a live handle; non-NULL outputs must be writable.
 */
enum MogroStatus mogro_instance_dims(const struct MogroInstance *inst,
                                     size_t *d,
                                     size_t *k,
                                     size_t *m);

/**
 * Copies the k×m mean-reward table (row-major) into `out`.
 *
 * # Safety
 * `inst` must be a live handle and `out` must have room for `len` doubles.
 */
enum MogroStatus mogro_instance_reward_table(const struct MogroInstance *inst,
                                             double *out,
                                             size_t len);

/**
 * Releases an instance. NULL is ignored.
 *
 * # Safety
 * `inst` must be NULL or a handle not yet freed.
 */
void mogro_instance_free(struct MogroInstance *inst);

/**
 * Pareto suboptimality gap of `arm` in a row-major k×m reward table.
 *
 * # Safety
 * `mu` must point to `k*m` doubles and `gap` must be writable.
 */
enum MogroStatus mogro_pareto_gap(const double *mu, size_t k, size_t m, size_t arm, double *gap);

/**
 * Effective Pareto gap of `arm`. When `witness` is non-NULL it receives the
 * mixture over the `k` arms that certifies a positive gap (all zeros when
 * the arm is on the effective front).
 *
 * # Safety
 * `mu` must point to `k*m` doubles, `gap` must be writable and `witness`
 * NULL or writable for `k` doubles.
 */
enum MogroStatus mogro_effective_gap(const double *mu,
                                     size_t k,
                                     size_t m,
                                     size_t arm,
                                     double *gap,
                                     double *witness);

/**
 * Monte-Carlo γ-goodness check with `n_directions` samples per ball. Any
 * output pointer may be NULL.
 *
 * # Safety
 * `inst` must be a live handle; non-NULL outputs must be writable.
 */
enum MogroStatus mogro_verify_goodness(const struct MogroInstance *inst,
                                       double gamma,
                                       double alpha,
                                       size_t n_directions,
                                       uint64_t seed,
                                       bool *verified,
                                       double *worst_margin,
                                       double *lambda);

/**
 * Runs one fixed-feature episode of `horizon` rounds with eigenvalue
 * threshold `b` and default policy settings.
 *
 * # Safety
 * `inst` must be a live handle and `out` writable storage for one handle.
 */
enum MogroStatus mogro_run_episode(const struct MogroInstance *inst,
                                   enum MogroPolicyKind kind,
                                   double b,
                                   size_t horizon,
                                   uint64_t seed,
                                   struct MogroTrajectory **out);

/**
 * Number of rounds in a trajectory (0 for NULL).
 *
 * # Safety
 * `traj` must be NULL or a live handle.
 */
size_t mogro_trajectory_len(const struct MogroTrajectory *traj);

/**
 * Exploration rounds before the gate opened, or -1 if it never did.
 *
 * # Safety
 * `traj` must be NULL or a live handle.
 */
int64_t mogro_trajectory_t0(const struct MogroTrajectory *traj);

/**
 * Copies per-round arms and gaps. Any output pointer may be NULL; non-NULL
 * buffers must hold `len` elements with `len` ≥ the trajectory length.
 *
 * # Safety
 * `traj` must be a live handle; non-NULL buffers must be writable for `len`
 * elements.
 */
enum MogroStatus mogro_trajectory_copy(const struct MogroTrajectory *traj,
                                       size_t *arms,
                                       double *pareto_gaps,
                                       double *effective_gaps,
                                       size_t len);

/**
 * Releases a trajectory. NULL is ignored.
 *
 * # Safety
 * `traj` must be NULL or a handle not yet freed.
 */
void mogro_trajectory_free(struct MogroTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOGRO_H */
