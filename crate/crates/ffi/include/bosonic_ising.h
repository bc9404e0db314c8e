#ifndef BOSONIC_ISING_H
#define BOSONIC_ISING_H

/* Generated by cbindgen; edit src/lib.rs instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for every entry point.
 */
typedef enum bi_status {
  BI_OK = 0,
  BI_NULL_POINTER = 1,
  BI_INVALID_ARGUMENT = 2,
  BI_DIMENSION_MISMATCH = 3,
  BI_STATE_SPACE_TOO_LARGE = 4,
  BI_DEGENERATE_GROUND_STATE = 5,
  BI_TARGET_UNREACHABLE = 6,
  BI_NOT_CONVERGED = 7,
  BI_ABSORBING_STATE = 8,
  BI_NUMERICAL_ERROR = 9,
  BI_IO_ERROR = 10,
  BI_PANIC = 11,
} bi_status;

/**
 * Particle counting rule for equilibrium statistics.
 */
typedef enum bi_statistics {
  BI_BOSONIC = 0,
  BI_DISTINGUISHABLE = 1,
} bi_statistics;

/**
 * Opaque problem handle.
 */
typedef struct bi_instance bi_instance;

/**
 * Scalar equilibrium observables; `error_probability` is NaN when the
 * ground sign pattern is degenerate.
 */
typedef struct bi_equilibrium_summary {
  double log_z;
  double mean_energy;
  double error_probability;
} bi_equilibrium_summary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *bi_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *bi_version(void);

/**
 * Create a problem from a row-major `m x m` symmetric coupling matrix
 * with zero diagonal, `n` bosons per site, and field coefficient
 * `lambda`.
 *
 * # Safety
 * `coupling` must point to `m * m` doubles and `out` must be valid.
 */
enum bi_status bi_instance_new(uintptr_t m,
                               const double *coupling,
                               uint32_t n,
                               double lambda,
                               struct bi_instance **out);

/**
 * Single-site instance whose per-particle excitation costs `gap`.
 *
 * # Safety
 * `out` must be valid.
 */
enum bi_status bi_instance_two_level(uint32_t n, double gap, struct bi_instance **out);

/**
 * Cut-problem instance from an edge-list file (`u v [weight]` lines).
 *
 * # Safety
 * `path` must be NUL-terminated and `out` valid.
 */
enum bi_status bi_instance_from_graph_file(const char *path,
                                           uint32_t n,
                                           double lambda_bias,
                                           struct bi_instance **out);

/**
 * Destroy an instance handle (NULL is a no-op).
 *
 * # Safety
 * `instance` must be a pointer from one of the constructors, used once.
 */
void bi_instance_free(struct bi_instance *instance);

/**
 * Number of sites.
 *
 * # Safety
 * `instance` must be a live handle.
 */
uintptr_t bi_instance_site_count(const struct bi_instance *instance);

/**
 * Bosons per site.
 *
 * # Safety
 * `instance` must be a live handle.
 */
uint32_t bi_instance_bosons_per_site(const struct bi_instance *instance);

/**
 * Energy of the occupation vector `k` (length must equal the site count).
 *
 * # Safety
 * Pointers must be valid; `k` must hold `k_len` entries.
 */
enum bi_status bi_energy(const struct bi_instance *instance,
                         const uint32_t *k,
                         uintptr_t k_len,
                         double *out);

/**
 * Local field on `site`; the energy change of a move `dk` is
 * `2 * dk * field`.
 *
 * # Safety
 * Pointers must be valid; `k` must hold `k_len` entries.
 */
enum bi_status bi_local_field(const struct bi_instance *instance,
                              const uint32_t *k,
                              uintptr_t k_len,
                              uintptr_t site,
                              double *out);

/**
 * Exact equilibrium statistics at inverse temperature `beta`.
 *
 * `mean_spin` may be NULL; otherwise it receives one entry per site.
 *
 * # Safety
 * Pointers must be valid; `mean_spin`, when non-NULL, must hold
 * `site_count` doubles.
 */
enum bi_status bi_equilibrium(const struct bi_instance *instance,
                              double beta,
                              enum bi_statistics kind,
                              double *mean_spin,
                              struct bi_equilibrium_summary *out);

/**
 * Probability that a sign readout at equilibrium misses the ground
 * pattern.
 *
 * # Safety
 * Pointers must be valid.
 */
enum bi_status bi_error_probability(const struct bi_instance *instance,
                                    double beta,
                                    enum bi_statistics kind,
                                    double *out);

/**
 * Inverse temperature whose equilibrium error equals `target`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum bi_status bi_beta_for_error(const struct bi_instance *instance,
                                 double target,
                                 enum bi_statistics kind,
                                 double *out);

/**
 * Exhaustive minimum energy; `ground_k`, when non-NULL, receives one
 * minimizing occupation vector.
 *
 * # Safety
 * Pointers must be valid; `ground_k`, when non-NULL, must hold
 * `site_count` entries.
 */
enum bi_status bi_ground_energy(const struct bi_instance *instance,
                                uint32_t *ground_k,
                                double *out);

/**
 * Exponential anneal from the error-0.7 temperature over `4 * tau0`:
 * mean final energy above the ground state and its standard error.
 *
 * # Safety
 * Pointers must be valid.
 */
enum bi_status bi_anneal_residual(const struct bi_instance *instance,
                                  double alpha,
                                  double xi,
                                  double tau0,
                                  uintptr_t n_traj,
                                  uint64_t seed,
                                  double *residual,
                                  double *stderr_out);

/**
 * Best cut found by `n_runs` annealed trajectories on the instance's
 * couplings, read out as canonical signs (vertex 0 positive).
 *
 * The instance must come from `bi_instance_from_graph_file` or encode a
 * cut problem the same way (`J_uv = +w_uv`, `lambda = 0`).
 *
 * # Safety
 * Pointers must be valid.
 */
enum bi_status bi_anneal_best_cut(const struct bi_instance *instance,
                                  double alpha,
                                  double xi,
                                  double t0,
                                  double tau0,
                                  uintptr_t n_runs,
                                  uint64_t seed,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BOSONIC_ISING_H */
