/* C ABI for robustkit: robust learning of binary product distributions. */

#ifndef ROBUSTKIT_H
#define ROBUSTKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
typedef enum RkStatus {
  RK_STATUS_OK = 0,
  RK_STATUS_NULL_POINTER = 1,
  RK_STATUS_INVALID_ARGUMENT = 2,
  RK_STATUS_DIMENSION_MISMATCH = 3,
  RK_STATUS_NUMERIC_FAILURE = 4,
  RK_STATUS_PANIC = 5,
} RkStatus;

/**
 * Opaque tunables for the robust learner.
 */
typedef struct RkFilterConfig RkFilterConfig;

/**
 * Opaque result of a robust_learn run.
 */
typedef struct RkLearnResult RkLearnResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the underlying library; static storage, do not free.
 */
const char *rk_version(void);

/**
 * Allocate a filter config with the library defaults.
 */
struct RkFilterConfig *rk_filter_config_new(void);

/**
 * Free a config created by [`rk_filter_config_new`]. NULL is a no-op.
 *
 * # Safety
 * `cfg` must be NULL or a pointer previously returned by
 * [`rk_filter_config_new`] that has not been freed.
 */
void rk_filter_config_free(struct RkFilterConfig *cfg);

/**
 * Set the stopping-rule constant C in `C · ε · ln²(1/ε)`.
 *
 * # Safety
 * `cfg` must be a live pointer from [`rk_filter_config_new`].
 */
enum RkStatus rk_filter_config_set_stop_constant(struct RkFilterConfig *cfg, double stop_constant);

/**
 * Seed for the certificate solver's randomized restarts; fixes the run
 * bit-for-bit.
 *
 * # Safety
 * `cfg` must be a live pointer from [`rk_filter_config_new`].
 */
enum RkStatus rk_filter_config_set_solver_seed(struct RkFilterConfig *cfg, uint64_t seed);

/**
 * Run the robust learner on an ε-corrupted binary sample matrix.
 *
 * `samples` is row-major with one byte per entry (0 or 1), `n_samples` rows
 * and `n_coords` columns. On success `*out` owns the result and must be
 * freed with [`rk_learn_result_free`]. `cfg` may be NULL for defaults.
 *
 * # Safety
 * `samples` must point to `n_samples * n_coords` readable bytes; `out` must
 * be a valid writable pointer; `cfg`, when non-NULL, must be a live config.
 */
enum RkStatus rk_robust_learn(const uint8_t *samples,
                              uintptr_t n_samples,
                              uintptr_t n_coords,
                              double eps,
                              const struct RkFilterConfig *cfg,
                              struct RkLearnResult **out);

/**
 * Free a result from [`rk_robust_learn`]. NULL is a no-op.
 *
 * # Safety
 * `result` must be NULL or a pointer previously returned through
 * [`rk_robust_learn`] that has not been freed.
 */
void rk_learn_result_free(struct RkLearnResult *result);

/**
 * Copy the estimated mean vector into `out` (length `len`, which must equal
 * the learned dimension).
 *
 * # Safety
 * `result` must be live; `out` must point to `len` writable doubles.
 */
enum RkStatus rk_learn_result_means(const struct RkLearnResult *result, double *out, uintptr_t len);

/**
 * Number of filter iterations the run took.
 *
 * # Safety
 * `result` must be live.
 */
uintptr_t rk_learn_result_iterations(const struct RkLearnResult *result);

/**
 * Certificate value at termination.
 *
 * # Safety
 * `result` must be live.
 */
double rk_learn_result_certificate_value(const struct RkLearnResult *result);

/**
 * Stopping threshold the run used.
 *
 * # Safety
 * `result` must be live.
 */
double rk_learn_result_threshold(const struct RkLearnResult *result);

/**
 * Two-block TV characterization of the distance between product
 * distributions with means `p` (entries ≤ 2/3) and `q`.
 *
 * # Safety
 * `p` and `q` must point to `n` readable doubles; `out` must be writable.
 */
enum RkStatus rk_tv_characterization(const double *p, const double *q, uintptr_t n, double *out);

/**
 * Certified Hellinger upper bound on the TV distance between two product
 * distributions.
 *
 * # Safety
 * `p` and `q` must point to `n` readable doubles; `out` must be writable.
 */
enum RkStatus rk_tv_upper_bound(const double *p, const double *q, uintptr_t n, double *out);

/**
 * Dual norm `sup_{y in T_mu} <y, x>` with the attaining witness (optional:
 * pass NULL to skip copying the witness).
 *
 * # Safety
 * `x` and `mu` must point to `n` readable doubles, `out_value` must be
 * writable, and `out_witness` must be NULL or point to `n` writable doubles.
 */
enum RkStatus rk_vector_dual_norm(const double *x,
                                  const double *mu,
                                  uintptr_t n,
                                  double *out_value,
                                  double *out_witness);

/**
 * Fidelity of two single-qubit states given as Bloch 3-vectors.
 *
 * # Safety
 * `a` and `b` must point to 3 readable doubles each; `out` must be writable.
 */
enum RkStatus rk_fidelity_qubit(const double *a, const double *b, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBUSTKIT_H */
