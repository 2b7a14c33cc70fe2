#ifndef UNDERSOLVE_H
#define UNDERSOLVE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Iteration rules selectable through [`UsSolveParams`].
 */
typedef enum UsAlgorithm {
  /**
   * Two-stage rule with known `mu` and `l`.
   */
  UsAlgBasic = 0,
  /**
   * Adaptive threshold rule driven by `beta0` and `q`.
   */
  UsAlgAdaptive = 1,
  /**
   * Lipschitz-only rule driven by `l`.
   */
  UsAlgLOnly = 2,
  /**
   * Undamped Newton.
   */
  UsAlgPure = 3,
  /**
   * Fixed damping `alpha`.
   */
  UsAlgConstant = 4,
} UsAlgorithm;

/**
 * Norms for steps (domain) and residuals (image).
 */
typedef enum UsNorm {
  UsNormL1 = 0,
  UsNormL2 = 1,
  UsNormLInf = 2,
} UsNorm;

/**
 * Terminal state of a finished run, mirrored from the library.
 */
typedef enum UsSolveOutcomeKind {
  UsSolveConverged = 0,
  UsSolveMaxIter = 1,
  UsSolveLeftTrustBall = 2,
  UsSolveRankDeficient = 3,
  UsSolveInnerReductionLimit = 4,
  UsSolveZeroGradient = 5,
} UsSolveOutcomeKind;

/**
 * Status codes returned by every fallible call.
 */
typedef enum UsStatus {
  UsOk = 0,
  /**
   * Null pointer, bad enum value, or out-of-range numeric argument.
   */
  UsErrInvalidArgument = 1,
  /**
   * Problem file could not be parsed or validated.
   */
  UsErrParse = 2,
  /**
   * The iteration stopped without converging.
   */
  UsErrNotConverged = 3,
  /**
   * The operation needs data the problem does not carry
   * (e.g. certification of a non-quadratic problem).
   */
  UsErrUnsupported = 4,
} UsStatus;

/**
 * Opaque outcome handle.
 */
typedef struct UsOutcome UsOutcome;

/**
 * Opaque problem handle.
 */
typedef struct UsProblem UsProblem;

/**
 * Solve parameters. Obtain defaults from [`us_solve_params_default`] and
 * override the fields the chosen algorithm needs: `mu`/`l` for basic,
 * `l` for l-only, `beta0`/`q` for adaptive, `alpha` for constant.
 */
typedef struct UsSolveParams {
  enum UsAlgorithm algorithm;
  enum UsNorm domain_norm;
  enum UsNorm image_norm;
  double mu;
  double l;
  double beta0;
  double q;
  double alpha;
  /**
   * Relative residual stopping tolerance.
   */
  double tol;
  uintptr_t max_iter;
  /**
   * Trust-ball radius around the start point; infinity disables it.
   */
  double trust_radius;
} UsSolveParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent error on this thread. The pointer stays
 * valid until the next failing call on the same thread. Never null.
 */
const char *us_last_error_message(void);

/**
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum UsStatus us_problem_load_str(const char *text, struct UsProblem **out);

/**
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum UsStatus us_problem_load_file(const char *path, struct UsProblem **out);

/**
 * # Safety
 * `p` must come from a `us_problem_load_*` call and not be freed twice.
 */
void us_problem_free(struct UsProblem *p);

/**
 * # Safety
 * All pointers must be valid.
 */
enum UsStatus us_problem_dims(const struct UsProblem *p, uintptr_t *n, uintptr_t *m);

/**
 * Defaults: basic algorithm, Euclidean norms, `tol = 1e-10`,
 * `max_iter = 500`, no trust ball; the per-algorithm constants are NaN
 * and must be set by the caller when the algorithm needs them.
 */
struct UsSolveParams us_solve_params_default(void);

/**
 * Runs the selected algorithm from the problem's start point. On success
 * `*out` owns the outcome; inspect and free it with the `us_outcome_*`
 * calls. A run that stops without converging still produces an outcome
 * and returns `UsErrNotConverged`.
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
enum UsStatus us_solve(const struct UsProblem *p,
                       struct UsSolveParams params,
                       struct UsOutcome **out);

/**
 * # Safety
 * `o` must come from `us_solve` and not be freed twice.
 */
void us_outcome_free(struct UsOutcome *o);

/**
 * # Safety
 * `o` must be a valid outcome handle.
 */
enum UsSolveOutcomeKind us_outcome_kind(const struct UsOutcome *o);

/**
 * # Safety
 * `o` must be a valid outcome handle.
 */
uintptr_t us_outcome_iterations(const struct UsOutcome *o);

/**
 * # Safety
 * `o` must be a valid outcome handle.
 */
uintptr_t us_outcome_stage1_count(const struct UsOutcome *o);

/**
 * # Safety
 * `o` must be a valid outcome handle.
 */
double us_outcome_final_residual(const struct UsOutcome *o);

/**
 * Copies the solution into `buf` (capacity `len`); fails unless
 * `len >= n`.
 *
 * # Safety
 * `o` must be valid and `buf` must point to at least `len` doubles.
 */
enum UsStatus us_outcome_solution(const struct UsOutcome *o, double *buf, uintptr_t len);

/**
 * Certified `(mu0, l1)` of a quadratic problem's linearization at the
 * origin. Non-quadratic problems return `UsErrUnsupported`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum UsStatus us_certify_quadratic(const struct UsProblem *p, double *mu0, double *l1);

/**
 * The tail-sum constant `c = H_0(1/2)`.
 */
double us_constant_c(void);

/**
 * Damped-stage iteration bound `k_max(u0, mu, l)`.
 */
uint32_t us_k_max(double u0, double mu, double l);

/**
 * Solvability radius `mu0^2 / (4 l)` and solution bound `mu0 / (2 l)`
 * for quadratic maps.
 *
 * # Safety
 * `radius_y` and `radius_x` must be valid pointers.
 */
enum UsStatus us_region_quadratic(double mu0, double l, double *radius_y, double *radius_x);

/**
 * The guaranteed-convergence constants `(s1, t1)`.
 *
 * # Safety
 * `s1` and `t1` must be valid pointers.
 */
enum UsStatus us_guarantee_constants(double *s1, double *t1);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* UNDERSOLVE_H */
