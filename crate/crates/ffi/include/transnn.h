/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef TRANSNN_H
#define TRANSNN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TnnStatus {
  TNN_STATUS_OK = 0,
  TNN_STATUS_NULL_POINTER = 1,
  /**
   * Malformed document, out-of-range value, index or size mismatch.
   */
  TNN_STATUS_INVALID_INPUT = 2,
  /**
   * The state space is larger than the solver's node cap.
   */
  TNN_STATUS_CAP_EXCEEDED = 3,
  TNN_STATUS_IO = 4,
  TNN_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  TNN_STATUS_PANIC = 6,
} TnnStatus;

typedef enum TnnSweepStatus {
  TNN_SWEEP_STATUS_CONVERGED = 0,
  TNN_SWEEP_STATUS_OSCILLATING = 1,
  TNN_SWEEP_STATUS_MAX_ITERATIONS = 2,
} TnnSweepStatus;

typedef struct TnnControlSolution TnnControlSolution;

typedef struct TnnMdpSolution TnnMdpSolution;

/**
 * A validated scenario: network, cost parameters and initial condition.
 */
typedef struct TnnScenario TnnScenario;

typedef struct TnnControlSummary {
  double j2;
  enum TnnSweepStatus status;
  size_t iterations;
  size_t vaccinations;
  /**
   * Adjoint terms evaluated at the `(w = 1, s = +inf)` corner.
   */
  size_t corner_hits;
} TnnControlSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null.
 */
const char *tnn_last_error(void);

/**
 * Library version as a static string.
 */
const char *tnn_version(void);

/**
 * Parses a JSON scenario document.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a valid pointer.
 */
enum TnnStatus tnn_scenario_from_json(const char *json, struct TnnScenario **out);

/**
 * Loads a JSON scenario file.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum TnnStatus tnn_scenario_load(const char *path, struct TnnScenario **out);

/**
 * # Safety
 * `sc` must come from this library and not have been freed. Null is ignored.
 */
void tnn_scenario_free(struct TnnScenario *sc);

/**
 * Number of nodes, 0 for a null handle.
 *
 * # Safety
 * `sc` must be null or a live handle.
 */
size_t tnn_scenario_node_count(const struct TnnScenario *sc);

/**
 * Horizon `T`, 0 for a null handle.
 *
 * # Safety
 * `sc` must be null or a live handle.
 */
size_t tnn_scenario_horizon(const struct TnnScenario *sc);

/**
 * Copies the `n` initial infection probabilities.
 *
 * # Safety
 * `out` must have room for `len` doubles.
 */
enum TnnStatus tnn_scenario_initial(const struct TnnScenario *sc, double *out, size_t len);

/**
 * `Psi(w, x) = -ln(1 - w + w e^{-x})`; NaN outside `w` in `[0, 1]`,
 * `x` in `[0, +inf]`.
 */
double tnn_psi(double w, double x);

/**
 * `d Psi / dx`, 0 at `(1, +inf)`; NaN outside the domain of [`tnn_psi`].
 */
double tnn_dpsi_ds(double w, double x);

/**
 * One TransNN step in probability coordinates at time `k`.
 *
 * # Safety
 * `p` and `out` must each hold `len` doubles.
 */
enum TnnStatus tnn_step_prob(const struct TnnScenario *sc,
                             size_t k,
                             const double *p,
                             double *out,
                             size_t len);

/**
 * One TransNN step in information coordinates; entries may be `+inf`.
 *
 * # Safety
 * `s` and `out` must each hold `len` doubles.
 */
enum TnnStatus tnn_step_info(const struct TnnScenario *sc,
                             size_t k,
                             const double *s,
                             double *out,
                             size_t len);

/**
 * `Pr(X(k+1) = q | X(k) = x)` on the uncontrolled chain.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TnnStatus tnn_transition_probability(const struct TnnScenario *sc,
                                          size_t k,
                                          uint64_t x,
                                          uint64_t q,
                                          double *out);

/**
 * Exact dynamic programming. `cap` bounds `n`; 0 selects the default.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TnnStatus tnn_solve_mdp(const struct TnnScenario *sc, size_t cap, struct TnnMdpSolution **out);

/**
 * Optimal expected cost from the scenario's initial condition; NaN for a
 * null handle.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
double tnn_mdp_expected_cost(const struct TnnMdpSolution *sol);

/**
 * `V_k(x)` for `k = 0..=T`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TnnStatus tnn_mdp_value(const struct TnnMdpSolution *sol, size_t k, uint64_t x, double *out);

/**
 * Optimal action mask at `(k, x)` for `k < T`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TnnStatus tnn_mdp_action(const struct TnnMdpSolution *sol,
                              size_t k,
                              uint64_t x,
                              uint64_t *out);

/**
 * # Safety
 * `sol` must come from this library and not have been freed. Null is ignored.
 */
void tnn_mdp_free(struct TnnMdpSolution *sol);

/**
 * Forward-backward sweep on the TransNN dynamics. `max_iters` of 0
 * selects the default budget.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TnnStatus tnn_solve_transnn(const struct TnnScenario *sc,
                                 size_t max_iters,
                                 struct TnnControlSolution **out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum TnnStatus tnn_control_summary(const struct TnnControlSolution *sol,
                                   struct TnnControlSummary *out);

/**
 * Schedule as `T * n` bytes, 1 where the node is vaccinated.
 *
 * # Safety
 * `out` must have room for `len` bytes.
 */
enum TnnStatus tnn_control_schedule(const struct TnnControlSolution *sol, uint8_t *out, size_t len);

/**
 * Controlled probability trajectory, `(T + 1) * n` doubles.
 *
 * # Safety
 * `out` must have room for `len` doubles.
 */
enum TnnStatus tnn_control_probabilities(const struct TnnControlSolution *sol,
                                         double *out,
                                         size_t len);

/**
 * Adjoint `lambda(0..=T)`, `(T + 1) * n` doubles.
 *
 * # Safety
 * `out` must have room for `len` doubles.
 */
enum TnnStatus tnn_control_adjoint(const struct TnnControlSolution *sol, double *out, size_t len);

/**
 * Switching function `Delta H(k)` for `k < T`, `T * n` doubles.
 *
 * # Safety
 * `out` must have room for `len` doubles.
 */
enum TnnStatus tnn_control_delta_h(const struct TnnControlSolution *sol, double *out, size_t len);

/**
 * # Safety
 * `sol` must come from this library and not have been freed. Null is ignored.
 */
void tnn_control_free(struct TnnControlSolution *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRANSNN_H */
