#ifndef GM3_H
#define GM3_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Gm3Branch {
  GM3_BRANCH_VIA_V = 0,
  GM3_BRANCH_VIA_W = 1,
  GM3_BRANCH_INFEASIBLE = 2,
} Gm3Branch;

typedef enum Gm3Scheme {
  GM3_SCHEME_EXPLICIT = 0,
  GM3_SCHEME_IMEX = 1,
} Gm3Scheme;

/**
 * Result codes.
 */
typedef enum Gm3Status {
  GM3_STATUS_OK = 0,
  /**
   * Null pointer, bad length or out-of-range option.
   */
  GM3_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Coefficients or exponents fail validation.
   */
  GM3_STATUS_INVALID_PARAMS = 2,
  /**
   * The exponent condition has no feasible branch.
   */
  GM3_STATUS_INFEASIBLE = 3,
  /**
   * Some other hypothesis of the certificate fails.
   */
  GM3_STATUS_NO_CERTIFICATE = 4,
  /**
   * A value overflowed during stepping.
   */
  GM3_STATUS_BLOW_UP = 5,
  /**
   * A component became non-positive during stepping.
   */
  GM3_STATUS_POSITIVITY_LOSS = 6,
  /**
   * Any other numerical failure.
   */
  GM3_STATUS_NUMERICAL = 7,
  /**
   * A panic was caught; the library state is unaffected.
   */
  GM3_STATUS_PANIC = 8,
} Gm3Status;

/**
 * Issued certificate.
 */
typedef struct Gm3Certificate Gm3Certificate;

/**
 * Validated parameter set.
 */
typedef struct Gm3Params Gm3Params;

/**
 * A state being advanced in time.
 */
typedef struct Gm3Simulation Gm3Simulation;

/**
 * Coefficients and exponents, index 0..2 for `u, v, w`.
 */
typedef struct Gm3RawParams {
  double a[3];
  double b[3];
  double sigma;
  double c;
  double p[3];
  double q[3];
  double r[3];
} Gm3RawParams;

typedef struct Gm3BranchReport {
  double condition_value_left;
  double bound_v_branch;
  double bound_w_branch;
  enum Gm3Branch selected_branch;
} Gm3BranchReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread (empty if none). The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *gm3_last_error_message(void);

/**
 * Validates parameters. `relaxed != 0` admits zero sources and decays
 * (usable for simulation, not for certificates).
 *
 * # Safety
 * `raw` must point to a readable `Gm3RawParams`; `out` to writable storage.
 */
enum Gm3Status gm3_params_new(const struct Gm3RawParams *raw,
                              int32_t relaxed,
                              struct Gm3Params **out);

/**
 * Parameters of a named preset: `phyllotaxis`, `gm2_rothe` or `blowup_ode`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` writable.
 */
enum Gm3Status gm3_params_preset(const char *name, struct Gm3Params **out);

/**
 * Copies the coefficients back out.
 *
 * # Safety
 * `params` must come from this library; `out` writable.
 */
enum Gm3Status gm3_params_get(const struct Gm3Params *params, struct Gm3RawParams *out);

/**
 * # Safety
 * `params` must come from this library (or be null) and not be used afterwards.
 */
void gm3_params_free(struct Gm3Params *params);

/**
 * Evaluates the exponent condition.
 *
 * # Safety
 * `params` must come from this library; `out` writable.
 */
enum Gm3Status gm3_exponent_condition(const struct Gm3Params *params, struct Gm3BranchReport *out);

/**
 * Builds a certificate from initial minima `ic_minima[3]`, the domain
 * measure, the horizon and the initial Lyapunov value.
 *
 * # Safety
 * `params` from this library; `ic_minima` points to 3 doubles; `out` writable.
 */
enum Gm3Status gm3_certificate_build(const struct Gm3Params *params,
                                     const double *ic_minima,
                                     double domain_measure,
                                     double horizon,
                                     double l0,
                                     struct Gm3Certificate **out);

/**
 * # Safety
 * `cert` from this library; `out` writable.
 */
enum Gm3Status gm3_certificate_kappa(const struct Gm3Certificate *cert, double *out);

/**
 * Writes `(alpha, beta, gamma)` and `mu` of the certificate.
 *
 * # Safety
 * `cert` from this library; `triple` points to 3 writable doubles; `mu` writable.
 */
enum Gm3Status gm3_certificate_triple(const struct Gm3Certificate *cert,
                                      double *triple,
                                      double *mu);

/**
 * Nonzero when every condition holds and `kappa >= L(0)`.
 *
 * # Safety
 * `cert` from this library or null (returns 0).
 */
int32_t gm3_certificate_is_valid(const struct Gm3Certificate *cert);

/**
 * Flat `name = value` text of the certificate; release with [`gm3_string_free`].
 *
 * # Safety
 * `cert` from this library; `out` writable.
 */
enum Gm3Status gm3_certificate_to_text(const struct Gm3Certificate *cert, char **out);

/**
 * Parses certificate text written by [`gm3_certificate_to_text`].
 *
 * # Safety
 * `text` NUL-terminated; `out` writable.
 */
enum Gm3Status gm3_certificate_from_text(const char *text, struct Gm3Certificate **out);

/**
 * # Safety
 * `cert` from this library (or null) and not used afterwards.
 */
void gm3_certificate_free(struct Gm3Certificate *cert);

/**
 * # Safety
 * `s` must come from this library (or be null).
 */
void gm3_string_free(char *s);

/**
 * Maximal root of `x - sum c_j x^theta_j = w0` for `n` terms.
 *
 * # Safety
 * `c` and `theta` point to `n` doubles each (may be null when `n == 0`); `out` writable.
 */
enum Gm3Status gm3_kappa_bound(double w0,
                               double mu,
                               const double *c,
                               const double *theta,
                               size_t n,
                               double *out);

/**
 * Starts a simulation on a `dim`-dimensional box with `n` cells and side
 * `length` per axis, uniform initial values `initial[3]`. For the explicit
 * scheme `dt` must respect the stability bound.
 *
 * # Safety
 * `params` from this library; `initial` points to 3 doubles; `out` writable.
 */
enum Gm3Status gm3_simulation_new(const struct Gm3Params *params,
                                  uint32_t dim,
                                  size_t n,
                                  double length,
                                  enum Gm3Scheme scheme,
                                  double dt,
                                  const double *initial,
                                  struct Gm3Simulation **out);

/**
 * Number of cells.
 *
 * # Safety
 * `sim` from this library or null (returns 0).
 */
size_t gm3_simulation_len(const struct Gm3Simulation *sim);

/**
 * Replaces one component (0 = u, 1 = v, 2 = w) with `len` values, all positive.
 *
 * # Safety
 * `sim` from this library; `values` points to `len` doubles.
 */
enum Gm3Status gm3_simulation_set_field(struct Gm3Simulation *sim,
                                        uint32_t component,
                                        const double *values,
                                        size_t len);

/**
 * Advances `steps` steps. On failure the state is left at the last good level.
 *
 * # Safety
 * `sim` from this library.
 */
enum Gm3Status gm3_simulation_step(struct Gm3Simulation *sim, size_t steps);

/**
 * # Safety
 * `sim` from this library; `out` writable.
 */
enum Gm3Status gm3_simulation_time(const struct Gm3Simulation *sim, double *out);

/**
 * Copies one component (0 = u, 1 = v, 2 = w) into `out[len]`.
 *
 * # Safety
 * `sim` from this library; `out` points to `len` writable doubles.
 */
enum Gm3Status gm3_simulation_field(const struct Gm3Simulation *sim,
                                    uint32_t component,
                                    double *out,
                                    size_t len);

/**
 * `∫ u^alpha / (v^beta w^gamma)` for the current state.
 *
 * # Safety
 * `sim` from this library; `out` writable.
 */
enum Gm3Status gm3_simulation_lyapunov(const struct Gm3Simulation *sim,
                                       double alpha,
                                       double beta,
                                       double gamma,
                                       double *out);

/**
 * # Safety
 * `sim` from this library (or null) and not used afterwards.
 */
void gm3_simulation_free(struct Gm3Simulation *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GM3_H */
