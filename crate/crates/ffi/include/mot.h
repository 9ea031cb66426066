#ifndef MOT_H
#define MOT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MotStatus {
  MOT_STATUS_OK = 0,
  MOT_STATUS_NOT_IN_CONVEX_ORDER = 1,
  MOT_STATUS_INFEASIBLE = 2,
  MOT_STATUS_INVALID_INPUT = 3,
  MOT_STATUS_SEPARATION_VIOLATED = 4,
  MOT_STATUS_SOLVER_FAILURE = 5,
  MOT_STATUS_NULL_POINTER = 6,
  MOT_STATUS_PANIC = 7,
} MotStatus;

/**
 * A one-dimensional coupling, with transport maps when produced by the sweep.
 */
typedef struct MotCoupling MotCoupling;

/**
 * A finite measure on the real line.
 */
typedef struct MotMeasure MotMeasure;

typedef struct MotOrderReport {
  bool in_order;
  double mass_gap;
  double mean_gap;
  double worst_k;
  double worst_gap;
} MotOrderReport;

typedef struct MotEntry {
  double x;
  double y;
  double mass;
} MotEntry;

typedef struct MotMapRow {
  double x;
  double s;
  double t;
  double lambda_minus;
  double lambda_plus;
} MotMapRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *mot_last_error(void);

/**
 * Builds a measure from `len` positions and masses.
 *
 * # Safety
 * `positions` and `masses` must point to `len` readable doubles and `out`
 * to a writable handle slot. The handle must be released with
 * [`mot_measure_free`].
 */
enum MotStatus mot_measure_new(const double *positions,
                               const double *masses,
                               uintptr_t len,
                               struct MotMeasure **out);

/**
 * # Safety
 * `m` must be null or a handle from [`mot_measure_new`] not yet freed.
 */
void mot_measure_free(struct MotMeasure *m);

/**
 * Number of atoms after merging; zero for a null handle.
 *
 * # Safety
 * `m` must be null or a live measure handle.
 */
uintptr_t mot_measure_len(const struct MotMeasure *m);

/**
 * Total mass; NaN for a null handle.
 *
 * # Safety
 * `m` must be null or a live measure handle.
 */
double mot_measure_total_mass(const struct MotMeasure *m);

/**
 * Convex-order test. Returns `MOT_STATUS_OK` with the report filled in
 * whether or not the pair is in order.
 *
 * # Safety
 * `mu`, `nu` must be live measure handles and `out` writable.
 */
enum MotStatus mot_convex_order_check(const struct MotMeasure *mu,
                                      const struct MotMeasure *nu,
                                      double tol,
                                      struct MotOrderReport *out);

/**
 * Frontier sweep on the interval `(a, b)`; pass NaN for either end to use
 * the widest interval that separates the marginals.
 *
 * # Safety
 * `mu`, `nu` must be live measure handles and `out` a writable handle slot.
 * The coupling must be released with [`mot_coupling_free`].
 */
enum MotStatus mot_solve_sweep(const struct MotMeasure *mu,
                               const struct MotMeasure *nu,
                               double a,
                               double b,
                               double tol,
                               struct MotCoupling **out);

/**
 * LP oracle; minimizes the cost unless `maximize` is set.
 *
 * # Safety
 * As for [`mot_solve_sweep`].
 */
enum MotStatus mot_solve_lp(const struct MotMeasure *mu,
                            const struct MotMeasure *nu,
                            double p,
                            bool maximize,
                            struct MotCoupling **out);

/**
 * # Safety
 * `c` must be null or a coupling handle not yet freed.
 */
void mot_coupling_free(struct MotCoupling *c);

/**
 * # Safety
 * `c` must be null or a live coupling handle.
 */
uintptr_t mot_coupling_len(const struct MotCoupling *c);

/**
 * # Safety
 * `c` must be a live coupling handle and `out` writable.
 */
enum MotStatus mot_coupling_entry(const struct MotCoupling *c,
                                  uintptr_t index,
                                  struct MotEntry *out);

/**
 * `sum mass * |x - y|^p`; NaN for a null handle.
 *
 * # Safety
 * `c` must be null or a live coupling handle.
 */
double mot_coupling_cost(const struct MotCoupling *c, double p);

/**
 * Number of map rows; zero for LP couplings.
 *
 * # Safety
 * `c` must be null or a live coupling handle.
 */
uintptr_t mot_coupling_map_count(const struct MotCoupling *c);

/**
 * # Safety
 * `c` must be a live coupling handle and `out` writable.
 */
enum MotStatus mot_coupling_map_row(const struct MotCoupling *c,
                                    uintptr_t index,
                                    struct MotMapRow *out);

/**
 * Coupling JSON as written by the command line tool. Free the string with
 * [`mot_string_free`]. Returns null on failure.
 *
 * # Safety
 * `c` must be null or a live coupling handle.
 */
char *mot_coupling_to_json(const struct MotCoupling *c);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void mot_string_free(char *s);

/**
 * Cost change of the three-point swap; positive when the swap is cheaper.
 *
 * # Safety
 * `out` must be writable.
 */
enum MotStatus mot_swap_gain(double x,
                             double y_minus,
                             double y_plus,
                             double x_prime,
                             double y_prime,
                             double p,
                             double *out);

/**
 * Evaluates the deformation curve on `grid` points of `[0, 1]`.
 *
 * # Safety
 * `t_out` and `c_out` must each have room for `grid` doubles.
 */
enum MotStatus mot_deformation_curve(double b,
                                     double r,
                                     double z,
                                     double q,
                                     uintptr_t grid,
                                     double *t_out,
                                     double *c_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOT_H */
