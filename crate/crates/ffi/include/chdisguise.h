#ifndef CHDISGUISE_H
#define CHDISGUISE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChdComposeMode {
  CHD_COMPOSE_MODE_PRODUCT = 0,
  CHD_COMPOSE_MODE_SUM = 1,
} ChdComposeMode;

/**
 * Result code of every fallible call.
 */
typedef enum ChdStatus {
  CHD_STATUS_OK = 0,
  CHD_STATUS_NULL_POINTER = 1,
  CHD_STATUS_INVALID_ARGUMENT = 2,
  CHD_STATUS_NUMERICAL = 3,
  CHD_STATUS_INCONCLUSIVE = 4,
  CHD_STATUS_IO = 5,
  CHD_STATUS_PANIC = 6,
} ChdStatus;

/**
 * Opaque quantum channel.
 */
typedef struct ChdChannel ChdChannel;

/**
 * Opaque profile over a β grid.
 */
typedef struct ChdProfile ChdProfile;

/**
 * A `(p, q)` pair of mixing probabilities.
 */
typedef struct ChdPoint {
  double p;
  double q;
} ChdPoint;

/**
 * One β of a traced profile.
 */
typedef struct ChdSample {
  double beta;
  double alpha_lower;
  double alpha_upper;
  bool tight;
  struct ChdPoint lower;
  struct ChdPoint upper;
} ChdSample;

typedef struct ChdSolverOptions {
  /**
   * 0 for interior point, 1 for bisection.
   */
  uint32_t method;
  double tol;
  double feas_tol;
  size_t max_iter;
  bool warm_start;
} ChdSolverOptions;

typedef struct ChdExactResult {
  double alpha_hat;
  /**
   * Dual certificate below the optimum.
   */
  double lower_bound;
  double alpha_lower;
  double alpha_upper;
  struct ChdPoint point;
  double residual;
  size_t iterations;
} ChdExactResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a
 * success. Valid until the next call on the same thread.
 */
const char *chd_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *chd_version(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void chd_string_free(char *s);

/**
 * Parses channel JSON, checking trace preservation to `tp_tol`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum ChdStatus chd_channel_from_json(const char *json, double tp_tol, struct ChdChannel **out);

/**
 * Built-in channel: `bitflip`, `phaseflip` or `xzflip` with probability
 * `param`, or `appendix-b-e` / `appendix-b-f` (`param` ignored).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum ChdStatus chd_channel_fixture(const char *name, double param, struct ChdChannel **out);

/**
 * Seeded random channel with `kraus` operators on dimension `dim`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ChdStatus chd_channel_random(size_t dim, size_t kraus, uint64_t seed, struct ChdChannel **out);

/**
 * Canonical JSON for a channel; free with [`chd_string_free`].
 *
 * # Safety
 * `ch` must be a live handle; `out` must be writable.
 */
enum ChdStatus chd_channel_to_json(const struct ChdChannel *ch, char **out);

/**
 * Dimension of a channel, or 0 for null.
 *
 * # Safety
 * `ch` must be null or a live handle.
 */
size_t chd_channel_dim(const struct ChdChannel *ch);

/**
 * # Safety
 * `ch` must be null or a handle not yet freed.
 */
void chd_channel_free(struct ChdChannel *ch);

/**
 * Traces the bound curves of `(e, f)` over `count` β values.
 *
 * # Safety
 * `e`, `f` must be live handles; `betas` must point to `count` doubles;
 * `out` must be writable.
 */
enum ChdStatus chd_profile_trace(const struct ChdChannel *e,
                                 const struct ChdChannel *f,
                                 const double *betas,
                                 size_t count,
                                 struct ChdProfile **out);

/**
 * Number of β samples, or 0 for null.
 *
 * # Safety
 * `prof` must be null or a live handle.
 */
size_t chd_profile_len(const struct ChdProfile *prof);

/**
 * # Safety
 * `prof` must be a live handle; `out` must be writable.
 */
enum ChdStatus chd_profile_sample(const struct ChdProfile *prof,
                                  size_t index,
                                  struct ChdSample *out);

/**
 * Number of vertices of the convexified upper curve, or 0 for null.
 *
 * # Safety
 * `prof` must be null or a live handle.
 */
size_t chd_profile_hull_len(const struct ChdProfile *prof);

/**
 * # Safety
 * `prof` must be a live handle; `out` must be writable.
 */
enum ChdStatus chd_profile_hull_point(const struct ChdProfile *prof,
                                      size_t index,
                                      struct ChdPoint *out);

/**
 * Number of cusps detected on the lower curve, or 0 for null.
 *
 * # Safety
 * `prof` must be null or a live handle.
 */
size_t chd_profile_cusp_count(const struct ChdProfile *prof);

/**
 * # Safety
 * `prof` must be null or a handle not yet freed.
 */
void chd_profile_free(struct ChdProfile *prof);

/**
 * Default solver settings.
 */
struct ChdSolverOptions chd_solver_options_default(void);

/**
 * Exact optimum on the β line. `opts` may be null for defaults.
 *
 * # Safety
 * `e`, `f` must be live handles; `opts` null or valid; `out` writable.
 */
enum ChdStatus chd_exact_solve(const struct ChdChannel *e,
                               const struct ChdChannel *f,
                               double beta,
                               const struct ChdSolverOptions *opts,
                               struct ChdExactResult *out);

/**
 * Smallest `q` with `E = (1 - q) F + q F_Δ`.
 *
 * # Safety
 * `e`, `f` must be live handles; `q_min` must be writable.
 */
enum ChdStatus chd_containment_min_q(const struct ChdChannel *e,
                                     const struct ChdChannel *f,
                                     double *q_min);

/**
 * Achievable E-G pair from an E-F pair and a G-F pair (G weight first).
 *
 * # Safety
 * `out` must be writable.
 */
enum ChdStatus chd_triangle_combine(struct ChdPoint pq_ef,
                                    struct ChdPoint pq_gf,
                                    struct ChdPoint *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum ChdStatus chd_compose_mixing(struct ChdPoint pq1,
                                  struct ChdPoint pq2,
                                  enum ChdComposeMode mode,
                                  struct ChdPoint *out);

/**
 * Diamond-distance bracket from the equal mixing probability.
 *
 * # Safety
 * `lower` and `upper` must be writable.
 */
enum ChdStatus chd_diamond_bracket(double p_eq, size_t dim, double *lower, double *upper);

/**
 * Key-rate upper bound in bits per signal.
 *
 * # Safety
 * `bits` must be writable.
 */
enum ChdStatus chd_qkd_rate_bound(double p, size_t dim, double *bits);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHDISGUISE_H */
