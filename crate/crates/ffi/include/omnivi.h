#ifndef OMNIVI_H
#define OMNIVI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Library errors share their values with the CLI exit codes.
 */
typedef enum OmniviStatus {
  OMNIVI_STATUS_OK = 0,
  /**
   * Bad arguments or configuration.
   */
  OMNIVI_STATUS_INPUT = 2,
  /**
   * The game violates the linear-model assumptions.
   */
  OMNIVI_STATUS_MODEL_VALIDITY = 3,
  OMNIVI_STATUS_IO = 4,
  /**
   * Solver, numeric or internal failure.
   */
  OMNIVI_STATUS_NUMERIC = 5,
  /**
   * A required pointer argument was null.
   */
  OMNIVI_STATUS_NULL_POINTER = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  OMNIVI_STATUS_PANIC = 7,
} OmniviStatus;

/**
 * Opaque simultaneous-move game. Turn-based games are stored embedded.
 */
typedef struct OmniviGame OmniviGame;

/**
 * Opaque finished experiment.
 */
typedef struct OmniviRun OmniviRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next omnivi call on the same thread.
 */
const char *omnivi_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *omnivi_version(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void omnivi_string_free(char *s);

/**
 * Parse a game file given as TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum OmniviStatus omnivi_game_from_toml(const char *toml, struct OmniviGame **out);

/**
 * One of the builtin games by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum OmniviStatus omnivi_game_builtin(const char *name, struct OmniviGame **out);

/**
 * Random valid linear game with simplex features.
 *
 * # Safety
 * `out` must be writable.
 */
enum OmniviStatus omnivi_game_random_simplex(size_t d,
                                             size_t num_states,
                                             size_t num_actions,
                                             size_t horizon,
                                             uint64_t seed,
                                             struct OmniviGame **out);

/**
 * Release a game. Null is ignored.
 *
 * # Safety
 * `game` must come from this library and not have been freed.
 */
void omnivi_game_free(struct OmniviGame *game);

/**
 * Feature dimension, horizon, state and action counts. Any output pointer
 * may be null.
 *
 * # Safety
 * `game` must be a live handle; non-null outputs must be writable.
 */
enum OmniviStatus omnivi_game_dims(const struct OmniviGame *game,
                                   size_t *d,
                                   size_t *horizon,
                                   size_t *num_states,
                                   size_t *num_actions);

/**
 * Reward and next-state distribution at step `h` (1-based). `next` must
 * hold `next_len >= num_states` doubles.
 *
 * # Safety
 * `game` must be a live handle; `reward` writable; `next` valid for
 * `next_len` writes.
 */
enum OmniviStatus omnivi_game_query(const struct OmniviGame *game,
                                    size_t h,
                                    size_t x,
                                    size_t a,
                                    size_t b,
                                    double *reward,
                                    double *next,
                                    size_t next_len);

/**
 * Number of violated model assumptions; zero means valid.
 *
 * # Safety
 * `game` must be a live handle; `count` writable.
 */
enum OmniviStatus omnivi_game_validate(const struct OmniviGame *game, size_t *count);

/**
 * Minimax value of the whole game from state `x` at step 1.
 *
 * # Safety
 * `game` must be a live handle; `value` writable.
 */
enum OmniviStatus omnivi_game_nash_value(const struct OmniviGame *game, size_t x, double *value);

/**
 * Solve the `n x n` zero-sum game `payoff` (row-major, row player
 * maximizes). `row` and `col` may be null or hold `n` doubles each.
 *
 * # Safety
 * `payoff` valid for `n * n` reads; non-null outputs valid for writes.
 */
enum OmniviStatus omnivi_solve_zero_sum(const double *payoff,
                                        size_t n,
                                        double *value,
                                        double *row,
                                        double *col);

/**
 * Welfare-maximizing coarse correlated equilibrium of the `n x n` game
 * where the row player maximizes `u1` and the column player minimizes `u2`
 * (both row-major). Writes `n * n` probabilities, row-major, to `sigma`.
 *
 * # Safety
 * `u1`, `u2` valid for `n * n` reads; `sigma` valid for `n * n` writes.
 */
enum OmniviStatus omnivi_solve_cce(const double *u1, const double *u2, size_t n, double *sigma);

/**
 * Run the experiment described by a config given as TOML text. Relative
 * game paths resolve against the working directory; `output` is ignored.
 *
 * # Safety
 * `config` must be a NUL-terminated string; `out` must be writable.
 */
enum OmniviStatus omnivi_run_config(const char *config, struct OmniviRun **out);

/**
 * Number of episodes in a finished run.
 *
 * # Safety
 * `run` must be a live handle or null (returns 0).
 */
size_t omnivi_run_len(const struct OmniviRun *run);

/**
 * Per-episode metrics as CSV text.
 *
 * # Safety
 * `run` must be a live handle; `out` must be writable.
 */
enum OmniviStatus omnivi_run_csv(const struct OmniviRun *run, char **out);

/**
 * Summary record and config echo as TOML text.
 *
 * # Safety
 * `run` must be a live handle; `out` must be writable.
 */
enum OmniviStatus omnivi_run_summary(const struct OmniviRun *run, char **out);

/**
 * Release a run. Null is ignored.
 *
 * # Safety
 * `run` must come from this library and not have been freed.
 */
void omnivi_run_free(struct OmniviRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OMNIVI_H */
