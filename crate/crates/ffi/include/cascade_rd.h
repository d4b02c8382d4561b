/* C ABI for the cascade-rd rate-distortion-cost region library.
 *
 * All fallible calls return an int code:
 *   0  ok
 *   1  invalid configuration or argument
 *   2  infeasible / not found at the search resolution
 *   3  golden or oracle mismatch
 *  -1  null pointer or invalid UTF-8
 *
 * Strings written through out-parameters are heap-allocated and must be
 * released with cascade_rd_string_free. Handles must be released with
 * cascade_rd_run_free.
 */

#ifndef CASCADE_RD_H
#define CASCADE_RD_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Opaque run handle: a validated JSON run configuration. */
typedef struct CascadeRdRun CascadeRdRun;

/* Parse and validate a JSON run configuration (NUL-terminated UTF-8).
 * On success writes a new handle to *out_run. On failure writes an error
 * message to *out_error when out_error is non-null. */
int cascade_rd_run_new(const char *config_json,
                       CascadeRdRun **out_run,
                       char **out_error);

/* Release a handle returned by cascade_rd_run_new. */
void cascade_rd_run_free(CascadeRdRun *run);

/* Release a string written by any function in this header. */
void cascade_rd_string_free(char *s);

/* Evaluate the explicit decision in the config; writes the plain-text
 * corner report (rates, distortions, cost, mutual-information terms). */
int cascade_rd_eval(const CascadeRdRun *run, char **out_text);

/* Trace the rate frontier (cascade) or surface (broadcast) over the
 * configured weight grid; writes the CSV table. */
int cascade_rd_frontier_csv(const CascadeRdRun *run, char **out_csv);

/* Search for a witness that (r1, r2[, rb]) is achievable. For cascade
 * configs pass has_rb = 0; for broadcast configs pass has_rb = 1 and the
 * broadcast rate in rb. Writes 1/0 to *out_achievable. Returns 0 when a
 * witness was found, 2 when not found at this resolution. */
int cascade_rd_membership(const CascadeRdRun *run,
                          double r1,
                          double r2,
                          int has_rb,
                          double rb,
                          int *out_achievable,
                          char **out_text);

/* Compare the optimizer against the brute-force lattice oracle at the
 * configured grid; writes the per-weight delta table. Returns 0 when all
 * deltas lie within [-1e-9, +1e-3] bits. */
int cascade_rd_oracle(const CascadeRdRun *run, char **out_text);

/* Project the rate-splitting inequality system by exact Fourier-Motzkin
 * elimination and write the canonical listing (one inequality per line).
 * drop_r2d != 0 omits the nonnegativity of the r2d split rate; reversed
 * != 0 uses the reverse elimination order. Returns 0 exactly when the
 * result matches the built-in four-inequality region. */
int cascade_rd_fm_listing(int drop_r2d, int reversed, char **out_text);

/* Run the degeneration + invariant battery with the given seed; writes
 * the per-check report. Returns 0 when every check passes. */
int cascade_rd_suite(uint64_t seed, char **out_text);

/* Static version string; do not free. */
const char *cascade_rd_version(void);

#ifdef __cplusplus
}
#endif

#endif /* CASCADE_RD_H */
