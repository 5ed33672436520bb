#ifndef SEEDMATCH_H
#define SEEDMATCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define SM_OK 0

/**
 * A required pointer argument was null.
 */
#define SM_ERR_NULL_ARGUMENT -1

/**
 * A parameter was out of range or otherwise rejected.
 */
#define SM_ERR_INVALID_PARAM -2

/**
 * A file could not be read.
 */
#define SM_ERR_IO -3

/**
 * A file was readable but malformed.
 */
#define SM_ERR_PARSE -4

/**
 * The LP backend failed to solve the relaxation.
 */
#define SM_ERR_SOLVER -5

/**
 * The instance carries no ground truth, so no accuracy exists.
 */
#define SM_ERR_NO_TRUTH -6

/**
 * The caller's buffer is too small for the requested data.
 */
#define SM_ERR_BUFFER_TOO_SMALL -7

/**
 * A string argument was not valid UTF-8.
 */
#define SM_ERR_BAD_UTF8 -8

/**
 * An unexpected internal failure; treat the handle as poisoned.
 */
#define SM_ERR_INTERNAL -9

/**
 * A matching problem: two graphs, the revealed correspondence, and
 * optionally the full ground truth.
 */
typedef struct SmInstance SmInstance;

/**
 * A completed matching: the full permutation plus metadata.
 */
typedef struct SmMatch SmMatch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the message for the most recent failure on the calling thread.
 * The pointer stays valid until the next failing call on the same thread;
 * it is never null.
 */
const char *sm_last_error(void);

/**
 * Samples a fresh instance of the correlated two-community model and
 * reveals a `seed_fraction` share of the true correspondence. On success
 * writes an owned handle to `out`; release it with `sm_instance_free`.
 */
int32_t sm_instance_generate(uint64_t n,
                             double a,
                             double b,
                             double s,
                             double seed_fraction,
                             uint64_t rng_seed,
                             struct SmInstance **out);

/**
 * Loads an instance from edge-list files for both graphs and a seeds csv
 * (`u,pi_u,sigma_u` rows). `truth_path` may be null; without it the
 * instance carries no ground truth and accuracies are unavailable. Vertices
 * are zero-based indices; the vertex count is the largest index mentioned
 * in any file plus one.
 */
int32_t sm_instance_load(const char *a_path,
                         const char *b_path,
                         const char *seeds_path,
                         const char *truth_path,
                         struct SmInstance **out);

/**
 * Writes the instance's vertex count to `out`.
 */
int32_t sm_instance_vertex_count(const struct SmInstance *inst, uint64_t *out);

/**
 * Writes the number of revealed vertices to `out`.
 */
int32_t sm_instance_seed_count(const struct SmInstance *inst, uint64_t *out);

/**
 * Releases an instance handle. Null is accepted and ignored.
 */
void sm_instance_free(struct SmInstance *inst);

/**
 * Runs one matcher on the instance. `method` is one of
 * `overlap_hungarian`, `overlap_greedy`, `lp_exact`, `fw_linear`, `hop2`;
 * `fw_iterations` only affects `fw_linear`. On success writes an owned
 * handle to `out`; release it with `sm_match_free`.
 */
int32_t sm_match_run(const struct SmInstance *inst,
                     const char *method,
                     uint64_t fw_iterations,
                     struct SmMatch **out);

/**
 * Writes the matched permutation's length to `out`.
 */
int32_t sm_match_vertex_count(const struct SmMatch *m, uint64_t *out);

/**
 * Copies the full permutation into the caller's buffer, one image per
 * vertex. `capacity` is the buffer length in elements and must be at least
 * the match's vertex count.
 */
int32_t sm_match_permutation(const struct SmMatch *m, uint64_t *out, uint64_t capacity);

/**
 * Writes the accuracy over unrevealed vertices to `out`. Fails with
 * `SM_ERR_NO_TRUTH` when the instance was loaded without ground truth.
 */
int32_t sm_match_accuracy(const struct SmMatch *m, double *out);

/**
 * Writes the matching-stage runtime in seconds to `out`.
 */
int32_t sm_match_elapsed_seconds(const struct SmMatch *m, double *out);

/**
 * Releases a match handle. Null is accepted and ignored.
 */
void sm_match_free(struct SmMatch *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEEDMATCH_H */
