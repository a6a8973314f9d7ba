#ifndef RELMAP_H
#define RELMAP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RelmapStatus {
  RELMAP_STATUS_OK = 0,
  RELMAP_STATUS_NO_MAPPING = 1,
  RELMAP_STATUS_INPUT_ERROR = 2,
  RELMAP_STATUS_SOURCE_ERROR = 3,
  RELMAP_STATUS_NULL_POINTER = 4,
  RELMAP_STATUS_INTERNAL_ERROR = 5,
} RelmapStatus;

/**
 * Opaque engine handle.
 */
typedef struct RelmapEngine RelmapEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *relmap_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *relmap_last_error(void);

/**
 * Opens an offline engine over a snapshot file, or over a TOML run
 * configuration when the path ends in `.toml`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum RelmapStatus relmap_engine_open(const char *path, struct RelmapEngine **out);

/**
 * Replaces the search hyperparameters. Values at or below zero keep the
 * current setting.
 *
 * # Safety
 * `engine` must come from [`relmap_engine_open`].
 */
enum RelmapStatus relmap_engine_configure(struct RelmapEngine *engine,
                                          int32_t beam_width,
                                          int32_t top_k,
                                          double sim_threshold,
                                          double cluster_threshold);

/**
 * Ranks mappings of `base` into `target`; writes the outcome as JSON.
 * Returns `NO_MAPPING` (with the JSON still written) when the best
 * mapping is empty.
 *
 * # Safety
 * Arrays must hold `n_base` / `n_target` valid strings; `out_json` must be
 * writable.
 */
enum RelmapStatus relmap_map(const struct RelmapEngine *engine,
                             const char *const *base,
                             size_t n_base,
                             const char *const *target,
                             size_t n_target,
                             char **out_json);

/**
 * Writes the scoring breakdown of `(b1, b2)` against `(t1, t2)` as JSON.
 *
 * # Safety
 * All strings must be valid; `out_json` must be writable.
 */
enum RelmapStatus relmap_explain(const struct RelmapEngine *engine,
                                 const char *b1,
                                 const char *b2,
                                 const char *t1,
                                 const char *t2,
                                 char **out_json);

/**
 * Maps the domains, then proposes target entities for the unmapped base
 * entity `entity`. Writes the suggestions as JSON; `NO_MAPPING` when
 * nothing survived.
 *
 * # Safety
 * As for [`relmap_map`]; `entity` must be a valid string.
 */
enum RelmapStatus relmap_suggest(const struct RelmapEngine *engine,
                                 const char *const *base,
                                 size_t n_base,
                                 const char *const *target,
                                 size_t n_target,
                                 const char *entity,
                                 char **out_json);

/**
 * Number of valid mappings between domains of sizes `n` and `m`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RelmapStatus relmap_solution_space_size(size_t n, size_t m, uint64_t *out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void relmap_string_free(char *s);

/**
 * Releases an engine. Null is ignored.
 *
 * # Safety
 * `engine` must come from [`relmap_engine_open`] and not be freed twice.
 */
void relmap_engine_free(struct RelmapEngine *engine);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELMAP_H */
