#ifndef SMALLTIME_H
#define SMALLTIME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a C API call.
 */
typedef enum {
  SMALLTIME_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  SMALLTIME_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  SMALLTIME_STATUS_INVALID_UTF8 = 2,
  /**
   * A file could not be read or written.
   */
  SMALLTIME_STATUS_IO = 3,
  /**
   * Manifest or snapshot contents are invalid.
   */
  SMALLTIME_STATUS_DATA = 4,
  /**
   * Selection failed, e.g. K too large or infeasible.
   */
  SMALLTIME_STATUS_SELECTION = 5,
  SMALLTIME_STATUS_RENDER = 6,
  SMALLTIME_STATUS_CAPTIONS = 7,
  /**
   * Configuration JSON was rejected.
   */
  SMALLTIME_STATUS_CONFIG = 8,
  /**
   * An internal panic was caught at the boundary.
   */
  SMALLTIME_STATUS_PANIC = 9,
} SmalltimeStatus;

/**
 * Opaque handle to a loaded snapshot sequence.
 */
typedef struct SmalltimeProject SmalltimeProject;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a capture manifest and its snapshots. On success `*out` owns a
 * new handle to be released with [`smalltime_project_free`].
 */
SmalltimeStatus smalltime_project_open(const char *manifest_path,
                                       bool strict,
                                       double epsilon,
                                       SmalltimeProject **out);

/**
 * Releases a handle. NULL is ignored.
 */
void smalltime_project_free(SmalltimeProject *project);

SmalltimeStatus smalltime_project_snapshot_count(const SmalltimeProject *project, size_t *out);

/**
 * Rows in the original snapshot.
 */
SmalltimeStatus smalltime_project_row_count(const SmalltimeProject *project, size_t *out);

/**
 * Selects the Smallset. `selector_json` may be NULL for defaults.
 * `*out_json` receives `{"selection": ..., "warnings": [...]}`.
 */
SmalltimeStatus smalltime_project_select(const SmalltimeProject *project,
                                         const char *selector_json,
                                         char **out_json);

/**
 * Coverage and appearance matrices as JSON.
 */
SmalltimeStatus smalltime_project_dump_matrices(const SmalltimeProject *project, char **out_json);

/**
 * Caption template text for the Smallset chosen by `selector_json`
 * (NULL for defaults).
 */
SmalltimeStatus smalltime_project_caption_template(const SmalltimeProject *project,
                                                   const char *selector_json,
                                                   char **out_text);

/**
 * Renders the timeline. `config_json` is a run configuration (NULL for
 * defaults); `captions` is a completed caption file's text. Both outputs
 * are set on success and NULL otherwise.
 */
SmalltimeStatus smalltime_project_render(const SmalltimeProject *project,
                                         const char *config_json,
                                         const char *captions,
                                         char **out_svg,
                                         char **out_alt_text);

/**
 * Releases a string returned by this library. NULL is ignored.
 */
void smalltime_string_free(char *s);

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next call into this library on the same thread.
 */
const char *smalltime_last_error(void);

/**
 * Library version, static storage.
 */
const char *smalltime_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SMALLTIME_H */
