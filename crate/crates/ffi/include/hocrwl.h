#ifndef HOCRWL_H
#define HOCRWL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  HOCRWL_STATUS_OK = 0,
  HOCRWL_STATUS_NULL_ARGUMENT = 1,
  HOCRWL_STATUS_INVALID_UTF8 = 2,
  HOCRWL_STATUS_PARSE_ERROR = 3,
  HOCRWL_STATUS_INVALID_PROGRAM = 4,
  /**
   * A query failed, e.g. a value that is not a pattern or an unsafe
   * generated extension.
   */
  HOCRWL_STATUS_QUERY_ERROR = 5,
  /**
   * The requested value is not derivable within the budget.
   */
  HOCRWL_STATUS_NOT_FOUND = 6,
  HOCRWL_STATUS_PANIC = 7,
} HocrwlStatus;

/**
 * A validated program.
 */
typedef struct HocrwlProgram HocrwlProgram;

/**
 * Search limits; zero fields take the library defaults.
 */
typedef struct {
  uint32_t max_or_depth;
  uint32_t max_pattern_size;
  uint32_t max_results;
} HocrwlBudget;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses and validates a program. On success `*out` receives a handle.
 *
 * # Safety
 * `src` is a NUL-terminated string; `out` is valid for a pointer write.
 */
HocrwlStatus hocrwl_program_parse(const char *src,
                                  bool prelude,
                                  bool extra_variables,
                                  bool left_fo,
                                  HocrwlProgram **out);

/**
 * Releases a program handle. NULL is ignored.
 *
 * # Safety
 * `p` is NULL or a handle from [`hocrwl_program_parse`] not yet freed.
 */
void hocrwl_program_free(HocrwlProgram *p);

/**
 * The program in source syntax.
 *
 * # Safety
 * `p` is a live handle; `out` is valid for a pointer write.
 */
HocrwlStatus hocrwl_program_source(const HocrwlProgram *p, char **out);

/**
 * `{"elements": [...], "maximal": [...], "bound": n, "complete_at_bound": b, "truncated": b}`.
 *
 * # Safety
 * `p` is a live handle; `expr` is a NUL-terminated string; `out` is valid
 * for a pointer write.
 */
HocrwlStatus hocrwl_denote(const HocrwlProgram *p,
                           const char *expr,
                           HocrwlBudget budget,
                           char **out);

/**
 * A proof tree for `expr ~> value`, or status `NotFound`.
 *
 * # Safety
 * As for [`hocrwl_denote`]; `value` is a NUL-terminated string.
 */
HocrwlStatus hocrwl_derive(const HocrwlProgram *p,
                           const char *expr,
                           const char *value,
                           HocrwlBudget budget,
                           char **out);

/**
 * `{"values": [...], "exhausted": b}`; `fo` keeps first-order values only.
 *
 * # Safety
 * As for [`hocrwl_denote`].
 */
HocrwlStatus hocrwl_observe(const HocrwlProgram *p,
                            const char *expr,
                            bool fo,
                            HocrwlBudget budget,
                            char **out);

/**
 * Bounded `n`-extensional comparison; the JSON `verdict` field is
 * `equivalent-at-bound` or `distinguished`.
 *
 * # Safety
 * As for [`hocrwl_denote`]; `right` is a NUL-terminated string.
 */
HocrwlStatus hocrwl_ext_equiv(const HocrwlProgram *p,
                              const char *left,
                              const char *right,
                              size_t n,
                              HocrwlBudget budget,
                              char **out);

/**
 * A separating context and its extension rules, or `{"found": false}`.
 *
 * # Safety
 * As for [`hocrwl_ext_equiv`].
 */
HocrwlStatus hocrwl_distinguish(const HocrwlProgram *p,
                                const char *left,
                                const char *right,
                                bool fo,
                                HocrwlBudget budget,
                                char **out);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` is NULL or a string from this library not yet freed.
 */
void hocrwl_string_free(char *s);

/**
 * The message for the last failure on this thread, or NULL. Valid until
 * the next call into the library on the same thread.
 */
const char *hocrwl_last_error(void);

/**
 * Library version, statically allocated.
 */
const char *hocrwl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOCRWL_H */
