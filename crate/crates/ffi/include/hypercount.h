#ifndef HYPERCOUNT_H
#define HYPERCOUNT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum HcStatus {
  HC_STATUS_OK = 0,
  HC_STATUS_NULL_POINTER = 1,
  HC_STATUS_INVALID_UTF8 = 2,
  HC_STATUS_PARSE_ERROR = 3,
  HC_STATUS_INVALID_ARGUMENT = 4,
  HC_STATUS_UNSUPPORTED_PATTERN = 5,
  HC_STATUS_CONFIG_MISMATCH = 6,
  HC_STATUS_STRICT_VIOLATION = 7,
  HC_STATUS_BUFFER_TOO_SMALL = 8,
  HC_STATUS_DECODE_ERROR = 9,
  HC_STATUS_PANIC = 10,
} HcStatus;

/**
 * Parsed pattern plus its cached analysis.
 */
typedef struct HcPattern HcPattern;

/**
 * A sketch state bound to a pattern.
 */
typedef struct HcSketch HcSketch;

typedef struct HcEstimate {
  double value;
  uint64_t copies_found;
  double p_used;
  uint64_t retained;
} HcEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *hc_last_error_message(void);

/**
 * Parses a pattern in the text format (`k=3`, then `e a b` lines).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum HcStatus hc_pattern_parse(const char *text, struct HcPattern **out);

/**
 * # Safety
 * `pattern` must come from [`hc_pattern_parse`] and not be used afterwards.
 */
void hc_pattern_free(struct HcPattern *pattern);

/**
 * # Safety
 * `pattern` must be a live handle and `out` writable.
 */
enum HcStatus hc_pattern_vertex_count(const struct HcPattern *pattern, size_t *out);

/**
 * Number of automorphisms of the pattern.
 *
 * # Safety
 * `pattern` must be a live handle and `out` writable.
 */
enum HcStatus hc_pattern_automorphisms(const struct HcPattern *pattern, uint64_t *out);

/**
 * Fractional vertex cover number as an exact fraction.
 *
 * # Safety
 * `pattern` must be a live handle; `numer` and `denom` writable.
 */
enum HcStatus hc_pattern_cover_value(const struct HcPattern *pattern,
                                     int64_t *numer,
                                     int64_t *denom);

/**
 * Creates an empty sketch sampling at rate `p` in (0, 1].
 *
 * # Safety
 * `pattern` must be a live handle and `out` writable. The sketch keeps its
 * own copy of the pattern.
 */
enum HcStatus hc_sketch_new(const struct HcPattern *pattern,
                            double p,
                            uint64_t seed,
                            struct HcSketch **out);

/**
 * # Safety
 * `sketch` must come from this library and not be used afterwards.
 */
void hc_sketch_free(struct HcSketch *sketch);

/**
 * Applies one update: `sign` is +1 (insert) or -1 (delete); `endpoints`
 * holds `len >= 2` distinct vertex ids.
 *
 * # Safety
 * `sketch` must be a live handle and `endpoints` must point to `len` values.
 */
enum HcStatus hc_sketch_update(struct HcSketch *sketch,
                               int32_t sign,
                               const uint64_t *endpoints,
                               size_t len);

/**
 * Adds `other` into `into`. Both must share pattern, rate and seed.
 *
 * # Safety
 * Both must be live handles; they may not alias.
 */
enum HcStatus hc_sketch_merge(struct HcSketch *into, const struct HcSketch *other);

/**
 * Number of edges with a nonzero counter.
 *
 * # Safety
 * `sketch` must be a live handle and `out` writable.
 */
enum HcStatus hc_sketch_retained(const struct HcSketch *sketch, uint64_t *out);

/**
 * Unbiased copy-count estimate from the sketch's current contents.
 *
 * # Safety
 * `sketch` must be a live handle and `out` writable.
 */
enum HcStatus hc_sketch_estimate(const struct HcSketch *sketch, struct HcEstimate *out);

/**
 * Encodes the sketch into `buf`. `*written` receives the encoded length; if
 * `cap` is too small nothing is copied and `HC_STATUS_BUFFER_TOO_SMALL` is
 * returned, so a call with `buf = NULL, cap = 0` queries the size.
 *
 * # Safety
 * `sketch` must be a live handle, `written` writable, and `buf` valid for
 * `cap` bytes when non-null.
 */
enum HcStatus hc_sketch_serialize(const struct HcSketch *sketch,
                                  uint8_t *buf,
                                  size_t cap,
                                  size_t *written);

/**
 * Decodes a sketch produced by [`hc_sketch_serialize`].
 *
 * # Safety
 * `buf` must be valid for `len` bytes and `out` writable.
 */
enum HcStatus hc_sketch_deserialize(const uint8_t *buf, size_t len, struct HcSketch **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERCOUNT_H */
