#ifndef CHROMALG_H
#define CHROMALG_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of searching for a homomorphism to the multiplicative law.
 */
typedef enum {
  CHROMALG_FGL_VERDICT_ISO = 0,
  CHROMALG_FGL_VERDICT_NO_NONZERO_HOM = 1,
  CHROMALG_FGL_VERDICT_NONZERO_HOM_NOT_ISO = 2,
} ChromalgFglVerdict;

/**
 * Result code of every fallible call.
 */
typedef enum {
  CHROMALG_STATUS_OK = 0,
  CHROMALG_STATUS_NULL_POINTER = 1,
  CHROMALG_STATUS_INVALID_UTF8 = 2,
  CHROMALG_STATUS_MALFORMED = 3,
  CHROMALG_STATUS_NOT_PRIME = 4,
  CHROMALG_STATUS_OUT_OF_RANGE = 5,
  CHROMALG_STATUS_RING_MISMATCH = 6,
  CHROMALG_STATUS_NOT_UNIT = 7,
  CHROMALG_STATUS_NOT_DIVISIBLE = 8,
  CHROMALG_STATUS_PRECISION_EXHAUSTED = 9,
  CHROMALG_STATUS_SHAPE = 10,
  CHROMALG_STATUS_EXTERIOR_DIVISIBILITY = 11,
  CHROMALG_STATUS_INVALID_LAW = 12,
  CHROMALG_STATUS_ZERO_SERIES = 13,
  CHROMALG_STATUS_NOT_INTEGRAL = 14,
  CHROMALG_STATUS_DEGREE_TOO_SMALL = 15,
  CHROMALG_STATUS_SIDE_CONDITION = 16,
  CHROMALG_STATUS_BIDEGREE = 17,
  CHROMALG_STATUS_UNSUPPORTED = 18,
  CHROMALG_STATUS_PANIC = 99,
} ChromalgStatus;

/**
 * A nilpotence certificate.
 */
typedef struct ChromalgCertificate ChromalgCertificate;

/**
 * A formal group law over `F_{p^d}` truncated at some degree.
 */
typedef struct ChromalgLaw ChromalgLaw;

/**
 * A Dieudonne module over `W(F_{p^d}) / p^N`.
 */
typedef struct ChromalgModule ChromalgModule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *chromalg_last_error(void);

/**
 * Library version as a static string.
 */
const char *chromalg_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void chromalg_string_free(char *s);

/**
 * Parses a module from its JSON form.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
ChromalgStatus chromalg_module_from_json(const char *json, ChromalgModule **out);

/**
 * The module of the multiplicative group over `W(F_{p^d}) / p^N`.
 *
 * # Safety
 * `out` must be writable.
 */
ChromalgStatus chromalg_module_gm(uint64_t p, size_t d, uint32_t n, ChromalgModule **out);

/**
 * The Honda module of height `h`.
 *
 * # Safety
 * `out` must be writable.
 */
ChromalgStatus chromalg_module_honda(uint64_t p,
                                     size_t d,
                                     uint32_t n,
                                     size_t h,
                                     ChromalgModule **out);

/**
 * Serializes a module to JSON.
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
ChromalgStatus chromalg_module_to_json(const ChromalgModule *m, char **out);

/**
 * Rank of the underlying free module.
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
ChromalgStatus chromalg_module_rank(const ChromalgModule *m, size_t *out);

/**
 * Runs the structural checks. `report` may be null; otherwise it receives
 * the JSON report.
 *
 * # Safety
 * `m` must be a live handle; `passed` must be writable.
 */
ChromalgStatus chromalg_module_validate(const ChromalgModule *m, bool *passed, char **report);

/**
 * `k`-th exterior power as a new handle.
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
ChromalgStatus chromalg_module_exterior_power(const ChromalgModule *m,
                                              size_t k,
                                              ChromalgModule **out);

/**
 * Whether the top exterior power is the module of the multiplicative group.
 *
 * # Safety
 * `m` must be a live handle; `iso` must be writable.
 */
ChromalgStatus chromalg_module_detect_gm(const ChromalgModule *m, bool *iso);

/**
 * # Safety
 * `m` must be null or a live handle from this library.
 */
void chromalg_module_free(ChromalgModule *m);

/**
 * Parses a law from its JSON form.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
ChromalgStatus chromalg_law_from_json(const char *json, ChromalgLaw **out);

/**
 * The multiplicative law `x + y + xy` over `F_{p^d}`.
 *
 * # Safety
 * `out` must be writable.
 */
ChromalgStatus chromalg_law_gm(uint64_t p, size_t d, size_t degree, ChromalgLaw **out);

/**
 * The additive law over `F_{p^d}`.
 *
 * # Safety
 * `out` must be writable.
 */
ChromalgStatus chromalg_law_ga(uint64_t p, size_t d, size_t degree, ChromalgLaw **out);

/**
 * The Honda law of height `n` over `F_p`.
 *
 * # Safety
 * `out` must be writable.
 */
ChromalgStatus chromalg_law_honda(uint64_t p, uint32_t n, size_t degree, ChromalgLaw **out);

/**
 * Serializes a law to JSON.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
ChromalgStatus chromalg_law_to_json(const ChromalgLaw *g, char **out);

/**
 * Height of the law. `exact` is false when `[p](x)` vanishes to the
 * truncation degree, in which case `height` is a lower bound.
 *
 * # Safety
 * `g` must be a live handle; `height` and `exact` must be writable.
 */
ChromalgStatus chromalg_law_height(const ChromalgLaw *g, uint32_t *height, bool *exact);

/**
 * Searches for a homomorphism to the multiplicative law up to `degree`,
 * which must not exceed the truncation degree of `g`.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
ChromalgStatus chromalg_law_detect_gm(const ChromalgLaw *g, size_t degree, ChromalgFglVerdict *out);

/**
 * # Safety
 * `g` must be null or a live handle from this library.
 */
void chromalg_law_free(ChromalgLaw *g);

/**
 * Builds the nilpotence certificate for parameters `(p, h, n)`.
 *
 * # Safety
 * `out` must be writable.
 */
ChromalgStatus chromalg_certificate_build(uint64_t p,
                                          uint32_t h,
                                          uint32_t n,
                                          ChromalgCertificate **out);

/**
 * # Safety
 * `c` must be a live handle; `out` must be writable.
 */
ChromalgStatus chromalg_certificate_verified(const ChromalgCertificate *c, bool *out);

/**
 * Recomputes the certificate and compares the traces byte for byte.
 *
 * # Safety
 * `c` must be a live handle; `out` must be writable.
 */
ChromalgStatus chromalg_certificate_replay(const ChromalgCertificate *c, bool *out);

/**
 * # Safety
 * `c` must be a live handle; `out` must be writable.
 */
ChromalgStatus chromalg_certificate_to_json(const ChromalgCertificate *c, char **out);

/**
 * # Safety
 * `c` must be null or a live handle from this library.
 */
void chromalg_certificate_free(ChromalgCertificate *c);

/**
 * Powers `f^{p^m}`, `m <= m_max`, in the height-`h` quotient, as a JSON
 * report. `passed` is set when every power matches its closed form.
 *
 * # Safety
 * `passed` and `out` must be writable.
 */
ChromalgStatus chromalg_f0_report(uint64_t p, uint32_t h, uint32_t m_max, bool *passed, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHROMALG_H */
