#ifndef DLE_CORRESPOND_H
#define DLE_CORRESPOND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DleStatus {
  DLE_STATUS_OK = 0,
  DLE_STATUS_NULL_POINTER = 1,
  DLE_STATUS_INVALID_UTF8 = 2,
  DLE_STATUS_SIGNATURE = 3,
  DLE_STATUS_PARSE = 4,
  /**
   * Input outside the class an operation accepts.
   */
  DLE_STATUS_CLASSIFICATION = 5,
  DLE_STATUS_ORACLE = 6,
  DLE_STATUS_INTERNAL = 7,
} DleStatus;

typedef enum DleLabel {
  DLE_LABEL_NOT_INDUCTIVE = 0,
  DLE_LABEL_INDUCTIVE = 1,
  DLE_LABEL_SAHLQVIST = 2,
  DLE_LABEL_VERY_SIMPLE_SAHLQVIST = 3,
} DleLabel;

/**
 * Opaque signature handle.
 */
typedef struct DleSignature DleSignature;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a signature from its text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum DleStatus dle_signature_parse(const char *src, struct DleSignature **out);

/**
 * One of the builtin signatures: `modal`, `tense`, `lambek`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum DleStatus dle_signature_builtin(const char *name, struct DleSignature **out);

/**
 * Releases a signature. Null is ignored.
 *
 * # Safety
 * `s` must be null or an unfreed handle from this library.
 */
void dle_signature_free(struct DleSignature *s);

/**
 * Best label of an inequality.
 *
 * # Safety
 * Pointers must be valid as documented on the module.
 */
enum DleStatus dle_classify(const struct DleSignature *s, const char *ineq, enum DleLabel *out);

/**
 * Pure first-order output of the forward reduction.
 *
 * # Safety
 * Pointers must be valid as documented on the module.
 */
enum DleStatus dle_alba(const struct DleSignature *s, const char *ineq, char **out);

/**
 * Kracht form of a definite inductive inequality.
 *
 * # Safety
 * Pointers must be valid as documented on the module.
 */
enum DleStatus dle_to_kracht(const struct DleSignature *s, const char *ineq, char **out);

/**
 * Inverse correspondence as a JSON object with keys `kracht`, `quasi`,
 * `vss`, `inductive`, `flags`.
 *
 * # Safety
 * Pointers must be valid as documented on the module.
 */
enum DleStatus dle_inverse_json(const struct DleSignature *s, const char *meta, char **out);

/**
 * Whether two formulas (inequalities or meta-formulas) agree on the seeded
 * battery.
 *
 * # Safety
 * Pointers must be valid as documented on the module.
 */
enum DleStatus dle_equivalent(const struct DleSignature *s,
                              const char *a,
                              const char *b,
                              uint64_t seed,
                              bool *out);

/**
 * Message of the last failed call on this thread, or null. Owned by the
 * library; valid until the next call.
 */
const char *dle_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `p` must be null or a string from this library, freed once.
 */
void dle_string_free(char *p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DLE_CORRESPOND_H */
