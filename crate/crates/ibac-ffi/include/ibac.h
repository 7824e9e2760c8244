/* C interface to the ibac access-control library. Generated by cbindgen; do not edit. */

#ifndef IBAC_H
#define IBAC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of any fallible call in this interface.
//
// Non-zero values are failures; call `ibac_last_error` on the same thread
// for a human-readable message.
typedef enum IbacStatus {
  // The call succeeded.
  IBAC_STATUS_OK = 0,
  // A required pointer argument was NULL.
  IBAC_STATUS_NULL_ARGUMENT,
  // A string argument was not valid UTF-8.
  IBAC_STATUS_UTF8,
  // Policy JSON could not be parsed.
  IBAC_STATUS_JSON,
  // The policy fails its own consistency rules.
  IBAC_STATUS_INVALID_POLICY,
  // The scheme name was not `bitvec`, `expsum`, or `primeprod`.
  IBAC_STATUS_UNKNOWN_SCHEME,
  // A label name does not exist in the policy.
  IBAC_STATUS_UNKNOWN_LABEL,
  // The label set was shaped wrongly (missing level, level among marks, ...).
  IBAC_STATUS_BAD_LABEL_SET,
  // Token text did not parse or decode under the policy.
  IBAC_STATUS_MALFORMED_TOKEN,
  // The two tokens use different encoding schemes.
  IBAC_STATUS_SCHEME_MISMATCH,
  // The token belongs to a different policy.
  IBAC_STATUS_SCHEMA_MISMATCH,
  // Any other failure; the error message has the details.
  IBAC_STATUS_OTHER,
} IbacStatus;

// Opaque policy handle. Create with `ibac_policy_from_json` or
// `ibac_policy_demo`, release with `ibac_policy_free`.
typedef struct IbacPolicy IbacPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static C string. Never NULL; do not free.
const char *ibac_version(void);

// Message from the most recent failing call on this thread, as a C string
// owned by the library. Empty until a call fails. The pointer is valid
// until the next failing call on the same thread; copy it if you need it
// longer, and never free it.
const char *ibac_last_error(void);

// Release a string returned through any `out_` parameter of this library.
// Accepts NULL.
//
// # Safety
//
// `text` must be a pointer previously returned by this library and not yet
// freed; passing anything else is undefined behavior.
void ibac_string_free(char *text);

// Parse a policy from its JSON document into `*out_policy`.
//
// Parsing accepts structurally well-formed JSON even when the policy breaks
// its own consistency rules, so that `ibac_policy_validate` can report what
// is wrong; every other call on such a handle fails with `InvalidPolicy`.
//
// # Safety
//
// `json` must be a NUL-terminated string and `out_policy` a valid pointer.
enum IbacStatus ibac_policy_from_json(const char *json, struct IbacPolicy **out_policy);

// Create the built-in demonstration policy into `*out_policy`.
//
// # Safety
//
// `out_policy` must be a valid pointer.
enum IbacStatus ibac_policy_demo(struct IbacPolicy **out_policy);

// Release a policy handle. Accepts NULL.
//
// # Safety
//
// `policy` must come from `ibac_policy_from_json` or `ibac_policy_demo` and
// must not be used after this call.
void ibac_policy_free(struct IbacPolicy *policy);

// Copy the policy identifier into `*out_id`. Free it with
// `ibac_string_free`.
//
// # Safety
//
// `policy` must be a live handle and `out_id` a valid pointer.
enum IbacStatus ibac_policy_id(const struct IbacPolicy *policy, char **out_id);

// Check the policy against its consistency rules.
//
// Returns `Ok` for a sound policy. Returns `InvalidPolicy` otherwise and,
// when `out_report` is not NULL, stores a newline-separated description of
// every violation there (free it with `ibac_string_free`).
//
// # Safety
//
// `policy` must be a live handle; `out_report` may be NULL.
enum IbacStatus ibac_policy_validate(const struct IbacPolicy *policy, char **out_report);

// Encode a subject clearance as a token in `*out_token`.
//
// `labels` is a space-separated list naming at most one level plus any
// marks, for example `"Secret MI6 overwatch"`. The token covers everything
// the clearance includes under the policy's ordering and hierarchy. Free
// the token text with `ibac_string_free`.
//
// # Safety
//
// `policy` must be a live handle; `scheme`, `labels`, and `out_token` must
// be valid pointers.
enum IbacStatus ibac_encode_subject(const struct IbacPolicy *policy,
                                    const char *scheme,
                                    const char *labels,
                                    char **out_token);

// Encode an object label as a token in `*out_token`.
//
// `labels` names exactly one level plus any marks. Unlike subjects, objects
// carry only their own labels. Free the token text with `ibac_string_free`.
//
// # Safety
//
// Same contract as `ibac_encode_subject`.
enum IbacStatus ibac_encode_object(const struct IbacPolicy *policy,
                                   const char *scheme,
                                   const char *labels,
                                   char **out_token);

// Decode a token back to its label names.
//
// Stores the names space-separated in policy declaration order into
// `*out_labels`; an empty token yields an empty string. Free the result
// with `ibac_string_free`.
//
// # Safety
//
// `policy` must be a live handle; `token` and `out_labels` must be valid
// pointers.
enum IbacStatus ibac_decode(const struct IbacPolicy *policy, const char *token, char **out_labels);

// Decide whether the subject token dominates the object token.
//
// Both tokens must use the same scheme under the same policy; the check
// runs on the scheme's native route. `*out_holds` receives the verdict.
// When the check fails and `out_witness` is not NULL, `*out_witness`
// receives one label the subject lacks (free with `ibac_string_free`);
// on success it is set to NULL.
//
// # Safety
//
// `policy` must be a live handle; `subject`, `object`, and `out_holds`
// must be valid pointers. `out_witness` may be NULL.
enum IbacStatus ibac_check(const struct IbacPolicy *policy,
                           const char *subject,
                           const char *object,
                           bool *out_holds,
                           char **out_witness);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IBAC_H */
