#ifndef BERTRAND_H
#define BERTRAND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BnSolveKind {
  BN_SOLVE_KIND_TWO = 0,
  BN_SOLVE_KIND_LINE = 1,
  BN_SOLVE_KIND_TREE = 2,
  BN_SOLVE_KIND_STAR = 3,
  BN_SOLVE_KIND_CLIQUE = 4,
} BnSolveKind;

typedef enum BnStatus {
  BN_STATUS_OK = 0,
  BN_STATUS_NULL_POINTER = 1,
  BN_STATUS_INVALID_UTF8 = 2,
  BN_STATUS_INVALID_INPUT = 3,
  BN_STATUS_UNSUPPORTED = 4,
  BN_STATUS_OUT_OF_RANGE = 5,
  BN_STATUS_PANIC = 6,
} BnStatus;

typedef enum BnVerdict {
  BN_VERDICT_EQUILIBRIUM = 0,
  BN_VERDICT_NOT_EQUILIBRIUM = 1,
  BN_VERDICT_INCONCLUSIVE = 2,
} BnVerdict;

/**
 * Network of sellers and markets.
 */
typedef struct BnNetwork BnNetwork;

/**
 * Strategy profile bound to the network it was built for.
 */
typedef struct BnProfile BnProfile;

/**
 * Result of verifying a profile.
 */
typedef struct BnReport BnReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a network from its JSON document.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a valid pointer.
 */
enum BnStatus bn_network_from_json(const char *json, struct BnNetwork **out);

/**
 * Number of sellers; 0 for a null handle.
 *
 * # Safety
 * `net` must be null or a handle from `bn_network_from_json`.
 */
size_t bn_network_len(const struct BnNetwork *net);

/**
 * # Safety
 * `net` must be null or a handle not yet freed.
 */
void bn_network_free(struct BnNetwork *net);

/**
 * Closed-form equilibrium of the given kind.
 *
 * # Safety
 * `net` must be a live network handle and `out` a valid pointer.
 */
enum BnStatus bn_solve(const struct BnNetwork *net, enum BnSolveKind kind, struct BnProfile **out);

/**
 * Parses a profile for `net` from its JSON document.
 *
 * # Safety
 * `net` must be a live network handle, `json` a nul-terminated string, `out` valid.
 */
enum BnStatus bn_profile_from_json(const struct BnNetwork *net,
                                   const char *json,
                                   struct BnProfile **out);

/**
 * Writes the profile's JSON document to `*out`; free it with `bn_string_free`.
 *
 * # Safety
 * `profile` must be a live handle and `out` a valid pointer.
 */
enum BnStatus bn_profile_to_json(const struct BnProfile *profile, char **out);

/**
 * Utility of seller `i` as computed by the solver. Only profiles from `bn_solve` carry
 * utilities; use `bn_report_utility` otherwise.
 *
 * # Safety
 * `profile` must be a live handle and `out` a valid pointer.
 */
enum BnStatus bn_profile_utility(const struct BnProfile *profile, size_t i, double *out);

/**
 * # Safety
 * `profile` must be null or a handle not yet freed.
 */
void bn_profile_free(struct BnProfile *profile);

/**
 * Exact equilibrium check of `profile` on `net`.
 *
 * # Safety
 * Both handles must be live and `out` a valid pointer.
 */
enum BnStatus bn_verify(const struct BnNetwork *net,
                        const struct BnProfile *profile,
                        struct BnReport **out);

/**
 * Verdict of a report; `NotEquilibrium` for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
enum BnVerdict bn_report_verdict(const struct BnReport *report);

/**
 * Largest deviation gain over all sellers; NaN for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
double bn_report_max_violation(const struct BnReport *report);

/**
 * Index of the seller with the largest gain, or -1 if nobody gains.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
int64_t bn_report_worst_seller(const struct BnReport *report);

/**
 * Equilibrium utility of seller `i` as measured by the verifier.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum BnStatus bn_report_utility(const struct BnReport *report, size_t i, double *out);

/**
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum BnStatus bn_report_to_json(const struct BnReport *report, char **out);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void bn_report_free(struct BnReport *report);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void bn_string_free(char *s);

/**
 * Message of the last failed call on this thread; empty after a success. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *bn_last_error(void);

/**
 * Library version, static storage.
 */
const char *bn_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BERTRAND_H */
