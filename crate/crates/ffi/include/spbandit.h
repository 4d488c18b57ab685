#ifndef SPBANDIT_H
#define SPBANDIT_H

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum SpbStatus {
  SPB_STATUS_OK = 0,
  SPB_STATUS_NULL_POINTER = 1,
  SPB_STATUS_INVALID_ARGUMENT = 2,
  // No column order makes the matrix single-peaked.
  SPB_STATUS_NOT_SINGLE_PEAKED = 3,
  SPB_STATUS_SOLVER = 4,
  SPB_STATUS_BUFFER_TOO_SMALL = 5,
  SPB_STATUS_PANIC = 6,
} SpbStatus;

// Opaque problem instance.
typedef struct SpbInstance SpbInstance;

// Opaque PQ-tree.
typedef struct SpbPqTree SpbPqTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *spb_version(void);

// Copies the last error message of this thread into `buf` (truncated and
// always NUL-terminated when `capacity > 0`) and returns its full length in
// bytes, excluding the terminator. Returns 0 when no call has failed yet.
//
// # Safety
// `buf` must be null or valid for `capacity` bytes.
size_t spb_last_error_message(char *buf, size_t capacity);

// Builds an instance from a row-major `users x arms` matrix with entries in
// `[0, 1]`, `arms` costs in `1..=budget`, and `horizon >= max(users, arms)`.
//
// # Safety
// `theta` must point to `users * arms` doubles, `costs` to `arms` values and
// `out` to writable storage for one pointer.
enum SpbStatus spb_instance_new(size_t users,
                                size_t arms,
                                const double *theta,
                                const uint32_t *costs,
                                uint32_t budget,
                                uint64_t horizon,
                                struct SpbInstance **out_instance);

// Parses an instance from the JSON instance-file format.
//
// # Safety
// `json` must be a NUL-terminated string; `out_instance` must be writable.
enum SpbStatus spb_instance_from_json(const char *json, struct SpbInstance **out_instance);

// Releases an instance. Null is ignored.
//
// # Safety
// `instance` must come from this library and not be used afterwards.
void spb_instance_free(struct SpbInstance *instance);

// Number of users, or 0 for a null handle.
//
// # Safety
// `instance` must be null or a live handle.
size_t spb_instance_users(const struct SpbInstance *instance);

// Number of arms, or 0 for a null handle.
//
// # Safety
// `instance` must be null or a live handle.
size_t spb_instance_arms(const struct SpbInstance *instance);

// Value of a matching (one arm per user).
//
// # Safety
// `assignment` must point to `len` values; `out_value` must be writable.
enum SpbStatus spb_matching_value(const struct SpbInstance *instance,
                                  const size_t *assignment,
                                  size_t len,
                                  double *out_value);

// Budget feasibility and total cost of the distinct selected arms.
//
// # Safety
// `assignment` must point to `len` values; both outputs must be writable.
enum SpbStatus spb_matching_feasible(const struct SpbInstance *instance,
                                     const size_t *assignment,
                                     size_t len,
                                     bool *out_feasible,
                                     uint64_t *out_cost);

// Optimal matching of a matrix that is single-peaked under some column
// order (found automatically). Fails with `NOT_SINGLE_PEAKED` otherwise.
//
// # Safety
// `out_assignment` must hold `users` values; `out_value` must be writable.
enum SpbStatus spb_sp_matching(const struct SpbInstance *instance,
                               size_t *out_assignment,
                               double *out_value);

// Optimal matching by exhaustive search over arm subsets (any matrix,
// at most 22 arms).
//
// # Safety
// `out_assignment` must hold `users` values; `out_value` must be writable.
enum SpbStatus spb_brute_force_opt(const struct SpbInstance *instance,
                                   size_t *out_assignment,
                                   double *out_value);

// Greedy+Max arm subset (sorted) and its coverage value.
//
// # Safety
// `out_selected` must hold `capacity` values; the other outputs must be
// writable. `capacity >= arms` always suffices.
enum SpbStatus spb_greedy_max(const struct SpbInstance *instance,
                              size_t *out_selected,
                              size_t capacity,
                              size_t *out_len,
                              double *out_value);

// Column order from PQ-tree order extraction at tolerance `eps`.
//
// # Safety
// `out_order` must hold `arms` values.
enum SpbStatus spb_extract_order(const struct SpbInstance *instance, double eps, size_t *out_order);

// Smallest delta for which the matrix is delta-approximately single-peaked
// under `order` (a permutation of the arms).
//
// # Safety
// `order` must point to `arms` values; `out_delta` must be writable.
enum SpbStatus spb_asp_delta(const struct SpbInstance *instance,
                             const size_t *order,
                             double *out_delta);

// Fresh PQ-tree over arms `0..arms`, admitting every permutation.
//
// # Safety
// `out_tree` must be writable.
enum SpbStatus spb_pqtree_new(size_t arms, struct SpbPqTree **out_tree);

// Releases a tree. Null is ignored.
//
// # Safety
// `tree` must come from this library and not be used afterwards.
void spb_pqtree_free(struct SpbPqTree *tree);

// Requires the `len` arms of `set` to be contiguous. `*out_ok` is false,
// and the tree unchanged, when no admitted permutation satisfies this.
//
// # Safety
// `set` must point to `len` values; `out_ok` must be writable.
enum SpbStatus spb_pqtree_reduce(struct SpbPqTree *tree_handle,
                                 const size_t *set,
                                 size_t len,
                                 bool *out_ok);

// The canonical admitted permutation.
//
// # Safety
// `out_order` must hold as many values as the tree has arms.
enum SpbStatus spb_pqtree_frontier(struct SpbPqTree *tree_handle, size_t *out_order);

// Number of admitted permutations, saturating at `UINT64_MAX`.
//
// # Safety
// `out_count` must be writable.
enum SpbStatus spb_pqtree_frontier_count(struct SpbPqTree *tree_handle, uint64_t *out_count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPBANDIT_H */
