#ifndef WTCHAOS_H
#define WTCHAOS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by all functions.
 */
typedef enum WtcStatus {
  WTC_STATUS_OK = 0,
  WTC_STATUS_NULL_POINTER = 1,
  WTC_STATUS_INVALID_ARGUMENT = 2,
  WTC_STATUS_BUDGET = 3,
  WTC_STATUS_THRESHOLD = 4,
  WTC_STATUS_INCONSISTENT = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  WTC_STATUS_INTERNAL = 6,
} WtcStatus;

/**
 * Which moment evaluator to use.
 */
typedef enum WtcMomentMethod {
  /**
   * Sum over pairings and lattice solution sets.
   */
  WTC_MOMENT_METHOD_STRUCTURAL = 0,
  /**
   * Symbolic expansion with Gaussian moment rules.
   */
  WTC_MOMENT_METHOD_ORACLE = 1,
} WtcMomentMethod;

/**
 * A Gaussian initial-datum ensemble on the torus of scale `L`.
 */
typedef struct WtcEnsemble WtcEnsemble;

/**
 * A model from the built-in catalog.
 */
typedef struct WtcModel WtcModel;

/**
 * All pairings of a block index set.
 */
typedef struct WtcPairingList WtcPairingList;

/**
 * Polish codes of all trees of one size, in enumeration order.
 */
typedef struct WtcTreeList WtcTreeList;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf`; returns its
 * length. Pass a null `buf` to query the length.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t wtc_last_error(char *buf, size_t cap);

/**
 * Number of `arity`-trees with `n` internal nodes; fails with `Budget` when
 * it does not fit in 64 bits.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum WtcStatus wtc_tree_count(size_t arity, size_t n, uint64_t *out);

/**
 * Enumerates trees with `n` internal nodes, refusing more than `cap`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum WtcStatus wtc_trees_enumerate(size_t arity, size_t n, uint64_t cap, struct WtcTreeList **out);

/**
 * # Safety
 * `list` must come from [`wtc_trees_enumerate`].
 */
size_t wtc_trees_len(const struct WtcTreeList *list);

/**
 * Writes code `index` as a `0`/`1` string; `len` receives its length.
 *
 * # Safety
 * `list` must come from [`wtc_trees_enumerate`]; `buf` must be null or valid
 * for `cap` bytes; `len` must be null or valid for one write.
 */
enum WtcStatus wtc_trees_code(const struct WtcTreeList *list,
                              size_t index,
                              char *buf,
                              size_t cap,
                              size_t *len);

/**
 * # Safety
 * `list` must be null or come from [`wtc_trees_enumerate`], and is invalid
 * afterwards.
 */
void wtc_trees_free(struct WtcTreeList *list);

/**
 * Enumerates the pairings of the set with the given block sizes, refusing
 * sets with more than `cap` elements.
 *
 * # Safety
 * `sizes` must be valid for `blocks` reads and `out` for one write.
 */
enum WtcStatus wtc_pairings_enumerate(const size_t *sizes,
                                      size_t blocks,
                                      size_t cap,
                                      struct WtcPairingList **out);

/**
 * # Safety
 * `list` must come from [`wtc_pairings_enumerate`].
 */
size_t wtc_pairings_len(const struct WtcPairingList *list);

/**
 * Writes the 0-based partner of every flat index of pairing `index` into
 * `partners`, which must hold the set size.
 *
 * # Safety
 * `list` must come from [`wtc_pairings_enumerate`]; `partners` must be valid
 * for `cap` writes.
 */
enum WtcStatus wtc_pairings_partners(const struct WtcPairingList *list,
                                     size_t index,
                                     size_t *partners,
                                     size_t cap);

/**
 * Solution-set geometry of pairing `index` for one `dim`-vector per block,
 * given row-major in `freqs`. `nonempty` is 0 or 1; `s_sigma` is the number
 * of free parameters.
 *
 * # Safety
 * `list` must come from [`wtc_pairings_enumerate`]; `freqs` must hold
 * `blocks * dim` values; the outputs must be valid for one write.
 */
enum WtcStatus wtc_pairings_sigma(const struct WtcPairingList *list,
                                  size_t index,
                                  const int64_t *freqs,
                                  size_t dim,
                                  int32_t *nonempty,
                                  size_t *s_sigma);

/**
 * # Safety
 * `list` must be null or come from [`wtc_pairings_enumerate`].
 */
void wtc_pairings_free(struct WtcPairingList *list);

/**
 * Looks up a model by id, e.g. `"toy-1d"` or `"euler-2d"`.
 *
 * # Safety
 * `id` must be a NUL-terminated string and `out` valid for one write.
 */
enum WtcStatus wtc_model_new(const char *id, struct WtcModel **out);

/**
 * # Safety
 * `model` must be null or come from [`wtc_model_new`].
 */
void wtc_model_free(struct WtcModel *model);

/**
 * Ensemble with the same `amplitude` on every component of every mode with
 * `|k/L|_∞ ≤ radius`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum WtcStatus wtc_ensemble_flat(size_t dim,
                                 size_t components,
                                 size_t scale,
                                 double radius,
                                 double amplitude,
                                 struct WtcEnsemble **out);

/**
 * # Safety
 * `ens` must be null or come from [`wtc_ensemble_flat`].
 */
void wtc_ensemble_free(struct WtcEnsemble *ens);

/**
 * `E Π_l û_{n_l}^{(i_l)}(ξ_l)` at time `t` for `factors` factors. Orders and
 * 0-based components have one entry per factor; `kvecs` is row-major with
 * the model's dimension.
 *
 * # Safety
 * Handles must be live; arrays must hold the stated lengths (`components`
 * may be null for scalar models); `re` and `im` must be valid for one write.
 */
enum WtcStatus wtc_moment(const struct WtcModel *model,
                          const struct WtcEnsemble *ens,
                          enum WtcMomentMethod method,
                          const size_t *orders,
                          const size_t *components,
                          const int64_t *kvecs_flat,
                          size_t factors,
                          double t,
                          double *re,
                          double *im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WTCHAOS_H */
