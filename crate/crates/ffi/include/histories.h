#ifndef HISTORIES_H
#define HISTORIES_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DhStatus {
  DH_STATUS_OK = 0,
  DH_STATUS_NULL_POINTER = 1,
  DH_STATUS_INVALID_UTF8 = 2,
  DH_STATUS_DIMENSION = 3,
  DH_STATUS_VALIDATION = 4,
  DH_STATUS_OUT_OF_RANGE = 5,
  DH_STATUS_CONTRACT = 6,
  DH_STATUS_ZERO_MEASURE = 7,
  DH_STATUS_NUMERICAL = 8,
  DH_STATUS_BUDGET = 9,
  DH_STATUS_UNSUPPORTED = 10,
  DH_STATUS_CONFIG = 11,
  DH_STATUS_PANIC = 12,
} DhStatus;

/*
 Opaque history space.
 */
typedef struct DhSpace DhSpace;

typedef struct DhDecoherenceReport {
  uint64_t n_histories;
  double max_offdiag;
  double max_normalized_offdiag;
  double tolerance;
  bool passes;
} DhDecoherenceReport;

typedef struct DhViewComparison {
  double minimalist;
  double fatalist;
  double gap;
  double max_offdiag;
  double max_normalized_offdiag;
  bool decoherence_passes;
} DhViewComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null after a success.
 The pointer stays valid until the next call on the same thread.
 */
const char *dh_last_error_message(void);

/*
 `n` qubits prepared in √p|0⟩ + √(1−p)|1⟩, measured one per time.

 # Safety
 `out` must be a valid pointer to a `DhSpace*`.
 */
enum DhStatus dh_space_bernoulli(size_t n, double p, size_t present, struct DhSpace **out);

/*
 # Safety
 `out` must be a valid pointer to a `DhSpace*`.
 */
enum DhStatus dh_space_partial_decoherence(double delta, struct DhSpace **out);

/*
 Builds a space from a model config document (TOML text).

 # Safety
 `config` must be a nul-terminated string and `out` a valid pointer.
 */
enum DhStatus dh_space_from_config(const char *config, struct DhSpace **out);

/*
 # Safety
 `space` must come from a `dh_space_*` constructor and not be freed twice. Null is ignored.
 */
void dh_space_free(struct DhSpace *space);

/*
 Hilbert-space dimension, number of times and present position.

 # Safety
 `space` must be live; each out pointer may be null to skip it.
 */
enum DhStatus dh_space_shape(const struct DhSpace *space,
                             size_t *dim,
                             size_t *times,
                             size_t *present);

/*
 # Safety
 `space` must be live and `out` valid.
 */
enum DhStatus dh_decoherence_report(const struct DhSpace *space,
                                    double eps_dec,
                                    struct DhDecoherenceReport *out);

/*
 The future segment starts right after the present and has `future_len` outcomes.

 # Safety
 `space` must be live, `future` must point at `future_len` values, `out` valid.
 */
enum DhStatus dh_compare_views(const struct DhSpace *space,
                               const size_t *future,
                               size_t future_len,
                               size_t present_outcome,
                               double eps_dec,
                               struct DhViewComparison *out);

/*
 # Safety
 As for [`dh_compare_views`].
 */
enum DhStatus dh_minimalist_future(const struct DhSpace *space,
                                   const size_t *future,
                                   size_t future_len,
                                   size_t present_outcome,
                                   double *out);

/*
 # Safety
 As for [`dh_compare_views`].
 */
enum DhStatus dh_fatalist_future(const struct DhSpace *space,
                                 const size_t *future,
                                 size_t future_len,
                                 size_t present_outcome,
                                 double *out);

/*
 # Safety
 `space` must be live and `out` valid.
 */
enum DhStatus dh_chance_of_present(const struct DhSpace *space,
                                   size_t present_outcome,
                                   double *out);

/*
 The past covers every time before the present, earliest first.

 # Safety
 `space` must be live, `past` must point at `past_len` values, `out` valid.
 */
enum DhStatus dh_retrodictive_chance(const struct DhSpace *space,
                                     const size_t *past,
                                     size_t past_len,
                                     size_t present_outcome,
                                     double *out);

/*
 Measure of a full history given as one outcome per time.

 # Safety
 `space` must be live, `history` must point at `len` values, `out` valid.
 */
enum DhStatus dh_absolute_measure(const struct DhSpace *space,
                                  const size_t *history,
                                  size_t len,
                                  double *out);

/*
 C(n, k); `DH_STATUS_BUDGET` when it does not fit in 64 bits.

 # Safety
 `out` must be valid.
 */
enum DhStatus dh_branch_count_u64(uint64_t n, uint64_t k, uint64_t *out);

/*
 Fraction of the 2^n yes/no histories whose frequency of outcome 0 lies in [lo, hi].

 # Safety
 `out` must be valid.
 */
enum DhStatus dh_count_fraction(uint64_t n, double lo, double hi, double *out);

/*
 Measure of the same set when outcome 0 has weight `p` on every trial.

 # Safety
 `out` must be valid.
 */
enum DhStatus dh_measure_fraction(size_t n, double p, double lo, double hi, double *out);

/*
 Fraction of the first `steps` points of x ↦ x + alpha (mod 1) from `x0` landing in [lo, hi).

 # Safety
 `out` must be valid.
 */
enum DhStatus dh_time_average_rotation(double alpha,
                                       double x0,
                                       double lo,
                                       double hi,
                                       uint64_t steps,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HISTORIES_H */
