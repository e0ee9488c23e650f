#ifndef SGLBO_H
#define SGLBO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes returned by every fallible function.
 */
typedef enum {
  SGLBO_STATUS_OK = 0,
  SGLBO_STATUS_INVALID_ARGUMENT = 1,
  SGLBO_STATUS_RESOURCE = 2,
  SGLBO_STATUS_NUMERIC = 3,
  SGLBO_STATUS_PARSE = 4,
  SGLBO_STATUS_TOPOLOGY = 5,
  SGLBO_STATUS_CONFIG = 6,
  SGLBO_STATUS_IO = 7,
  SGLBO_STATUS_NULL_POINTER = 8,
  SGLBO_STATUS_PANIC = 9,
} SglboStatus;

/*
 A cost function on a simulated circuit.
 */
typedef struct SglboCost SglboCost;

/*
 A finished optimization run.
 */
typedef struct SglboRun SglboRun;

/*
 Optimizer settings; obtain defaults from `sglbo_options_default`.
 */
typedef struct {
  uint64_t budget;
  uint64_t seed;
  double kappa;
  double alpha;
  /*
   Non-positive selects 3 for energies and 6 for compilation costs.
   */
  double beta;
  double epsilon;
  uint64_t s_init;
  /*
   Shots per evaluation for Adam and NFT.
   */
  uint64_t shots;
  double learning_rate;
} SglboOptions;

/*
 One recorded iteration.
 */
typedef struct {
  size_t t;
  uint64_t cumulative_shots;
  double cost;
  double suffix_cost;
  double s_grad_mean;
  uint64_t s_cost;
  double eta;
} SglboTraceRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or null if none.
 The pointer stays valid until the next failing call on the same thread.
 */
const char *sglbo_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *sglbo_version(void);

/*
 TFIM energy `-J (sum Z_j Z_{j+1} + g sum X_j)` on the layered ansatz with `r` blocks.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
SglboStatus sglbo_cost_new_tfim(size_t n, size_t r, double coupling, double field, SglboCost **out);

/*
 Circuit-compilation cost toward the state prepared by `target` (length `2n(r+1)`).

 # Safety
 `target` must point to `target_len` doubles; `out` must be writable.
 */
SglboStatus sglbo_cost_new_vqc(size_t n,
                               size_t r,
                               const double *target,
                               size_t target_len,
                               SglboCost **out);

/*
 Attaches a noise model read from a table file, or the bundled device table
 when `path` is null.

 # Safety
 `cost` must be a live handle; `path` null or a NUL-terminated string.
 */
SglboStatus sglbo_cost_set_noise(SglboCost *cost, const char *path);

/*
 Number of circuit parameters, or 0 for a null handle.

 # Safety
 `cost` must be null or a live handle.
 */
size_t sglbo_cost_dim(const SglboCost *cost);

/*
 # Safety
 `cost` must be a live handle, `theta` must hold `len` doubles and `value` be writable.
 */
SglboStatus sglbo_cost_exact_value(const SglboCost *cost,
                                   const double *theta,
                                   size_t len,
                                   double *value);

/*
 Finite-shot estimate with a generator seeded by `seed`.

 # Safety
 As for [`sglbo_cost_exact_value`].
 */
SglboStatus sglbo_cost_noisy_query(const SglboCost *cost,
                                   const double *theta,
                                   size_t len,
                                   uint64_t shots,
                                   uint64_t seed,
                                   double *value);

/*
 # Safety
 `cost` must be null or a handle not yet freed.
 */
void sglbo_cost_free(SglboCost *cost);

SglboOptions sglbo_options_default(void);

/*
 Minimizes `cost` with `optimizer` (`sglbo`, `adam`, `adam+sa`, `adam+ass`,
 `adam+sa+ass`, `nft` or `nft+sa`). A null `theta0` draws the start uniformly
 from `[-pi, pi]^D`; null `options` uses the defaults.

 # Safety
 Pointers must be valid for their stated lengths; `out` must be writable.
 */
SglboStatus sglbo_optimize(const SglboCost *cost,
                           const char *optimizer,
                           const SglboOptions *options,
                           const double *theta0,
                           size_t theta0_len,
                           SglboRun **out);

/*
 Shots consumed by the run, or 0 for a null handle.

 # Safety
 `run` must be null or a live handle.
 */
uint64_t sglbo_run_total_shots(const SglboRun *run);

/*
 Copies the returned point (the suffix average when enabled) into `buf`.

 # Safety
 `run` must be a live handle and `buf` hold `len` doubles.
 */
SglboStatus sglbo_run_point(const SglboRun *run, double *buf, size_t len);

/*
 Number of trace rows, including the starting point.

 # Safety
 `run` must be null or a live handle.
 */
size_t sglbo_run_num_rows(const SglboRun *run);

/*
 # Safety
 `run` must be a live handle and `row` writable.
 */
SglboStatus sglbo_run_row(const SglboRun *run, size_t index, SglboTraceRow *row);

/*
 # Safety
 `run` must be null or a handle not yet freed.
 */
void sglbo_run_free(SglboRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SGLBO_H */
