/* Copyright 2026 The ramopt Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef RAMOPT_H
#define RAMOPT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum RamoptStatus {
  RAMOPT_STATUS_OK = 0,
  RAMOPT_STATUS_INVALID_ARGUMENT = 1,
  RAMOPT_STATUS_OUT_OF_BOUNDS = 2,
  RAMOPT_STATUS_RESOLUTION = 3,
  RAMOPT_STATUS_ALIASING = 4,
  RAMOPT_STATUS_UNDEFINED_SHIFT = 5,
  RAMOPT_STATUS_NUMERICAL = 6,
  RAMOPT_STATUS_CONFIG = 7,
  RAMOPT_STATUS_IO = 8,
  RAMOPT_STATUS_PARSE = 9,
  RAMOPT_STATUS_NULL_POINTER = 10,
  RAMOPT_STATUS_PANIC = 11,
} RamoptStatus;

// Opaque experiment configuration.
typedef struct RamoptConfig RamoptConfig;

// Opaque density matrix.
typedef struct RamoptDensity RamoptDensity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`) and returns the full message length in
// bytes. Pass a null `buf` to query the length.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t ramopt_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *ramopt_version(void);

// Default configuration. Free with [`ramopt_config_free`].
struct RamoptConfig *ramopt_config_new(void);

// Parses a JSON configuration document.
//
// # Safety
// `json` must be a NUL-terminated string; `out_cfg` must be writable.
enum RamoptStatus ramopt_config_from_json(const char *json, struct RamoptConfig **out_cfg);

// # Safety
// `cfg` must be null or a live handle.
void ramopt_config_free(struct RamoptConfig *cfg);

// # Safety
// `cfg` must be a live handle.
enum RamoptStatus ramopt_config_set_seed(struct RamoptConfig *cfg, uint64_t seed);

// # Safety
// `cfg` must be a live handle.
uint64_t ramopt_config_seed(const struct RamoptConfig *cfg);

// Runs a named pipeline (`optimize`, `charge-sweep`, `oam-decay`,
// `sam-qst`, `tomo`, `gen-data`, `train-net`, `modes`) and writes its
// artifacts and manifest under `out_dir`.
//
// # Safety
// `cfg` must be a live handle; strings must be NUL-terminated.
enum RamoptStatus ramopt_run_pipeline(const struct RamoptConfig *cfg,
                                      const char *pipeline,
                                      const char *out_dir);

// Memory efficiency η_m of a write control sampled on the configured
// write grid, for the configured plant and signal.
//
// # Safety
// `control` must hold `len` values; `eta` must be writable.
enum RamoptStatus ramopt_memory_efficiency(const struct RamoptConfig *cfg,
                                           const double *control,
                                           size_t len,
                                           int32_t charge,
                                           double *eta);

// Cosine similarity of two OAM power vectors indexed by |l|.
//
// # Safety
// Both arrays must hold `len` values; `out_f` must be writable.
enum RamoptStatus ramopt_oam_fidelity(const double *v_in,
                                      const double *v_r,
                                      size_t len,
                                      double *out_f);

// First downward crossing of `threshold`; `found` is 0 when the curve
// never crosses.
//
// # Safety
// `tau` and `fidelity` must hold `len` values; outputs must be writable.
enum RamoptStatus ramopt_memory_time(const double *tau,
                                     const double *fidelity,
                                     size_t len,
                                     double threshold,
                                     double *out_tau,
                                     int32_t *found);

// # Safety
// `rho` must be null or a live handle.
void ramopt_density_free(struct RamoptDensity *rho);

// # Safety
// `rho` must be a live handle.
size_t ramopt_density_dim(const struct RamoptDensity *rho);

// # Safety
// `rho` must be a live handle; outputs must be writable.
enum RamoptStatus ramopt_density_get(const struct RamoptDensity *rho,
                                     size_t i,
                                     size_t j,
                                     double *re,
                                     double *im);

// Density matrix from row-major interleaved (re, im) entries of a
// `dim`×`dim` matrix.
//
// # Safety
// `entries` must hold `2·dim·dim` values; `out_rho` must be writable.
enum RamoptStatus ramopt_density_new(const double *entries,
                                     size_t dim,
                                     struct RamoptDensity **out_rho);

// Six-projection polarization tomography from intensities ordered
// H, V, D, A, R, L.
//
// # Safety
// `counts` must hold 6 values; `out_rho` must be writable.
enum RamoptStatus ramopt_sam_qst(const double *counts, struct RamoptDensity **out_rho);

// Maximum-likelihood density matrix from `len` quadrature samples.
//
// # Safety
// `theta` and `x` must hold `len` values; `out_rho` must be writable.
enum RamoptStatus ramopt_mle_reconstruct(const double *theta,
                                         const double *x,
                                         size_t len,
                                         size_t n_max,
                                         size_t iterations,
                                         struct RamoptDensity **out_rho);

// # Safety
// Both handles must be live; `out_f` must be writable.
enum RamoptStatus ramopt_uhlmann_fidelity(const struct RamoptDensity *a,
                                          const struct RamoptDensity *b,
                                          double *out_f);

// # Safety
// `out_f` must be writable.
enum RamoptStatus ramopt_total_fidelity(double f_smg, double f_oam, double f_sam, double *out_f);

// Beam waist √(|l|+1)·w0.
double ramopt_beam_waist(int32_t l, double w0);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RAMOPT_H */
