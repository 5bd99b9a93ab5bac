#ifndef DICKE_SQUEEZE_H
#define DICKE_SQUEEZE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum DsqStatus {
  DSQ_OK = 0,
  DSQ_NULL_POINTER = 1,
  DSQ_INVALID_ARGUMENT = 2,
  DSQ_NUMERICAL_FAILURE = 3,
  DSQ_IO_ERROR = 4,
  DSQ_BUFFER_TOO_SMALL = 5,
  DSQ_PANIC = 6,
} DsqStatus;

// Hamiltonian used by spectrum queries.
typedef enum DsqHamiltonian {
  DSQ_FULL = 0,
  DSQ_ROTATED = 1,
} DsqHamiltonian;

// Table of equally long named columns; column 0 is always time.
typedef struct DsqSeries DsqSeries;

// Physical parameters of the extended Dicke model.
typedef struct DsqSystem DsqSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *dsq_version(void);

// Copies the calling thread's last error message (NUL-terminated) into `buf`.
// `out_len` receives the message length including the terminator.
//
// # Safety
// `buf` must be valid for `cap` bytes or null with `cap == 0`.
enum DsqStatus dsq_last_error_message(char *buf, size_t cap, size_t *out_len);

// Creates a system with `Delta = omega_q cos(theta)`, `eps = omega_q sin(theta)`.
//
// # Safety
// `out` must be a valid pointer; on success it receives a handle owned by the caller.
enum DsqStatus dsq_system_new(size_t n_atoms,
                              double omega_q,
                              double theta,
                              double g,
                              double omega_c,
                              struct DsqSystem **out);

// # Safety
// `sys` must come from [`dsq_system_new`] and not be used afterwards. Null is ignored.
void dsq_system_free(struct DsqSystem *sys);

// Two-atom effective coupling `g_eff` and collective exchange rate `Omega`.
//
// # Safety
// `sys` must be a live handle; outputs must be valid pointers.
enum DsqStatus dsq_system_couplings(const struct DsqSystem *sys, double *g_eff, double *omega);

// Lowest `n_levels` eigenvalues at the handle's `omega_c`, ascending.
//
// # Safety
// `sys` must be a live handle; `buf` valid for `cap` doubles.
enum DsqStatus dsq_spectrum(const struct DsqSystem *sys,
                            size_t fock_cutoff,
                            enum DsqHamiltonian kind,
                            size_t n_levels,
                            double *buf,
                            size_t cap,
                            size_t *out_len);

// Locates the one-photon/two-atom resonance: minimum-gap `omega_c`, the gap,
// and the transition energy of the hybridized pair.
//
// # Safety
// `sys` must be a live handle; outputs must be valid pointers.
enum DsqStatus dsq_find_resonance(const struct DsqSystem *sys,
                                  size_t fock_cutoff,
                                  double *omega_c,
                                  double *gap,
                                  double *transition);

// Closed-form single-photon exchange from `cos(varphi)|0> + sin(varphi)|1>`.
// Columns: `t, photon_number, spin_excitation, xi2, xi2_min`.
//
// # Safety
// `sys` must be a live handle; `out` a valid pointer receiving an owned series.
enum DsqStatus dsq_single_photon(const struct DsqSystem *sys,
                                 double varphi,
                                 double bloch_angle,
                                 double t_stop,
                                 size_t n_samples,
                                 struct DsqSeries **out);

// Lossy full-model run from the ground state, driven at the located resonance.
// `continuous != 0` selects a continuous drive of amplitude `strength`;
// otherwise a Gaussian pulse of area `strength` with the default width.
// Columns: `t, photon_number, spin_excitation, xi2`.
//
// # Safety
// `sys` must be a live handle; `out` a valid pointer receiving an owned series.
enum DsqStatus dsq_driven_run(const struct DsqSystem *sys,
                              double kappa,
                              double gamma,
                              size_t fock_cutoff,
                              int32_t continuous,
                              double strength,
                              double t_stop,
                              size_t n_samples,
                              struct DsqSeries **out);

// Two-step mean-field protocol. Columns: `t, xi2, xi2_analytic`.
//
// # Safety
// `out` must be a valid pointer receiving an owned series.
enum DsqStatus dsq_meanfield_protocol(double coupling,
                                      double kappa,
                                      double gamma,
                                      double drive_amplitude,
                                      double t_stop,
                                      size_t n_samples,
                                      struct DsqSeries **out);

// Frozen-field squeezing floor `gamma / (chi N + gamma)`.
//
// # Safety
// `out` must be a valid pointer.
enum DsqStatus dsq_protocol_floor(double coupling,
                                  double kappa,
                                  double gamma,
                                  double drive_amplitude,
                                  double *out);

// Stationary squeezing of the resonant driven bosonic model.
//
// # Safety
// `out` must be a valid pointer.
enum DsqStatus dsq_stationary_xi2(double coupling,
                                  double kappa,
                                  double gamma,
                                  double drive_amplitude,
                                  double *out);

// # Safety
// `series` must be null or a handle returned by this library, not used afterwards.
void dsq_series_free(struct DsqSeries *series);

// Number of columns and rows.
//
// # Safety
// `series` must be a live handle; outputs valid pointers.
enum DsqStatus dsq_series_shape(const struct DsqSeries *series, size_t *n_columns, size_t *n_rows);

// Static name of column `index`, valid while the series lives; null when out of range.
//
// # Safety
// `series` must be a live handle.
const char *dsq_series_column_name(const struct DsqSeries *series, size_t index);

// Copies column `index` into `buf`.
//
// # Safety
// `series` must be a live handle; `buf` valid for `cap` doubles.
enum DsqStatus dsq_series_column(const struct DsqSeries *series,
                                 size_t index,
                                 double *buf,
                                 size_t cap,
                                 size_t *out_len);

// Runs a named scenario from TOML text into `out_dir`, exactly as the
// `simulate` binary does. `preset` may be null.
//
// # Safety
// String arguments must be NUL-terminated or (for `preset`) null.
enum DsqStatus dsq_run_config(const char *scenario,
                              const char *config_toml,
                              const char *preset,
                              const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DICKE_SQUEEZE_H */
