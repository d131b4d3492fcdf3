#ifndef PULSEDOA_H
#define PULSEDOA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PdStatus {
  PD_STATUS_OK = 0,
  PD_STATUS_NULL_POINTER = 1,
  PD_STATUS_INVALID_ARGUMENT = 2,
  PD_STATUS_OUT_OF_RANGE = 3,
  PD_STATUS_IO = 4,
  PD_STATUS_PARSE = 5,
  PD_STATUS_CONFIG = 6,
  PD_STATUS_NUMERICAL = 7,
  PD_STATUS_BUFFER_TOO_SMALL = 8,
  PD_STATUS_PANIC = 9,
} PdStatus;

/**
 * Absorption coefficient table `k(f)`.
 */
typedef struct PdAbsorption PdAbsorption;

/**
 * Experiment configuration plus the result of its latest sweep.
 */
typedef struct PdExperiment PdExperiment;

/**
 * A derivative-of-Gaussian pulse.
 */
typedef struct PdPulse PdPulse;

/**
 * One Monte Carlo cell.
 */
typedef struct PdReport {
  uint32_t order;
  double center_hz;
  double path_length_m;
  double snapshot_time_s;
  size_t runs;
  double rmse_theta_deg;
  double rmse_fc_hz;
  double tpr;
} PdReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pd_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length in bytes
 * excluding the terminator; `buf` may be null to query the length.
 */
size_t pd_last_error_message(char *buf, size_t len);

/**
 * Pulse of the given order, center frequency (Hz) and power (W).
 */
enum PdStatus pd_pulse_new(uint32_t order, double center_hz, double power_w, struct PdPulse **out);

void pd_pulse_free(struct PdPulse *pulse);

/**
 * Center frequency, duration, energy, sigma and scale factor of a pulse.
 */
enum PdStatus pd_pulse_params(const struct PdPulse *pulse,
                              double *center_hz,
                              double *duration_s,
                              double *energy_j,
                              double *sigma_s,
                              double *scale);

enum PdStatus pd_pulse_half_power_band(const struct PdPulse *pulse, double *f_low, double *f_high);

enum PdStatus pd_pulse_eval_time(const struct PdPulse *pulse, double t, double *out);

/**
 * Spectrum `G_n(f)` as real and imaginary parts.
 */
enum PdStatus pd_pulse_eval_freq(const struct PdPulse *pulse, double f, double *re, double *im);

/**
 * The synthetic table shipped with the library.
 */
enum PdStatus pd_absorption_bundled(struct PdAbsorption **out);

/**
 * Loads a `frequency_hz,k_per_meter` CSV.
 */
enum PdStatus pd_absorption_from_csv(const char *path, struct PdAbsorption **out);

enum PdStatus pd_absorption_k_at(const struct PdAbsorption *table, double f, double *out);

void pd_absorption_free(struct PdAbsorption *table);

/**
 * Default experiment: orders 6 to 10 on their standard centers.
 */
enum PdStatus pd_experiment_default(struct PdExperiment **out);

/**
 * Reads a TOML experiment description.
 */
enum PdStatus pd_experiment_from_toml(const char *path, struct PdExperiment **out);

enum PdStatus pd_experiment_set_runs(struct PdExperiment *exp, size_t runs, uint64_t base_seed);

/**
 * Replaces the path-length list.
 */
enum PdStatus pd_experiment_set_path_lengths(struct PdExperiment *exp,
                                             const double *lengths_m,
                                             size_t count);

/**
 * Runs the full sweep. `table` may be null to use the configured table.
 */
enum PdStatus pd_experiment_run(struct PdExperiment *exp, const struct PdAbsorption *table);

enum PdStatus pd_experiment_report_count(const struct PdExperiment *exp, size_t *out);

enum PdStatus pd_experiment_report(const struct PdExperiment *exp,
                                   size_t index,
                                   struct PdReport *out);

/**
 * Writes the results CSV of the latest sweep into `buf`. `written`
 * receives the byte count needed including the NUL terminator; when `len`
 * is too small nothing is copied and `BufferTooSmall` is returned.
 */
enum PdStatus pd_experiment_results_csv(const struct PdExperiment *exp,
                                        char *buf,
                                        size_t len,
                                        size_t *written);

void pd_experiment_free(struct PdExperiment *exp);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PULSEDOA_H */
