#ifndef TDDI_H
#define TDDI_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TddiStatus {
  TDDI_STATUS_OK = 0,
  TDDI_STATUS_NULL_POINTER = 1,
  TDDI_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Bad input data or configuration.
   */
  TDDI_STATUS_CONFIG = 3,
  /**
   * Solver or estimator failure.
   */
  TDDI_STATUS_NUMERIC = 4,
  TDDI_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * Not found, e.g. an unmonitored bus or no critical bus.
   */
  TDDI_STATUS_NOT_FOUND = 6,
  TDDI_STATUS_PANIC = 7,
} TddiStatus;

typedef enum TddiEstimator {
  TDDI_ESTIMATOR_TWO_POINT = 0,
  TDDI_ESTIMATOR_LSQ = 1,
} TddiEstimator;

typedef enum TddiClassification {
  TDDI_CLASSIFICATION_TRANSMISSION_LIMITED = 0,
  TDDI_CLASSIFICATION_DISTRIBUTION_LIMITED = 1,
  TDDI_CLASSIFICATION_BALANCED = 2,
} TddiClassification;

typedef enum TddiIndexField {
  TDDI_INDEX_FIELD_VSI = 0,
  TDDI_INDEX_FIELD_TDDI = 1,
} TddiIndexField;

/**
 * Opaque network handle.
 */
typedef struct TddiNetwork TddiNetwork;

/**
 * Opaque scenario result handle.
 */
typedef struct TddiScenarioResult TddiScenarioResult;

/**
 * Scenario settings. Fill with `tddi_scenario_config_default` first.
 * `feeder` may be null for the plain case.
 */
typedef struct TddiScenarioConfig {
  const char *case_source;
  const char *feeder;
  uint32_t attach_bus;
  size_t replicas;
  double step;
  double noise_sigma;
  uint64_t seed;
  enum TddiEstimator estimator;
  size_t window;
  double deadband;
  bool substation_only_zd;
  bool all_replicas;
} TddiScenarioConfig;

typedef struct TddiComplex {
  double re;
  double im;
} TddiComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating if needed. Returns the full message
 * length in bytes, excluding the terminator. `buf` may be null to query the
 * length.
 */
size_t tddi_last_error_message(char *buf, size_t len);

/**
 * Loads a case by builtin name (`case9`) or file path.
 */
enum TddiStatus tddi_network_load(const char *source, struct TddiNetwork **out);

/**
 * Number of buses, or 0 for a null handle.
 */
size_t tddi_network_bus_count(const struct TddiNetwork *net);

/**
 * Total base-case active load in MW.
 */
enum TddiStatus tddi_network_total_load_mw(const struct TddiNetwork *net, double *out);

/**
 * Loading margin in MW with default continuation settings.
 */
enum TddiStatus tddi_network_margin_mw(const struct TddiNetwork *net, double *out);

void tddi_network_free(struct TddiNetwork *net);

/**
 * Defaults: `case9`, no feeder, bus 5, 10 replicas, two-point estimator.
 */
struct TddiScenarioConfig tddi_scenario_config_default(void);

/**
 * Runs a bundled scenario: `standard`, `fc1` or `fc2`.
 */
enum TddiStatus tddi_scenario_run_builtin(const char *name, struct TddiScenarioResult **out);

enum TddiStatus tddi_scenario_run(const struct TddiScenarioConfig *config,
                                  struct TddiScenarioResult **out);

enum TddiStatus tddi_scenario_margin_mw(const struct TddiScenarioResult *result, double *out);

/**
 * Classification of the critical bus near the nose. `NotFound` when the
 * scenario has no monitored loads.
 */
enum TddiStatus tddi_scenario_classification(const struct TddiScenarioResult *result,
                                             enum TddiClassification *out);

/**
 * Bus id of the critical bus and, optionally, its TDDI near the nose.
 * `tddi_out` may be null.
 */
enum TddiStatus tddi_scenario_critical_bus(const struct TddiScenarioResult *result,
                                           uint32_t *bus_out,
                                           double *tddi_out);

/**
 * Copies the `(total_load_mw, value)` series of a monitored bus, e.g.
 * `"D3-feeder1"`. `*len` receives the series length. When `capacity` is too
 * small nothing is copied and `BufferTooSmall` is returned; call with
 * `capacity = 0` and null buffers to query the length.
 */
enum TddiStatus tddi_scenario_series(const struct TddiScenarioResult *result,
                                     const char *bus_name,
                                     enum TddiIndexField field,
                                     double *loads_mw,
                                     double *values,
                                     size_t capacity,
                                     size_t *len);

void tddi_scenario_free(struct TddiScenarioResult *result);

/**
 * `|z_t + z_d| / |z_l|`.
 */
enum TddiStatus tddi_vsi(struct TddiComplex z_t,
                         struct TddiComplex z_d,
                         struct TddiComplex z_l,
                         double *out);

/**
 * `ln(|z_t| / |z_d|)`.
 */
enum TddiStatus tddi_tddi(struct TddiComplex z_t, struct TddiComplex z_d, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TDDI_H */
