#ifndef GAITSPEED_H
#define GAITSPEED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Upper bound on trial results produced by one `gs_session_process` call.
#define GS_MAX_RESULTS_PER_READ 2

typedef enum GsStatus {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_POINTER = 1,
  GS_STATUS_INVALID_WINDOW = 2,
  GS_STATUS_INVALID_THRESHOLD = 3,
  GS_STATUS_NON_MONOTONIC = 4,
  GS_STATUS_INVALID_ARGUMENT = 5,
  GS_STATUS_INSUFFICIENT_DATA = 6,
  GS_STATUS_BUFFER_TOO_SMALL = 7,
  GS_STATUS_INVALID_STRING = 8,
  GS_STATUS_PANIC = 99,
} GsStatus;

typedef enum GsClassification {
  GS_CLASSIFICATION_SUCCESS = 0,
  GS_CLASSIFICATION_ERRONEOUS = 1,
  GS_CLASSIFICATION_SYSTEM_FAILURE = 2,
} GsClassification;

typedef enum GsRole {
  GS_ROLE_ENTRY = 0,
  GS_ROLE_EXIT = 1,
  GS_ROLE_IGNORED = 2,
} GsRole;

// Streaming exit detector.
typedef struct GsForwardDetector GsForwardDetector;

// Trial state machine for a single tag.
typedef struct GsSession GsSession;

typedef struct GsSample {
  uint64_t timestamp_us;
  double rssi_dbm;
} GsSample;

typedef struct GsEdge {
  uint64_t edge_timestamp_us;
  double peak_rssi_dbm;
  size_t trigger_index;
} GsEdge;

typedef struct GsPair {
  double v_test_mps;
  double v_ref_mps;
} GsPair;

typedef struct GsAgreement {
  size_t n;
  double mae_mps;
  double mean_error_pct;
  double bias_mps;
  double sd_mps;
  double loa_low_mps;
  double loa_high_mps;
} GsAgreement;

typedef struct GsParams {
  size_t w1;
  size_t w2;
  double tau1;
  double tau2;
  double distance_m;
} GsParams;

// One completed trial. Edge fields are only meaningful when the matching
// `has_*` flag is set.
typedef struct GsTrial {
  bool has_start;
  uint64_t t_start_us;
  bool has_end;
  uint64_t t_end_us;
  double speed_mps;
  enum GsClassification classification;
  size_t entry_samples;
  size_t exit_samples;
} GsTrial;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code. Never null.
const char *gs_status_message(enum GsStatus status);

// Entry-antenna edge detection over a complete trace in time order.
// `*found` is false when no window fires.
//
// # Safety
// `samples` must point to `len` readable elements; `found` and `edge` must be writable.
enum GsStatus gs_detect_reversed(const struct GsSample *samples_ptr,
                                 size_t len,
                                 size_t w,
                                 double tau,
                                 bool *found,
                                 struct GsEdge *edge);

// Exit-antenna edge detection over a complete trace.
//
// # Safety
// Same contract as [`gs_detect_reversed`].
enum GsStatus gs_detect_forward(const struct GsSample *samples_ptr,
                                size_t len,
                                size_t w,
                                double tau,
                                bool *found,
                                struct GsEdge *edge);

// Creates a streaming exit detector.
//
// # Safety
// `out_handle` must be writable.
enum GsStatus gs_forward_new(size_t w, double tau, struct GsForwardDetector **out_handle);

// Feeds one sample. `*fired` is true on the call that fires and on every
// later call until reset; `*edge` then holds the latched edge.
//
// # Safety
// `handle` must come from [`gs_forward_new`]; `fired` and `edge` must be writable.
enum GsStatus gs_forward_push(struct GsForwardDetector *handle,
                              struct GsSample sample,
                              bool *fired,
                              struct GsEdge *edge);

// Clears the window and the latch.
//
// # Safety
// `handle` must come from [`gs_forward_new`].
enum GsStatus gs_forward_reset(struct GsForwardDetector *handle);

// Releases a detector. Null is a no-op.
//
// # Safety
// `handle` must come from [`gs_forward_new`] and not be used afterwards.
void gs_forward_free(struct GsForwardDetector *handle);

// Fixed-threshold edge: the first (forward) or last (reverse) sample at or
// above `threshold_dbm`.
//
// # Safety
// `samples` must point to `len` readable elements; `found` and `timestamp_us` must be writable.
enum GsStatus gs_baseline_detect(const struct GsSample *samples_ptr,
                                 size_t len,
                                 double threshold_dbm,
                                 bool reverse,
                                 bool *found,
                                 uint64_t *timestamp_us);

// Speed in m/s between two edges.
//
// # Safety
// `speed_mps` must be writable.
enum GsStatus gs_compute_speed(uint64_t t_start_us,
                               uint64_t t_end_us,
                               double distance_m,
                               double *speed_mps);

// # Safety
// `classification` must be writable.
enum GsStatus gs_classify(double speed_mps, enum GsClassification *classification);

// Mean absolute difference between test and reference speeds.
//
// # Safety
// `pairs_ptr` must point to `len` readable elements; `mae_mps` must be writable.
enum GsStatus gs_mae(const struct GsPair *pairs_ptr, size_t len, double *mae_mps);

// Bias, limits of agreement and error summary. Needs at least two pairs.
//
// # Safety
// `pairs_ptr` must point to `len` readable elements; `report` must be writable.
enum GsStatus gs_bland_altman(const struct GsPair *pairs_ptr,
                              size_t len,
                              struct GsAgreement *report);

// Defaults used by the service: w 14, tau 1 dB, 4 m.
struct GsParams gs_params_default(void);

// Creates a session for one tag with default timing (10 s cooldown,
// 120 s idle timeout). `epc` must be 24 hex characters.
//
// # Safety
// `label` and `epc` must be NUL-terminated; `out_handle` must be writable.
enum GsStatus gs_session_new(const char *label, const char *epc, struct GsSession **out_handle);

// Routes one read into the session. Up to [`GS_MAX_RESULTS_PER_READ`]
// completed trials are written to `results`; `*written` holds the count.
//
// # Safety
// `handle` must come from [`gs_session_new`]; `params` must be readable;
// `results` must have room for `capacity` elements; `written` must be writable.
enum GsStatus gs_session_process(struct GsSession *handle,
                                 enum GsRole role,
                                 struct GsSample sample,
                                 const struct GsParams *params,
                                 struct GsTrial *results,
                                 size_t capacity,
                                 size_t *written);

// Ends an open trial as if its idle timer expired. `*has_result` is false
// when the session was not in a trial.
//
// # Safety
// `handle` must come from [`gs_session_new`]; the out-pointers must be writable.
enum GsStatus gs_session_expire(struct GsSession *handle, bool *has_result, struct GsTrial *result);

// Releases a session. Null is a no-op.
//
// # Safety
// `handle` must come from [`gs_session_new`] and not be used afterwards.
void gs_session_free(struct GsSession *handle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAITSPEED_H */
