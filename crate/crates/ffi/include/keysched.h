#ifndef KEYSCHED_H
#define KEYSCHED_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum KsStatus {
  KS_STATUS_OK = 0,
  KS_STATUS_NULL_POINTER = 1,
  KS_STATUS_INVALID_STRING = 2,
  KS_STATUS_IO = 3,
  KS_STATUS_FLOW = 4,
  KS_STATUS_SELECT = 5,
  KS_STATUS_AUDIO = 6,
  KS_STATUS_GEOMETRY = 7,
  KS_STATUS_EVAL = 8,
  KS_STATUS_INVALID_ARGUMENT = 9,
  KS_STATUS_BUFFER_TOO_SMALL = 10,
  KS_STATUS_PANIC = 11,
} KsStatus;

typedef struct KsCurve KsCurve;

typedef struct KsFrames KsFrames;

typedef struct KsSchedule KsSchedule;

/**
 * Half-open frame interval `[start, end)`.
 */
typedef struct KsWindow {
  size_t start;
  size_t end;
} KsWindow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. Valid
 * until the next failing call on the same thread.
 */
const char *ks_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ks_version(void);

/**
 * Loads every `.pgm` file in `dir` (sorted by name) as one sequence.
 *
 * # Safety
 * `dir` must be a NUL-terminated string; `out` must be writable.
 */
enum KsStatus ks_frames_load(const char *dir, double fps, struct KsFrames **out);

/**
 * # Safety
 * `frames` must be null or a live handle.
 */
size_t ks_frames_len(const struct KsFrames *frames);

/**
 * # Safety
 * `frames` must be null or a handle not yet freed.
 */
void ks_frames_free(struct KsFrames *frames);

/**
 * Per-frame motion scores with the default flow settings.
 *
 * # Safety
 * `frames` must be a live handle; `out` must be writable.
 */
enum KsStatus ks_motion_curve(const struct KsFrames *frames, bool normalize, struct KsCurve **out);

/**
 * Wraps raw, non-negative scores in a curve handle.
 *
 * # Safety
 * `values` must point to `len` doubles; `out` must be writable.
 */
enum KsStatus ks_curve_from_values(const double *values, size_t len, struct KsCurve **out);

/**
 * # Safety
 * `curve` must be null or a live handle.
 */
size_t ks_curve_len(const struct KsCurve *curve);

/**
 * # Safety
 * `curve` must be a live handle; `buf` must hold `cap` doubles.
 */
enum KsStatus ks_curve_values(const struct KsCurve *curve,
                              double *buf,
                              size_t cap,
                              size_t *out_len);

/**
 * # Safety
 * `curve` must be null or a handle not yet freed.
 */
void ks_curve_free(struct KsCurve *curve);

/**
 * Smooths, normalizes and detects extrema with default settings, then
 * selects `t_k` keyframes. With `random`, peaks are drawn using `seed`.
 *
 * # Safety
 * `curve` must be a live handle; `out` must be writable.
 */
enum KsStatus ks_select(const struct KsCurve *curve,
                        size_t t_k,
                        bool random,
                        uint64_t seed,
                        struct KsSchedule **out);

/**
 * # Safety
 * `schedule` must be null or a live handle.
 */
size_t ks_schedule_len(const struct KsSchedule *schedule);

/**
 * # Safety
 * `schedule` must be a live handle; `buf` must hold `cap` values.
 */
enum KsStatus ks_schedule_keyframes(const struct KsSchedule *schedule,
                                    size_t *buf,
                                    size_t cap,
                                    size_t *out_len);

/**
 * Serializes the schedule as JSON. Release the string with
 * [`ks_string_free`].
 *
 * # Safety
 * `schedule` must be a live handle; `out` must be writable.
 */
enum KsStatus ks_schedule_to_json(const struct KsSchedule *schedule, char **out);

/**
 * # Safety
 * `schedule` must be null or a handle not yet freed.
 */
void ks_schedule_free(struct KsSchedule *schedule);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void ks_string_free(char *s);

/**
 * # Safety
 * `out` must be writable.
 */
enum KsStatus ks_patch_token_count(size_t t_a, size_t kernel, size_t stride, size_t *out);

/**
 * Overlapping windows of length `window` starting every `stride` frames.
 *
 * # Safety
 * `buf` must hold `cap` windows; `out_len` must be writable.
 */
enum KsStatus ks_freenoise_windows(size_t t,
                                   size_t window,
                                   size_t stride,
                                   struct KsWindow *buf,
                                   size_t cap,
                                   size_t *out_len);

/**
 * Combines four noise estimates of `len` values each with guidance
 * scales for image, text and audio conditioning.
 *
 * # Safety
 * All input pointers must reference `len` doubles; `out` must hold `len`.
 */
enum KsStatus ks_cfg_combine(const double *e_none,
                             const double *e_img,
                             const double *e_img_txt,
                             const double *e_full,
                             size_t len,
                             double s_img,
                             double s_txt,
                             double s_aud,
                             double *out);

/**
 * Size of a maximum one-to-one matching within distance `t` (strictly
 * below `t` when `strict`).
 *
 * # Safety
 * `gt` and `pred` must reference `n_gt` and `n_pred` values; `out` must be
 * writable.
 */
enum KsStatus ks_match_keypoints(const size_t *gt,
                                 size_t n_gt,
                                 const size_t *pred,
                                 size_t n_pred,
                                 size_t t,
                                 bool strict,
                                 size_t *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* KEYSCHED_H */
