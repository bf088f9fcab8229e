#ifndef GLOSSER_H
#define GLOSSER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GlosserStatus {
  GLOSSER_STATUS_OK = 0,
  GLOSSER_STATUS_NULL_POINTER = 1,
  GLOSSER_STATUS_INVALID_UTF8 = 2,
  GLOSSER_STATUS_IO = 3,
  GLOSSER_STATUS_CORRUPT_CHECKPOINT = 4,
  GLOSSER_STATUS_PARSE = 5,
  GLOSSER_STATUS_TRACK_MISMATCH = 6,
  GLOSSER_STATUS_EVALUATION = 7,
  GLOSSER_STATUS_INVALID_ARGUMENT = 8,
  GLOSSER_STATUS_INTERNAL = 9,
} GlosserStatus;

typedef enum GlosserTrack {
  GLOSSER_TRACK_OPEN = 0,
  GLOSSER_TRACK_CLOSED = 1,
} GlosserTrack;

typedef enum GlosserProfile {
  GLOSSER_PROFILE_AGGLUTINATIVE = 0,
  GLOSSER_PROFILE_ISOLATING = 1,
} GlosserProfile;

// A loaded checkpoint.
typedef struct GlosserModel GlosserModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Loads a checkpoint file into a new model handle.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum GlosserStatus glosser_checkpoint_load(const char *path, struct GlosserModel **out);

// Releases a model handle. Null is ignored.
//
// # Safety
// `model` must come from [`glosser_checkpoint_load`] and not be used again.
void glosser_model_free(struct GlosserModel *model);

// Track the model was trained for.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum GlosserStatus glosser_model_track(const struct GlosserModel *model, enum GlosserTrack *out);

// Predicts the gloss lines of an IGT document and returns the document
// with `\g` lines replaced.
//
// # Safety
// `model` must be a live handle, `igt` NUL-terminated, `out` valid.
enum GlosserStatus glosser_predict_igt(const struct GlosserModel *model,
                                       const char *igt,
                                       char **out);

// Scores predicted against gold IGT documents; writes the metrics report as
// JSON.
//
// # Safety
// `pred` and `gold` must be NUL-terminated, `out_json` valid.
enum GlosserStatus glosser_evaluate_igt(const char *pred, const char *gold, char **out_json);

// Generates a synthetic IGT corpus of `size` entries.
//
// # Safety
// `out` must be a valid pointer.
enum GlosserStatus glosser_generate_synthetic(uint64_t seed,
                                              uintptr_t size,
                                              enum GlosserProfile profile,
                                              char **out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used again.
void glosser_string_free(char *s);

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next call into this library on the same thread.
const char *glosser_last_error(void);

// Library version as a static NUL-terminated string.
const char *glosser_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GLOSSER_H */
