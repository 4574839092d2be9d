#ifndef GGLAB_H
#define GGLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum gglab_status {
  GGLAB_STATUS_OK = 0,
  GGLAB_STATUS_NULL_POINTER = 1,
  GGLAB_STATUS_INVALID_ARGUMENT = 2,
  GGLAB_STATUS_INVALID_MODEL = 3,
  // N is beyond exact enumeration.
  GGLAB_STATUS_TOO_LARGE = 4,
  GGLAB_STATUS_CONFIG = 5,
  GGLAB_STATUS_IO = 6,
  // The caller's buffer is too short; any length out-parameter holds the size needed.
  GGLAB_STATUS_BUFFER_TOO_SMALL = 7,
  // A Rust panic was caught at the boundary.
  GGLAB_STATUS_INTERNAL = 8,
} gglab_status;

// One disorder realization with its cached Gibbs moments.
typedef struct gglab_model gglab_model;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds an SK instance for disorder sample `sample_index` of `master_seed`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum gglab_status gglab_model_sk(size_t n,
                                 double beta,
                                 double gamma,
                                 double h,
                                 uint64_t master_seed,
                                 uint64_t sample_index,
                                 struct gglab_model **out);

// Builds an EA instance on a `rows` x `cols` lattice.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum gglab_status gglab_model_ea(size_t rows,
                                 size_t cols,
                                 bool periodic,
                                 double gamma,
                                 uint64_t master_seed,
                                 uint64_t sample_index,
                                 struct gglab_model **out);

// Releases a handle. Null is a no-op.
//
// # Safety
// `model` must come from a constructor in this library and not be freed twice.
void gglab_model_free(struct gglab_model *model);

// Number of spins; 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t gglab_model_size(const struct gglab_model *model);

// Number of perturbation features; 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t gglab_model_feature_count(const struct gglab_model *model);

// Writes `log Z`.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum gglab_status gglab_model_log_partition(const struct gglab_model *model, double *out);

// Writes `(1/N) log Z`.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum gglab_status gglab_model_free_energy(const struct gglab_model *model, double *out);

// Writes the Gibbs mean of the squared two-replica overlap.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum gglab_status gglab_model_pair_overlap(const struct gglab_model *model, double *out);

// Copies the Gibbs mean of every feature into `buf`.
//
// `written` always receives the feature count. A short buffer yields
// `GGLAB_STATUS_BUFFER_TOO_SMALL`; `buf` may be null when `len` is 0.
//
// # Safety
// `buf` must hold `len` doubles; `model` must be a live handle.
enum gglab_status gglab_model_feature_averages(const struct gglab_model *model,
                                               double *buf,
                                               size_t len,
                                               size_t *written);

// Draws `count` independent configurations into `spins` (row-major, `count * N` entries of +-1).
//
// # Safety
// `spins` must hold `len` bytes; `model` must be a live handle.
enum gglab_status gglab_model_sample(const struct gglab_model *model,
                                     uint64_t stream_seed,
                                     size_t count,
                                     int8_t *spins,
                                     size_t len);

// Runs a TOML experiment config and writes `report.csv` and `report.json` to `out_dir`.
//
// `failures` receives the number of rows whose contract failed.
//
// # Safety
// Both paths must be NUL-terminated strings; `failures` writable.
enum gglab_status gglab_run_config(const char *config_path, const char *out_dir, size_t *failures);

// Copies the calling thread's last error message, NUL-terminated and truncated to `len`.
//
// Returns the full message length excluding the terminator.
//
// # Safety
// `buf` must be null or hold `len` bytes.
size_t gglab_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *gglab_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GGLAB_H */
