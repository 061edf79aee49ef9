#ifndef FRACMHD_H
#define FRACMHD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Bumped on any incompatible change to this interface.
#define FRACMHD_ABI_VERSION 1

// Status codes. Positive values match the command-line exit codes.
typedef enum FracmhdStatus {
  FRACMHD_STATUS_OK = 0,
  FRACMHD_STATUS_CONFIG = 2,
  FRACMHD_STATUS_NUMERICAL = 3,
  FRACMHD_STATUS_PROPERTY = 4,
  FRACMHD_STATUS_IO = 5,
  FRACMHD_STATUS_NULL_POINTER = -1,
  FRACMHD_STATUS_BUFFER_TOO_SMALL = -2,
  FRACMHD_STATUS_INVALID_UTF8 = -3,
  FRACMHD_STATUS_PANIC = -4,
} FracmhdStatus;

// Field selectors for `fracmhd_simulation_field`.
typedef enum FracmhdField {
  FRACMHD_FIELD_VORTICITY = 0,
  FRACMHD_FIELD_CURRENT = 1,
} FracmhdField;

// Opaque simulation handle.
typedef struct FracmhdSimulation FracmhdSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Interface version, see `FRACMHD_ABI_VERSION`.
uint32_t fracmhd_abi_version(void);

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *fracmhd_last_error(void);

// Builds a simulation at `t = 0` from `key = value` configuration text
// (NULL for defaults).
//
// # Safety
// `config` is NULL or a NUL-terminated string; `out` is a valid pointer.
enum FracmhdStatus fracmhd_simulation_new(const char *config, struct FracmhdSimulation **out);

// Restores a simulation from a checkpoint file. With `force == 0` the
// configuration digest must match the one stored in the file.
//
// # Safety
// `config` is NULL or a NUL-terminated string, `path` is a NUL-terminated
// string, `out` is a valid pointer.
enum FracmhdStatus fracmhd_simulation_from_checkpoint(const char *config,
                                                      const char *path,
                                                      int force,
                                                      struct FracmhdSimulation **out);

// Releases a handle. NULL is ignored.
//
// # Safety
// `sim` is NULL or a handle not yet freed.
void fracmhd_simulation_free(struct FracmhdSimulation *sim);

// Integrates to the next output time and computes its record.
//
// # Safety
// `sim` is a live handle.
enum FracmhdStatus fracmhd_simulation_advance_output(struct FracmhdSimulation *sim);

// Integrates to time `t` without recording.
//
// # Safety
// `sim` is a live handle.
enum FracmhdStatus fracmhd_simulation_advance_to(struct FracmhdSimulation *sim, double t);

// Current simulation time.
//
// # Safety
// `sim` is a live handle, `out` a valid pointer.
enum FracmhdStatus fracmhd_simulation_time(const struct FracmhdSimulation *sim, double *out);

// Grid points per direction.
//
// # Safety
// `sim` is a live handle, `out` a valid pointer.
enum FracmhdStatus fracmhd_simulation_grid_size(const struct FracmhdSimulation *sim, size_t *out);

// Number of values in a record row.
//
// # Safety
// `sim` is a live handle, `out` a valid pointer.
enum FracmhdStatus fracmhd_simulation_record_len(const struct FracmhdSimulation *sim, size_t *out);

// Copies the most recent record row into `out[0..len]`.
//
// # Safety
// `sim` is a live handle, `out` points to `len` writable doubles.
enum FracmhdStatus fracmhd_simulation_record(const struct FracmhdSimulation *sim,
                                             double *out,
                                             size_t len);

// Writes the NUL-terminated name of record column `index` into `buf`.
// `needed` (optional) receives the required size including the NUL.
//
// # Safety
// `sim` is a live handle, `buf` points to `len` writable bytes or is NULL
// with `len == 0`, `needed` is NULL or valid.
enum FracmhdStatus fracmhd_simulation_column_name(const struct FracmhdSimulation *sim,
                                                  size_t index,
                                                  char *buf,
                                                  size_t len,
                                                  size_t *needed);

// Copies the field selected by a `FracmhdField` value on the `n × n` grid (row-major, index `a·n + b` for
// the point `(2πa/n, 2πb/n)`) into `out[0..len]`.
//
// # Safety
// `sim` is a live handle, `out` points to `len` writable doubles.
enum FracmhdStatus fracmhd_simulation_field(const struct FracmhdSimulation *sim,
                                            int field,
                                            double *out,
                                            size_t len);

// Writes a checkpoint of the current state.
//
// # Safety
// `sim` is a live handle, `path` a NUL-terminated string.
enum FracmhdStatus fracmhd_simulation_save_checkpoint(const struct FracmhdSimulation *sim,
                                                      const char *path);

// Checks diagnostic exponents for `beta`. `admissible` receives 1 when
// every entry is admissible, else 0. Any list may be NULL with length 0.
//
// # Safety
// Each list pointer is NULL or points to the given number of doubles;
// `admissible` is a valid pointer.
enum FracmhdStatus fracmhd_validate_ranges(double beta,
                                           const double *q,
                                           size_t nq,
                                           const double *s,
                                           size_t ns,
                                           const double *r,
                                           size_t nr,
                                           int *admissible);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACMHD_H */
