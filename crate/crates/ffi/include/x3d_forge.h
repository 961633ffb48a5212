#ifndef X3D_FORGE_H
#define X3D_FORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum X3dStatus {
  X3D_STATUS_OK = 0,
  X3D_STATUS_NULL_POINTER = 1,
  X3D_STATUS_INVALID_ARGUMENT = 2,
  X3D_STATUS_INFEASIBLE = 3,
  X3D_STATUS_IO = 4,
  X3D_STATUS_PARSE = 5,
  X3D_STATUS_PANIC = 6,
} X3dStatus;

typedef enum X3dStrategy {
  X3D_STRATEGY_CENTER = 0,
  X3D_STRATEGY_LEFT_CENTER_RIGHT = 1,
} X3dStrategy;

/**
 * Opaque instantiated architecture.
 */
typedef struct X3dArch X3dArch;

typedef struct X3dInput {
  uint32_t frames;
  uint32_t stride;
  uint32_t resolution;
} X3dInput;

typedef struct X3dStage {
  uint32_t blocks;
  uint32_t out_width;
  uint32_t bottleneck_width;
  uint32_t spatial_stride;
} X3dStage;

typedef struct X3dInferenceCost {
  uint32_t crop;
  uint64_t per_view_flops;
  uint64_t views;
  uint64_t total_flops;
} X3dInferenceCost;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next call into the library from this thread.
 */
const char *x3d_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *x3d_version(void);

/**
 * # Safety
 * `name` must be a nul-terminated string and `out` a writable pointer.
 */
enum X3dStatus x3d_arch_from_preset(const char *name, struct X3dArch **out);

/**
 * # Safety
 * `out` must be a writable pointer.
 */
enum X3dStatus x3d_arch_from_factors(double gamma_tau,
                                     double gamma_t,
                                     double gamma_s,
                                     double gamma_w,
                                     double gamma_b,
                                     double gamma_d,
                                     struct X3dArch **out);

/**
 * Parses a spec document as written by `x3d_arch_to_toml`.
 *
 * # Safety
 * `text` must be a nul-terminated string and `out` a writable pointer.
 */
enum X3dStatus x3d_arch_from_toml(const char *text, struct X3dArch **out);

/**
 * Runs greedy expansion from `start` (a preset name) with the analytic
 * oracle and returns the instance selected for `regime`.
 *
 * # Safety
 * `start` and `regime` must be nul-terminated strings and `out` a
 * writable pointer.
 */
enum X3dStatus x3d_arch_expand_to_regime(const char *start,
                                         const char *regime,
                                         struct X3dArch **out);

/**
 * # Safety
 * `arch` must be null or a handle from this library not yet freed.
 */
void x3d_arch_free(struct X3dArch *arch);

/**
 * # Safety
 * `arch` must be a live handle and the outputs writable (either may be
 * null to skip it).
 */
enum X3dStatus x3d_arch_complexity(const struct X3dArch *arch, uint64_t *flops, uint64_t *params);

/**
 * # Safety
 * `arch` must be a live handle and `out` writable.
 */
enum X3dStatus x3d_arch_input(const struct X3dArch *arch, struct X3dInput *out);

/**
 * # Safety
 * `arch` must be a live handle and `out` writable.
 */
enum X3dStatus x3d_arch_stage_count(const struct X3dArch *arch, uintptr_t *out);

/**
 * # Safety
 * `arch` must be a live handle and `out` writable.
 */
enum X3dStatus x3d_arch_stage(const struct X3dArch *arch, uintptr_t index, struct X3dStage *out);

/**
 * # Safety
 * `arch` must be a live handle and `out` writable.
 */
enum X3dStatus x3d_arch_inference_cost(const struct X3dArch *arch,
                                       enum X3dStrategy strategy,
                                       uint64_t clips,
                                       struct X3dInferenceCost *out);

/**
 * Serializes the spec; release the string with `x3d_string_free`.
 *
 * # Safety
 * `arch` must be a live handle and `out` writable.
 */
enum X3dStatus x3d_arch_to_toml(const struct X3dArch *arch, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void x3d_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* X3D_FORGE_H */
