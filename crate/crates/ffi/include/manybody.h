#ifndef MANYBODY_H
#define MANYBODY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Status codes returned by every fallible function.
 */
typedef enum MbStatus {
  MB_STATUS_OK = 0,
  MB_STATUS_NULL_POINTER = 1,
  MB_STATUS_INVALID_ARGUMENT = 2,
  MB_STATUS_INVALID_TENSOR = 3,
  MB_STATUS_SHAPE_MISMATCH = 4,
  MB_STATUS_ZERO_TENSOR = 5,
  MB_STATUS_PARSE = 6,
  MB_STATUS_NOT_CONVERGED = 7,
  MB_STATUS_SINGULAR_SYSTEM = 8,
  MB_STATUS_NUMERIC = 9,
  MB_STATUS_IO = 10,
  MB_STATUS_PANIC = 11,
} MbStatus;

/*
 Result of a completion run.
 */
typedef struct MbCompletion MbCompletion;

/*
 Interaction set bound to a tensor order.
 */
typedef struct MbInteractions MbInteractions;

/*
 Result of a projection.
 */
typedef struct MbProjection MbProjection;

/*
 Dense non-negative tensor.
 */
typedef struct MbTensor MbTensor;

typedef struct MbSolverOptions {
  double tolerance;
  size_t max_iterations;
  double damping;
} MbSolverOptions;

typedef struct MbCompletionOptions {
  double epsilon;
  size_t max_iterations;
} MbCompletionOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *mb_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *mb_version(void);

/*
 Creates a tensor from `order` dimensions and `len` row-major values.

 # Safety
 `dims` must point to `order` values and `values` to `len` values.
 */
enum MbStatus mb_tensor_new(const size_t *dims,
                            size_t order,
                            const double *values,
                            size_t len,
                            struct MbTensor **out);

/*
 # Safety
 `t` must be null or a handle from this library, not yet freed.
 */
void mb_tensor_free(struct MbTensor *t);

/*
 Number of modes, or 0 for a null handle.

 # Safety
 `t` must be null or a live handle.
 */
size_t mb_tensor_order(const struct MbTensor *t);

/*
 Number of entries, or 0 for a null handle.

 # Safety
 `t` must be null or a live handle.
 */
size_t mb_tensor_len(const struct MbTensor *t);

/*
 Copies the dimensions into `out` (room for `capacity` values).

 # Safety
 `t` must be a live handle and `out` must have room for `capacity` values.
 */
enum MbStatus mb_tensor_dims(const struct MbTensor *t, size_t *out, size_t capacity);

/*
 Copies the row-major values into `out` (room for `capacity` values).

 # Safety
 `t` must be a live handle and `out` must have room for `capacity` values.
 */
enum MbStatus mb_tensor_values(const struct MbTensor *t, double *out, size_t capacity);

/*
 Reads a tensor file (no `nan` entries).

 # Safety
 `path` must be a NUL-terminated string.
 */
enum MbStatus mb_tensor_read(const char *path, struct MbTensor **out);

/*
 Writes a tensor file.

 # Safety
 `t` must be a live handle and `path` a NUL-terminated string.
 */
enum MbStatus mb_tensor_write(const struct MbTensor *t, const char *path);

/*
 Contraction of random tensor-ring cores with uniform (0, 1) entries.

 # Safety
 `dims` and `ranks` must each point to `order` values.
 */
enum MbStatus mb_random_ring_tensor(const size_t *dims,
                                    const size_t *ranks,
                                    size_t order,
                                    uint64_t seed,
                                    struct MbTensor **out);

/*
 Generalized KL divergence `KL(p, q)`.

 # Safety
 `p` and `q` must be live handles, `out` writable.
 */
enum MbStatus mb_kl_divergence(const struct MbTensor *p, const struct MbTensor *q, double *out);

/*
 `||truth - approx||_F / ||truth||_F`.

 # Safety
 `truth` and `approx` must be live handles, `out` writable.
 */
enum MbStatus mb_relative_error(const struct MbTensor *truth,
                                const struct MbTensor *approx,
                                double *out);

/*
 Parses interaction text (`body=2`, `cyclic`, `(1,2)(2,3)`, ...) for tensors of `order` modes.

 # Safety
 `text` must be a NUL-terminated string.
 */
enum MbStatus mb_interactions_parse(const char *text, size_t order, struct MbInteractions **out);

/*
 All interactions among at most `m` modes.

 # Safety
 `out` must be writable.
 */
enum MbStatus mb_interactions_m_body(size_t order, size_t m, struct MbInteractions **out);

/*
 Neighbouring-pair interactions around a ring of modes.

 # Safety
 `out` must be writable.
 */
enum MbStatus mb_interactions_cyclic(size_t order, struct MbInteractions **out);

/*
 # Safety
 `s` must be null or a live handle.
 */
void mb_interactions_free(struct MbInteractions *s);

/*
 Number of free parameters (including the normalizer) for the given dimensions.

 # Safety
 `s` must be a live handle, `dims` must point to `order` values, `out` writable.
 */
enum MbStatus mb_interactions_count_parameters(const struct MbInteractions *s,
                                               const size_t *dims,
                                               size_t order,
                                               size_t *out);

struct MbSolverOptions mb_solver_options_default(void);

/*
 Projects `p` onto the model of `s`. `opts` may be null for defaults.
 Hitting the iteration cap still returns `MbStatus::Ok`; check
 [`mb_projection_converged`].

 # Safety
 `p` and `s` must be live handles; `opts` null or valid; `out` writable.
 */
enum MbStatus mb_project(const struct MbTensor *p,
                         const struct MbInteractions *s,
                         const struct MbSolverOptions *opts,
                         struct MbProjection **out);

/*
 # Safety
 `r` must be null or a live handle.
 */
void mb_projection_free(struct MbProjection *r);

/*
 New tensor handle holding the projected tensor.

 # Safety
 `r` must be a live handle, `out` writable.
 */
enum MbStatus mb_projection_tensor(const struct MbProjection *r, struct MbTensor **out);

/*
 KL divergence from the input to the projection, or NaN for a null handle.

 # Safety
 `r` must be null or a live handle.
 */
double mb_projection_kl(const struct MbProjection *r);

/*
 # Safety
 `r` must be null or a live handle.
 */
size_t mb_projection_iterations(const struct MbProjection *r);

/*
 # Safety
 `r` must be null or a live handle.
 */
bool mb_projection_converged(const struct MbProjection *r);

/*
 Writes the factors of a converged projection and a manifest into directory `dir`.

 # Safety
 `r` and `s` must be live handles and `dir` a NUL-terminated string.
 */
enum MbStatus mb_projection_write_factors(const struct MbProjection *r,
                                          const struct MbInteractions *s,
                                          const char *dir);

struct MbCompletionOptions mb_completion_options_default(void);

/*
 Completes a tensor whose missing entries are NaN in `values`. Missing
 entries start at the observed mean. Either options pointer may be null.

 # Safety
 `dims` must point to `order` values and `values` to `len` values; `s` must
 be a live handle; option pointers null or valid; `out` writable.
 */
enum MbStatus mb_complete(const size_t *dims,
                          size_t order,
                          const double *values,
                          size_t len,
                          const struct MbInteractions *s,
                          const struct MbSolverOptions *solver,
                          const struct MbCompletionOptions *completion,
                          struct MbCompletion **out);

/*
 # Safety
 `r` must be null or a live handle.
 */
void mb_completion_free(struct MbCompletion *r);

/*
 New tensor handle holding the completed tensor.

 # Safety
 `r` must be a live handle, `out` writable.
 */
enum MbStatus mb_completion_tensor(const struct MbCompletion *r, struct MbTensor **out);

/*
 # Safety
 `r` must be null or a live handle.
 */
size_t mb_completion_iterations(const struct MbCompletion *r);

/*
 # Safety
 `r` must be null or a live handle.
 */
bool mb_completion_converged(const struct MbCompletion *r);

/*
 Copies the residual trace into `out`; `mb_completion_iterations` gives its length.

 # Safety
 `r` must be a live handle and `out` must have room for `capacity` values.
 */
enum MbStatus mb_completion_residuals(const struct MbCompletion *r, double *out, size_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MANYBODY_H */
