#ifndef BTENSOR_H
#define BTENSOR_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum BtOperator {
  BT_OPERATOR_T = 0,
  BT_OPERATOR_F = 1,
} BtOperator;

typedef enum BtStatus {
  BT_STATUS_OK = 0,
  BT_STATUS_NULL_POINTER = 1,
  BT_STATUS_DIMENSION_MISMATCH = 2,
  BT_STATUS_INVALID_TENSOR = 3,
  BT_STATUS_UNSUPPORTED_ORDER = 4,
  BT_STATUS_NEGATIVE_BASE = 5,
  BT_STATUS_INVALID_NORM = 6,
  BT_STATUS_WRONG_CLASS = 7,
  BT_STATUS_GRID_TOO_LARGE = 8,
  BT_STATUS_INVALID_ARGUMENT = 9,
  BT_STATUS_ZERO_SOLUTION = 10,
  BT_STATUS_PARSE = 11,
  BT_STATUS_PANIC = 12,
} BtStatus;

typedef enum BtVerdict {
  BT_VERDICT_B = 0,
  BT_VERDICT_B0 = 1,
  BT_VERDICT_NEITHER = 2,
} BtVerdict;

// Opaque tensor handle.
typedef struct BtTensor BtTensor;

typedef struct BtNormBounds {
  double general_upper;
  double lower;
  double upper;
  double diagonal_upper;
} BtNormBounds;

typedef struct BtEigenBounds {
  // NaN for odd order.
  double h_bound;
  double z_bound;
} BtEigenBounds;

typedef struct BtTcpLowerBounds {
  double lb_inf;
  double lb_2;
  // NaN for odd order.
  double lb_m;
} BtTcpLowerBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *bt_version(void);

// Copies the last error message on this thread into `buf` (NUL-terminated,
// truncated to `len - 1` bytes). Returns the full message length in bytes.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t bt_last_error_message(char *buf, size_t len);

// Builds a tensor of order `order` and dimension `dim` from `len = dim^order`
// entries in lexicographic order (first index slowest).
//
// # Safety
// `entries` must be valid for `len` reads; `out` must be writable.
enum BtStatus bt_tensor_new_dense(size_t order,
                                  size_t dim,
                                  const double *entries,
                                  size_t len,
                                  struct BtTensor **out);

// Parses a tensor from its JSON text (dense or sparse form).
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum BtStatus bt_tensor_from_json(const char *json, struct BtTensor **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `t` must be null or a handle from this library not yet freed.
void bt_tensor_free(struct BtTensor *t);

// # Safety
// `t` must be null or a live handle.
size_t bt_tensor_order(const struct BtTensor *t);

// # Safety
// `t` must be null or a live handle.
size_t bt_tensor_dim(const struct BtTensor *t);

// Computes `A x^{m-1}` into `out`; both buffers have length `n = dim`.
//
// # Safety
// `x` and `out` must be valid for `n` elements.
enum BtStatus bt_tensor_contract(const struct BtTensor *t, const double *x, double *out, size_t n);

// Classifies the tensor; `tol = 0` is exact.
//
// # Safety
// `t` must be a live handle; `out` must be writable.
enum BtStatus bt_classify(const struct BtTensor *t, double tol, enum BtVerdict *out);

// Writes row sums and `beta_i` for each row; either output may be null.
//
// # Safety
// Non-null outputs must be valid for `n` elements.
enum BtStatus bt_row_data(const struct BtTensor *t, double *row_sums, double *betas, size_t n);

// Operator-norm bounds for `T_A` or `F_A` in the `p`-norm (`p = INFINITY`
// for the max norm). Fails with `WrongClass` unless the tensor is B or B0.
//
// # Safety
// `t` must be a live handle; `out` must be writable.
enum BtStatus bt_norm_bounds(const struct BtTensor *t,
                             enum BtOperator op,
                             double p,
                             struct BtNormBounds *out);

// Diagonal-only bounds on H- and Z-eigenvalue moduli.
//
// # Safety
// `t` must be a live handle; `out` must be writable.
enum BtStatus bt_eigen_bounds(const struct BtTensor *t, struct BtEigenBounds *out);

// Solves `x >= 0, w = q + A x^{m-1} >= 0, x.w = 0`. Writes the best point
// found to `x_out`, its residual and whether it met the tolerance.
//
// # Safety
// `q` and `x_out` must be valid for `n` elements; the scalar outputs may be null.
enum BtStatus bt_tcp_solve(const struct BtTensor *t,
                           const double *q,
                           size_t n,
                           uint64_t seed,
                           double *x_out,
                           double *residual,
                           bool *converged);

// Lower bounds on `||x||^{m-1}` over nonzero solutions of the TCP.
//
// # Safety
// `q` must be valid for `n` elements; `out` must be writable.
enum BtStatus bt_tcp_lower_bounds(const struct BtTensor *t,
                                  const double *q,
                                  size_t n,
                                  struct BtTcpLowerBounds *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BTENSOR_H */
