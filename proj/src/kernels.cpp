#include "uc/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace uc {
namespace kernels {

namespace {

inline void matmul_row(const Mat& a, const Mat& b, Mat& out, int i) {
  const int k_dim = a.cols;
  const int n = b.cols;
  double* out_row = out.row(i);
  std::fill(out_row, out_row + n, 0.0);
  const double* a_row = a.row(i);
  for (int k = 0; k < k_dim; ++k) {
    const double aik = a_row[k];
    if (aik == 0.0) continue;
    const double* b_row = b.row(k);
    for (int j = 0; j < n; ++j) out_row[j] += aik * b_row[j];
  }
}

inline void matmul_bt_row(const Mat& a, const Mat& b, Mat& out, int i) {
  const int k_dim = a.cols;
  const int n = b.rows;
  const double* a_row = a.row(i);
  double* out_row = out.row(i);
  for (int j = 0; j < n; ++j) {
    const double* b_row = b.row(j);
    double acc = 0.0;
    for (int k = 0; k < k_dim; ++k) acc += a_row[k] * b_row[k];
    out_row[j] = acc;
  }
}

// Column block of a^T * b; each output row r of out corresponds to column r
// of a, so parallelizing over r keeps the k-summation order fixed.
inline void matmul_at_row(const Mat& a, const Mat& b, Mat& out, int r) {
  const int m = a.rows;
  const int n = b.cols;
  double* out_row = out.row(r);
  std::fill(out_row, out_row + n, 0.0);
  for (int k = 0; k < m; ++k) {
    const double ark = a(k, r);
    if (ark == 0.0) continue;
    const double* b_row = b.row(k);
    for (int j = 0; j < n; ++j) out_row[j] += ark * b_row[j];
  }
}

inline void softmax_row(Mat& m, int i) {
  double* row = m.row(i);
  const int n = m.cols;
  double mx = row[0];
  for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    row[j] = std::exp(row[j] - mx);
    sum += row[j];
  }
  const double inv = 1.0 / sum;
  for (int j = 0; j < n; ++j) row[j] *= inv;
}

inline void layer_norm_row(const Mat& x, const std::vector<double>& gamma,
                           const std::vector<double>& beta, double eps, Mat& out, int i) {
  const int n = x.cols;
  const double* xr = x.row(i);
  double* yr = out.row(i);
  double mean = 0.0;
  for (int j = 0; j < n; ++j) mean += xr[j];
  mean /= n;
  double var = 0.0;
  for (int j = 0; j < n; ++j) {
    const double d = xr[j] - mean;
    var += d * d;
  }
  var /= n;
  const double inv = 1.0 / std::sqrt(var + eps);
  for (int j = 0; j < n; ++j) yr[j] = (xr[j] - mean) * inv * gamma[j] + beta[j];
}

// Below this many output elements the fork overhead dominates.
constexpr long kParallelCutoff = 16 * 1024;

inline bool use_parallel(long work) {
#ifdef _OPENMP
  return work >= kParallelCutoff && omp_get_max_threads() > 1;
#else
  (void)work;
  return false;
#endif
}

}  // namespace

void matmul_serial(const Mat& a, const Mat& b, Mat& out) {
  assert(a.cols == b.rows);
  out = Mat(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) matmul_row(a, b, out, i);
}

void matmul_parallel(const Mat& a, const Mat& b, Mat& out) {
  assert(a.cols == b.rows);
  out = Mat(a.rows, b.cols);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < a.rows; ++i) matmul_row(a, b, out, i);
}

void matmul_bt_serial(const Mat& a, const Mat& b, Mat& out) {
  assert(a.cols == b.cols);
  out = Mat(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) matmul_bt_row(a, b, out, i);
}

void matmul_bt_parallel(const Mat& a, const Mat& b, Mat& out) {
  assert(a.cols == b.cols);
  out = Mat(a.rows, b.rows);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < a.rows; ++i) matmul_bt_row(a, b, out, i);
}

void matmul_at_serial(const Mat& a, const Mat& b, Mat& out) {
  assert(a.rows == b.rows);
  out = Mat(a.cols, b.cols);
  for (int r = 0; r < a.cols; ++r) matmul_at_row(a, b, out, r);
}

void matmul_at_parallel(const Mat& a, const Mat& b, Mat& out) {
  assert(a.rows == b.rows);
  out = Mat(a.cols, b.cols);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int r = 0; r < a.cols; ++r) matmul_at_row(a, b, out, r);
}

void softmax_rows_serial(Mat& m) {
  for (int i = 0; i < m.rows; ++i) softmax_row(m, i);
}

void softmax_rows_parallel(Mat& m) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < m.rows; ++i) softmax_row(m, i);
}

void layer_norm_rows_serial(const Mat& x, const std::vector<double>& gamma,
                            const std::vector<double>& beta, double eps, Mat& out) {
  out = Mat(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i) layer_norm_row(x, gamma, beta, eps, out, i);
}

void layer_norm_rows_parallel(const Mat& x, const std::vector<double>& gamma,
                              const std::vector<double>& beta, double eps, Mat& out) {
  out = Mat(x.rows, x.cols);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < x.rows; ++i) layer_norm_row(x, gamma, beta, eps, out, i);
}

void matmul(const Mat& a, const Mat& b, Mat& out) {
  if (use_parallel(static_cast<long>(a.rows) * b.cols * a.cols))
    matmul_parallel(a, b, out);
  else
    matmul_serial(a, b, out);
}

void matmul_bt(const Mat& a, const Mat& b, Mat& out) {
  if (use_parallel(static_cast<long>(a.rows) * b.rows * a.cols))
    matmul_bt_parallel(a, b, out);
  else
    matmul_bt_serial(a, b, out);
}

void matmul_at(const Mat& a, const Mat& b, Mat& out) {
  if (use_parallel(static_cast<long>(a.cols) * b.cols * a.rows))
    matmul_at_parallel(a, b, out);
  else
    matmul_at_serial(a, b, out);
}

void softmax_rows(Mat& m) {
  if (use_parallel(static_cast<long>(m.rows) * m.cols))
    softmax_rows_parallel(m);
  else
    softmax_rows_serial(m);
}

void layer_norm_rows(const Mat& x, const std::vector<double>& gamma,
                     const std::vector<double>& beta, double eps, Mat& out) {
  if (use_parallel(static_cast<long>(x.rows) * x.cols))
    layer_norm_rows_parallel(x, gamma, beta, eps, out);
  else
    layer_norm_rows_serial(x, gamma, beta, eps, out);
}

}  // namespace kernels

namespace par {

void for_indexed(int n, bool parallel, const std::function<void(int)>& fn) {
  if (!parallel) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) fn(i);
#else
  for (int i = 0; i < n; ++i) fn(i);
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace par

}  // namespace uc
