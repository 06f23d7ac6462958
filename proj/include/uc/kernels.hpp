#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace uc {

// Row-major dense matrix of doubles. Small enough on purpose; the heavy
// lifting elsewhere is sparse.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
  double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }
  void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

namespace kernels {

// Each kernel comes in a serial reference form and an OpenMP form. The
// parallel variants split work so that every output element is produced by
// exactly one thread with the same inner summation order as the serial
// code, so the two forms agree bit for bit for any thread count.

void matmul_serial(const Mat& a, const Mat& b, Mat& out);
void matmul_parallel(const Mat& a, const Mat& b, Mat& out);

/// out = a * b^T.
void matmul_bt_serial(const Mat& a, const Mat& b, Mat& out);
void matmul_bt_parallel(const Mat& a, const Mat& b, Mat& out);

/// out = a^T * b.
void matmul_at_serial(const Mat& a, const Mat& b, Mat& out);
void matmul_at_parallel(const Mat& a, const Mat& b, Mat& out);

void softmax_rows_serial(Mat& m);
void softmax_rows_parallel(Mat& m);

/// Per-row layer norm: y = (x - mean) / sqrt(var + eps) * gamma + beta.
void layer_norm_rows_serial(const Mat& x, const std::vector<double>& gamma,
                            const std::vector<double>& beta, double eps, Mat& out);
void layer_norm_rows_parallel(const Mat& x, const std::vector<double>& gamma,
                              const std::vector<double>& beta, double eps, Mat& out);

// Dispatching wrappers; route to the parallel form when OpenMP is available
// and the work is large enough to pay for the fork.
void matmul(const Mat& a, const Mat& b, Mat& out);
void matmul_bt(const Mat& a, const Mat& b, Mat& out);
void matmul_at(const Mat& a, const Mat& b, Mat& out);
void softmax_rows(Mat& m);
void layer_norm_rows(const Mat& x, const std::vector<double>& gamma,
                     const std::vector<double>& beta, double eps, Mat& out);

}  // namespace kernels

namespace par {

/// Runs fn(i) for i in [0, n). Iterations must be independent; any shared
/// output is written at slot i only, so the result is order-independent.
void for_indexed(int n, bool parallel, const std::function<void(int)>& fn);

int max_threads();

}  // namespace par

}  // namespace uc
