#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "uc/common.hpp"
#include "uc/kernels.hpp"

using namespace uc;

namespace {

Mat random_mat(Rng& rng, int r, int c, double lo = -3.0, double hi = 3.0) {
  Mat m(r, c);
  for (auto& v : m.a) v = rng.uniform(lo, hi);
  return m;
}

bool bitwise_equal(const Mat& a, const Mat& b) {
  return a.rows == b.rows && a.cols == b.cols && a.a == b.a;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.a.size(); ++i) d = std::max(d, std::abs(a.a[i] - b.a[i]));
  return d;
}

}  // namespace

TEST_CASE("matmul agrees with the naive triple loop") {
  Rng rng(31);
  for (auto [ar, ac, bc] : {std::tuple{1, 1, 1}, {3, 5, 2}, {17, 9, 13}, {8, 1, 8}}) {
    Mat a = random_mat(rng, ar, ac);
    Mat b = random_mat(rng, ac, bc);
    Mat got(ar, bc);
    kernels::matmul(a, b, got);
    Mat want(ar, bc);
    for (int i = 0; i < ar; ++i)
      for (int j = 0; j < bc; ++j) {
        double s = 0.0;
        for (int k = 0; k < ac; ++k) s += a(i, k) * b(k, j);
        want(i, j) = s;
      }
    CHECK(max_abs_diff(got, want) <= 1e-12);
  }
}

TEST_CASE("transposed products match explicit transposition") {
  Rng rng(32);
  Mat a = random_mat(rng, 7, 5);
  Mat b = random_mat(rng, 9, 5);   // for a * b^T
  Mat c = random_mat(rng, 7, 11);  // for a^T * c

  Mat bt(5, 9);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 5; ++j) bt(j, i) = b(i, j);
  Mat at(5, 7);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 5; ++j) at(j, i) = a(i, j);

  Mat got_bt(7, 9), want_bt(7, 9);
  kernels::matmul_bt(a, b, got_bt);
  kernels::matmul(a, bt, want_bt);
  CHECK(max_abs_diff(got_bt, want_bt) <= 1e-12);

  Mat got_at(5, 11), want_at(5, 11);
  kernels::matmul_at(a, c, got_at);
  kernels::matmul(at, c, want_at);
  CHECK(max_abs_diff(got_at, want_at) <= 1e-12);
}

TEST_CASE("serial and parallel kernel forms agree bit for bit") {
  Rng rng(33);
  for (auto [r, k, c] : {std::tuple{1, 1, 1}, {5, 7, 3}, {32, 24, 32}, {13, 1, 17}}) {
    Mat a = random_mat(rng, r, k);
    Mat b = random_mat(rng, k, c);
    Mat s1(r, c), p1(r, c);
    kernels::matmul_serial(a, b, s1);
    kernels::matmul_parallel(a, b, p1);
    CHECK(bitwise_equal(s1, p1));

    Mat bt = random_mat(rng, c, k);
    Mat s2(r, c), p2(r, c);
    kernels::matmul_bt_serial(a, bt, s2);
    kernels::matmul_bt_parallel(a, bt, p2);
    CHECK(bitwise_equal(s2, p2));

    Mat at = random_mat(rng, k, r);
    Mat s3(r, c), p3(r, c);
    kernels::matmul_at_serial(at, b, s3);
    kernels::matmul_at_parallel(at, b, p3);
    CHECK(bitwise_equal(s3, p3));
  }
}

TEST_CASE("softmax rows sum to one and resist extreme inputs") {
  Rng rng(34);
  Mat m = random_mat(rng, 6, 9, -50.0, 50.0);
  m(0, 0) = 800.0;
  m(1, 1) = -800.0;
  kernels::softmax_rows(m);
  for (int r = 0; r < m.rows; ++r) {
    double sum = 0.0;
    for (int c = 0; c < m.cols; ++c) {
      CHECK(std::isfinite(m(r, c)));
      CHECK(m(r, c) >= 0.0);
      sum += m(r, c);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(m(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("softmax is invariant to constant row shifts") {
  Rng rng(35);
  Mat a = random_mat(rng, 4, 7);
  Mat b = a;
  for (int r = 0; r < b.rows; ++r)
    for (int c = 0; c < b.cols; ++c) b(r, c) += 123.5;
  kernels::softmax_rows(a);
  kernels::softmax_rows(b);
  CHECK(max_abs_diff(a, b) <= 1e-12);
}

TEST_CASE("layer norm standardizes each row") {
  Rng rng(36);
  const int d = 16;
  Mat x = random_mat(rng, 5, d);
  std::vector<double> gamma(d, 1.0), beta(d, 0.0);
  Mat out(5, d);
  const double eps = 1e-5;
  kernels::layer_norm_rows(x, gamma, beta, eps, out);
  for (int r = 0; r < 5; ++r) {
    double mean = 0.0, var = 0.0;
    for (int c = 0; c < d; ++c) mean += out(r, c);
    mean /= d;
    for (int c = 0; c < d; ++c) var += (out(r, c) - mean) * (out(r, c) - mean);
    var /= d;
    CHECK(std::abs(mean) <= 1e-12);

    double in_mean = 0.0, in_var = 0.0;
    for (int c = 0; c < d; ++c) in_mean += x(r, c);
    in_mean /= d;
    for (int c = 0; c < d; ++c) in_var += (x(r, c) - in_mean) * (x(r, c) - in_mean);
    in_var /= d;
    CHECK(var == doctest::Approx(in_var / (in_var + eps)).epsilon(1e-9));
  }
}

TEST_CASE("layer norm removes constant shifts") {
  Rng rng(37);
  const int d = 8;
  Mat x = random_mat(rng, 3, d);
  Mat shifted = x;
  for (auto& v : shifted.a) v += 42.25;
  std::vector<double> gamma(d), beta(d);
  for (int c = 0; c < d; ++c) {
    gamma[c] = rng.uniform(0.5, 1.5);
    beta[c] = rng.uniform(-1.0, 1.0);
  }
  Mat a(3, d), b(3, d);
  kernels::layer_norm_rows(x, gamma, beta, 1e-5, a);
  kernels::layer_norm_rows(shifted, gamma, beta, 1e-5, b);
  CHECK(max_abs_diff(a, b) <= 1e-6);
}

TEST_CASE("layer norm serial and parallel forms agree bit for bit") {
  Rng rng(38);
  const int d = 32;
  Mat x = random_mat(rng, 24, d);
  std::vector<double> gamma(d), beta(d);
  for (int c = 0; c < d; ++c) {
    gamma[c] = rng.uniform(0.5, 1.5);
    beta[c] = rng.uniform(-1.0, 1.0);
  }
  Mat s(24, d), p(24, d);
  kernels::layer_norm_rows_serial(x, gamma, beta, 1e-5, s);
  kernels::layer_norm_rows_parallel(x, gamma, beta, 1e-5, p);
  CHECK(bitwise_equal(s, p));

  Mat sm = random_mat(rng, 24, d), pm = sm;
  kernels::softmax_rows_serial(sm);
  kernels::softmax_rows_parallel(pm);
  CHECK(bitwise_equal(sm, pm));
}

TEST_CASE("indexed parallel loop covers every slot exactly once") {
  const int n = 1000;
  std::vector<int> serial(n, -1), parallel(n, -1);
  par::for_indexed(n, false, [&](int i) { serial[i] = i * i; });
  par::for_indexed(n, true, [&](int i) { parallel[i] = i * i; });
  CHECK(serial == parallel);
  for (int i = 0; i < n; ++i) CHECK(serial[i] == i * i);
  CHECK(par::max_threads() >= 1);
}
