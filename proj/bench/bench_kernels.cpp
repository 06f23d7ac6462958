// Times the serial reference kernels against their OpenMP forms and checks
// that both produce bitwise-identical output.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>

#include "uc/kernels.hpp"
#include "uc/uc_core.hpp"

using namespace uc;
using Clock = std::chrono::steady_clock;

namespace {

Mat random_mat(int r, int c, Rng& rng) {
  Mat m(r, c);
  for (double& v : m.a) v = rng.uniform(-1.0, 1.0);
  return m;
}

double time_best_of(int reps, const std::function<void()>& fn) {
  double best = 1e30;
  for (int k = 0; k < reps; ++k) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

bool identical(const Mat& a, const Mat& b) {
  return a.rows == b.rows && a.cols == b.cols &&
         std::memcmp(a.a.data(), b.a.data(), a.a.size() * sizeof(double)) == 0;
}

void report(const char* name, double serial_s, double parallel_s, bool match) {
  std::printf("%-18s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx   %s\n", name,
              serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
              match ? "bitwise equal" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", par::max_threads());
  Rng rng(7);
  const int reps = 5;

  {
    const Mat a = random_mat(384, 384, rng);
    const Mat b = random_mat(384, 384, rng);
    Mat out_s(384, 384), out_p(384, 384);
    const double ts = time_best_of(reps, [&] { kernels::matmul_serial(a, b, out_s); });
    const double tp = time_best_of(reps, [&] { kernels::matmul_parallel(a, b, out_p); });
    report("matmul 384x384", ts, tp, identical(out_s, out_p));
  }
  {
    const Mat a = random_mat(256, 512, rng);
    const Mat b = random_mat(384, 512, rng);
    Mat out_s(256, 384), out_p(256, 384);
    const double ts = time_best_of(reps, [&] { kernels::matmul_bt_serial(a, b, out_s); });
    const double tp = time_best_of(reps, [&] { kernels::matmul_bt_parallel(a, b, out_p); });
    report("matmul_bt", ts, tp, identical(out_s, out_p));
  }
  {
    const Mat a = random_mat(512, 256, rng);
    const Mat b = random_mat(512, 384, rng);
    Mat out_s(256, 384), out_p(256, 384);
    const double ts = time_best_of(reps, [&] { kernels::matmul_at_serial(a, b, out_s); });
    const double tp = time_best_of(reps, [&] { kernels::matmul_at_parallel(a, b, out_p); });
    report("matmul_at", ts, tp, identical(out_s, out_p));
  }
  {
    const Mat base = random_mat(2048, 512, rng);
    Mat m_s = base, m_p = base;
    const double ts = time_best_of(reps, [&] {
      m_s = base;
      kernels::softmax_rows_serial(m_s);
    });
    const double tp = time_best_of(reps, [&] {
      m_p = base;
      kernels::softmax_rows_parallel(m_p);
    });
    report("softmax 2048x512", ts, tp, identical(m_s, m_p));
  }
  {
    const Mat x = random_mat(2048, 512, rng);
    std::vector<double> gamma(512, 1.1), beta(512, -0.05);
    Mat out_s(2048, 512), out_p(2048, 512);
    const double ts = time_best_of(
        reps, [&] { kernels::layer_norm_rows_serial(x, gamma, beta, 1e-5, out_s); });
    const double tp = time_best_of(
        reps, [&] { kernels::layer_norm_rows_parallel(x, gamma, beta, 1e-5, out_p); });
    report("layer_norm", ts, tp, identical(out_s, out_p));
  }
  return 0;
}
