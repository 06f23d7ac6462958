#pragma once

// Independent LP oracle for cross-checking solve_lp: enumerates every basic
// solution of the slack form (choose m basic columns out of n+m, pin each
// nonbasic column at one of its finite bounds, solve the square system) and
// keeps the best feasible one. Exponential, only for small test problems.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "uc/lp.hpp"

namespace uc::testing {

struct OracleResult {
  bool feasible = false;
  double objective = 0.0;
  long bases_checked = 0;
};

inline OracleResult enumerate_lp(const LpProblem& p, double tol = 1e-9) {
  const int m = p.num_rows();
  const int n = p.num_cols();
  const int total = n + m;

  // Slack-form column j of the equality system A x - s = 0.
  auto fill_column = [&](int j, Eigen::VectorXd& col) {
    col.setZero();
    if (j >= n) {
      col[j - n] = -1.0;
      return;
    }
    for (int r = 0; r < m; ++r)
      for (int k = p.row_start[r]; k < p.row_start[r + 1]; ++k)
        if (p.row_col[k] == j) col[r] += p.row_val[k];
  };
  auto lb = [&](int j) { return j < n ? p.col_lb[j] : p.row_lb[j - n]; };
  auto ub = [&](int j) { return j < n ? p.col_ub[j] : p.row_ub[j - n]; };

  OracleResult best;
  std::vector<int> pick(m);
  std::vector<Eigen::VectorXd> cols(total, Eigen::VectorXd(m));
  for (int j = 0; j < total; ++j) fill_column(j, cols[j]);

  // Iterate combinations of basic columns in lexicographic order.
  for (int i = 0; i < m; ++i) pick[i] = i;
  while (true) {
    Eigen::MatrixXd basis(m, m);
    for (int i = 0; i < m; ++i) basis.col(i) = cols[pick[i]];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
    if (lu.isInvertible()) {
      best.bases_checked++;
      std::vector<int> nonbasic;
      nonbasic.reserve(n);
      {
        int c = 0;
        for (int j = 0; j < total; ++j) {
          if (c < m && pick[c] == j) { ++c; continue; }
          nonbasic.push_back(j);
        }
      }
      // Each nonbasic sits at lb or ub; skip combinations hitting an
      // infinite bound.
      const int nn = static_cast<int>(nonbasic.size());
      for (long mask = 0; mask < (1L << nn); ++mask) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        bool ok = true;
        double obj = 0.0;
        for (int q = 0; q < nn; ++q) {
          const int j = nonbasic[q];
          const double v = (mask >> q) & 1 ? ub(j) : lb(j);
          if (!std::isfinite(v)) { ok = false; break; }
          if (v != 0.0) rhs -= v * cols[j];
          if (j < n) obj += p.obj[j] * v;
        }
        if (!ok) continue;
        Eigen::VectorXd xb = lu.solve(rhs);
        for (int i = 0; i < m && ok; ++i) {
          const int j = pick[i];
          if (xb[i] < lb(j) - tol || xb[i] > ub(j) + tol) ok = false;
        }
        if (!ok) continue;
        for (int i = 0; i < m; ++i)
          if (pick[i] < n) obj += p.obj[pick[i]] * xb[i];
        if (!best.feasible || obj < best.objective) {
          best.feasible = true;
          best.objective = obj;
        }
      }
    }
    // Next combination.
    int i = m - 1;
    while (i >= 0 && pick[i] == total - m + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int q = i + 1; q < m; ++q) pick[q] = pick[q - 1] + 1;
  }
  return best;
}

/// Enumeration cost guard, roughly C(n+m, m) * 2^n system solves.
inline double enumeration_work(int n, int m) {
  const int k = std::min(n, m);
  double comb = 1.0;
  for (int i = 1; i <= k; ++i) comb *= static_cast<double>(n + m - k + i) / i;
  return comb * std::pow(2.0, n);
}

}  // namespace uc::testing
