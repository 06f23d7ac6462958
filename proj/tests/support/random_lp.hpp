#pragma once

// Random dense LP instances for solver cross-checks. Feasibility by
// construction: row bounds are placed around the image of a random interior
// point, so every instance contains a comfortable feasible region and all
// variables are boxed (bounded optimum).

#include "uc/common.hpp"
#include "uc/lp.hpp"

namespace uc::testing {

inline LpProblem random_boxed_lp(Rng& rng, int n, int m) {
  LpProblem p;
  std::vector<double> interior(n);
  for (int j = 0; j < n; ++j) {
    const double width = rng.uniform(1.0, 10.0);
    p.add_col(0.0, width, rng.uniform(-5.0, 5.0));
    interior[j] = rng.uniform(0.2, 0.8) * width;
  }
  for (int r = 0; r < m; ++r) {
    std::vector<std::pair<int, double>> terms;
    double act = 0.0;
    for (int j = 0; j < n; ++j) {
      const double a = rng.uniform(-5.0, 5.0);
      terms.emplace_back(j, a);
      act += a * interior[j];
    }
    const int kind = rng.uniform_int(0, 2);
    const double slack_lo = rng.uniform(0.5, 4.0);
    const double slack_hi = rng.uniform(0.5, 4.0);
    double lb = -kInf, ub = kInf;
    if (kind == 0) ub = act + slack_hi;              // <=
    else if (kind == 1) lb = act - slack_lo;         // >=
    else { lb = act - slack_lo; ub = act + slack_hi; }  // range
    p.add_row(lb, ub, terms);
  }
  return p;
}

}  // namespace uc::testing
