#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "uc/common.hpp"

namespace uc {

/// Linear program: minimize c.x subject to row_lb <= A x <= row_ub and
/// col_lb <= x <= col_ub. Infinities allowed on any bound; equalities are
/// range rows with row_lb == row_ub.
struct LpProblem {
  std::vector<double> obj;
  std::vector<double> col_lb;
  std::vector<double> col_ub;
  std::vector<std::string> col_names;

  // Rows in CSR form.
  std::vector<int> row_start{0};
  std::vector<int> row_col;
  std::vector<double> row_val;
  std::vector<double> row_lb;
  std::vector<double> row_ub;

  int num_cols() const { return static_cast<int>(obj.size()); }
  int num_rows() const { return static_cast<int>(row_lb.size()); }

  int add_col(double lb, double ub, double cost, std::string name = {});
  int add_row(double lb, double ub, const std::vector<std::pair<int, double>>& terms);

  /// Index/bound sanity; throws ValidationError.
  void check() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

/// Basis snapshot for warm starts. Columns are structural then one slack per
/// row; states must contain exactly num_rows Basic entries.
struct LpBasis {
  enum State : std::uint8_t { Basic = 0, AtLower = 1, AtUpper = 2, AtZero = 3 };
  std::vector<std::uint8_t> state;
  bool empty() const { return state.empty(); }
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;  // structural primal values
  double objective = 0.0;
  long iterations = 0;    // simplex pivots, both phases
  LpBasis basis;          // final basis, reusable as a warm start
};

struct LpOptions {
  const LpBasis* warm_basis = nullptr;
  long max_iterations = -1;  // default cap: 50 * (rows + cols)
  double tol_feas = 1e-7;    // absolute bound violation
  double tol_cost = 1e-9;    // reduced-cost optimality threshold
  double tol_pivot = 5e-8;   // smallest acceptable pivot magnitude
  int refactor_interval = 100;
  long degenerate_pivot_limit = 1000;  // then Bland's rule takes over
};

LpSolution solve_lp(const LpProblem& problem);
LpSolution solve_lp(const LpProblem& problem, const LpOptions& options);

/// Process-wide count of simplex pivots across every solve_lp call. Serial
/// callers can difference it around a stage to get a deterministic measure
/// of solver effort (the work clock used for reproducible timing columns).
long lp_work_counter();

/// Debug dump in an MPS-like fixed layout, 12 significant digits.
void write_mps_like(const LpProblem& problem, std::ostream& os,
                    const std::string& name = "LP");

}  // namespace uc
