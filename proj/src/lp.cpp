#include "uc/lp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace uc {

int LpProblem::add_col(double lb, double ub, double cost, std::string name) {
  obj.push_back(cost);
  col_lb.push_back(lb);
  col_ub.push_back(ub);
  col_names.push_back(std::move(name));
  return num_cols() - 1;
}

int LpProblem::add_row(double lb, double ub, const std::vector<std::pair<int, double>>& terms) {
  for (const auto& [col, val] : terms) {
    row_col.push_back(col);
    row_val.push_back(val);
  }
  row_start.push_back(static_cast<int>(row_col.size()));
  row_lb.push_back(lb);
  row_ub.push_back(ub);
  return num_rows() - 1;
}

void LpProblem::check() const {
  const int n = num_cols();
  for (int j = 0; j < n; ++j) {
    if (!(col_lb[j] <= col_ub[j]))
      throw ValidationError("col " + std::to_string(j) + ": lb > ub");
  }
  for (int r = 0; r < num_rows(); ++r) {
    if (!(row_lb[r] <= row_ub[r]))
      throw ValidationError("row " + std::to_string(r) + ": lb > ub");
    for (int k = row_start[r]; k < row_start[r + 1]; ++k) {
      if (row_col[k] < 0 || row_col[k] >= n)
        throw ValidationError("row " + std::to_string(r) + ": column index out of range");
    }
  }
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// Bounded-variable revised primal simplex. Slack s_r with the row's bounds
// is appended per row, giving the equality system A x - s = 0. Phase 1
// minimizes the total bound violation of the basic variables (composite
// objective), which accepts any starting basis; phase 2 runs the usual
// reduced-cost iteration. The basis inverse is an Eigen sparse LU
// refactorization plus product-form eta updates between refactorizations.
class Simplex {
 public:
  Simplex(const LpProblem& p, const LpOptions& opt) : p_(p), opt_(opt) {
    m_ = p.num_rows();
    n_ = p.num_cols();
    total_ = n_ + m_;
    build_columns();
    lb_.resize(total_);
    ub_.resize(total_);
    for (int j = 0; j < n_; ++j) {
      lb_[j] = p.col_lb[j];
      ub_[j] = p.col_ub[j];
    }
    for (int r = 0; r < m_; ++r) {
      lb_[n_ + r] = p.row_lb[r];
      ub_[n_ + r] = p.row_ub[r];
    }
    x_.assign(total_, 0.0);
    state_.assign(total_, LpBasis::AtLower);
    basic_.assign(m_, -1);
    basis_pos_.assign(total_, -1);
    max_iters_ = opt.max_iterations > 0 ? opt.max_iterations : 50L * (m_ + n_);
  }

  LpSolution run() {
    install_basis();
    refactorize();
    compute_basic_values();

    LpSolution sol;
    bool feasible = primal_feasible();
    if (!feasible) {
      const PhaseResult r1 = iterate(/*phase1=*/true);
      if (r1 == PhaseResult::IterationCap)
        throw NumericalFailure("simplex iteration cap exceeded in phase 1");
      if (r1 == PhaseResult::Degraded) {
        if (restarts_ >= 3) throw NumericalFailure("simplex basis degraded in phase 1");
        ++restarts_;
        refactorize();
        compute_basic_values();
        return run_after_restart();
      }
      if (r1 == PhaseResult::NoProgress && !primal_feasible()) {
        sol.status = LpStatus::Infeasible;
        sol.iterations = iters_;
        sol.basis = snapshot_basis();
        return sol;
      }
    }

    const PhaseResult r2 = iterate(/*phase1=*/false);
    if (r2 == PhaseResult::IterationCap)
      throw NumericalFailure("simplex iteration cap exceeded in phase 2");
    if (r2 == PhaseResult::Unbounded) {
      sol.status = LpStatus::Unbounded;
      sol.iterations = iters_;
      sol.basis = snapshot_basis();
      return sol;
    }
    if (r2 == PhaseResult::Degraded || !primal_feasible()) {
      // Phase 2 ratio tests keep feasible iterates feasible; landing here
      // means the eta chain degraded. A few clean restarts, then give up.
      if (restarts_ < 3) {
        ++restarts_;
        refactorize();
        compute_basic_values();
        return run_after_restart();
      }
      throw NumericalFailure("simplex lost feasibility");
    }

    sol.status = LpStatus::Optimal;
    sol.x.assign(x_.begin(), x_.begin() + n_);
    sol.objective = 0.0;
    for (int j = 0; j < n_; ++j) sol.objective += p_.obj[j] * x_[j];
    sol.iterations = iters_;
    sol.basis = snapshot_basis();
    return sol;
  }

 private:
  enum class PhaseResult { NoProgress, Unbounded, IterationCap, Degraded };

  LpSolution run_after_restart() {
    LpSolution sol;
    if (!primal_feasible()) {
      const PhaseResult r1 = iterate(true);
      if (r1 == PhaseResult::IterationCap)
        throw NumericalFailure("simplex iteration cap exceeded in phase 1");
      if (r1 == PhaseResult::Degraded) {
        if (restarts_ >= 3) throw NumericalFailure("simplex basis degraded in phase 1");
        ++restarts_;
        refactorize();
        compute_basic_values();
        return run_after_restart();
      }
      if (!primal_feasible()) {
        sol.status = LpStatus::Infeasible;
        sol.iterations = iters_;
        sol.basis = snapshot_basis();
        return sol;
      }
    }
    const PhaseResult r2 = iterate(false);
    if (r2 == PhaseResult::IterationCap)
      throw NumericalFailure("simplex iteration cap exceeded in phase 2");
    if (r2 == PhaseResult::Unbounded) {
      sol.status = LpStatus::Unbounded;
    } else if (r2 != PhaseResult::Degraded && primal_feasible()) {
      sol.status = LpStatus::Optimal;
      sol.x.assign(x_.begin(), x_.begin() + n_);
      for (int j = 0; j < n_; ++j) sol.objective += p_.obj[j] * x_[j];
    } else if (restarts_ < 3) {
      ++restarts_;
      refactorize();
      compute_basic_values();
      return run_after_restart();
    } else {
      throw NumericalFailure("simplex lost feasibility after restart");
    }
    sol.iterations = iters_;
    sol.basis = snapshot_basis();
    return sol;
  }

  void build_columns() {
    // CSR rows -> CSC columns for the structural part.
    col_start_.assign(n_ + 1, 0);
    for (int k = 0; k < static_cast<int>(p_.row_col.size()); ++k) col_start_[p_.row_col[k] + 1]++;
    for (int j = 0; j < n_; ++j) col_start_[j + 1] += col_start_[j];
    col_row_.resize(p_.row_col.size());
    col_val_.resize(p_.row_col.size());
    std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
    for (int r = 0; r < m_; ++r) {
      for (int k = p_.row_start[r]; k < p_.row_start[r + 1]; ++k) {
        const int j = p_.row_col[k];
        col_row_[fill[j]] = r;
        col_val_[fill[j]] = p_.row_val[k];
        fill[j]++;
      }
    }
  }

  void install_basis() {
    bool warm_ok = false;
    if (opt_.warm_basis && static_cast<int>(opt_.warm_basis->state.size()) == total_) {
      int count = 0;
      for (int j = 0; j < total_; ++j)
        if (opt_.warm_basis->state[j] == LpBasis::Basic) ++count;
      warm_ok = (count == m_);
    }
    if (warm_ok) {
      int pos = 0;
      for (int j = 0; j < total_; ++j) {
        std::uint8_t st = opt_.warm_basis->state[j];
        if (st == LpBasis::Basic) {
          state_[j] = LpBasis::Basic;
          basic_[pos] = j;
          basis_pos_[j] = pos;
          ++pos;
        } else {
          state_[j] = sanitize_nonbasic_state(j, st);
        }
      }
      // A singular warm basis falls back to the slack basis.
      if (!try_factorize()) install_slack_basis();
      return;
    }
    install_slack_basis();
  }

  std::uint8_t sanitize_nonbasic_state(int j, std::uint8_t st) {
    if (st == LpBasis::AtLower && !std::isfinite(lb_[j])) st = LpBasis::AtUpper;
    if (st == LpBasis::AtUpper && !std::isfinite(ub_[j])) st = LpBasis::AtLower;
    if (st == LpBasis::AtLower && !std::isfinite(lb_[j])) st = LpBasis::AtZero;
    if (st == LpBasis::AtZero && std::isfinite(lb_[j])) st = LpBasis::AtLower;
    if (st == LpBasis::AtZero && !std::isfinite(lb_[j]) && std::isfinite(ub_[j]))
      st = LpBasis::AtUpper;
    return st;
  }

  void install_slack_basis() {
    basis_pos_.assign(total_, -1);
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lb_[j]))
        state_[j] = LpBasis::AtLower;
      else if (std::isfinite(ub_[j]))
        state_[j] = LpBasis::AtUpper;
      else
        state_[j] = LpBasis::AtZero;
    }
    for (int r = 0; r < m_; ++r) {
      const int j = n_ + r;
      state_[j] = LpBasis::Basic;
      basic_[r] = j;
      basis_pos_[j] = r;
    }
    if (!try_factorize()) throw NumericalFailure("slack basis factorization failed");
  }

  bool try_factorize() {
    if (m_ == 0) {
      etas_pos_.clear();
      etas_idx_.clear();
      etas_val_.clear();
      etas_start_.assign(1, 0);
      return true;
    }
    SpMat b(m_, m_);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(m_) * 4);
    for (int pos = 0; pos < m_; ++pos) {
      const int j = basic_[pos];
      if (j >= n_) {
        trip.emplace_back(j - n_, pos, -1.0);
      } else {
        for (int k = col_start_[j]; k < col_start_[j + 1]; ++k)
          trip.emplace_back(col_row_[k], pos, col_val_[k]);
      }
    }
    b.setFromTriplets(trip.begin(), trip.end());
    lu_.compute(b);
    if (lu_.info() != Eigen::Success) return false;
    etas_pos_.clear();
    etas_idx_.clear();
    etas_val_.clear();
    etas_start_.assign(1, 0);
    return true;
  }

  /// Refactorizes the current basis. A singular basis (possible after long
  /// eta chains on degenerate problems) falls back to the all-slack basis and
  /// reports false so the caller can rebuild its iterate.
  bool refactorize() {
    if (try_factorize()) return true;
    install_slack_basis();
    return false;
  }

  /// x_B = B^{-1} (0 - N x_N); nonbasic values come from their states.
  void compute_basic_values() {
    for (int j = 0; j < total_; ++j) {
      switch (state_[j]) {
        case LpBasis::AtLower: x_[j] = lb_[j]; break;
        case LpBasis::AtUpper: x_[j] = ub_[j]; break;
        case LpBasis::AtZero: x_[j] = 0.0; break;
        default: break;
      }
    }
    Vec rhs = Vec::Zero(m_);
    for (int j = 0; j < total_; ++j) {
      if (state_[j] == LpBasis::Basic || x_[j] == 0.0) continue;
      add_column_times(j, -x_[j], rhs);
    }
    Vec xb = ftran(rhs);
    for (int pos = 0; pos < m_; ++pos) x_[basic_[pos]] = xb[pos];
  }

  void add_column_times(int j, double scale, Vec& out) const {
    if (j >= n_) {
      out[j - n_] -= scale;
    } else {
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k)
        out[col_row_[k]] += scale * col_val_[k];
    }
  }

  Vec ftran(const Vec& v) const {
    if (m_ == 0) return v;
    Vec x = lu_.solve(v);
    const int ne = static_cast<int>(etas_pos_.size());
    for (int e = 0; e < ne; ++e) {
      const int r = etas_pos_[e];
      double pivot_val = 0.0;
      for (int k = etas_start_[e]; k < etas_start_[e + 1]; ++k)
        if (etas_idx_[k] == r) pivot_val = etas_val_[k];
      const double t = x[r] / pivot_val;
      for (int k = etas_start_[e]; k < etas_start_[e + 1]; ++k) {
        const int i = etas_idx_[k];
        if (i == r) continue;
        x[i] -= etas_val_[k] * t;
      }
      x[r] = t;
    }
    return x;
  }

  // Non-const: SparseLU::adjoint() is a mutating view in Eigen 3.4.
  Vec btran(const Vec& v) {
    if (m_ == 0) return v;
    Vec x = v;
    for (int e = static_cast<int>(etas_pos_.size()) - 1; e >= 0; --e) {
      const int r = etas_pos_[e];
      double pivot_val = 0.0;
      double dot = 0.0;
      for (int k = etas_start_[e]; k < etas_start_[e + 1]; ++k) {
        const int i = etas_idx_[k];
        if (i == r)
          pivot_val = etas_val_[k];
        else
          dot += etas_val_[k] * x[i];
      }
      x[r] = (x[r] - dot) / pivot_val;
    }
    return lu_.adjoint().solve(x);
  }

  double dot_column(int j, const Vec& y) const {
    if (j >= n_) return -y[j - n_];
    double acc = 0.0;
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k)
      acc += col_val_[k] * y[col_row_[k]];
    return acc;
  }

  bool primal_feasible() const {
    for (int pos = 0; pos < m_; ++pos) {
      const int j = basic_[pos];
      if (x_[j] < lb_[j] - opt_.tol_feas || x_[j] > ub_[j] + opt_.tol_feas) return false;
    }
    return true;
  }

  double infeasibility_sum() const {
    double f = 0.0;
    for (int pos = 0; pos < m_; ++pos) {
      const int j = basic_[pos];
      if (x_[j] < lb_[j]) f += lb_[j] - x_[j];
      if (x_[j] > ub_[j]) f += x_[j] - ub_[j];
    }
    return f;
  }

  /// Iterates one phase to its local termination.
  PhaseResult iterate(bool phase1) {
    int since_refactor = 0;
    while (true) {
      if (phase1 && primal_feasible()) return PhaseResult::NoProgress;
      if (iters_ >= max_iters_) return PhaseResult::IterationCap;

      // Dual vector for the active cost.
      Vec cb = Vec::Zero(m_);
      bool any_cost = false;
      for (int pos = 0; pos < m_; ++pos) {
        const int j = basic_[pos];
        double c;
        if (phase1) {
          c = 0.0;
          if (x_[j] < lb_[j] - opt_.tol_feas) c = -1.0;
          else if (x_[j] > ub_[j] + opt_.tol_feas) c = 1.0;
        } else {
          c = j < n_ ? p_.obj[j] : 0.0;
        }
        cb[pos] = c;
        any_cost = any_cost || c != 0.0;
      }
      if (phase1 && !any_cost) return PhaseResult::NoProgress;
      Vec y = any_cost ? btran(cb) : Vec(Vec::Zero(m_));

      const int enter = price(phase1, y);
      if (enter < 0) {
        // Claimed done; confirm against a fresh factorization before exit.
        if (!etas_pos_.empty()) {
          const bool clean = refactorize();
          compute_basic_values();
          since_refactor = 0;
          if (!clean) return PhaseResult::Degraded;
          if (price_recheck(phase1)) continue;
        }
        return PhaseResult::NoProgress;
      }

      const double reduced = reduced_cost(phase1, y, enter);
      const int dir = entering_direction(enter, reduced);

      Vec col_rhs = Vec::Zero(m_);
      add_column_times(enter, 1.0, col_rhs);
      Vec alpha = ftran(col_rhs);

      const Step step = ratio_test(phase1, enter, dir, alpha);
      if (step.unbounded) {
        if (phase1) {
          // Phase-1 objective is bounded below; treat as numerical trouble.
          refactorize();
          compute_basic_values();
          since_refactor = 0;
          continue;
        }
        return PhaseResult::Unbounded;
      }

      apply_step(enter, dir, alpha, step);
      ++iters_;
      if (step.theta <= 1e-12) ++degenerate_;
      else degenerate_ = 0;  // streak counter: Bland only while stalled
      if (++since_refactor >= opt_.refactor_interval) {
        const bool clean = refactorize();
        compute_basic_values();
        since_refactor = 0;
        if (!clean) return PhaseResult::Degraded;
      }
    }
  }

  bool bland() const { return degenerate_ >= opt_.degenerate_pivot_limit; }

  int price(bool phase1, const Vec& y) {
    int best = -1;
    double best_score = opt_.tol_cost;
    for (int j = 0; j < total_; ++j) {
      const std::uint8_t st = state_[j];
      if (st == LpBasis::Basic) continue;
      if (lb_[j] == ub_[j]) continue;  // fixed, cannot move
      const double r = reduced_cost(phase1, y, j);
      double score = 0.0;
      if (st == LpBasis::AtLower && r < -opt_.tol_cost) score = -r;
      else if (st == LpBasis::AtUpper && r > opt_.tol_cost) score = r;
      else if (st == LpBasis::AtZero && std::abs(r) > opt_.tol_cost) score = std::abs(r);
      if (score <= 0.0) continue;
      if (bland()) return j;  // first improving index
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    return best;
  }

  bool price_recheck(bool phase1) {
    Vec cb = Vec::Zero(m_);
    bool any = false;
    for (int pos = 0; pos < m_; ++pos) {
      const int j = basic_[pos];
      double c;
      if (phase1) {
        c = 0.0;
        if (x_[j] < lb_[j] - opt_.tol_feas) c = -1.0;
        else if (x_[j] > ub_[j] + opt_.tol_feas) c = 1.0;
      } else {
        c = j < n_ ? p_.obj[j] : 0.0;
      }
      cb[pos] = c;
      any = any || c != 0.0;
    }
    if (phase1 && !any) return false;
    Vec y = any ? btran(cb) : Vec(Vec::Zero(m_));
    return price(phase1, y) >= 0;
  }

  double reduced_cost(bool phase1, const Vec& y, int j) const {
    const double c = phase1 ? 0.0 : (j < n_ ? p_.obj[j] : 0.0);
    return c - dot_column(j, y);
  }

  static int entering_direction(int, double reduced) { return reduced < 0.0 ? +1 : -1; }

  struct Step {
    double theta = 0.0;
    int leave_pos = -1;      // -1: entering hits its own opposite bound
    std::uint8_t leave_state = LpBasis::AtLower;
    bool unbounded = false;
  };

  Step ratio_test(bool phase1, int enter, int dir, const Vec& alpha) const {
    Step best;
    best.theta = kInf;

    // Entering variable's own range.
    const double range = ub_[enter] - lb_[enter];
    if (std::isfinite(range)) best.theta = range;

    double best_pivot = 0.0;
    for (int pos = 0; pos < m_; ++pos) {
      const double a = alpha[pos];
      if (std::abs(a) < opt_.tol_pivot) continue;
      const int j = basic_[pos];
      const double rate = -dir * a;  // movement of this basic per unit theta
      double theta = kInf;
      std::uint8_t hit = LpBasis::AtLower;
      const bool below = phase1 && x_[j] < lb_[j] - opt_.tol_feas;
      const bool above = phase1 && x_[j] > ub_[j] + opt_.tol_feas;
      if (below) {
        // Improving toward lb blocks there; worsening never blocks.
        if (rate > 0.0) {
          theta = (lb_[j] - x_[j]) / rate;
          hit = LpBasis::AtLower;
        }
      } else if (above) {
        if (rate < 0.0) {
          theta = (x_[j] - ub_[j]) / (-rate);
          hit = LpBasis::AtUpper;
        }
      } else if (rate > 0.0) {
        if (std::isfinite(ub_[j])) {
          theta = (ub_[j] - x_[j]) / rate;
          hit = LpBasis::AtUpper;
        }
      } else {
        if (std::isfinite(lb_[j])) {
          theta = (x_[j] - lb_[j]) / (-rate);
          hit = LpBasis::AtLower;
        }
      }
      if (theta == kInf) continue;
      theta = std::max(theta, 0.0);
      bool take = false;
      if (theta < best.theta - 1e-9) {
        take = true;
      } else if (theta <= best.theta + 1e-9 && best.leave_pos >= 0) {
        if (bland()) {
          take = theta < best.theta || basic_[pos] < basic_[best.leave_pos];
        } else {
          take = std::abs(a) > best_pivot;
        }
      } else if (theta <= best.theta + 1e-9 && best.leave_pos < 0 && theta < best.theta) {
        take = true;
      }
      if (take) {
        best.theta = theta;
        best.leave_pos = pos;
        best.leave_state = hit;
        best_pivot = std::abs(a);
      }
    }

    if (best.theta == kInf) best.unbounded = true;
    return best;
  }

  void apply_step(int enter, int dir, const Vec& alpha, const Step& step) {
    const double theta = step.theta;
    x_[enter] += dir * theta;
    for (int pos = 0; pos < m_; ++pos) {
      const double a = alpha[pos];
      if (a != 0.0) x_[basic_[pos]] -= dir * theta * a;
    }
    if (step.leave_pos < 0) {
      // Bound flip, basis unchanged.
      state_[enter] = (dir > 0) ? LpBasis::AtUpper : LpBasis::AtLower;
      x_[enter] = (dir > 0) ? ub_[enter] : lb_[enter];
      return;
    }
    const int leave = basic_[step.leave_pos];
    state_[leave] = step.leave_state;
    x_[leave] = step.leave_state == LpBasis::AtLower ? lb_[leave] : ub_[leave];
    basis_pos_[leave] = -1;
    state_[enter] = LpBasis::Basic;
    basic_[step.leave_pos] = enter;
    basis_pos_[enter] = step.leave_pos;
    push_eta(step.leave_pos, alpha);
  }

  void push_eta(int pos, const Vec& alpha) {
    etas_pos_.push_back(pos);
    for (int i = 0; i < m_; ++i) {
      const double v = alpha[i];
      if (i == pos || std::abs(v) > 1e-11) {
        etas_idx_.push_back(i);
        etas_val_.push_back(v);
      }
    }
    etas_start_.push_back(static_cast<int>(etas_idx_.size()));
  }

  LpBasis snapshot_basis() const {
    LpBasis b;
    b.state = state_;
    return b;
  }

  const LpProblem& p_;
  const LpOptions& opt_;
  int m_ = 0, n_ = 0, total_ = 0;
  long max_iters_ = 0;
  long iters_ = 0;
  long degenerate_ = 0;
  int restarts_ = 0;

  std::vector<int> col_start_, col_row_;
  std::vector<double> col_val_;
  std::vector<double> lb_, ub_, x_;
  std::vector<std::uint8_t> state_;
  std::vector<int> basic_, basis_pos_;

  Eigen::SparseLU<SpMat> lu_;
  std::vector<int> etas_pos_, etas_idx_, etas_start_;
  std::vector<double> etas_val_;
};

}  // namespace

namespace {
std::atomic<long> g_lp_work{0};
}

long lp_work_counter() { return g_lp_work.load(std::memory_order_relaxed); }

LpSolution solve_lp(const LpProblem& problem, const LpOptions& options) {
  problem.check();
  Simplex s(problem, options);
  LpSolution sol = s.run();
  g_lp_work.fetch_add(sol.iterations, std::memory_order_relaxed);
  return sol;
}

LpSolution solve_lp(const LpProblem& problem) {
  LpOptions opt;
  return solve_lp(problem, opt);
}

void write_mps_like(const LpProblem& p, std::ostream& os, const std::string& name) {
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
  };
  auto col_name = [&p](int j) {
    return p.col_names[j].empty() ? "C" + std::to_string(j) : p.col_names[j];
  };
  os << "NAME " << name << "\n";
  os << "ROWS\n";
  for (int r = 0; r < p.num_rows(); ++r) {
    const bool has_lb = std::isfinite(p.row_lb[r]);
    const bool has_ub = std::isfinite(p.row_ub[r]);
    char kind = 'N';
    if (has_lb && has_ub) kind = (p.row_lb[r] == p.row_ub[r]) ? 'E' : 'R';
    else if (has_lb) kind = 'G';
    else if (has_ub) kind = 'L';
    os << " " << kind << " R" << r << "\n";
  }
  os << "COLUMNS\n";
  for (int j = 0; j < p.num_cols(); ++j) {
    if (p.obj[j] != 0.0) os << " " << col_name(j) << " COST " << num(p.obj[j]) << "\n";
  }
  // Entries in row-major order with the fixed row numbering.
  for (int r = 0; r < p.num_rows(); ++r) {
    for (int k = p.row_start[r]; k < p.row_start[r + 1]; ++k)
      os << " " << col_name(p.row_col[k]) << " R" << r << " " << num(p.row_val[k]) << "\n";
  }
  os << "RHS\n";
  for (int r = 0; r < p.num_rows(); ++r) {
    const double rhs = std::isfinite(p.row_lb[r]) ? p.row_lb[r] : p.row_ub[r];
    if (std::isfinite(rhs) && rhs != 0.0) os << " RHS R" << r << " " << num(rhs) << "\n";
  }
  os << "RANGES\n";
  for (int r = 0; r < p.num_rows(); ++r) {
    if (std::isfinite(p.row_lb[r]) && std::isfinite(p.row_ub[r]) && p.row_lb[r] != p.row_ub[r])
      os << " RNG R" << r << " " << num(p.row_ub[r] - p.row_lb[r]) << "\n";
  }
  os << "BOUNDS\n";
  for (int j = 0; j < p.num_cols(); ++j) {
    if (std::isfinite(p.col_lb[j]) && p.col_lb[j] != 0.0)
      os << " LO BND " << col_name(j) << " " << num(p.col_lb[j]) << "\n";
    if (!std::isfinite(p.col_lb[j])) os << " MI BND " << col_name(j) << "\n";
    if (std::isfinite(p.col_ub[j])) os << " UP BND " << col_name(j) << " " << num(p.col_ub[j]) << "\n";
  }
  os << "ENDATA\n";
}

}  // namespace uc
