#include "uc/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

namespace uc {

const char* to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::Optimal: return "Optimal";
    case MilpStatus::FeasibleAtGap: return "FeasibleAtGap";
    case MilpStatus::Infeasible: return "Infeasible";
    case MilpStatus::TimeLimit: return "TimeLimit";
  }
  return "?";
}

MilpProblem build_uc_milp(const UcInstance& inst) {
  validate_instance(inst);
  const int n = inst.num_gens();
  const int horizon = inst.horizon();

  MilpProblem out;
  out.vars.num_gens = n;
  out.vars.horizon = horizon;
  LpProblem& lp = out.lp;

  auto tag = [](const char* base, int i, int t) {
    return std::string(base) + "_" + std::to_string(i) + "_" + std::to_string(t);
  };
  auto tag1 = [](const char* base, int t) { return std::string(base) + "_" + std::to_string(t); };

  // Columns, in UcVarMap order: u, v, w, p blocks then storage and curtailment.
  for (int i = 0; i < n; ++i) {
    const Generator& g = inst.generators[i];
    for (int t = 0; t < horizon; ++t) {
      double lb = 0.0, ub = 1.0;
      // A unit still owing minimum time from its initial state is pinned.
      if (g.init_on && g.init_duration < g.min_up && t < g.min_up - g.init_duration) lb = 1.0;
      if (!g.init_on && g.init_duration < g.min_down && t < g.min_down - g.init_duration) ub = 0.0;
      lp.add_col(lb, ub, g.c_noload, tag("u", i, t));
    }
  }
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < horizon; ++t)
      lp.add_col(0.0, 1.0, inst.generators[i].c_startup, tag("v", i, t));
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < horizon; ++t) lp.add_col(0.0, 1.0, 0.0, tag("w", i, t));
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < horizon; ++t)
      lp.add_col(0.0, inst.generators[i].p_max, inst.generators[i].c_var, tag("p", i, t));

  const Storage& st = inst.storage;
  for (int t = 0; t < horizon; ++t) lp.add_col(0.0, st.p_charge_max, 0.0, tag1("charge", t));
  for (int t = 0; t < horizon; ++t) lp.add_col(0.0, st.p_discharge_max, 0.0, tag1("discharge", t));
  for (int t = 0; t < horizon; ++t) {
    const double lb = (t == horizon - 1) ? st.soc_init : 0.0;  // terminal SOC floor
    lp.add_col(lb, st.energy_cap, 0.0, tag1("soc", t));
  }
  for (int t = 0; t < horizon; ++t)
    lp.add_col(0.0, inst.profiles.solar[t] + inst.profiles.wind[t], 0.0, tag1("curtail", t));

  const UcVarMap& vm = out.vars;
  SystemSeries series = net_load(inst);

  // Balance: sum_i p + discharge - charge - curtail = L_t.
  for (int t = 0; t < horizon; ++t) {
    std::vector<std::pair<int, double>> terms;
    for (int i = 0; i < n; ++i) terms.emplace_back(vm.p(i, t), 1.0);
    terms.emplace_back(vm.discharge(t), 1.0);
    terms.emplace_back(vm.charge(t), -1.0);
    terms.emplace_back(vm.curtail(t), -1.0);
    lp.add_row(series.net_load[t], series.net_load[t], terms);
  }

  for (int i = 0; i < n; ++i) {
    const Generator& g = inst.generators[i];
    const double init_u = g.init_on ? 1.0 : 0.0;
    // Output window: u*p_min <= p <= u*p_max.
    for (int t = 0; t < horizon; ++t)
      lp.add_row(-kInf, 0.0, {{vm.p(i, t), 1.0}, {vm.u(i, t), -g.p_max}});
    for (int t = 0; t < horizon; ++t)
      lp.add_row(0.0, kInf, {{vm.p(i, t), 1.0}, {vm.u(i, t), -g.p_min}});
    // Ramp up, with the startup ramp opening the first online hour.
    for (int t = 0; t < horizon; ++t) {
      if (t == 0) {
        lp.add_row(-kInf, g.init_power + g.ramp_up * init_u,
                   {{vm.p(i, 0), 1.0}, {vm.v(i, 0), -g.startup_ramp}});
      } else {
        lp.add_row(-kInf, 0.0,
                   {{vm.p(i, t), 1.0},
                    {vm.p(i, t - 1), -1.0},
                    {vm.u(i, t - 1), -g.ramp_up},
                    {vm.v(i, t), -g.startup_ramp}});
      }
    }
    // Ramp down; the startup ramp doubles as the shutdown allowance.
    for (int t = 0; t < horizon; ++t) {
      if (t == 0) {
        lp.add_row(-kInf, -g.init_power,
                   {{vm.p(i, 0), -1.0}, {vm.u(i, 0), -g.ramp_down}, {vm.w(i, 0), -g.startup_ramp}});
      } else {
        lp.add_row(-kInf, 0.0,
                   {{vm.p(i, t - 1), 1.0},
                    {vm.p(i, t), -1.0},
                    {vm.u(i, t), -g.ramp_down},
                    {vm.w(i, t), -g.startup_ramp}});
      }
    }
    // Status logic: u_t - u_{t-1} = v_t - w_t.
    for (int t = 0; t < horizon; ++t) {
      if (t == 0) {
        lp.add_row(init_u, init_u, {{vm.u(i, 0), 1.0}, {vm.v(i, 0), -1.0}, {vm.w(i, 0), 1.0}});
      } else {
        lp.add_row(0.0, 0.0,
                   {{vm.u(i, t), 1.0},
                    {vm.u(i, t - 1), -1.0},
                    {vm.v(i, t), -1.0},
                    {vm.w(i, t), 1.0}});
      }
    }
    // Minimum up: startups within the trailing window hold u on.
    for (int t = 0; t < horizon; ++t) {
      std::vector<std::pair<int, double>> terms;
      for (int tau = std::max(0, t - g.min_up + 1); tau <= t; ++tau)
        terms.emplace_back(vm.v(i, tau), 1.0);
      terms.emplace_back(vm.u(i, t), -1.0);
      lp.add_row(-kInf, 0.0, terms);
    }
    // Minimum down: shutdowns within the trailing window hold u off.
    for (int t = 0; t < horizon; ++t) {
      std::vector<std::pair<int, double>> terms;
      for (int tau = std::max(0, t - g.min_down + 1); tau <= t; ++tau)
        terms.emplace_back(vm.w(i, tau), 1.0);
      terms.emplace_back(vm.u(i, t), 1.0);
      lp.add_row(-kInf, 1.0, terms);
    }
  }

  // SOC recursion: soc_t - soc_{t-1} = eff_c * charge_t - discharge_t / eff_d.
  for (int t = 0; t < horizon; ++t) {
    std::vector<std::pair<int, double>> terms{{vm.soc(t), 1.0},
                                              {vm.charge(t), -st.eff_charge},
                                              {vm.discharge(t), 1.0 / st.eff_discharge}};
    double rhs = 0.0;
    if (t == 0)
      rhs = st.soc_init;
    else
      terms.emplace_back(vm.soc(t - 1), -1.0);
    lp.add_row(rhs, rhs, terms);
  }

  out.integer_cols.reserve(static_cast<size_t>(n) * horizon);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < horizon; ++t) out.integer_cols.push_back(vm.u(i, t));
  return out;
}

namespace {

constexpr double kIntTol = 1e-6;

struct Node {
  long id = 0;
  int depth = 0;
  double bound = -kInf;           // parent relaxation value
  std::vector<std::int8_t> lb;    // u-block bounds
  std::vector<std::int8_t> ub;
  LpBasis basis;                  // parent optimal basis
};

Schedule schedule_from_x(const UcVarMap& vm, const std::vector<double>& x) {
  Schedule s(vm.num_gens, vm.horizon);
  for (int i = 0; i < vm.num_gens; ++i)
    for (int t = 0; t < vm.horizon; ++t)
      s.at(i, t) = x[vm.u(i, t)] > 0.5 ? 1 : 0;
  return s;
}

Dispatch dispatch_from_x(const UcVarMap& vm, const std::vector<double>& x) {
  Dispatch d;
  d.p.assign(vm.num_gens, std::vector<double>(vm.horizon, 0.0));
  for (int i = 0; i < vm.num_gens; ++i)
    for (int t = 0; t < vm.horizon; ++t) d.p[i][t] = x[vm.p(i, t)];
  d.charge.resize(vm.horizon);
  d.discharge.resize(vm.horizon);
  d.soc.resize(vm.horizon);
  d.curtail.resize(vm.horizon);
  for (int t = 0; t < vm.horizon; ++t) {
    d.charge[t] = x[vm.charge(t)];
    d.discharge[t] = x[vm.discharge(t)];
    d.soc[t] = x[vm.soc(t)];
    d.curtail[t] = x[vm.curtail(t)];
  }
  return d;
}

/// Cold-start hint: commitment columns at their upper bound, slacks basic.
/// From the all-slack start with u = 0 every dispatch column is wedged
/// against p <= p_max * u, so phase 1 needs a long degenerate pivot chain
/// before the balance rows improve. Starting u high removes that wedge.
LpBasis commitment_crash_basis(const LpProblem& lp, const UcVarMap& vm) {
  const int n = lp.num_cols();
  const int m = lp.num_rows();
  LpBasis b;
  b.state.assign(static_cast<size_t>(n + m), LpBasis::AtLower);
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(lp.col_lb[j]))
      b.state[j] = std::isfinite(lp.col_ub[j]) ? LpBasis::AtUpper : LpBasis::AtZero;
  }
  for (int i = 0; i < vm.num_gens; ++i)
    for (int t = 0; t < vm.horizon; ++t) b.state[vm.u(i, t)] = LpBasis::AtUpper;
  for (int r = 0; r < m; ++r) b.state[static_cast<size_t>(n + r)] = LpBasis::Basic;
  return b;
}

/// Prices a fixed schedule on a scratch copy of the problem: u pinned to the
/// schedule, v and w left to the logic rows. Optimal => the schedule is
/// feasible and the objective is its true cost.
LpSolution price_schedule(const MilpProblem& problem, const Schedule& s) {
  LpProblem work = problem.lp;
  const UcVarMap& vm = problem.vars;
  for (int i = 0; i < vm.num_gens; ++i) {
    for (int t = 0; t < vm.horizon; ++t) {
      const int col = vm.u(i, t);
      const double v = s.at(i, t) ? 1.0 : 0.0;
      if (v < work.col_lb[col] || v > work.col_ub[col]) {
        // Contradicts an initial-state pin; report as infeasible.
        LpSolution bad;
        bad.status = LpStatus::Infeasible;
        return bad;
      }
      work.col_lb[col] = v;
      work.col_ub[col] = v;
    }
  }
  const LpBasis crash = commitment_crash_basis(work, vm);
  LpOptions lp_opt;
  lp_opt.warm_basis = &crash;
  try {
    return solve_lp(work, lp_opt);
  } catch (const NumericalFailure&) {
    return solve_lp(work);
  }
}

double compute_gap(double objective, double bound) {
  if (objective >= kInf) return kInf;
  return (objective - bound) / std::max(std::abs(objective), 1e-9);
}

}  // namespace

MilpResult solve_bnb(const MilpProblem& problem, const BnbOptions& options) {
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&t_start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  const UcVarMap& vm = problem.vars;
  const int nu = vm.num_gens * vm.horizon;
  MilpResult result;

  LpProblem work = problem.lp;
  const LpBasis crash = commitment_crash_basis(work, vm);

  // Root bounds: initial-state pins intersected with the fixation map.
  std::vector<std::int8_t> root_lb(nu), root_ub(nu);
  for (int j = 0; j < nu; ++j) {
    root_lb[j] = static_cast<std::int8_t>(work.col_lb[j]);
    root_ub[j] = static_cast<std::int8_t>(work.col_ub[j]);
  }
  if (options.fixed) {
    for (int i = 0; i < vm.num_gens; ++i) {
      for (int t = 0; t < vm.horizon; ++t) {
        const int fv = options.fixed->get(i, t);
        if (fv < 0) continue;
        const int j = vm.u(i, t);
        root_lb[j] = std::max(root_lb[j], static_cast<std::int8_t>(fv));
        root_ub[j] = std::min(root_ub[j], static_cast<std::int8_t>(fv));
        if (root_lb[j] > root_ub[j]) {
          result.status = MilpStatus::Infeasible;
          result.wall_seconds = elapsed();
          return result;
        }
      }
    }
  }

  // Warm incumbent: accepted only if it prices out feasible.
  if (options.warm_schedule) {
    const Schedule& ws = *options.warm_schedule;
    if (ws.num_gens == vm.num_gens && ws.horizon == vm.horizon) {
      LpSolution priced = price_schedule(problem, ws);
      if (priced.status == LpStatus::Optimal) {
        result.objective = priced.objective;
        result.schedule = ws;
        result.dispatch = dispatch_from_x(vm, priced.x);
        result.lp_iterations += priced.iterations;
      } else {
        result.warm_rejected = true;
      }
    } else {
      result.warm_rejected = true;
    }
  }

  long next_id = 0;
  std::vector<Node> open;
  {
    Node root;
    root.id = next_id++;
    root.lb = root_lb;
    root.ub = root_ub;
    open.push_back(std::move(root));
  }

  double tree_bound = -kInf;  // proven lower bound for the (fixed) tree
  bool root_infeasible = false;
  bool hit_limit = false;

  auto open_min_bound = [&open]() {
    double b = kInf;
    for (const Node& nd : open) b = std::min(b, nd.bound);
    return b;
  };

  while (!open.empty()) {
    if (options.node_limit >= 0 && result.nodes >= options.node_limit) { hit_limit = true; break; }
    if (options.time_limit >= 0.0 && elapsed() >= options.time_limit) { hit_limit = true; break; }

    // Node selection: newest first until an incumbent exists (plunging),
    // then best bound with lowest id breaking ties.
    size_t pick = open.size() - 1;
    if (result.objective < kInf) {
      pick = 0;
      for (size_t k = 1; k < open.size(); ++k) {
        if (open[k].bound < open[pick].bound ||
            (open[k].bound == open[pick].bound && open[k].id < open[pick].id))
          pick = k;
      }
    }
    Node node = std::move(open[pick]);
    open.erase(open.begin() + static_cast<long>(pick));

    if (result.objective < kInf && node.bound >= result.objective - 1e-9) continue;

    for (int j = 0; j < nu; ++j) {
      work.col_lb[j] = node.lb[j];
      work.col_ub[j] = node.ub[j];
    }
    LpOptions lp_opt;
    lp_opt.warm_basis = node.basis.empty() ? &crash : &node.basis;
    LpSolution rel;
    try {
      rel = solve_lp(work, lp_opt);
    } catch (const NumericalFailure&) {
      // once more from the crash basis, or a clean slack basis if that is
      // what just failed
      lp_opt.warm_basis = lp_opt.warm_basis == &crash ? nullptr : &crash;
      rel = solve_lp(work, lp_opt);
    }
    result.nodes++;
    result.lp_iterations += rel.iterations;

    int fractional = 0;
    bool pruned = true;
    if (rel.status == LpStatus::Optimal) {
      for (int j = 0; j < nu; ++j) {
        const double x = rel.x[j];
        if (std::abs(x - std::round(x)) > kIntTol) ++fractional;
      }
      if (rel.objective < result.objective - 1e-9) {
        if (fractional == 0) {
          result.objective = rel.objective;
          result.schedule = schedule_from_x(vm, rel.x);
          result.dispatch = dispatch_from_x(vm, rel.x);
        } else {
          pruned = false;
        }
      }
    } else if (node.id == 0) {
      root_infeasible = true;
    }

    if (!pruned) {
      // Branch on the most fractional commitment, lowest column on ties.
      int branch_col = -1;
      double best_score = -1.0;
      for (int j = 0; j < nu; ++j) {
        const double x = rel.x[j];
        const double frac = x - std::floor(x);
        const double score = 0.5 - std::abs(frac - 0.5);
        if (score > kIntTol && score > best_score + 1e-12) {
          best_score = score;
          branch_col = j;
        }
      }
      Node down;
      down.depth = node.depth + 1;
      down.bound = rel.objective;
      down.lb = node.lb;
      down.ub = node.ub;
      down.basis = rel.basis;
      Node up = down;
      down.ub[branch_col] = 0;
      up.lb[branch_col] = 1;
      // Plunge toward the rounded value: that child goes on top of the stack.
      const bool up_first = rel.x[branch_col] >= 0.5;
      Node& first = up_first ? up : down;
      Node& second = up_first ? down : up;
      second.id = next_id++;
      first.id = next_id++;
      open.push_back(std::move(second));
      open.push_back(std::move(first));
    }

    // Global bound over the remaining tree; monotone by construction.
    const double open_bound = open.empty() ? std::min(result.objective, kInf) : open_min_bound();
    tree_bound = std::max(tree_bound, std::min(open_bound, result.objective));

    if (options.keep_node_log) {
      NodeLogEntry e;
      e.node = node.id;
      e.depth = node.depth;
      e.bound = tree_bound;
      e.incumbent = result.objective;
      e.fractional = fractional;
      result.node_log.push_back(e);
    }

    if (result.objective < kInf) {
      const double gap_now = compute_gap(result.objective, tree_bound);
      if (gap_now <= options.gap) break;
    }
  }

  result.wall_seconds = elapsed();
  if (open.empty() && !hit_limit && result.objective < kInf) tree_bound = result.objective;
  result.bound = std::min(tree_bound, result.objective);
  result.gap = compute_gap(result.objective, result.bound);

  if (root_infeasible) {
    // Over-aggressive fixation; an accepted warm incumbent stays in the
    // result for the caller's retry logic.
    result.status = MilpStatus::Infeasible;
  } else if (result.objective < kInf) {
    if (hit_limit)
      result.status = MilpStatus::TimeLimit;
    else if (open.empty() || result.gap <= 0.0)
      result.status = MilpStatus::Optimal;
    else
      result.status = MilpStatus::FeasibleAtGap;
  } else {
    result.status = hit_limit ? MilpStatus::TimeLimit : MilpStatus::Infeasible;
  }
  return result;
}

MilpResult brute_force_uc(const UcInstance& inst) {
  const int n = inst.num_gens();
  const int horizon = inst.horizon();
  if (n * horizon > 24)
    throw BudgetExceeded("brute force limited to num_gens * horizon <= 24, got " +
                         std::to_string(n * horizon));

  const auto t_start = std::chrono::steady_clock::now();
  SystemSeries series = net_load(inst);
  MilpProblem problem = build_uc_milp(inst);

  // Per-generator rows that already satisfy min-up/min-down.
  std::vector<std::vector<std::vector<std::uint8_t>>> rows(n);
  for (int i = 0; i < n; ++i) {
    const Generator& g = inst.generators[i];
    for (std::uint32_t mask = 0; mask < (1u << horizon); ++mask) {
      std::vector<std::uint8_t> row(horizon);
      for (int t = 0; t < horizon; ++t) row[t] = (mask >> t) & 1;
      std::vector<Violation> violations;
      check_row_min_times(g, row.data(), horizon, violations);
      if (violations.empty()) rows[i].push_back(std::move(row));
    }
  }

  MilpResult result;
  for (int i = 0; i < n; ++i) {
    if (rows[i].empty()) {
      result.status = MilpStatus::Infeasible;
      return result;
    }
  }

  Schedule sched(n, horizon);
  std::vector<size_t> odo(n, 0);
  const Storage& st = inst.storage;
  LpProblem work = problem.lp;
  const UcVarMap& vm = problem.vars;
  LpBasis chain;  // last optimal basis, carried across neighboring combos
  while (true) {
    for (int i = 0; i < n; ++i)
      std::copy(rows[i][odo[i]].begin(), rows[i][odo[i]].end(), sched.row(i));
    result.nodes++;

    bool plausible = true;
    for (int t = 0; t < horizon && plausible; ++t) {
      double pmax_on = 0.0, pmin_on = 0.0;
      for (int i = 0; i < n; ++i) {
        if (sched.at(i, t)) {
          pmax_on += inst.generators[i].p_max;
          pmin_on += inst.generators[i].p_min;
        }
      }
      const double renew = inst.profiles.solar[t] + inst.profiles.wind[t];
      if (pmax_on + st.p_discharge_max < series.net_load[t] - 1e-9) plausible = false;
      if (pmin_on > series.net_load[t] + renew + st.p_charge_max + 1e-9) plausible = false;
    }

    if (plausible) {
      for (int i = 0; i < n; ++i) {
        for (int t = 0; t < horizon; ++t) {
          const double v = sched.at(i, t) ? 1.0 : 0.0;
          work.col_lb[vm.u(i, t)] = v;
          work.col_ub[vm.u(i, t)] = v;
        }
      }
      const LpBasis crash = commitment_crash_basis(work, vm);
      LpOptions lp_opt;
      lp_opt.warm_basis = chain.empty() ? &crash : &chain;
      LpSolution priced;
      try {
        priced = solve_lp(work, lp_opt);
      } catch (const NumericalFailure&) {
        lp_opt.warm_basis = lp_opt.warm_basis == &crash ? nullptr : &crash;
        priced = solve_lp(work, lp_opt);
      }
      if (priced.status == LpStatus::Optimal) {
        chain = priced.basis;
        if (priced.objective < result.objective - 1e-12) {
          result.objective = priced.objective;
          result.schedule = sched;
          result.dispatch = dispatch_from_x(vm, priced.x);
        }
      }
    }

    int pos = n - 1;
    while (pos >= 0 && ++odo[pos] == rows[pos].size()) {
      odo[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  if (result.objective < kInf) {
    result.status = MilpStatus::Optimal;
    result.bound = result.objective;
    result.gap = 0.0;
  } else {
    result.status = MilpStatus::Infeasible;
  }
  return result;
}

void write_node_log_csv(const std::vector<NodeLogEntry>& log, std::ostream& os) {
  os << "node,depth,bound,incumbent,fractional\n";
  for (const auto& e : log) {
    os << e.node << "," << e.depth << ",";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.10g", e.bound);
    os << buf << ",";
    if (e.incumbent >= kInf) {
      os << "inf";
    } else {
      std::snprintf(buf, sizeof(buf), "%.10g", e.incumbent);
      os << buf;
    }
    os << "," << e.fractional << "\n";
  }
}

}  // namespace uc
