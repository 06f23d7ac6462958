#include "uc/dispatch.hpp"

#include <cstdio>
#include <sstream>

#include "uc/milp.hpp"

namespace uc {

namespace {

/// First hour where no dispatch can balance the fixed commitments, judging by
/// static output ranges alone. -1 when the shortfall is a coupling effect
/// (ramp chains or storage energy) with no single guilty hour.
int first_static_gap(const UcInstance& inst, const Schedule& schedule, std::string& detail) {
  SystemSeries series = net_load(inst);
  for (int t = 0; t < inst.horizon(); ++t) {
    double pmin_on = 0.0, pmax_on = 0.0;
    for (int i = 0; i < inst.num_gens(); ++i) {
      if (schedule.at(i, t)) {
        pmin_on += inst.generators[i].p_min;
        pmax_on += inst.generators[i].p_max;
      }
    }
    const double need = series.net_load[t];
    const double lo = pmin_on - inst.storage.p_charge_max -
                      (inst.profiles.solar[t] + inst.profiles.wind[t]);
    const double hi = pmax_on + inst.storage.p_discharge_max;
    if (need > hi + 1e-9) {
      detail = "hour " + std::to_string(t) + ": committed capacity short of net load";
      return t;
    }
    if (need < lo - 1e-9) {
      detail = "hour " + std::to_string(t) + ": committed minimum output exceeds absorbable load";
      return t;
    }
  }
  detail = "ramp or storage coupling infeasibility";
  return -1;
}

}  // namespace

DispatchResult economic_dispatch(const UcInstance& inst, const Schedule& schedule) {
  if (schedule.num_gens != inst.num_gens() || schedule.horizon != inst.horizon())
    throw ValidationError("schedule: dimensions do not match instance");

  MilpProblem problem = build_uc_milp(inst);
  LpProblem& lp = problem.lp;
  const UcVarMap& vm = problem.vars;

  DispatchResult out;
  for (int i = 0; i < vm.num_gens; ++i) {
    for (int t = 0; t < vm.horizon; ++t) {
      const int col = vm.u(i, t);
      const double v = schedule.at(i, t) ? 1.0 : 0.0;
      if (v < lp.col_lb[col] || v > lp.col_ub[col]) {
        // Contradicts the unit's initial-state pin.
        out.first_bad_hour = t;
        out.detail = "generator " + std::to_string(i) + " hour " + std::to_string(t) +
                     ": status conflicts with initial minimum up/down time";
        return out;
      }
      lp.col_lb[col] = v;
      lp.col_ub[col] = v;
    }
  }

  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) {
    out.first_bad_hour = first_static_gap(inst, schedule, out.detail);
    return out;
  }

  out.feasible = true;
  out.cost = sol.objective;
  Dispatch& d = out.dispatch;
  d.p.assign(vm.num_gens, std::vector<double>(vm.horizon, 0.0));
  for (int i = 0; i < vm.num_gens; ++i)
    for (int t = 0; t < vm.horizon; ++t) d.p[i][t] = sol.x[vm.p(i, t)];
  d.charge.resize(vm.horizon);
  d.discharge.resize(vm.horizon);
  d.soc.resize(vm.horizon);
  d.curtail.resize(vm.horizon);
  for (int t = 0; t < vm.horizon; ++t) {
    d.charge[t] = sol.x[vm.charge(t)];
    d.discharge[t] = sol.x[vm.discharge(t)];
    d.soc[t] = sol.x[vm.soc(t)];
    d.curtail[t] = sol.x[vm.curtail(t)];
  }
  return out;
}

double total_cost(const UcInstance& inst, const Schedule& schedule, const Dispatch& dispatch) {
  double cost = 0.0;
  for (int i = 0; i < inst.num_gens(); ++i) {
    const Generator& g = inst.generators[i];
    bool prev_on = g.init_on;
    for (int t = 0; t < inst.horizon(); ++t) {
      const bool on = schedule.at(i, t) != 0;
      if (on) {
        cost += g.c_noload + g.c_var * dispatch.p[i][t];
        if (!prev_on) cost += g.c_startup;
      }
      prev_on = on;
    }
  }
  return cost;
}

std::string dispatch_to_csv(const UcInstance& inst, const Schedule& schedule,
                            const Dispatch& dispatch) {
  std::ostringstream os;
  os << "t";
  for (int i = 0; i < inst.num_gens(); ++i) os << ",u_" << i << ",p_" << i;
  os << ",charge,discharge,soc,curtail\n";
  char buf[48];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  for (int t = 0; t < inst.horizon(); ++t) {
    os << t;
    for (int i = 0; i < inst.num_gens(); ++i)
      os << "," << int(schedule.at(i, t)) << "," << num(dispatch.p[i][t]);
    os << "," << num(dispatch.charge[t]) << "," << num(dispatch.discharge[t]) << ","
       << num(dispatch.soc[t]) << "," << num(dispatch.curtail[t]) << "\n";
  }
  return os.str();
}

}  // namespace uc
