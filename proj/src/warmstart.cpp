#include "uc/warmstart.hpp"

#include <algorithm>
#include <vector>

#include "uc/dispatch.hpp"

namespace uc {

FixationMap fix_by_confidence(const ProbabilityTensor& probs, double tau_low, double tau_high) {
  if (!(tau_low >= 0.0 && tau_low < tau_high && tau_high <= 1.0))
    throw ValidationError("fixation thresholds: need 0 <= tau_low < tau_high <= 1");
  FixationMap map(probs.probs.rows, probs.probs.cols);
  for (int i = 0; i < map.num_gens; ++i) {
    for (int t = 0; t < map.horizon; ++t) {
      const double p = probs.probs(i, t);
      if (p >= tau_high) {
        map.set(i, t, 1);
      } else if (p <= tau_low) {
        map.set(i, t, 0);
      }
    }
  }
  return map;
}

MilpResult warm_start_solve(const UcInstance& inst, const Schedule* repaired_schedule,
                            const Dispatch* repaired_dispatch, const ProbabilityTensor* probs,
                            const WarmStartOptions& options) {
  (void)repaired_dispatch;  // solve_bnb prices the incumbent schedule itself
  MilpProblem problem = build_uc_milp(inst);

  FixationMap fix;
  bool fixing = false;
  if (probs && options.use_fixation) {
    if (probs->probs.rows != inst.num_gens() || probs->probs.cols != inst.horizon())
      throw ValidationError("probability tensor: dimensions do not match the instance");
    fix = fix_by_confidence(*probs, options.tau_low, options.tau_high);
    fixing = fix.count_fixed() > 0;
  }

  BnbOptions bnb;
  bnb.gap = options.gap;
  bnb.node_limit = options.node_limit;
  bnb.time_limit = options.time_limit;
  bnb.keep_node_log = options.keep_node_log;
  if (fixing) bnb.fixed = &fix;

  // The incumbent is seeded only when it actually dispatches; otherwise the
  // prediction enters the solve through the fixation alone.
  if (options.use_warm && repaired_schedule &&
      economic_dispatch(inst, *repaired_schedule).feasible) {
    bnb.warm_schedule = repaired_schedule;
  }

  MilpResult res = solve_bnb(problem, bnb);
  if (res.status != MilpStatus::Infeasible || !fixing) return res;

  // Release the tenth of the pins that cleared their threshold by the
  // smallest margin, then try once more.
  struct Pin {
    double slack;
    int i, t;
  };
  std::vector<Pin> pins;
  for (int i = 0; i < fix.num_gens; ++i) {
    for (int t = 0; t < fix.horizon; ++t) {
      const int v = fix.get(i, t);
      if (v < 0) continue;
      const double p = probs->probs(i, t);
      pins.push_back({v == 1 ? p - options.tau_high : options.tau_low - p, i, t});
    }
  }
  std::sort(pins.begin(), pins.end(), [](const Pin& a, const Pin& b) {
    if (a.slack != b.slack) return a.slack < b.slack;
    if (a.i != b.i) return a.i < b.i;
    return a.t < b.t;
  });
  const size_t release = std::max<size_t>(1, (pins.size() + 9) / 10);
  for (size_t k = 0; k < release && k < pins.size(); ++k) fix.set(pins[k].i, pins[k].t, -1);

  MilpResult retry = solve_bnb(problem, bnb);
  retry.fixation_relaxed = true;
  return retry;
}

}  // namespace uc
