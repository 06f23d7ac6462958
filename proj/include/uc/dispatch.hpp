#pragma once

#include <string>
#include <vector>

#include "uc/uc_core.hpp"

namespace uc {

/// Continuous dispatch for a fixed commitment schedule.
struct Dispatch {
  std::vector<std::vector<double>> p;  // p[i][t], MW
  std::vector<double> charge;          // MW into storage
  std::vector<double> discharge;       // MW out of storage
  std::vector<double> soc;             // MWh at end of hour t
  std::vector<double> curtail;         // MW of renewables spilled
};

struct DispatchResult {
  bool feasible = false;
  Dispatch dispatch;
  double cost = 0.0;       // full cost: variable + no-load + startup
  int first_bad_hour = -1; // diagnostic when infeasible
  std::string detail;
};

/// Solves the economic dispatch LP with u, v, w pinned by the schedule.
/// Feasibility of this LP is the pipeline's authoritative feasibility test.
DispatchResult economic_dispatch(const UcInstance& inst, const Schedule& schedule);

/// Recomputes the objective from first principles: sum of c_var * p,
/// c_noload per online hour, and c_startup per startup event. A unit already
/// on at t=0 that stays on incurs no startup.
double total_cost(const UcInstance& inst, const Schedule& schedule, const Dispatch& dispatch);

/// Hourly CSV: t, per-generator MW, storage flows, SOC, curtailment.
std::string dispatch_to_csv(const UcInstance& inst, const Schedule& schedule,
                            const Dispatch& dispatch);

}  // namespace uc
