#pragma once

#include "uc/milp.hpp"
#include "uc/predictor.hpp"

namespace uc {

struct WarmStartOptions {
  double gap = 0.0025;
  double tau_high = 0.98;
  double tau_low = 0.02;
  bool use_fixation = true;
  bool use_warm = true;
  long node_limit = -1;
  double time_limit = -1.0;  // seconds, -1: none
  bool keep_node_log = false;
};

/// Pins (i,t) to 1 where probs >= tau_high and to 0 where probs <= tau_low;
/// everything else stays free. Requires 0 <= tau_low < tau_high <= 1.
FixationMap fix_by_confidence(const ProbabilityTensor& probs, double tau_low, double tau_high);

/// Assembles the warm-started solve: builds the MILP, applies the confidence
/// fixation, seeds the repaired schedule as incumbent when it dispatches
/// feasibly, and runs branch and bound. If the fixation makes the root
/// infeasible, the 10% of pins nearest their threshold are released and the
/// solve retried once, flagged via MilpResult::fixation_relaxed.
MilpResult warm_start_solve(const UcInstance& inst, const Schedule* repaired_schedule,
                            const Dispatch* repaired_dispatch, const ProbabilityTensor* probs,
                            const WarmStartOptions& options = {});

}  // namespace uc
