#pragma once

#include <string>
#include <utility>
#include <vector>

#include "uc/dispatch.hpp"
#include "uc/uc_core.hpp"

namespace uc {

enum class EditReason : std::uint8_t {
  MinUp,
  MinDown,
  Capacity,
  Ramp,
  Economic,
  Trim,
  Revert,
};

const char* to_string(EditReason r);

/// One contiguous row mutation, half-open over [t0, t1).
struct RepairEdit {
  int gen = 0;
  int t0 = 0;
  int t1 = 0;
  bool turn_on = false;
  EditReason reason = EditReason::MinUp;

  bool operator==(const RepairEdit& o) const = default;
};

/// Replaying the edit list on the input schedule reproduces the output
/// exactly; reverted batches stay in the list followed by their undo edits.
struct RepairTrace {
  std::vector<RepairEdit> edits;
};

Schedule apply_trace(const Schedule& input, const RepairTrace& trace);

/// One JSON object per edit per line, for before/after visualization.
std::string trace_to_json_lines(const RepairTrace& trace);

struct RepairConfig {
  double mu_margin = -1.0;   // capacity margin, MW; negative = storage discharge cap
  double eps_margin = -1.0;  // trim margin, MW; negative = storage discharge cap
  int window = 4;            // head/tail trim window, hours
  double t_util = -1.0;      // utilization threshold in hour units; negative = 0.4 * window

  /// Fills defaulted fields from the instance and validates.
  RepairConfig resolved(const UcInstance& inst) const;
};

/// Phase 1 enforces min-up/min-down by extending runs forward; phase 2 turns
/// on cheapest-first capacity blocks until the dispatch margins hold, and only
/// runs when the phase-1 schedule fails economic dispatch.
std::pair<Schedule, RepairTrace> surgical_repair(const UcInstance& inst, const Schedule& schedule,
                                                 const RepairConfig& config = {});

/// Switches off most-expensive-first generators hour by hour where capacity,
/// row rules, dispatch feasibility, and cost all permit; infeasible or
/// costlier batches are reverted.
std::pair<Schedule, RepairTrace> economic_repair(const UcInstance& inst, const Schedule& schedule,
                                                 const RepairConfig& config = {});

/// Clears low-utilization block heads and tails (windowed), keeping an edit
/// only when the row stays valid and dispatch stays feasible at no extra cost.
std::pair<Schedule, RepairTrace> head_tail_trim(const UcInstance& inst, const Schedule& schedule,
                                                const Dispatch& dispatch,
                                                const RepairConfig& config = {});

struct RepairResult {
  Schedule schedule;
  DispatchResult dispatch;
  RepairTrace trace;
};

/// surgical -> dispatch -> economic -> dispatch -> trim -> dispatch, iterated
/// until the schedule stops changing; returns the last feasible pair seen.
RepairResult repair_pipeline(const UcInstance& inst, const Schedule& schedule,
                             const RepairConfig& config = {});

}  // namespace uc
