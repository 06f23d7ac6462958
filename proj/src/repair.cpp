#include "uc/repair.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace uc {

namespace {

constexpr double kTol = 1e-9;

struct GenOrder {
  int id;
  double key;
};

/// Cheapest first, ties by lower id.
std::vector<int> cheapest_order(const UcInstance& inst) {
  std::vector<GenOrder> v;
  for (int i = 0; i < inst.num_gens(); ++i) v.push_back({i, inst.generators[i].avg_cost()});
  std::sort(v.begin(), v.end(), [](const GenOrder& a, const GenOrder& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.id < b.id;
  });
  std::vector<int> out;
  for (const GenOrder& g : v) out.push_back(g.id);
  return out;
}

/// Most expensive first, ties by higher id.
std::vector<int> costliest_order(const UcInstance& inst) {
  std::vector<int> out = cheapest_order(inst);
  std::reverse(out.begin(), out.end());
  return out;
}

void set_range(Schedule& s, RepairTrace& tr, int gen, int t0, int t1, bool on, EditReason r) {
  bool any = false;
  for (int t = t0; t < t1; ++t) {
    const std::uint8_t want = on ? 1 : 0;
    if (s.at(gen, t) != want) {
      s.at(gen, t) = want;
      any = true;
    }
  }
  if (any) tr.edits.push_back({gen, t0, t1, on, r});
}

/// Emits Revert edits that restore `gen`'s row to `saved`.
void revert_row(Schedule& s, RepairTrace& tr, int gen, const std::vector<std::uint8_t>& saved) {
  int t = 0;
  const int T = s.horizon;
  while (t < T) {
    if (s.at(gen, t) == saved[t]) {
      ++t;
      continue;
    }
    int e = t;
    const std::uint8_t want = saved[t];
    while (e < T && s.at(gen, e) != saved[e] && saved[e] == want) ++e;
    set_range(s, tr, gen, t, e, want == 1, EditReason::Revert);
    t = e;
  }
}

bool row_ok(const Generator& g, const std::uint8_t* row, int horizon) {
  std::vector<Violation> v;
  check_row_min_times(g, row, horizon, v);
  return v.empty();
}

double sum_pmax(const UcInstance& inst) {
  double s = 0.0;
  for (const Generator& g : inst.generators) s += g.p_max;
  return s;
}

struct HourAgg {
  std::vector<double> cap;       // sum of online p_max
  std::vector<double> pmin_sum;  // sum of online p_min
};

HourAgg aggregate(const UcInstance& inst, const Schedule& s) {
  HourAgg a;
  const int T = inst.horizon();
  a.cap.assign(T, 0.0);
  a.pmin_sum.assign(T, 0.0);
  for (int i = 0; i < inst.num_gens(); ++i)
    for (int t = 0; t < T; ++t)
      if (s.at(i, t)) {
        a.cap[t] += inst.generators[i].p_max;
        a.pmin_sum[t] += inst.generators[i].p_min;
      }
  return a;
}

/// Ramp capability toward hour t: running units contribute ramp_up, units
/// starting at t contribute startup_ramp.
double ramp_capability(const UcInstance& inst, const Schedule& s, int t) {
  double r = 0.0;
  for (int i = 0; i < inst.num_gens(); ++i) {
    if (!s.at(i, t)) continue;
    const Generator& g = inst.generators[i];
    const bool prev_on = t > 0 ? s.at(i, t - 1) != 0 : g.init_on;
    r += prev_on ? g.ramp_up : g.startup_ramp;
  }
  return r;
}

/// Highest tolerable sum of p_min at hour t: net load plus full charging plus
/// full curtailment headroom.
double min_output_budget(const UcInstance& inst, const SystemSeries& series, int t) {
  return series.net_load[t] + inst.storage.p_charge_max + inst.profiles.solar[t] +
         inst.profiles.wind[t];
}

}  // namespace

const char* to_string(EditReason r) {
  switch (r) {
    case EditReason::MinUp: return "min_up";
    case EditReason::MinDown: return "min_down";
    case EditReason::Capacity: return "capacity";
    case EditReason::Ramp: return "ramp";
    case EditReason::Economic: return "economic";
    case EditReason::Trim: return "trim";
    case EditReason::Revert: return "revert";
  }
  return "unknown";
}

Schedule apply_trace(const Schedule& input, const RepairTrace& trace) {
  Schedule out = input;
  for (const RepairEdit& e : trace.edits)
    for (int t = e.t0; t < e.t1; ++t) out.at(e.gen, t) = e.turn_on ? 1 : 0;
  return out;
}

std::string trace_to_json_lines(const RepairTrace& trace) {
  std::ostringstream os;
  for (const RepairEdit& e : trace.edits) {
    nlohmann::json j{{"gen", e.gen},
                     {"t0", e.t0},
                     {"t1", e.t1},
                     {"op", e.turn_on ? "on" : "off"},
                     {"reason", to_string(e.reason)}};
    os << j.dump() << "\n";
  }
  return os.str();
}

RepairConfig RepairConfig::resolved(const UcInstance& inst) const {
  RepairConfig r = *this;
  if (r.mu_margin < 0.0) r.mu_margin = inst.storage.p_discharge_max;
  if (r.eps_margin < 0.0) r.eps_margin = inst.storage.p_discharge_max;
  if (r.t_util < 0.0) r.t_util = 0.4 * r.window;
  if (r.window < 1) throw ValidationError("repair.window: must be >= 1");
  if (r.t_util > static_cast<double>(r.window))
    throw ValidationError("repair.t_util: larger than the window");
  return r;
}

std::pair<Schedule, RepairTrace> surgical_repair(const UcInstance& inst, const Schedule& schedule,
                                                 const RepairConfig& config) {
  if (schedule.num_gens != inst.num_gens() || schedule.horizon != inst.horizon())
    throw ValidationError("schedule: dimensions do not match the instance");
  const RepairConfig cfg = config.resolved(inst);
  const int T = inst.horizon();
  const SystemSeries series = net_load(inst);

  const double fleet = sum_pmax(inst);
  for (int t = 0; t < T; ++t) {
    if (fleet + inst.storage.p_discharge_max < series.net_load[t] - kTol)
      throw CapacityExhausted("hour " + std::to_string(t) + ": fleet capacity " +
                              std::to_string(fleet + inst.storage.p_discharge_max) +
                              " MW cannot cover net load " +
                              std::to_string(series.net_load[t]) + " MW");
  }

  Schedule out = schedule;
  RepairTrace trace;

  // Phase 1: extend runs forward until every min-up/min-down rule holds.
  for (int i = 0; i < inst.num_gens(); ++i) {
    const Generator& g = inst.generators[i];
    bool changed = true;
    int guard = 0;
    while (changed && guard++ < 2 * T + 4) {
      changed = false;

      // A unit still inside its initial minimum run must keep that status.
      if (g.init_on && g.init_duration < g.min_up) {
        const int need = std::min(T, g.min_up - g.init_duration);
        for (int t = 0; t < need; ++t)
          if (!out.at(i, t)) {
            set_range(out, trace, i, 0, need, true, EditReason::MinUp);
            changed = true;
            break;
          }
      } else if (!g.init_on && g.init_duration < g.min_down) {
        const int need = std::min(T, g.min_down - g.init_duration);
        for (int t = 0; t < need; ++t)
          if (out.at(i, t)) {
            set_range(out, trace, i, 0, need, false, EditReason::MinDown);
            changed = true;
            break;
          }
      }
      if (changed) continue;

      const auto blocks = compute_blocks(out.row(i), T, g.init_on, g.init_duration);
      for (const Block& b : blocks) {
        if (b.t1 == T - 1) continue;  // horizon-clipped runs may finish later
        const int required = b.on ? g.min_up : g.min_down;
        if (b.effective_len >= required) continue;
        const int ext = std::min(T, b.t1 + 1 + (required - b.effective_len));
        set_range(out, trace, i, b.t1 + 1, ext, b.on,
                  b.on ? EditReason::MinUp : EditReason::MinDown);
        changed = true;
        break;  // recompute blocks after every edit
      }
    }
  }

  // Phase 2: add capacity only when the schedule actually fails dispatch.
  if (!economic_dispatch(inst, out).feasible) {
    const std::vector<int> order = cheapest_order(inst);
    HourAgg agg = aggregate(inst, out);

    auto try_commit = [&](int i, int t) -> bool {
      const Generator& g = inst.generators[i];
      const std::uint8_t* row = out.row(i);

      // Candidate ranges, preferring extensions of adjacent runs.
      std::vector<std::pair<int, int>> ranges;
      int e = t - 1;
      while (e >= 0 && !row[e]) --e;
      if (e >= 0 || g.init_on) ranges.emplace_back(e + 1, t + 1);
      int s = t + 1;
      while (s < T && !row[s]) ++s;
      if (s < T) ranges.emplace_back(t, s);
      std::sort(ranges.begin(), ranges.end(), [](const auto& a, const auto& b) {
        return a.second - a.first < b.second - b.first;
      });
      for (int st = t; st >= std::max(0, t - g.min_up + 1); --st)
        ranges.emplace_back(st, std::min(T, st + g.min_up));

      for (const auto& [r0, r1] : ranges) {
        std::vector<std::uint8_t> cand(row, row + T);
        for (int h = r0; h < r1; ++h) cand[h] = 1;
        if (!row_ok(g, cand.data(), T)) continue;
        bool overgen = false;
        for (int h = r0; h < r1; ++h) {
          if (row[h]) continue;
          if (agg.pmin_sum[h] + g.p_min > min_output_budget(inst, series, h) + kTol) {
            overgen = true;
            break;
          }
        }
        if (overgen) continue;
        const EditReason why = agg.cap[t] < series.net_load[t] + cfg.mu_margin - kTol
                                   ? EditReason::Capacity
                                   : EditReason::Ramp;
        for (int h = r0; h < r1; ++h) {
          if (out.at(i, h)) continue;
          agg.cap[h] += g.p_max;
          agg.pmin_sum[h] += g.p_min;
        }
        set_range(out, trace, i, r0, r1, true, why);
        return true;
      }
      return false;
    };

    bool moved = true;
    int passes = 0;
    while (moved && passes++ < 4) {
      moved = false;
      for (int t = 0; t < T; ++t) {
        const double cap_target = series.net_load[t] + cfg.mu_margin;
        const double ramp_target = series.ramp_req[t] + cfg.mu_margin;
        int spin = 0;
        while (spin++ <= inst.num_gens() &&
               (agg.cap[t] < cap_target - kTol ||
                (series.ramp_req[t] > kTol &&
                 ramp_capability(inst, out, t) < ramp_target - kTol))) {
          bool placed = false;
          for (int i : order) {
            if (out.at(i, t)) continue;
            if (try_commit(i, t)) {
              placed = true;
              moved = true;
              break;
            }
          }
          if (!placed) break;  // best effort; dispatch has the final say
        }
      }
    }
  }

  return {std::move(out), std::move(trace)};
}

std::pair<Schedule, RepairTrace> economic_repair(const UcInstance& inst, const Schedule& schedule,
                                                 const RepairConfig& config) {
  const RepairConfig cfg = config.resolved(inst);
  const int T = inst.horizon();
  Schedule out = schedule;
  RepairTrace trace;

  DispatchResult base = economic_dispatch(inst, out);
  if (!base.feasible) return {std::move(out), std::move(trace)};
  double best_cost = base.cost;

  const SystemSeries series = net_load(inst);
  const std::vector<int> order = costliest_order(inst);
  HourAgg agg = aggregate(inst, out);

  for (int t = 0; t < T; ++t) {
    const std::vector<std::uint8_t> snapshot = out.s;
    bool any = false;

    for (int i : order) {
      if (!out.at(i, t)) continue;
      const Generator& g = inst.generators[i];
      const std::uint8_t* row = out.row(i);

      int b0 = t;
      while (b0 > 0 && row[b0 - 1]) --b0;
      int b1 = t;
      while (b1 + 1 < T && row[b1 + 1]) ++b1;

      // Head shrink, tail shrink, whole block; fewest cleared hours first.
      std::vector<std::pair<int, int>> options{{b0, t + 1}, {t, b1 + 1}, {b0, b1 + 1}};
      std::stable_sort(options.begin(), options.end(), [](const auto& a, const auto& b) {
        return a.second - a.first < b.second - b.first;
      });

      for (const auto& [r0, r1] : options) {
        bool capacity_ok = true;
        for (int h = r0; h < r1; ++h)
          if (agg.cap[h] - g.p_max < series.net_load[h] - cfg.eps_margin - kTol) {
            capacity_ok = false;
            break;
          }
        if (!capacity_ok) continue;
        std::vector<std::uint8_t> cand(row, row + T);
        for (int h = r0; h < r1; ++h) cand[h] = 0;
        if (!row_ok(g, cand.data(), T)) continue;

        for (int h = r0; h < r1; ++h) {
          agg.cap[h] -= g.p_max;
          agg.pmin_sum[h] -= g.p_min;
        }
        set_range(out, trace, i, r0, r1, false, EditReason::Economic);
        any = true;
        break;
      }
    }

    if (!any) continue;
    DispatchResult after = economic_dispatch(inst, out);
    if (after.feasible && after.cost <= best_cost + kTol) {
      best_cost = after.cost;
    } else {
      // Undo this hour's batch; the trace keeps both the edits and the undo.
      for (int i = 0; i < inst.num_gens(); ++i) {
        std::vector<std::uint8_t> saved(snapshot.begin() + static_cast<size_t>(i) * T,
                                        snapshot.begin() + static_cast<size_t>(i + 1) * T);
        revert_row(out, trace, i, saved);
      }
      agg = aggregate(inst, out);
    }
  }

  return {std::move(out), std::move(trace)};
}

std::pair<Schedule, RepairTrace> head_tail_trim(const UcInstance& inst, const Schedule& schedule,
                                                const Dispatch& dispatch,
                                                const RepairConfig& config) {
  const RepairConfig cfg = config.resolved(inst);
  const int T = inst.horizon();
  Schedule out = schedule;
  RepairTrace trace;

  double best_cost = total_cost(inst, schedule, dispatch);

  auto utilization = [&](int i, int t) {
    const Generator& g = inst.generators[i];
    if (g.p_max <= g.p_min) return 1.0;
    const double u = (dispatch.p[i][t] - g.p_min) / (g.p_max - g.p_min);
    return std::clamp(u, 0.0, 1.0);
  };

  auto try_clear = [&](int i, int r0, int r1) -> bool {
    const Generator& g = inst.generators[i];
    std::vector<std::uint8_t> cand(out.row(i), out.row(i) + T);
    std::vector<std::uint8_t> saved = cand;
    for (int h = r0; h < r1; ++h) cand[h] = 0;
    if (!row_ok(g, cand.data(), T)) return false;

    set_range(out, trace, i, r0, r1, false, EditReason::Trim);
    DispatchResult after = economic_dispatch(inst, out);
    if (after.feasible && after.cost <= best_cost + kTol) {
      best_cost = after.cost;
      return true;
    }
    revert_row(out, trace, i, saved);
    return false;
  };

  for (int i = 0; i < inst.num_gens(); ++i) {
    const Generator& g = inst.generators[i];
    const auto blocks = compute_blocks(out.row(i), T, g.init_on, g.init_duration);
    for (const Block& b : blocks) {
      if (!b.on) continue;
      int start = b.t0;
      int stop = b.t1;  // inclusive

      const int head_w = std::min(cfg.window, stop - start + 1);
      double head_util = 0.0;
      for (int t = start; t < start + head_w; ++t) head_util += utilization(i, t);
      if (head_util < cfg.t_util - kTol) {
        if (try_clear(i, start, start + head_w)) start += head_w;
      }
      if (start > stop) continue;  // the whole block went away

      const int tail_w = std::min(cfg.window, stop - start + 1);
      double tail_util = 0.0;
      for (int t = stop - tail_w + 1; t <= stop; ++t) tail_util += utilization(i, t);
      if (tail_util < cfg.t_util - kTol) try_clear(i, stop - tail_w + 1, stop + 1);
    }
  }

  return {std::move(out), std::move(trace)};
}

RepairResult repair_pipeline(const UcInstance& inst, const Schedule& schedule,
                             const RepairConfig& config) {
  const RepairConfig cfg = config.resolved(inst);
  RepairResult res;
  res.schedule = schedule;

  Schedule current = schedule;
  bool have_feasible = false;

  // Iterates the stage sequence to a fixed point so a second pipeline run is a
  // no-op by construction. After the first pass the on-cell count changes
  // monotonically, so the fixed point exists and the cap is never the binding
  // limit in practice.
  auto run_rounds = [&](const RepairConfig& round_cfg) {
    const int max_passes = 2 + inst.num_gens() * inst.horizon();
    for (int pass = 0; pass < max_passes; ++pass) {
      const Schedule before = current;

      auto [s1, tr1] = surgical_repair(inst, current, round_cfg);
      res.trace.edits.insert(res.trace.edits.end(), tr1.edits.begin(), tr1.edits.end());
      DispatchResult d1 = economic_dispatch(inst, s1);
      current = s1;
      if (d1.feasible || !have_feasible) {
        res.schedule = s1;
        res.dispatch = std::move(d1);
        have_feasible = have_feasible || res.dispatch.feasible;
      }

      if (res.dispatch.feasible && current == res.schedule) {
        auto [s2, tr2] = economic_repair(inst, current, round_cfg);
        res.trace.edits.insert(res.trace.edits.end(), tr2.edits.begin(), tr2.edits.end());
        DispatchResult d2 = economic_dispatch(inst, s2);
        if (d2.feasible) {
          current = s2;
          res.schedule = s2;
          res.dispatch = std::move(d2);
        }

        auto [s3, tr3] = head_tail_trim(inst, current, res.dispatch.dispatch, round_cfg);
        res.trace.edits.insert(res.trace.edits.end(), tr3.edits.begin(), tr3.edits.end());
        DispatchResult d3 = economic_dispatch(inst, s3);
        if (d3.feasible) {
          current = s3;
          res.schedule = s3;
          res.dispatch = std::move(d3);
        }
      }

      if (current == before) break;
    }
  };

  run_rounds(cfg);

  // Coupling constraints (ramps, state of charge) can defeat the per-hour
  // margin targets. Committing more capacity relaxes them, so retry with the
  // margin raised toward the whole fleet before giving up.
  const double fleet = sum_pmax(inst);
  for (int rung = 1; rung <= 3 && !res.dispatch.feasible; ++rung) {
    RepairConfig wider = cfg;
    wider.mu_margin = cfg.mu_margin + fleet * rung / 3.0;
    run_rounds(wider);
  }

  return res;
}

}  // namespace uc
