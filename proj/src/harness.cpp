#include "uc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>

#include "uc/dispatch.hpp"
#include "uc/lp.hpp"

namespace uc {

namespace {

using Clock = std::chrono::steady_clock;

/// Measures a stage either in wall seconds or in simplex pivots (1e-6 each).
struct StageTimer {
  bool work_clock;
  Clock::time_point wall0 = Clock::now();
  long work0 = lp_work_counter();

  explicit StageTimer(bool use_work) : work_clock(use_work) {}

  double seconds() const {
    if (work_clock) return static_cast<double>(lp_work_counter() - work0) * 1e-6;
    return std::chrono::duration<double>(Clock::now() - wall0).count();
  }
};

bool solved(MilpStatus s) { return s == MilpStatus::Optimal || s == MilpStatus::FeasibleAtGap; }

/// Quantile with linear interpolation on a sorted vector; q in [0, 1].
double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

const std::vector<VariantSpec>& all_variants() {
  static const std::vector<VariantSpec> kVariants = {
      {"M1", false, false, false}, {"M2", true, false, false}, {"M3", false, true, false},
      {"M4", false, true, true},   {"M5", true, true, false},  {"M6", true, true, true},
  };
  return kVariants;
}

VariantSpec variant_by_name(const std::string& label) {
  for (const VariantSpec& v : all_variants())
    if (v.label == label) return v;
  throw ValidationError("unknown variant '" + label + "', expected M1..M6");
}

BaselineRecord run_baseline(const UcInstance& inst, const HarnessOptions& options) {
  BaselineRecord rec;
  rec.instance_id = inst.id;
  StageTimer timer(options.work_clock);
  try {
    MilpProblem problem = build_uc_milp(inst);
    BnbOptions bnb;
    bnb.gap = options.gap;
    bnb.node_limit = options.node_limit;
    bnb.time_limit = options.time_limit;
    MilpResult r = solve_bnb(problem, bnb);
    if (solved(r.status)) {
      rec.feasible = true;
      rec.cost = r.objective;
    }
    rec.nodes = r.nodes;
  } catch (const UcError&) {
    rec.feasible = false;
  }
  rec.time_s = timer.seconds();
  return rec;
}

VariantRecord run_variant(const UcInstance& inst, const ProbabilityTensor& probs,
                          const VariantSpec& spec, const HarnessOptions& options) {
  VariantRecord rec;
  rec.instance_id = inst.id;
  rec.variant = spec.label;
  StageTimer timer(options.work_clock);
  try {
    const Schedule predicted = threshold_schedule(probs, options.tau);
    RepairResult repaired;
    if (spec.post_processing) repaired = repair_pipeline(inst, predicted, options.repair);

    if (!spec.warm_start) {
      if (spec.post_processing) {
        rec.feasible = repaired.dispatch.feasible;
        if (rec.feasible) rec.cost = repaired.dispatch.cost;
      } else {
        DispatchResult d = economic_dispatch(inst, predicted);
        rec.feasible = d.feasible;
        if (rec.feasible) rec.cost = d.cost;
      }
    } else {
      WarmStartOptions warm;
      warm.gap = options.gap;
      warm.tau_high = options.tau_high;
      warm.tau_low = options.tau_low;
      warm.use_fixation = spec.threshold_fixation;
      warm.node_limit = options.node_limit;
      warm.time_limit = options.time_limit;
      const Schedule* seed = spec.post_processing ? &repaired.schedule : &predicted;
      const Dispatch* seed_dispatch =
          spec.post_processing && repaired.dispatch.feasible ? &repaired.dispatch.dispatch : nullptr;
      const ProbabilityTensor* pins = spec.threshold_fixation ? &probs : nullptr;
      MilpResult r = warm_start_solve(inst, seed, seed_dispatch, pins, warm);
      rec.feasible = solved(r.status);
      if (rec.feasible) rec.cost = r.objective;
      rec.nodes = r.nodes;
    }
  } catch (const UcError&) {
    rec.feasible = false;
    rec.cost = 0.0;
  }
  rec.time_s = timer.seconds() + options.prediction_seconds;
  return rec;
}

Metrics compute_metrics(const std::vector<VariantRecord>& variant,
                        const std::vector<BaselineRecord>& baseline) {
  std::map<std::string, const BaselineRecord*> by_id;
  for (const BaselineRecord& b : baseline) by_id[b.instance_id] = &b;

  Metrics m;
  std::vector<double> ors, trs;
  long feasible_count = 0;
  for (const VariantRecord& v : variant) {
    auto it = by_id.find(v.instance_id);
    if (it == by_id.end())
      throw ValidationError("missing baseline record for instance '" + v.instance_id + "'");
    const BaselineRecord& b = *it->second;

    MetricRow row;
    row.instance_id = v.instance_id;
    row.variant = v.variant;
    row.feasible = v.feasible && b.feasible;
    row.cost = v.cost;
    row.baseline_cost = b.cost;
    row.time_s = v.time_s;
    row.baseline_time_s = b.time_s;
    row.nodes = v.nodes;
    row.baseline_nodes = b.nodes;
    if (row.feasible) {
      row.or_ = v.cost / std::max(b.cost, 1e-12);
      row.tr_pct = 100.0 * v.time_s / std::max(b.time_s, 1e-12);
      ors.push_back(row.or_);
      trs.push_back(row.tr_pct);
      ++feasible_count;
    }
    m.rows.push_back(std::move(row));
  }

  if (!m.rows.empty())
    m.feasibility_pct = 100.0 * static_cast<double>(feasible_count) / m.rows.size();
  std::sort(ors.begin(), ors.end());
  std::sort(trs.begin(), trs.end());
  m.or_q25 = quantile(ors, 0.25);
  m.or_q50 = quantile(ors, 0.50);
  m.or_q75 = quantile(ors, 0.75);
  m.tr_pct_median = quantile(trs, 0.50);
  return m;
}

std::string results_csv(const std::vector<MetricRow>& rows) {
  std::string out =
      "instance_id,variant,feasible,cost,baseline_cost,or_,time_s,baseline_time_s,"
      "tr_pct,nodes,baseline_nodes\n";
  for (const MetricRow& r : rows) {
    out += r.instance_id + ',' + r.variant + ',' + (r.feasible ? '1' : '0') + ',';
    out += fmt(r.cost) + ',' + fmt(r.baseline_cost) + ',' + fmt(r.or_) + ',';
    out += fmt(r.time_s) + ',' + fmt(r.baseline_time_s) + ',' + fmt(r.tr_pct) + ',';
    out += std::to_string(r.nodes) + ',' + std::to_string(r.baseline_nodes) + '\n';
  }
  return out;
}

std::string or_cdf_csv(const std::vector<MetricRow>& rows) {
  std::string out = "variant,or_,cdf\n";
  for (const VariantSpec& spec : all_variants()) {
    std::vector<double> ors;
    for (const MetricRow& r : rows)
      if (r.variant == spec.label && r.feasible) ors.push_back(r.or_);
    std::sort(ors.begin(), ors.end());
    for (size_t k = 0; k < ors.size(); ++k) {
      out += spec.label + ',' + fmt(ors[k]) + ',';
      out += fmt(static_cast<double>(k + 1) / static_cast<double>(ors.size())) + '\n';
    }
  }
  return out;
}

}  // namespace uc
