#pragma once

#include <string>
#include <vector>

#include "uc/milp.hpp"
#include "uc/predictor.hpp"
#include "uc/repair.hpp"
#include "uc/uc_core.hpp"
#include "uc/warmstart.hpp"

namespace uc {

/// One pipeline ablation: which stages run between prediction and dispatch.
/// The six valid combinations:
///   M1(-,-,-)  M2(P,-,-)  M3(-,W,-)  M4(-,W,T)  M5(P,W,-)  M6(P,W,T)
/// P = post-processing (repair), W = warm start, T = threshold fixation.
struct VariantSpec {
  std::string label;
  bool post_processing = false;
  bool warm_start = false;
  bool threshold_fixation = false;
};

const std::vector<VariantSpec>& all_variants();

/// Looks up M1..M6; throws ValidationError on anything else.
VariantSpec variant_by_name(const std::string& label);

struct HarnessOptions {
  double gap = 0.0025;
  double tau = 0.5;        // commitment threshold on probabilities
  double tau_high = 0.98;  // confidence pins when fixation is on
  double tau_low = 0.02;
  long node_limit = -1;
  double time_limit = -1.0;
  /// Deterministic clock: stage time = simplex pivots * 1e-6 instead of wall
  /// seconds. Reproducible across runs when instances are evaluated serially.
  bool work_clock = false;
  double prediction_seconds = 0.0;  // added to every variant time
  RepairConfig repair;
};

struct VariantRecord {
  std::string instance_id;
  std::string variant;
  bool feasible = false;
  double cost = 0.0;  // stays 0 when infeasible
  double time_s = 0.0;
  long nodes = 0;
};

struct BaselineRecord {
  std::string instance_id;
  bool feasible = false;
  double cost = 0.0;
  double time_s = 0.0;
  long nodes = 0;
};

/// Cold branch-and-bound at the configured gap; the reference for metrics.
BaselineRecord run_baseline(const UcInstance& inst, const HarnessOptions& options = {});

/// Runs one ablation on one instance. Stage errors never propagate; they
/// yield an infeasible record so a batch always completes.
VariantRecord run_variant(const UcInstance& inst, const ProbabilityTensor& probs,
                          const VariantSpec& spec, const HarnessOptions& options = {});

/// Joined per-instance record, one CSV line.
struct MetricRow {
  std::string instance_id;
  std::string variant;
  bool feasible = false;
  double cost = 0.0;
  double baseline_cost = 0.0;
  double or_ = 0.0;  // cost / baseline cost, 0 when infeasible
  double time_s = 0.0;
  double baseline_time_s = 0.0;
  double tr_pct = 0.0;  // 100 * time / baseline time
  long nodes = 0;
  long baseline_nodes = 0;
};

struct Metrics {
  double feasibility_pct = 0.0;
  double or_q25 = 0.0, or_q50 = 0.0, or_q75 = 0.0;  // over feasible rows
  double tr_pct_median = 0.0;                       // over feasible rows
  std::vector<MetricRow> rows;
};

/// Joins variant records with their baselines and aggregates. Quartiles use
/// linear interpolation and cover feasible rows only. Throws ValidationError
/// when a variant record has no baseline with the same instance id.
Metrics compute_metrics(const std::vector<VariantRecord>& variant,
                        const std::vector<BaselineRecord>& baseline);

/// results.csv body: header plus one line per row, fixed 6-decimal format.
std::string results_csv(const std::vector<MetricRow>& rows);

/// Per-variant optimality-ratio CDF over feasible rows: variant,or_,cdf.
std::string or_cdf_csv(const std::vector<MetricRow>& rows);

}  // namespace uc
