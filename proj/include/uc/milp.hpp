#pragma once

#include <string>
#include <vector>

#include "uc/dispatch.hpp"
#include "uc/lp.hpp"
#include "uc/uc_core.hpp"

namespace uc {

/// Column layout of the UC MILP: for each generator the commitment u,
/// startup v, shutdown w, and power p blocks (each num_gens * horizon,
/// generator-major), then charge, discharge, soc, curtail (horizon each).
struct UcVarMap {
  int num_gens = 0;
  int horizon = 0;

  int u(int i, int t) const { return i * horizon + t; }
  int v(int i, int t) const { return num_gens * horizon + i * horizon + t; }
  int w(int i, int t) const { return 2 * num_gens * horizon + i * horizon + t; }
  int p(int i, int t) const { return 3 * num_gens * horizon + i * horizon + t; }
  int charge(int t) const { return 4 * num_gens * horizon + t; }
  int discharge(int t) const { return 4 * num_gens * horizon + horizon + t; }
  int soc(int t) const { return 4 * num_gens * horizon + 2 * horizon + t; }
  int curtail(int t) const { return 4 * num_gens * horizon + 3 * horizon + t; }
  int num_cols() const { return 4 * num_gens * horizon + 4 * horizon; }
};

struct MilpProblem {
  LpProblem lp;
  UcVarMap vars;
  std::vector<int> integer_cols;  // the u block
};

/// Partial assignment over commitment variables; -1 leaves (i,t) free.
struct FixationMap {
  int num_gens = 0;
  int horizon = 0;
  std::vector<std::int8_t> value;  // -1 / 0 / 1, generator-major

  FixationMap() = default;
  FixationMap(int n, int t) : num_gens(n), horizon(t), value(static_cast<size_t>(n) * t, -1) {}

  void set(int i, int t, int v) { value[static_cast<size_t>(i) * horizon + t] = static_cast<std::int8_t>(v); }
  int get(int i, int t) const { return value[static_cast<size_t>(i) * horizon + t]; }
  int count_fixed() const {
    int c = 0;
    for (auto v : value) c += v >= 0;
    return c;
  }
};

enum class MilpStatus { Optimal, FeasibleAtGap, Infeasible, TimeLimit };

const char* to_string(MilpStatus s);

struct NodeLogEntry {
  long node = 0;
  int depth = 0;
  double bound = 0.0;      // global best bound after this node
  double incumbent = 0.0;  // kInf until the first feasible schedule
  int fractional = 0;      // fractional u count at this node's relaxation
};

struct MilpResult {
  MilpStatus status = MilpStatus::Infeasible;
  Schedule schedule;
  Dispatch dispatch;
  double objective = kInf;
  double bound = -kInf;
  double gap = kInf;            // (objective - bound) / max(|objective|, 1e-9)
  long nodes = 0;
  long lp_iterations = 0;       // summed over all node relaxations
  double wall_seconds = 0.0;
  bool warm_rejected = false;   // a warm incumbent was offered but invalid
  bool fixation_relaxed = false;  // set when a fixation retry was needed
  std::vector<NodeLogEntry> node_log;
};

struct BnbOptions {
  double gap = 0.0025;
  long node_limit = -1;         // -1: unlimited
  double time_limit = -1.0;     // seconds, -1: none
  const Schedule* warm_schedule = nullptr;
  const Dispatch* warm_dispatch = nullptr;
  const FixationMap* fixed = nullptr;
  bool keep_node_log = false;
};

/// Builds the full UC MILP for an instance. Total on valid instances.
MilpProblem build_uc_milp(const UcInstance& inst);

/// Branch and bound over the u block: best-bound node selection with
/// depth-first plunging until the first incumbent, most-fractional branching
/// with lowest (i,t) tie break, parent-basis LP warm starts.
MilpResult solve_bnb(const MilpProblem& problem, const BnbOptions& options = {});

/// Exhaustive oracle: enumerates commitment matrices, screens them
/// structurally, prices survivors by economic dispatch. N_g * T <= 24.
MilpResult brute_force_uc(const UcInstance& inst);

void write_node_log_csv(const std::vector<NodeLogEntry>& log, std::ostream& os);

}  // namespace uc
