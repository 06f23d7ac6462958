#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uc/common.hpp"

namespace uc {

struct Generator {
  int id = 0;
  double c_var = 0.0;      // cost per MWh produced
  double c_noload = 0.0;   // cost per online hour
  double c_startup = 0.0;  // cost per startup event
  double p_min = 0.0;      // MW
  double p_max = 0.0;      // MW
  int min_up = 1;          // hours
  int min_down = 1;        // hours
  double ramp_up = 0.0;    // MW/h
  double ramp_down = 0.0;  // MW/h
  double startup_ramp = 0.0;  // output cap in the first online hour, MW
  bool init_on = false;
  int init_duration = 0;    // hours already spent in the initial state
  double init_power = 0.0;  // MW at t=0 when initially on

  /// Merit-order key used by the repair heuristics: full-load average cost.
  double avg_cost() const { return c_var + (p_max > 0.0 ? c_noload / p_max : 0.0); }
};

struct Storage {
  double energy_cap = 0.0;      // MWh
  double p_charge_max = 0.0;    // MW
  double p_discharge_max = 0.0; // MW
  double eff_charge = 1.0;
  double eff_discharge = 1.0;
  double soc_init = 0.0;        // MWh
};

struct Profiles {
  int horizon = 0;
  std::vector<double> load;
  std::vector<double> solar;
  std::vector<double> wind;
};

struct UcInstance {
  std::string id;
  std::vector<Generator> generators;
  Storage storage;
  Profiles profiles;

  int num_gens() const { return static_cast<int>(generators.size()); }
  int horizon() const { return profiles.horizon; }
};

/// Binary on/off matrix, generators x hours.
struct Schedule {
  int num_gens = 0;
  int horizon = 0;
  std::vector<std::uint8_t> s;

  Schedule() = default;
  Schedule(int n, int t) : num_gens(n), horizon(t), s(static_cast<size_t>(n) * t, 0) {}

  std::uint8_t& at(int i, int t) { return s[static_cast<size_t>(i) * horizon + t]; }
  std::uint8_t at(int i, int t) const { return s[static_cast<size_t>(i) * horizon + t]; }
  std::uint8_t* row(int i) { return s.data() + static_cast<size_t>(i) * horizon; }
  const std::uint8_t* row(int i) const { return s.data() + static_cast<size_t>(i) * horizon; }

  bool operator==(const Schedule& o) const = default;
};

/// Maximal run of equal status. Hours are 0-based; [t0, t1] inclusive.
struct Block {
  int t0 = 0;
  int t1 = 0;
  bool on = false;
  /// Run length plus initial-state credit when the block abuts t=0 and
  /// continues the initial status.
  int effective_len = 0;

  int len() const { return t1 - t0 + 1; }
};

/// System-level series; capacity fields are schedule dependent and filled by
/// fill_capacity.
struct SystemSeries {
  std::vector<double> net_load;   // L_t = load - solar - wind
  std::vector<double> ramp_req;   // R_t = L_t - L_{t-1}; R_0 against the initial operating point
  std::vector<double> online_cap; // P_t = sum of online p_max
  std::vector<double> ramp_cap;   // sum of online ramp_up
};

enum class ViolationKind { MinUp, MinDown, Capacity };

struct Violation {
  ViolationKind kind;
  int gen;  // -1 for system-level
  int t0;
  int t1;
  std::string detail;
};

struct ViolationReport {
  std::vector<Violation> violations;
  bool empty() const { return violations.empty(); }
};

// -- operations --

UcInstance load_instance(const std::string& path);
void save_instance(const UcInstance& inst, const std::string& path);
std::string instance_to_json(const UcInstance& inst);
UcInstance instance_from_json(const std::string& text);

/// Checks every type invariant; throws ValidationError naming the field.
void validate_instance(const UcInstance& inst);

SystemSeries net_load(const UcInstance& inst);
void fill_capacity(SystemSeries& series, const UcInstance& inst, const Schedule& schedule);

std::vector<Block> compute_blocks(const std::uint8_t* row, int horizon, bool init_on,
                                  int init_duration);
std::vector<Block> compute_blocks(const std::vector<std::uint8_t>& row, bool init_on,
                                  int init_duration);

/// Structural screening: min-up/min-down accounting plus per-hour capacity
/// against full storage discharge. An empty report means the schedule is
/// plausible; full feasibility is decided by the dispatch LP.
ViolationReport validate_schedule(const UcInstance& inst, const Schedule& schedule);

/// Min-up/min-down rules for a single generator row; used by validate_schedule
/// and as the edit guard inside the repair heuristics.
void check_row_min_times(const Generator& g, const std::uint8_t* row, int horizon,
                         std::vector<Violation>& out);

// Schedule file I/O ({instance_id, s: [[...]]}).
Schedule schedule_from_json(const std::string& text);
std::string schedule_to_json(const Schedule& schedule, const std::string& instance_id);
Schedule load_schedule(const std::string& path);
void save_schedule(const Schedule& schedule, const std::string& instance_id,
                   const std::string& path);

}  // namespace uc
