#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uc/uc_core.hpp"

namespace uc {

struct PerturbParams {
  double load_lo = 0.85;
  double load_hi = 1.15;
  double solar_lo = 0.6;
  double solar_hi = 1.4;
  double wind_lo = 0.5;
  double wind_hi = 1.5;
  double noise = 0.03;             // relative amplitude of smoothed hourly noise
  double p_zero_net = 0.05;        // chance of rescaling renewables to a zero net-load hour
  double p_full_renewable = 0.05;  // chance of matching renewable energy to total load
};

/// The bundled desk system: two slow coal units, three mid-merit CCGTs, four
/// gas peakers and one oil peaker (1520 MW total) over a 24 h day with a
/// morning solar bell, steady wind and a 400 MWh battery.
UcInstance base_system();

/// Multiplicative per-series scaling plus smoothed hour-level noise, clipped
/// at zero. Deterministic per seed. With the configured probabilities the
/// renewables are rescaled so the minimum net load touches zero, or so their
/// energy sum matches the load's.
Profiles perturb_profiles(const Profiles& profiles, std::uint64_t seed,
                          const PerturbParams& params = {});

struct LabeledSample {
  UcInstance instance;
  Schedule label;
  double objective = 0.0;
  double gap = 0.0;  // proven optimality gap of the labeling solve
};

struct Dataset {
  std::vector<LabeledSample> samples;
  std::vector<int> train_idx;
  std::vector<int> validation_idx;
  std::vector<int> test_idx;
  std::uint64_t seed = 0;
  double gap = 0.0;
  int discarded = 0;  // infeasible perturbations that were resampled
};

/// Draws `count` perturbed copies of the base instances, labels each with a
/// branch-and-bound solve at `gap`, resamples infeasible perturbations, and
/// splits 80/10/10. Throws LabelingFailure when more than half of all
/// perturbations come back infeasible.
Dataset generate_dataset(const std::vector<UcInstance>& base, int count, double gap,
                         std::uint64_t seed, const PerturbParams& params = {});

/// Directory layout: instances/<id>.json, labels/<id>.json, manifest.json.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace uc
