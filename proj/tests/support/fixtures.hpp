#pragma once

// Hand-sized instances shared across test suites.

#include <vector>

#include "uc/uc_core.hpp"

namespace uc::testing {

inline Generator simple_gen(int id, double pmin, double pmax, double cvar) {
  Generator g;
  g.id = id;
  g.c_var = cvar;
  g.c_noload = 2.0;
  g.c_startup = 10.0;
  g.p_min = pmin;
  g.p_max = pmax;
  g.min_up = 1;
  g.min_down = 1;
  g.ramp_up = pmax;   // effectively unconstrained ramps
  g.ramp_down = pmax;
  g.startup_ramp = pmax;
  g.init_on = false;
  g.init_duration = 10;  // long enough to owe nothing at t=0
  g.init_power = 0.0;
  return g;
}

inline Storage no_storage() {
  Storage s;
  s.energy_cap = 0.0;
  s.p_charge_max = 0.0;
  s.p_discharge_max = 0.0;
  s.eff_charge = 1.0;
  s.eff_discharge = 1.0;
  s.soc_init = 0.0;
  return s;
}

/// Two flexible generators, flat profiles, no storage. Feasible and easy to
/// reason about by hand.
inline UcInstance tiny_instance(int horizon = 4) {
  UcInstance inst;
  inst.id = "tiny";
  inst.generators.push_back(simple_gen(0, 10.0, 100.0, 5.0));
  inst.generators.push_back(simple_gen(1, 10.0, 80.0, 9.0));
  inst.storage = no_storage();
  inst.profiles.horizon = horizon;
  inst.profiles.load.assign(horizon, 120.0);
  inst.profiles.solar.assign(horizon, 20.0);
  inst.profiles.wind.assign(horizon, 10.0);
  return inst;
}

/// Adds min-up/min-down and ramp structure plus a battery; still brute
/// forceable for small horizons.
inline UcInstance strict_instance(int horizon = 6) {
  UcInstance inst;
  inst.id = "strict";
  Generator base = simple_gen(0, 40.0, 120.0, 4.0);
  base.min_up = 3;
  base.min_down = 2;
  base.ramp_up = 50.0;
  base.ramp_down = 50.0;
  base.startup_ramp = 45.0;
  base.init_on = true;
  base.init_duration = 5;
  base.init_power = 80.0;
  base.c_startup = 60.0;
  inst.generators.push_back(base);

  Generator mid = simple_gen(1, 20.0, 90.0, 7.5);
  mid.min_up = 2;
  mid.min_down = 2;
  mid.ramp_up = 60.0;
  mid.ramp_down = 60.0;
  mid.startup_ramp = 30.0;
  mid.c_startup = 25.0;
  inst.generators.push_back(mid);

  Generator peak = simple_gen(2, 5.0, 60.0, 14.0);
  peak.c_startup = 8.0;
  peak.c_noload = 1.0;
  inst.generators.push_back(peak);

  Storage st;
  st.energy_cap = 60.0;
  st.p_charge_max = 25.0;
  st.p_discharge_max = 25.0;
  st.eff_charge = 0.9;
  st.eff_discharge = 0.9;
  st.soc_init = 30.0;
  inst.storage = st;

  inst.profiles.horizon = horizon;
  inst.profiles.load.resize(horizon);
  inst.profiles.solar.resize(horizon);
  inst.profiles.wind.resize(horizon);
  for (int t = 0; t < horizon; ++t) {
    inst.profiles.load[t] = 110.0 + 40.0 * (t % 3);
    inst.profiles.solar[t] = t < horizon / 2 ? 15.0 : 5.0;
    inst.profiles.wind[t] = 10.0;
  }
  return inst;
}

/// Three units, six hours, loads high enough that most commitment patterns
/// fail the capacity screen; keeps exhaustive enumeration quick while the
/// tree search still has to branch.
inline UcInstance bnb_instance(std::uint64_t seed) {
  Rng rng(seed);
  UcInstance inst;
  inst.id = "bnb_" + std::to_string(seed);

  Generator big = simple_gen(0, 40.0, 120.0, 6.0);
  big.min_up = 3;
  big.min_down = 2;
  big.ramp_up = 55.0;
  big.ramp_down = 55.0;
  big.startup_ramp = 50.0;
  big.c_startup = 70.0;
  big.c_noload = 4.0;
  big.init_on = true;
  big.init_duration = 6;
  big.init_power = 90.0;
  inst.generators.push_back(big);

  Generator mid = simple_gen(1, 20.0, 90.0, 8.0 + rng.uniform(0.0, 2.0));
  mid.min_up = 2;
  mid.min_down = 2;
  mid.ramp_up = 60.0;
  mid.ramp_down = 60.0;
  mid.startup_ramp = 35.0;
  mid.c_startup = 30.0;
  inst.generators.push_back(mid);

  Generator peak = simple_gen(2, 5.0, 60.0, 13.0 + rng.uniform(0.0, 3.0));
  peak.c_startup = 10.0;
  peak.c_noload = 1.0;
  inst.generators.push_back(peak);

  Storage st;
  st.energy_cap = 50.0;
  st.p_charge_max = 25.0;
  st.p_discharge_max = 25.0;
  st.eff_charge = 0.92;
  st.eff_discharge = 0.92;
  st.soc_init = 25.0;
  inst.storage = st;

  const int horizon = 6;
  const double base[6] = {205.0, 231.0, 248.0, 222.0, 196.0, 214.0};
  inst.profiles.horizon = horizon;
  inst.profiles.load.resize(horizon);
  inst.profiles.solar.resize(horizon);
  inst.profiles.wind.resize(horizon);
  for (int t = 0; t < horizon; ++t) {
    inst.profiles.load[t] = base[t] * rng.uniform(0.97, 1.03);
    inst.profiles.solar[t] = (t >= 1 && t <= 4) ? rng.uniform(5.0, 15.0) : 0.0;
    inst.profiles.wind[t] = rng.uniform(3.0, 10.0);
  }
  return inst;
}

}  // namespace uc::testing
