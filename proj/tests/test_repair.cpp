#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "support/fixtures.hpp"
#include "uc/dispatch.hpp"
#include "uc/milp.hpp"
#include "uc/repair.hpp"

using namespace uc;
using uc::testing::bnb_instance;
using uc::testing::no_storage;
using uc::testing::simple_gen;
using uc::testing::strict_instance;
using uc::testing::tiny_instance;

namespace {

Schedule all_off(const UcInstance& inst) { return Schedule(inst.num_gens(), inst.horizon()); }

Schedule all_on(const UcInstance& inst) {
  Schedule s(inst.num_gens(), inst.horizon());
  std::fill(s.s.begin(), s.s.end(), std::uint8_t{1});
  return s;
}

bool min_times_clean(const UcInstance& inst, const Schedule& s) {
  std::vector<Violation> v;
  for (int i = 0; i < inst.num_gens(); ++i)
    check_row_min_times(inst.generators[i], s.row(i), inst.horizon(), v);
  return v.empty();
}

/// Small random instance with sane physics: load stays well inside fleet
/// capacity so only the repair logic, not raw adequacy, is exercised.
UcInstance fuzz_instance(Rng rng) {
  UcInstance inst;
  inst.id = "fuzz";
  const int n = static_cast<int>(rng.uniform_int(2, 4));
  const int horizon = static_cast<int>(rng.uniform_int(8, 14));

  double fleet = 0.0;
  for (int i = 0; i < n; ++i) {
    Generator g;
    g.id = i;
    g.p_max = rng.uniform(40.0, 120.0);
    g.p_min = rng.uniform(0.0, 0.4) * g.p_max;
    g.c_var = rng.uniform(4.0, 20.0);
    g.c_noload = rng.uniform(0.0, 5.0);
    g.c_startup = rng.uniform(0.0, 50.0);
    g.min_up = static_cast<int>(rng.uniform_int(1, 3));
    g.min_down = static_cast<int>(rng.uniform_int(1, 3));
    g.ramp_up = rng.uniform(0.4, 1.0) * g.p_max;
    g.ramp_down = rng.uniform(0.4, 1.0) * g.p_max;
    g.startup_ramp = std::max(g.p_min, rng.uniform(0.3, 1.0) * g.p_max);
    g.init_on = rng.uniform(0.0, 1.0) < 0.5;
    g.init_duration = static_cast<int>(rng.uniform_int(0, 4));
    g.init_power = g.init_on ? rng.uniform(g.p_min, g.p_max) : 0.0;
    fleet += g.p_max;
    inst.generators.push_back(g);
  }

  if (rng.uniform(0.0, 1.0) < 0.5) {
    inst.storage = no_storage();
  } else {
    Storage st;
    st.energy_cap = rng.uniform(20.0, 80.0);
    st.p_charge_max = rng.uniform(5.0, 30.0);
    st.p_discharge_max = rng.uniform(5.0, 30.0);
    st.eff_charge = rng.uniform(0.85, 1.0);
    st.eff_discharge = rng.uniform(0.85, 1.0);
    st.soc_init = rng.uniform(0.0, st.energy_cap);
    inst.storage = st;
  }

  inst.profiles.horizon = horizon;
  inst.profiles.load.resize(horizon);
  inst.profiles.solar.resize(horizon);
  inst.profiles.wind.resize(horizon);
  const double base = rng.uniform(0.3, 0.55);
  const double phase = rng.uniform(0.0, 6.28);
  for (int t = 0; t < horizon; ++t) {
    const double shape =
        base + 0.2 * std::sin(6.2832 * t / horizon + phase) + rng.uniform(-0.04, 0.04);
    inst.profiles.load[t] = fleet * std::clamp(shape, 0.1, 0.85);
    inst.profiles.solar[t] = rng.uniform(0.0, 0.12) * fleet;
    inst.profiles.wind[t] = rng.uniform(0.0, 0.08) * fleet;
  }
  return inst;
}

Schedule fuzz_schedule(const UcInstance& inst, Rng rng, double p_on) {
  Schedule s(inst.num_gens(), inst.horizon());
  for (auto& cell : s.s) cell = rng.uniform(0.0, 1.0) < p_on ? 1 : 0;
  return s;
}

}  // namespace

TEST_CASE("config resolution fills battery-backed defaults") {
  UcInstance inst = strict_instance();
  RepairConfig cfg = RepairConfig{}.resolved(inst);
  CHECK(cfg.mu_margin == doctest::Approx(25.0));
  CHECK(cfg.eps_margin == doctest::Approx(25.0));
  CHECK(cfg.window == 4);
  CHECK(cfg.t_util == doctest::Approx(1.6));

  RepairConfig custom;
  custom.mu_margin = 3.0;
  custom.eps_margin = 0.0;
  custom.window = 2;
  custom.t_util = 1.1;
  RepairConfig r = custom.resolved(inst);
  CHECK(r.mu_margin == doctest::Approx(3.0));
  CHECK(r.eps_margin == doctest::Approx(0.0));
  CHECK(r.t_util == doctest::Approx(1.1));

  RepairConfig bad;
  bad.window = 0;
  CHECK_THROWS_AS(bad.resolved(inst), ValidationError);
  RepairConfig bad2;
  bad2.window = 2;
  bad2.t_util = 2.5;
  CHECK_THROWS_AS(bad2.resolved(inst), ValidationError);
}

TEST_CASE("trace replay and json export on hand-built edits") {
  Schedule s(2, 6);
  RepairTrace tr;
  tr.edits.push_back({0, 1, 4, true, EditReason::Capacity});
  tr.edits.push_back({1, 0, 2, true, EditReason::MinUp});
  tr.edits.push_back({0, 3, 4, false, EditReason::Economic});

  Schedule out = apply_trace(s, tr);
  CHECK(out.at(0, 1) == 1);
  CHECK(out.at(0, 2) == 1);
  CHECK(out.at(0, 3) == 0);  // later edit wins
  CHECK(out.at(1, 0) == 1);
  CHECK(out.at(1, 1) == 1);
  CHECK(out.at(1, 2) == 0);

  std::string lines = trace_to_json_lines(tr);
  std::istringstream is(lines);
  std::string line;
  int count = 0;
  while (std::getline(is, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.contains("gen"));
    CHECK(j.contains("t0"));
    CHECK(j.contains("t1"));
    CHECK(j.contains("op"));
    CHECK(j.contains("reason"));
    ++count;
  }
  CHECK(count == 3);
  auto first = nlohmann::json::parse(lines.substr(0, lines.find('\n')));
  CHECK(first["op"] == "on");
  CHECK(first["reason"] == "capacity");
}

TEST_CASE("surgical extends a short on-block to its minimum up time") {
  UcInstance inst;
  inst.id = "minup";
  Generator g = simple_gen(0, 0.0, 60.0, 5.0);
  g.min_up = 3;
  inst.generators.push_back(g);
  inst.storage = no_storage();
  inst.profiles.horizon = 8;
  inst.profiles.load.assign(8, 0.0);
  inst.profiles.solar.assign(8, 0.0);
  inst.profiles.wind.assign(8, 0.0);

  Schedule s = all_off(inst);
  s.at(0, 2) = 1;
  s.at(0, 3) = 1;

  auto [out, trace] = surgical_repair(inst, s);
  CHECK(out.at(0, 2) == 1);
  CHECK(out.at(0, 3) == 1);
  CHECK(out.at(0, 4) == 1);
  CHECK(out.at(0, 5) == 0);
  REQUIRE(trace.edits.size() == 1);
  CHECK(trace.edits[0].gen == 0);
  CHECK(trace.edits[0].t0 == 4);
  CHECK(trace.edits[0].t1 == 5);
  CHECK(trace.edits[0].turn_on);
  CHECK(trace.edits[0].reason == EditReason::MinUp);
  CHECK(min_times_clean(inst, out));
  CHECK(apply_trace(s, trace) == out);
}

TEST_CASE("surgical honors the initial minimum run") {
  UcInstance inst;
  inst.id = "initpin";
  Generator g = simple_gen(0, 0.0, 60.0, 5.0);
  g.min_up = 3;
  g.init_on = true;
  g.init_duration = 1;
  g.init_power = 10.0;
  inst.generators.push_back(g);
  inst.storage = no_storage();
  inst.profiles.horizon = 6;
  inst.profiles.load.assign(6, 0.0);
  inst.profiles.solar.assign(6, 0.0);
  inst.profiles.wind.assign(6, 0.0);

  auto [out, trace] = surgical_repair(inst, all_off(inst));
  CHECK(out.at(0, 0) == 1);
  CHECK(out.at(0, 1) == 1);
  CHECK(out.at(0, 2) == 0);
  REQUIRE(!trace.edits.empty());
  CHECK(trace.edits[0].reason == EditReason::MinUp);
  CHECK(min_times_clean(inst, out));
}

TEST_CASE("surgical turns on the only candidate around a demand spike") {
  UcInstance inst;
  inst.id = "spike";
  Generator g = simple_gen(0, 0.0, 60.0, 5.0);
  g.min_up = 3;
  inst.generators.push_back(g);
  inst.storage = no_storage();
  inst.profiles.horizon = 6;
  inst.profiles.load.assign(6, 0.0);
  inst.profiles.load[2] = 50.0;
  inst.profiles.solar.assign(6, 0.0);
  inst.profiles.wind.assign(6, 0.0);

  auto [out, trace] = surgical_repair(inst, all_off(inst));
  CHECK(out.at(0, 2) == 1);
  int on_hours = 0;
  for (int t = 0; t < 6; ++t) on_hours += out.at(0, t);
  CHECK(on_hours == 3);
  REQUIRE(trace.edits.size() == 1);
  CHECK(trace.edits[0].reason == EditReason::Capacity);
  CHECK(trace.edits[0].turn_on);
  CHECK(min_times_clean(inst, out));
  CHECK(economic_dispatch(inst, out).feasible);
}

TEST_CASE("surgical rejects loads the fleet can never serve") {
  UcInstance inst = tiny_instance();
  inst.profiles.load.assign(inst.horizon(), 1000.0);  // fleet tops out at 180
  CHECK_THROWS_AS(surgical_repair(inst, all_off(inst)), CapacityExhausted);
  CHECK_THROWS_AS(repair_pipeline(inst, all_off(inst)), CapacityExhausted);
}

TEST_CASE("economic keeps exact-capacity hours untouched") {
  UcInstance inst;
  inst.id = "exact";
  inst.generators.push_back(simple_gen(0, 0.0, 100.0, 5.0));
  inst.storage = no_storage();
  inst.profiles.horizon = 4;
  inst.profiles.load.assign(4, 130.0);
  inst.profiles.solar.assign(4, 20.0);
  inst.profiles.wind.assign(4, 10.0);  // net load exactly 100 == p_max

  Schedule s = all_on(inst);
  auto [out, trace] = economic_repair(inst, s);
  CHECK(out == s);
  CHECK(trace.edits.empty());
}

TEST_CASE("economic shuts the costlier of identical twins") {
  UcInstance inst;
  inst.id = "twins";
  for (int i = 0; i < 2; ++i) {
    Generator g = simple_gen(i, 20.0, 100.0, 8.0);
    g.min_up = 2;
    g.min_down = 2;
    g.init_on = true;
    g.init_duration = 5;
    g.init_power = 50.0;
    inst.generators.push_back(g);
  }
  inst.storage = no_storage();
  inst.profiles.horizon = 6;
  inst.profiles.load.assign(6, 100.0);
  inst.profiles.solar.assign(6, 0.0);
  inst.profiles.wind.assign(6, 0.0);

  Schedule s = all_on(inst);
  const double base_cost = economic_dispatch(inst, s).cost;
  auto [out, trace] = economic_repair(inst, s);

  for (int t = 0; t < 6; ++t) {
    CHECK(out.at(0, t) == 1);  // the lower id survives the tie
    CHECK(out.at(1, t) == 0);
  }
  REQUIRE(trace.edits.size() == 1);
  CHECK(trace.edits[0].gen == 1);
  CHECK(trace.edits[0].t0 == 0);
  CHECK(trace.edits[0].t1 == 6);
  CHECK(!trace.edits[0].turn_on);
  CHECK(trace.edits[0].reason == EditReason::Economic);

  DispatchResult after = economic_dispatch(inst, out);
  CHECK(after.feasible);
  CHECK(after.cost < base_cost - 1.0);
  CHECK(apply_trace(s, trace) == out);
}

TEST_CASE("trim clears a p_min head and keeps a loaded tail") {
  UcInstance inst;
  inst.id = "trim_head";
  inst.generators.push_back(simple_gen(0, 0.0, 100.0, 5.0));
  Generator b = simple_gen(1, 10.0, 100.0, 20.0);
  b.min_up = 2;
  inst.generators.push_back(b);
  inst.storage = no_storage();
  inst.profiles.horizon = 8;
  inst.profiles.load = {50, 50, 50, 50, 150, 150, 150, 150};
  inst.profiles.solar.assign(8, 0.0);
  inst.profiles.wind.assign(8, 0.0);

  Schedule s = all_on(inst);
  DispatchResult base = economic_dispatch(inst, s);
  REQUIRE(base.feasible);
  for (int t = 0; t < 4; ++t)
    CHECK(base.dispatch.p[1][t] == doctest::Approx(10.0));  // held at p_min

  auto [out, trace] = head_tail_trim(inst, s, base.dispatch);
  for (int t = 0; t < 4; ++t) CHECK(out.at(1, t) == 0);
  for (int t = 4; t < 8; ++t) CHECK(out.at(1, t) == 1);
  for (int t = 0; t < 8; ++t) CHECK(out.at(0, t) == 1);
  REQUIRE(trace.edits.size() == 1);
  CHECK(trace.edits[0].gen == 1);
  CHECK(trace.edits[0].t0 == 0);
  CHECK(trace.edits[0].t1 == 4);
  CHECK(trace.edits[0].reason == EditReason::Trim);

  DispatchResult after = economic_dispatch(inst, out);
  CHECK(after.feasible);
  CHECK(after.cost < base.cost - 1.0);
}

TEST_CASE("trim leaves fully loaded blocks alone") {
  UcInstance inst;
  inst.id = "trim_none";
  inst.generators.push_back(simple_gen(0, 0.0, 100.0, 5.0));
  Generator b = simple_gen(1, 10.0, 100.0, 20.0);
  inst.generators.push_back(b);
  inst.storage = no_storage();
  inst.profiles.horizon = 8;
  inst.profiles.load.assign(8, 200.0);  // both units pinned at p_max
  inst.profiles.solar.assign(8, 0.0);
  inst.profiles.wind.assign(8, 0.0);

  Schedule s = all_on(inst);
  DispatchResult base = economic_dispatch(inst, s);
  REQUIRE(base.feasible);
  auto [out, trace] = head_tail_trim(inst, s, base.dispatch);
  CHECK(out == s);
  CHECK(trace.edits.empty());
}

TEST_CASE("trim reverts when clearing the head breaks dispatch") {
  UcInstance inst;
  inst.id = "trim_revert";
  inst.generators.push_back(simple_gen(0, 0.0, 50.0, 5.0));
  Generator b = simple_gen(1, 10.0, 100.0, 20.0);
  inst.generators.push_back(b);
  inst.storage = no_storage();
  inst.profiles.horizon = 8;
  inst.profiles.load = {55, 55, 120, 55, 55, 55, 55, 55};
  inst.profiles.solar.assign(8, 0.0);
  inst.profiles.wind.assign(8, 0.0);

  Schedule s = all_on(inst);
  DispatchResult base = economic_dispatch(inst, s);
  REQUIRE(base.feasible);

  auto [out, trace] = head_tail_trim(inst, s, base.dispatch);
  CHECK(out == s);  // the only candidate trim kills hour 2, so it is undone
  bool saw_trim = false;
  bool saw_revert = false;
  for (const RepairEdit& e : trace.edits) {
    saw_trim = saw_trim || e.reason == EditReason::Trim;
    saw_revert = saw_revert || e.reason == EditReason::Revert;
  }
  CHECK(saw_trim);
  CHECK(saw_revert);
  CHECK(apply_trace(s, trace) == out);
}

TEST_CASE("empty load leaves an all-off schedule untouched") {
  UcInstance inst;
  inst.id = "empty";
  inst.generators.push_back(simple_gen(0, 10.0, 60.0, 5.0));
  inst.generators.push_back(simple_gen(1, 5.0, 40.0, 9.0));
  inst.storage = no_storage();
  inst.profiles.horizon = 6;
  inst.profiles.load.assign(6, 0.0);
  inst.profiles.solar.assign(6, 0.0);
  inst.profiles.wind.assign(6, 0.0);

  RepairResult res = repair_pipeline(inst, all_off(inst));
  CHECK(res.schedule == all_off(inst));
  CHECK(res.trace.edits.empty());
  CHECK(res.dispatch.feasible);
  CHECK(res.dispatch.cost == doctest::Approx(0.0));
}

TEST_CASE("pipeline recovers an all-zeros prediction on feasible instances") {
  int feasible = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    UcInstance inst = bnb_instance(seed);
    RepairResult res = repair_pipeline(inst, all_off(inst));
    CHECK(min_times_clean(inst, res.schedule));
    CHECK(apply_trace(all_off(inst), res.trace) == res.schedule);
    if (res.dispatch.feasible) {
      ++feasible;
      CHECK(validate_schedule(inst, res.schedule).violations.empty());
    }
  }
  CHECK(feasible == 30);

  RepairResult strict = repair_pipeline(strict_instance(), all_off(strict_instance()));
  CHECK(strict.dispatch.feasible);
}

TEST_CASE("pipeline keeps an optimal schedule optimal") {
  for (std::uint64_t seed : {3ULL, 11ULL}) {
    UcInstance inst = bnb_instance(seed);
    MilpResult opt = brute_force_uc(inst);
    REQUIRE(opt.status == MilpStatus::Optimal);

    RepairResult res = repair_pipeline(inst, opt.schedule);
    REQUIRE(res.dispatch.feasible);
    CHECK(res.dispatch.cost == doctest::Approx(opt.objective).epsilon(1e-9));
  }
}

TEST_CASE("surgical output has zero minimum-time violations across fuzz") {
  Rng master(2024);
  for (int it = 0; it < 10000; ++it) {
    Rng rng = master.derive(it);
    UcInstance inst = fuzz_instance(rng.derive(1));
    Schedule s = fuzz_schedule(inst, rng.derive(2), 0.25 + 0.5 * (it % 3) / 2.0);
    auto [out, trace] = surgical_repair(inst, s);
    if (!min_times_clean(inst, out)) {
      CAPTURE(it);
      REQUIRE(min_times_clean(inst, out));
    }
  }
}

TEST_CASE("economic and trim never raise the dispatch cost") {
  Rng master(77);
  int paired = 0;
  for (int it = 0; it < 1000; ++it) {
    Rng rng = master.derive(it);
    UcInstance inst = fuzz_instance(rng.derive(1));
    Schedule s = fuzz_schedule(inst, rng.derive(2), 0.7);
    auto [fixed, tr0] = surgical_repair(inst, s);
    DispatchResult base = economic_dispatch(inst, fixed);
    if (!base.feasible) continue;
    ++paired;

    auto [cheaper, tr1] = economic_repair(inst, fixed);
    DispatchResult after = economic_dispatch(inst, cheaper);
    REQUIRE(after.feasible);
    CHECK(after.cost <= base.cost + 1e-6);
    CHECK(apply_trace(fixed, tr1) == cheaper);

    auto [trimmed, tr2] = head_tail_trim(inst, cheaper, after.dispatch);
    DispatchResult final_d = economic_dispatch(inst, trimmed);
    REQUIRE(final_d.feasible);
    CHECK(final_d.cost <= after.cost + 1e-6);
    CHECK(apply_trace(cheaper, tr2) == trimmed);
  }
  CHECK(paired > 400);  // the fuzz must actually exercise the paired path
}

TEST_CASE("pipeline is idempotent and its trace replays exactly") {
  Rng master(4242);
  int feasible = 0;
  for (int it = 0; it < 150; ++it) {
    Rng rng = master.derive(it);
    UcInstance inst = fuzz_instance(rng.derive(1));
    Schedule s = fuzz_schedule(inst, rng.derive(2), 0.2 + 0.6 * (it % 4) / 3.0);

    RepairResult r1 = repair_pipeline(inst, s);
    CHECK(apply_trace(s, r1.trace) == r1.schedule);

    RepairResult r2 = repair_pipeline(inst, r1.schedule);
    CHECK(r2.schedule == r1.schedule);
    if (r1.dispatch.feasible) {
      ++feasible;
      CHECK(r2.dispatch.feasible);
      CHECK(r2.dispatch.cost == doctest::Approx(r1.dispatch.cost).epsilon(1e-9));
    }
  }
  CHECK(feasible > 100);
}

TEST_CASE("feasibility is monotone through pipeline stages") {
  Rng master(909);
  int tracked = 0;
  for (int it = 0; it < 300; ++it) {
    Rng rng = master.derive(it);
    UcInstance inst = fuzz_instance(rng.derive(1));
    Schedule s = fuzz_schedule(inst, rng.derive(2), 0.5);

    auto [fixed, tr] = surgical_repair(inst, s);
    if (!economic_dispatch(inst, fixed).feasible) continue;
    ++tracked;
    RepairResult res = repair_pipeline(inst, s);
    CHECK(res.dispatch.feasible);
  }
  CHECK(tracked > 150);
}
