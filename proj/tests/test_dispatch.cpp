#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/fixtures.hpp"
#include "uc/dispatch.hpp"
#include "uc/milp.hpp"

using namespace uc;

namespace {

void check_dispatch_invariants(const UcInstance& inst, const Schedule& s, const Dispatch& d) {
  SystemSeries series = net_load(inst);
  const Storage& st = inst.storage;
  double prev_soc = st.soc_init;
  for (int t = 0; t < inst.horizon(); ++t) {
    double supply = d.discharge[t] - d.charge[t] - d.curtail[t];
    for (int i = 0; i < inst.num_gens(); ++i) {
      supply += d.p[i][t];
      const Generator& g = inst.generators[i];
      if (s.at(i, t)) {
        CHECK(d.p[i][t] >= g.p_min - 1e-6);
        CHECK(d.p[i][t] <= g.p_max + 1e-6);
      } else {
        CHECK(std::abs(d.p[i][t]) <= 1e-6);
      }
    }
    CHECK(supply == doctest::Approx(series.net_load[t]).epsilon(1e-6));
    const double soc_next =
        prev_soc + st.eff_charge * d.charge[t] - d.discharge[t] / st.eff_discharge;
    CHECK(d.soc[t] == doctest::Approx(soc_next).epsilon(1e-6));
    prev_soc = d.soc[t];
  }
}

}  // namespace

TEST_CASE("single unit follows the load exactly") {
  UcInstance inst = testing::tiny_instance(3);
  inst.generators.resize(1);
  inst.profiles.load = {60.0, 75.0, 55.0};
  inst.profiles.solar.assign(3, 0.0);
  inst.profiles.wind.assign(3, 0.0);
  Schedule s(1, 3);
  for (int t = 0; t < 3; ++t) s.at(0, t) = 1;
  DispatchResult res = economic_dispatch(inst, s);
  REQUIRE(res.feasible);
  for (int t = 0; t < 3; ++t) {
    CHECK(res.dispatch.p[0][t] == doctest::Approx(inst.profiles.load[t]));
    CHECK(res.dispatch.curtail[t] == doctest::Approx(0.0));
  }
}

TEST_CASE("zero demand spills the renewables for free") {
  UcInstance inst = testing::tiny_instance(2);
  inst.profiles.load.assign(2, 0.0);
  inst.profiles.solar = {25.0, 40.0};
  inst.profiles.wind.assign(2, 0.0);
  Schedule s(2, 2);  // everything off
  DispatchResult res = economic_dispatch(inst, s);
  REQUIRE(res.feasible);
  CHECK(res.cost == doctest::Approx(0.0));
  for (int t = 0; t < 2; ++t)
    CHECK(res.dispatch.curtail[t] == doctest::Approx(inst.profiles.solar[t]));
}

TEST_CASE("textbook cost arithmetic") {
  UcInstance inst = testing::tiny_instance(2);
  inst.generators.resize(1);
  inst.generators[0].c_var = 10.0;
  inst.generators[0].c_noload = 5.0;
  inst.generators[0].c_startup = 100.0;
  inst.profiles.load.assign(2, 50.0);
  inst.profiles.solar.assign(2, 0.0);
  inst.profiles.wind.assign(2, 0.0);
  Schedule s(1, 2);
  s.at(0, 0) = 1;
  s.at(0, 1) = 1;
  DispatchResult res = economic_dispatch(inst, s);
  REQUIRE(res.feasible);
  CHECK(res.cost == doctest::Approx(10.0 * 100.0 + 5.0 * 2 + 100.0));
  CHECK(total_cost(inst, s, res.dispatch) == doctest::Approx(1110.0));
}

TEST_CASE("a unit already on at t=0 pays no startup") {
  UcInstance inst = testing::tiny_instance(2);
  inst.generators.resize(1);
  inst.generators[0].init_on = true;
  inst.generators[0].init_duration = 3;
  inst.generators[0].init_power = 50.0;
  inst.profiles.load.assign(2, 50.0);
  inst.profiles.solar.assign(2, 0.0);
  inst.profiles.wind.assign(2, 0.0);
  Schedule s(1, 2);
  s.at(0, 0) = 1;
  s.at(0, 1) = 1;
  DispatchResult res = economic_dispatch(inst, s);
  REQUIRE(res.feasible);
  CHECK(total_cost(inst, s, res.dispatch) == doctest::Approx(5.0 * 100.0 + 2.0 * 2));
  CHECK(res.cost == doctest::Approx(total_cost(inst, s, res.dispatch)));
}

TEST_CASE("zero load all off costs nothing") {
  UcInstance inst = testing::tiny_instance(3);
  inst.profiles.load.assign(3, 0.0);
  inst.profiles.solar.assign(3, 0.0);
  inst.profiles.wind.assign(3, 0.0);
  Schedule s(2, 3);
  DispatchResult res = economic_dispatch(inst, s);
  REQUIRE(res.feasible);
  CHECK(total_cost(inst, s, res.dispatch) == doctest::Approx(0.0));
}

TEST_CASE("oracle schedule prices to the oracle objective") {
  UcInstance inst = testing::bnb_instance(23);
  MilpResult oracle = brute_force_uc(inst);
  REQUIRE(oracle.status == MilpStatus::Optimal);
  DispatchResult res = economic_dispatch(inst, oracle.schedule);
  REQUIRE(res.feasible);
  CHECK(res.cost == doctest::Approx(oracle.objective).epsilon(1e-6));
  CHECK(total_cost(inst, oracle.schedule, res.dispatch) ==
        doctest::Approx(oracle.objective).epsilon(1e-6));
  check_dispatch_invariants(inst, oracle.schedule, res.dispatch);
}

TEST_CASE("milp incumbents always price out feasible") {
  for (std::uint64_t seed : {1u, 9u}) {
    UcInstance inst = testing::bnb_instance(seed);
    MilpResult res = solve_bnb(build_uc_milp(inst));
    REQUIRE((res.status == MilpStatus::Optimal || res.status == MilpStatus::FeasibleAtGap));
    DispatchResult ed = economic_dispatch(inst, res.schedule);
    CHECK(ed.feasible);
    CHECK(ed.cost == doctest::Approx(res.objective).epsilon(1e-6));
    check_dispatch_invariants(inst, res.schedule, ed.dispatch);
  }
}

TEST_CASE("infeasible commitment names a shortfall hour") {
  UcInstance inst = testing::tiny_instance(3);
  Schedule s(2, 3);  // all off under 90 MW of net load
  DispatchResult res = economic_dispatch(inst, s);
  REQUIRE_FALSE(res.feasible);
  CHECK(res.first_bad_hour == 0);
  CHECK_FALSE(res.detail.empty());
}

TEST_CASE("overcommitment with nothing to absorb it is infeasible") {
  UcInstance inst = testing::tiny_instance(2);
  inst.profiles.load.assign(2, 15.0);  // below combined p_min of 20
  inst.profiles.solar.assign(2, 0.0);
  inst.profiles.wind.assign(2, 0.0);
  Schedule s(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < 2; ++t) s.at(i, t) = 1;
  DispatchResult res = economic_dispatch(inst, s);
  REQUIRE_FALSE(res.feasible);
  CHECK(res.first_bad_hour == 0);
}

TEST_CASE("turning on one more unit keeps an absorbing system feasible") {
  // Premise of the monotonicity property: enough renewables to curtail and
  // the extra unit's p_min under the hourly slack.
  UcInstance inst = testing::tiny_instance(4);
  inst.profiles.load.assign(4, 80.0);
  inst.profiles.solar.assign(4, 30.0);
  inst.profiles.wind.assign(4, 10.0);
  Schedule s(2, 4);
  for (int t = 0; t < 4; ++t) s.at(0, t) = 1;
  REQUIRE(economic_dispatch(inst, s).feasible);
  for (int t = 0; t < 4; ++t) s.at(1, t) = 1;  // p_min 10 <= slack
  CHECK(economic_dispatch(inst, s).feasible);
}

TEST_CASE("variable cost component scales with c_var") {
  UcInstance inst = testing::bnb_instance(31);
  MilpResult res = solve_bnb(build_uc_milp(inst));
  REQUIRE(res.status != MilpStatus::Infeasible);
  const Schedule& s = res.schedule;
  const Dispatch& d = res.dispatch;

  double fixed = 0.0;
  for (int i = 0; i < inst.num_gens(); ++i) {
    const Generator& g = inst.generators[i];
    bool prev = g.init_on;
    for (int t = 0; t < inst.horizon(); ++t) {
      if (s.at(i, t)) {
        fixed += g.c_noload;
        if (!prev) fixed += g.c_startup;
      }
      prev = s.at(i, t);
    }
  }
  const double base_var = total_cost(inst, s, d) - fixed;
  UcInstance doubled = inst;
  for (auto& g : doubled.generators) g.c_var *= 2.0;
  const double doubled_var = total_cost(doubled, s, d) - fixed;
  CHECK(doubled_var == doctest::Approx(2.0 * base_var).epsilon(1e-12));
}

TEST_CASE("dimension mismatch throws") {
  UcInstance inst = testing::tiny_instance(4);
  Schedule s(1, 4);
  CHECK_THROWS_AS(economic_dispatch(inst, s), ValidationError);
}

TEST_CASE("csv export carries one line per hour") {
  UcInstance inst = testing::tiny_instance(3);
  Schedule s(2, 3);
  for (int t = 0; t < 3; ++t) s.at(0, t) = 1;
  DispatchResult res = economic_dispatch(inst, s);
  REQUIRE(res.feasible);
  const std::string csv = dispatch_to_csv(inst, s, res.dispatch);
  CHECK(csv.find("t,u_0,p_0,u_1,p_1,charge,discharge,soc,curtail\n") == 0);
  int lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 4);
}
