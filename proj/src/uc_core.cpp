#include "uc/uc_core.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace uc {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ValidationError(field + ": " + what);
}

json generator_to_json(const Generator& g) {
  return json{{"id", g.id},
              {"c_var", g.c_var},
              {"c_noload", g.c_noload},
              {"c_startup", g.c_startup},
              {"p_min", g.p_min},
              {"p_max", g.p_max},
              {"min_up", g.min_up},
              {"min_down", g.min_down},
              {"ramp_up", g.ramp_up},
              {"ramp_down", g.ramp_down},
              {"startup_ramp", g.startup_ramp},
              {"init_status", g.init_on ? "on" : "off"},
              {"init_duration", g.init_duration},
              {"init_power", g.init_power}};
}

Generator generator_from_json(const json& j, const std::string& path) {
  Generator g;
  try {
    g.id = j.at("id").get<int>();
    g.c_var = j.at("c_var").get<double>();
    g.c_noload = j.at("c_noload").get<double>();
    g.c_startup = j.at("c_startup").get<double>();
    g.p_min = j.at("p_min").get<double>();
    g.p_max = j.at("p_max").get<double>();
    g.min_up = j.at("min_up").get<int>();
    g.min_down = j.at("min_down").get<int>();
    g.ramp_up = j.at("ramp_up").get<double>();
    g.ramp_down = j.at("ramp_down").get<double>();
    g.startup_ramp = j.at("startup_ramp").get<double>();
    const std::string st = j.at("init_status").get<std::string>();
    if (st != "on" && st != "off") throw ParseError(path + ".init_status: expected \"on\" or \"off\"");
    g.init_on = (st == "on");
    g.init_duration = j.at("init_duration").get<int>();
    g.init_power = j.at("init_power").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return g;
}

}  // namespace

void validate_instance(const UcInstance& inst) {
  require(!inst.generators.empty(), "generators", "at least one generator required");
  const int t = inst.profiles.horizon;
  require(t >= 1, "horizon", "must be >= 1");
  require(static_cast<int>(inst.profiles.load.size()) == t, "profiles.load", "length != horizon");
  require(static_cast<int>(inst.profiles.solar.size()) == t, "profiles.solar", "length != horizon");
  require(static_cast<int>(inst.profiles.wind.size()) == t, "profiles.wind", "length != horizon");
  for (int k = 0; k < t; ++k) {
    require(inst.profiles.load[k] >= 0.0, "profiles.load[" + std::to_string(k) + "]", "negative");
    require(inst.profiles.solar[k] >= 0.0, "profiles.solar[" + std::to_string(k) + "]", "negative");
    require(inst.profiles.wind[k] >= 0.0, "profiles.wind[" + std::to_string(k) + "]", "negative");
  }
  for (size_t i = 0; i < inst.generators.size(); ++i) {
    const Generator& g = inst.generators[i];
    const std::string p = "generators[" + std::to_string(i) + "]";
    require(g.c_var >= 0.0, p + ".c_var", "negative");
    require(g.c_noload >= 0.0, p + ".c_noload", "negative");
    require(g.c_startup >= 0.0, p + ".c_startup", "negative");
    require(g.p_min >= 0.0, p + ".p_min", "negative");
    require(g.p_min <= g.p_max, p + ".p_min", "exceeds p_max");
    require(g.min_up >= 1, p + ".min_up", "must be >= 1");
    require(g.min_down >= 1, p + ".min_down", "must be >= 1");
    require(g.ramp_up > 0.0, p + ".ramp_up", "must be > 0");
    require(g.ramp_down > 0.0, p + ".ramp_down", "must be > 0");
    require(g.startup_ramp >= g.p_min, p + ".startup_ramp", "below p_min");
    require(g.init_duration >= 0, p + ".init_duration", "negative");
    if (g.init_on) {
      require(g.init_power >= g.p_min && g.init_power <= g.p_max, p + ".init_power",
              "outside [p_min, p_max] while initially on");
    } else {
      require(g.init_power == 0.0, p + ".init_power", "nonzero while initially off");
    }
  }
  const Storage& s = inst.storage;
  require(s.energy_cap >= 0.0, "storage.energy_cap", "negative");
  require(s.p_charge_max >= 0.0, "storage.p_charge_max", "negative");
  require(s.p_discharge_max >= 0.0, "storage.p_discharge_max", "negative");
  require(s.eff_charge > 0.0 && s.eff_charge <= 1.0, "storage.eff_charge", "outside (0,1]");
  require(s.eff_discharge > 0.0 && s.eff_discharge <= 1.0, "storage.eff_discharge", "outside (0,1]");
  require(s.soc_init >= 0.0 && s.soc_init <= s.energy_cap, "storage.soc_init",
          "outside [0, energy_cap]");
}

std::string instance_to_json(const UcInstance& inst) {
  json j;
  j["id"] = inst.id;
  j["horizon"] = inst.profiles.horizon;
  json gens = json::array();
  for (const Generator& g : inst.generators) gens.push_back(generator_to_json(g));
  j["generators"] = gens;
  j["storage"] = json{{"energy_cap", inst.storage.energy_cap},
                      {"p_charge_max", inst.storage.p_charge_max},
                      {"p_discharge_max", inst.storage.p_discharge_max},
                      {"eff_charge", inst.storage.eff_charge},
                      {"eff_discharge", inst.storage.eff_discharge},
                      {"soc_init", inst.storage.soc_init}};
  j["profiles"] = json{{"load", inst.profiles.load},
                       {"solar", inst.profiles.solar},
                       {"wind", inst.profiles.wind}};
  return j.dump(2) + "\n";
}

UcInstance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("instance JSON: ") + e.what());
  }
  UcInstance inst;
  try {
    inst.id = j.at("id").get<std::string>();
    inst.profiles.horizon = j.at("horizon").get<int>();
    const json& gens = j.at("generators");
    for (size_t i = 0; i < gens.size(); ++i)
      inst.generators.push_back(generator_from_json(gens[i], "generators[" + std::to_string(i) + "]"));
    const json& st = j.at("storage");
    inst.storage.energy_cap = st.at("energy_cap").get<double>();
    inst.storage.p_charge_max = st.at("p_charge_max").get<double>();
    inst.storage.p_discharge_max = st.at("p_discharge_max").get<double>();
    inst.storage.eff_charge = st.at("eff_charge").get<double>();
    inst.storage.eff_discharge = st.at("eff_discharge").get<double>();
    inst.storage.soc_init = st.at("soc_init").get<double>();
    const json& pr = j.at("profiles");
    inst.profiles.load = pr.at("load").get<std::vector<double>>();
    inst.profiles.solar = pr.at("solar").get<std::vector<double>>();
    inst.profiles.wind = pr.at("wind").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("instance JSON: ") + e.what());
  }
  validate_instance(inst);
  return inst;
}

UcInstance load_instance(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return instance_from_json(buf.str());
}

void save_instance(const UcInstance& inst, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw UcError("cannot write " + path);
  f << instance_to_json(inst);
}

SystemSeries net_load(const UcInstance& inst) {
  const int t_len = inst.horizon();
  SystemSeries out;
  out.net_load.resize(t_len);
  out.ramp_req.resize(t_len);
  for (int t = 0; t < t_len; ++t)
    out.net_load[t] = inst.profiles.load[t] - inst.profiles.solar[t] - inst.profiles.wind[t];
  double init_point = 0.0;
  for (const Generator& g : inst.generators) init_point += g.init_power;
  out.ramp_req[0] = out.net_load[0] - init_point;
  for (int t = 1; t < t_len; ++t) out.ramp_req[t] = out.net_load[t] - out.net_load[t - 1];
  return out;
}

void fill_capacity(SystemSeries& series, const UcInstance& inst, const Schedule& schedule) {
  const int t_len = inst.horizon();
  series.online_cap.assign(t_len, 0.0);
  series.ramp_cap.assign(t_len, 0.0);
  for (int i = 0; i < inst.num_gens(); ++i) {
    const Generator& g = inst.generators[i];
    const std::uint8_t* row = schedule.row(i);
    for (int t = 0; t < t_len; ++t) {
      if (row[t]) {
        series.online_cap[t] += g.p_max;
        series.ramp_cap[t] += g.ramp_up;
      }
    }
  }
}

std::vector<Block> compute_blocks(const std::uint8_t* row, int horizon, bool init_on,
                                  int init_duration) {
  std::vector<Block> blocks;
  int t = 0;
  while (t < horizon) {
    const bool on = row[t] != 0;
    int end = t;
    while (end + 1 < horizon && (row[end + 1] != 0) == on) ++end;
    Block b;
    b.t0 = t;
    b.t1 = end;
    b.on = on;
    b.effective_len = b.len();
    if (t == 0 && on == init_on) b.effective_len += init_duration;
    blocks.push_back(b);
    t = end + 1;
  }
  return blocks;
}

std::vector<Block> compute_blocks(const std::vector<std::uint8_t>& row, bool init_on,
                                  int init_duration) {
  return compute_blocks(row.data(), static_cast<int>(row.size()), init_on, init_duration);
}

void check_row_min_times(const Generator& g, const std::uint8_t* row, int horizon,
                         std::vector<Violation>& out) {
  // The initial run must finish its minimum time before the unit may switch.
  if (g.init_on && g.init_duration < g.min_up && row[0] == 0) {
    out.push_back({ViolationKind::MinUp, g.id, 0, 0,
                   "initial on-run shut down after " + std::to_string(g.init_duration) +
                       "h, min_up " + std::to_string(g.min_up)});
  }
  if (!g.init_on && g.init_duration < g.min_down && row[0] == 1) {
    out.push_back({ViolationKind::MinDown, g.id, 0, 0,
                   "initial off-run restarted after " + std::to_string(g.init_duration) +
                       "h, min_down " + std::to_string(g.min_down)});
  }
  // A block running into the end of the horizon may finish its minimum time
  // beyond it, mirroring the MILP's windowed constraints.
  for (const Block& b : compute_blocks(row, horizon, g.init_on, g.init_duration)) {
    if (b.t1 == horizon - 1) continue;
    if (b.on && b.effective_len < g.min_up) {
      out.push_back({ViolationKind::MinUp, g.id, b.t0, b.t1,
                     "on-block effective length " + std::to_string(b.effective_len) +
                         " < min_up " + std::to_string(g.min_up)});
    } else if (!b.on && b.effective_len < g.min_down) {
      out.push_back({ViolationKind::MinDown, g.id, b.t0, b.t1,
                     "off-block effective length " + std::to_string(b.effective_len) +
                         " < min_down " + std::to_string(g.min_down)});
    }
  }
}

ViolationReport validate_schedule(const UcInstance& inst, const Schedule& schedule) {
  if (schedule.num_gens != inst.num_gens() || schedule.horizon != inst.horizon())
    throw ValidationError("schedule: dimensions do not match instance");
  ViolationReport report;
  for (int i = 0; i < inst.num_gens(); ++i)
    check_row_min_times(inst.generators[i], schedule.row(i), inst.horizon(), report.violations);
  SystemSeries series = net_load(inst);
  fill_capacity(series, inst, schedule);
  for (int t = 0; t < inst.horizon(); ++t) {
    const double cap = series.online_cap[t] + inst.storage.p_discharge_max;
    if (cap < series.net_load[t] - 1e-9) {
      report.violations.push_back({ViolationKind::Capacity, -1, t, t,
                                   "online capacity " + std::to_string(cap) +
                                       " below net load " + std::to_string(series.net_load[t])});
    }
  }
  return report;
}

Schedule schedule_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("schedule JSON: ") + e.what());
  }
  Schedule out;
  try {
    const json& rows = j.at("s");
    out.num_gens = static_cast<int>(rows.size());
    out.horizon = out.num_gens > 0 ? static_cast<int>(rows[0].size()) : 0;
    out.s.resize(static_cast<size_t>(out.num_gens) * out.horizon);
    for (int i = 0; i < out.num_gens; ++i) {
      if (static_cast<int>(rows[i].size()) != out.horizon)
        throw ParseError("schedule JSON: ragged rows");
      for (int t = 0; t < out.horizon; ++t) {
        const int v = rows[i][t].get<int>();
        if (v != 0 && v != 1) throw ParseError("schedule JSON: entries must be 0 or 1");
        out.at(i, t) = static_cast<std::uint8_t>(v);
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("schedule JSON: ") + e.what());
  }
  return out;
}

std::string schedule_to_json(const Schedule& schedule, const std::string& instance_id) {
  json rows = json::array();
  for (int i = 0; i < schedule.num_gens; ++i) {
    json row = json::array();
    for (int t = 0; t < schedule.horizon; ++t) row.push_back(static_cast<int>(schedule.at(i, t)));
    rows.push_back(row);
  }
  json j;
  j["instance_id"] = instance_id;
  j["s"] = rows;
  return j.dump(2) + "\n";
}

Schedule load_schedule(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return schedule_from_json(buf.str());
}

void save_schedule(const Schedule& schedule, const std::string& instance_id,
                   const std::string& path) {
  std::ofstream f(path);
  if (!f) throw UcError("cannot write " + path);
  f << schedule_to_json(schedule, instance_id);
}

}  // namespace uc
