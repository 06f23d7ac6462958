#include "uc/datagen.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "uc/milp.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace uc {

namespace {

Generator make_gen(int id, double pmin, double pmax, double cvar, double cnoload,
                   double cstartup, int mu, int md, double ramp, double su, bool init_on,
                   int init_dur, double init_p) {
  Generator g;
  g.id = id;
  g.p_min = pmin;
  g.p_max = pmax;
  g.c_var = cvar;
  g.c_noload = cnoload;
  g.c_startup = cstartup;
  g.min_up = mu;
  g.min_down = md;
  g.ramp_up = ramp;
  g.ramp_down = ramp;
  g.startup_ramp = su;
  g.init_on = init_on;
  g.init_duration = init_dur;
  g.init_power = init_p;
  return g;
}

}  // namespace

UcInstance base_system() {
  UcInstance inst;
  inst.id = "desk10";

  // Two coal units carry the base load and are already running.
  inst.generators.push_back(
      make_gen(0, 120.0, 300.0, 18.0, 60.0, 500.0, 8, 8, 60.0, 130.0, true, 12, 220.0));
  inst.generators.push_back(
      make_gen(1, 100.0, 250.0, 20.0, 55.0, 400.0, 8, 8, 55.0, 110.0, true, 12, 160.0));

  // Mid-merit combined-cycle units.
  inst.generators.push_back(
      make_gen(2, 60.0, 180.0, 32.0, 30.0, 150.0, 4, 4, 90.0, 70.0, true, 6, 110.0));
  inst.generators.push_back(
      make_gen(3, 50.0, 160.0, 34.0, 28.0, 140.0, 4, 4, 85.0, 60.0, false, 6, 0.0));
  inst.generators.push_back(
      make_gen(4, 50.0, 150.0, 36.0, 27.0, 130.0, 4, 3, 80.0, 60.0, false, 6, 0.0));

  // Fast gas peakers.
  inst.generators.push_back(
      make_gen(5, 20.0, 90.0, 55.0, 10.0, 40.0, 2, 2, 90.0, 90.0, false, 4, 0.0));
  inst.generators.push_back(
      make_gen(6, 15.0, 80.0, 58.0, 10.0, 38.0, 2, 2, 80.0, 80.0, false, 4, 0.0));
  inst.generators.push_back(
      make_gen(7, 15.0, 70.0, 62.0, 9.0, 35.0, 1, 1, 70.0, 70.0, false, 4, 0.0));
  inst.generators.push_back(
      make_gen(8, 10.0, 60.0, 65.0, 8.0, 30.0, 1, 1, 60.0, 60.0, false, 4, 0.0));

  // Expensive oil peaker of last resort.
  inst.generators.push_back(
      make_gen(9, 30.0, 180.0, 90.0, 15.0, 80.0, 1, 1, 180.0, 180.0, false, 4, 0.0));

  Storage st;
  st.energy_cap = 400.0;
  st.p_charge_max = 100.0;
  st.p_discharge_max = 100.0;
  st.eff_charge = 0.95;
  st.eff_discharge = 0.95;
  st.soc_init = 200.0;
  inst.storage = st;

  inst.profiles.horizon = 24;
  inst.profiles.load = {560, 520, 495, 480, 485, 510, 580, 680, 780, 860, 910, 940,
                        950, 945, 930, 920, 930, 970, 1020, 1050, 1020, 940, 800, 660};
  inst.profiles.solar = {0, 0, 0, 0, 0, 5,  25,  60,  100, 135, 160, 175,
                         180, 175, 160, 135, 100, 60, 25,  5,   0,   0,   0, 0};
  inst.profiles.wind = {95, 105, 118, 126, 130, 122, 110, 96,  84,  76,  72,  70,
                        74, 82,  92,  104, 116, 126, 132, 128, 118, 108, 100, 96};
  return inst;
}

Profiles perturb_profiles(const Profiles& profiles, std::uint64_t seed,
                          const PerturbParams& params) {
  const int horizon = profiles.horizon;
  Rng rng(seed);
  Profiles out = profiles;

  const double s_load = rng.uniform(params.load_lo, params.load_hi);
  const double s_solar = rng.uniform(params.solar_lo, params.solar_hi);
  const double s_wind = rng.uniform(params.wind_lo, params.wind_hi);

  auto jitter = [&](std::vector<double>& series, double scale, Rng noise_rng) {
    std::vector<double> white(horizon);
    for (double& w : white) w = noise_rng.uniform(-1.0, 1.0);
    for (int t = 0; t < horizon; ++t) {
      double smooth = white[t];
      int n = 1;
      if (t > 0) {
        smooth += white[t - 1];
        ++n;
      }
      if (t + 1 < horizon) {
        smooth += white[t + 1];
        ++n;
      }
      smooth /= n;
      series[t] = std::max(0.0, series[t] * scale * (1.0 + params.noise * smooth));
    }
  };

  jitter(out.load, s_load, rng.derive(1));
  jitter(out.solar, s_solar, rng.derive(2));
  jitter(out.wind, s_wind, rng.derive(3));

  const double special = rng.derive(4).uniform();
  if (special < params.p_zero_net) {
    // Scale renewables up until the tightest hour's net load touches zero.
    double k = kInf;
    for (int t = 0; t < horizon; ++t) {
      const double ren = out.solar[t] + out.wind[t];
      if (ren > 1e-12) k = std::min(k, out.load[t] / ren);
    }
    if (std::isfinite(k)) {
      for (int t = 0; t < horizon; ++t) {
        out.solar[t] *= k;
        out.wind[t] *= k;
      }
    }
  } else if (special < params.p_zero_net + params.p_full_renewable) {
    // Match total renewable energy to total load.
    const double ren = std::accumulate(out.solar.begin(), out.solar.end(), 0.0) +
                       std::accumulate(out.wind.begin(), out.wind.end(), 0.0);
    const double load = std::accumulate(out.load.begin(), out.load.end(), 0.0);
    if (ren > 1e-12) {
      const double k = load / ren;
      for (int t = 0; t < horizon; ++t) {
        out.solar[t] *= k;
        out.wind[t] *= k;
      }
    }
  }

  return out;
}

Dataset generate_dataset(const std::vector<UcInstance>& base, int count, double gap,
                         std::uint64_t seed, const PerturbParams& params) {
  if (count < 0) throw ValidationError("generate_dataset: count must be >= 0");
  if (count > 0 && base.empty())
    throw ValidationError("generate_dataset: need at least one base instance");

  Dataset ds;
  ds.seed = seed;
  ds.gap = gap;
  const Rng root(seed);

  for (int k = 0; k < count; ++k) {
    const UcInstance& origin = base[static_cast<size_t>(k) % base.size()];
    for (std::uint64_t attempt = 0;; ++attempt) {
      UcInstance cand = origin;
      cand.id = origin.id + "_" + std::to_string(k);
      cand.profiles = perturb_profiles(
          origin.profiles, root.derive(0xDA7A0000ULL + static_cast<std::uint64_t>(k))
                               .derive(attempt)
                               .next_u64(),
          params);

      MilpProblem problem = build_uc_milp(cand);
      BnbOptions opt;
      opt.gap = gap;
      MilpResult res = solve_bnb(problem, opt);
      if (res.status == MilpStatus::Optimal || res.status == MilpStatus::FeasibleAtGap) {
        LabeledSample sample;
        sample.instance = std::move(cand);
        sample.label = res.schedule;
        sample.objective = res.objective;
        sample.gap = res.gap;
        ds.samples.push_back(std::move(sample));
        break;
      }
      ++ds.discarded;
      if (ds.discarded > count)
        throw LabelingFailure("more than half of all perturbations were infeasible (" +
                              std::to_string(ds.discarded) + " discards for " +
                              std::to_string(count) + " samples)");
    }
  }

  // 80/10/10 split, shuffled by the dataset seed.
  std::vector<int> order(static_cast<size_t>(count));
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle = root.derive(0x5B17);
  for (int i = count - 1; i > 0; --i) {
    const int j = static_cast<int>(shuffle.uniform_int(0, i));
    std::swap(order[i], order[j]);
  }
  const int n_test = count / 10;
  const int n_val = count / 10;
  for (int i = 0; i < count; ++i) {
    if (i < n_test) {
      ds.test_idx.push_back(order[i]);
    } else if (i < n_test + n_val) {
      ds.validation_idx.push_back(order[i]);
    } else {
      ds.train_idx.push_back(order[i]);
    }
  }
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
  std::sort(ds.validation_idx.begin(), ds.validation_idx.end());
  std::sort(ds.test_idx.begin(), ds.test_idx.end());
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "instances");
  fs::create_directories(fs::path(dir) / "labels");

  json manifest;
  manifest["seed"] = ds.seed;
  manifest["gap"] = ds.gap;
  manifest["discarded"] = ds.discarded;
  manifest["train"] = ds.train_idx;
  manifest["validation"] = ds.validation_idx;
  manifest["test"] = ds.test_idx;

  json order = json::array();
  for (const LabeledSample& s : ds.samples) order.push_back(s.instance.id);
  manifest["order"] = order;

  for (const LabeledSample& s : ds.samples) {
    save_instance(s.instance, (fs::path(dir) / "instances" / (s.instance.id + ".json")).string());
    json label;
    label["schedule"] = json::parse(schedule_to_json(s.label, s.instance.id));
    label["objective"] = s.objective;
    label["gap"] = s.gap;
    std::ofstream os(fs::path(dir) / "labels" / (s.instance.id + ".json"));
    if (!os) throw UcError("cannot write label for " + s.instance.id);
    os << label.dump(2) << "\n";
  }

  std::ofstream os(fs::path(dir) / "manifest.json");
  if (!os) throw UcError("cannot write manifest under " + dir);
  os << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream is(fs::path(dir) / "manifest.json");
  if (!is) throw ParseError("missing manifest.json under " + dir);
  json manifest;
  try {
    manifest = json::parse(is);
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest.json: ") + e.what());
  }

  Dataset ds;
  try {
    ds.seed = manifest.at("seed").get<std::uint64_t>();
    ds.gap = manifest.at("gap").get<double>();
    ds.discarded = manifest.at("discarded").get<int>();
    ds.train_idx = manifest.at("train").get<std::vector<int>>();
    ds.validation_idx = manifest.at("validation").get<std::vector<int>>();
    ds.test_idx = manifest.at("test").get<std::vector<int>>();

    for (const auto& id_json : manifest.at("order")) {
      const std::string id = id_json.get<std::string>();
      LabeledSample sample;
      sample.instance = load_instance((fs::path(dir) / "instances" / (id + ".json")).string());

      std::ifstream ls(fs::path(dir) / "labels" / (id + ".json"));
      if (!ls) throw ParseError("missing label for " + id);
      std::stringstream buf;
      buf << ls.rdbuf();
      json label = json::parse(buf.str());
      sample.label = schedule_from_json(label.at("schedule").dump());
      sample.objective = label.at("objective").get<double>();
      sample.gap = label.at("gap").get<double>();
      ds.samples.push_back(std::move(sample));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset: ") + e.what());
  }
  return ds;
}

}  // namespace uc
