#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "uc/datagen.hpp"
#include "uc/dispatch.hpp"
#include "uc/harness.hpp"
#include "uc/milp.hpp"
#include "uc/predictor.hpp"
#include "uc/repair.hpp"
#include "uc/warmstart.hpp"

namespace fs = std::filesystem;
using namespace uc;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
}

int cmd_generate(const std::vector<std::string>& base_files, int count, double gap,
                 std::uint64_t seed, const PerturbParams& params, const std::string& out_dir) {
  std::vector<UcInstance> base;
  if (base_files.empty()) {
    base.push_back(base_system());
  } else {
    for (const std::string& f : base_files) base.push_back(instance_from_json(read_file(f)));
  }
  Dataset ds = generate_dataset(base, count, gap, seed, params);
  save_dataset(ds, out_dir);
  std::printf("wrote %zu samples to %s (train %zu / val %zu / test %zu, %d discarded)\n",
              ds.samples.size(), out_dir.c_str(), ds.train_idx.size(), ds.validation_idx.size(),
              ds.test_idx.size(), ds.discarded);
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out_path, PredictorConfig cfg) {
  Dataset ds = load_dataset(data_dir);
  if (ds.samples.empty()) throw ValidationError("train: dataset is empty");
  cfg.num_gens = ds.samples[0].instance.num_gens();
  cfg.horizon = ds.samples[0].instance.horizon();

  std::vector<std::pair<const Profiles*, const Schedule*>> train_set;
  for (int idx : ds.train_idx) {
    const LabeledSample& s = ds.samples[static_cast<size_t>(idx)];
    train_set.emplace_back(&s.instance.profiles, &s.label);
  }
  TrainResult result = train(train_set, cfg);
  save_checkpoint(result.params, result.stats, cfg, out_path);

  const EpochLog& last = result.log.back();
  std::printf("trained %d epochs on %zu samples, final loss %.5f, val accuracy %.4f\n",
              last.epoch + 1, train_set.size(), last.train_loss, last.val_accuracy);
  std::printf("checkpoint: %s\n", out_path.c_str());
  return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& inst_path,
                const std::string& out_path) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  UcInstance inst = instance_from_json(read_file(inst_path));
  ProbabilityTensor probs = predict_probs(ckpt.params, inst.profiles, ckpt.stats, ckpt.config);
  save_probs(probs, inst.id, out_path);
  std::printf("wrote probabilities for %s to %s\n", inst.id.c_str(), out_path.c_str());
  return 0;
}

int cmd_repair(const std::string& inst_path, const std::string& probs_path, double tau,
               const std::string& out_path, const std::string& trace_path) {
  UcInstance inst = instance_from_json(read_file(inst_path));
  ProbabilityTensor probs = load_probs(probs_path);
  Schedule predicted = threshold_schedule(probs, tau);
  RepairResult rep = repair_pipeline(inst, predicted);
  save_schedule(rep.schedule, inst.id, out_path);
  if (!trace_path.empty()) write_file(trace_path, trace_to_json_lines(rep.trace));
  std::printf("%s: %zu edits, %s, cost %.2f\n", inst.id.c_str(), rep.trace.edits.size(),
              rep.dispatch.feasible ? "feasible" : "still infeasible", rep.dispatch.cost);
  return rep.dispatch.feasible ? 0 : 2;
}

int cmd_solve(const std::string& inst_path, double gap, long node_limit, double time_limit,
              const std::string& warm_path, const std::string& probs_path, bool fixation,
              const std::string& out_path) {
  UcInstance inst = instance_from_json(read_file(inst_path));

  MilpResult res;
  if (warm_path.empty() && probs_path.empty()) {
    MilpProblem problem = build_uc_milp(inst);
    BnbOptions opt;
    opt.gap = gap;
    opt.node_limit = node_limit;
    opt.time_limit = time_limit;
    res = solve_bnb(problem, opt);
  } else {
    Schedule warm;
    ProbabilityTensor probs;
    const Schedule* warm_ptr = nullptr;
    const ProbabilityTensor* probs_ptr = nullptr;
    if (!warm_path.empty()) {
      warm = load_schedule(warm_path);
      warm_ptr = &warm;
    }
    if (!probs_path.empty()) {
      probs = load_probs(probs_path);
      probs_ptr = &probs;
    }
    WarmStartOptions opt;
    opt.gap = gap;
    opt.node_limit = node_limit;
    opt.time_limit = time_limit;
    opt.use_fixation = fixation && probs_ptr != nullptr;
    res = warm_start_solve(inst, warm_ptr, nullptr, probs_ptr, opt);
  }

  std::printf("%s: %s, objective %.2f, bound %.2f, gap %.5f, %ld nodes, %ld pivots\n",
              inst.id.c_str(), to_string(res.status), res.objective, res.bound, res.gap,
              res.nodes, res.lp_iterations);
  if (!out_path.empty() &&
      (res.status == MilpStatus::Optimal || res.status == MilpStatus::FeasibleAtGap))
    save_schedule(res.schedule, inst.id, out_path);
  return res.status == MilpStatus::Optimal || res.status == MilpStatus::FeasibleAtGap ? 0 : 2;
}

int cmd_evaluate(const std::string& data_dir, const std::string& ckpt_path,
                 const std::vector<std::string>& variant_names, const std::string& split,
                 HarnessOptions opt, bool serial, const std::string& out_path,
                 const std::string& cdf_path) {
  Dataset ds = load_dataset(data_dir);
  Checkpoint ckpt = load_checkpoint(ckpt_path);

  std::vector<int> pick;
  if (split == "train") pick = ds.train_idx;
  else if (split == "validation") pick = ds.validation_idx;
  else if (split == "test") pick = ds.test_idx;
  else if (split == "all") {
    pick.resize(ds.samples.size());
    for (size_t k = 0; k < pick.size(); ++k) pick[k] = static_cast<int>(k);
  } else {
    throw ValidationError("unknown split '" + split + "'");
  }
  if (pick.empty()) throw ValidationError("split '" + split + "' is empty");

  std::vector<VariantSpec> specs;
  for (const std::string& name : variant_names) specs.push_back(variant_by_name(name));

  // The work clock reads a process-wide pivot counter, so timed stages must
  // not interleave.
  if (opt.work_clock) serial = true;

  const int n = static_cast<int>(pick.size());
  std::vector<BaselineRecord> baselines(n);
  std::vector<std::vector<VariantRecord>> records(n);
  par::for_indexed(n, !serial, [&](int k) {
    const LabeledSample& sample = ds.samples[static_cast<size_t>(pick[k])];
    HarnessOptions local = opt;
    if (!local.work_clock) {
      const auto t0 = std::chrono::steady_clock::now();
      ProbabilityTensor probs =
          predict_probs(ckpt.params, sample.instance.profiles, ckpt.stats, ckpt.config);
      local.prediction_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      baselines[k] = run_baseline(sample.instance, local);
      for (const VariantSpec& spec : specs)
        records[k].push_back(run_variant(sample.instance, probs, spec, local));
    } else {
      ProbabilityTensor probs =
          predict_probs(ckpt.params, sample.instance.profiles, ckpt.stats, ckpt.config);
      baselines[k] = run_baseline(sample.instance, local);
      for (const VariantSpec& spec : specs)
        records[k].push_back(run_variant(sample.instance, probs, spec, local));
    }
  });

  std::vector<MetricRow> all_rows;
  for (const VariantSpec& spec : specs) {
    std::vector<VariantRecord> variant_records;
    for (int k = 0; k < n; ++k)
      for (const VariantRecord& r : records[k])
        if (r.variant == spec.label) variant_records.push_back(r);
    Metrics m = compute_metrics(variant_records, baselines);
    std::printf("%s: feas %.1f%%  O.R. q25/50/75 %.4f/%.4f/%.4f  T.R. median %.2f%%\n",
                spec.label.c_str(), m.feasibility_pct, m.or_q25, m.or_q50, m.or_q75,
                m.tr_pct_median);
    all_rows.insert(all_rows.end(), m.rows.begin(), m.rows.end());
  }

  write_file(out_path, results_csv(all_rows));
  std::printf("results: %s (%zu rows)\n", out_path.c_str(), all_rows.size());
  if (!cdf_path.empty()) {
    write_file(cdf_path, or_cdf_csv(all_rows));
    std::printf("cdf: %s\n", cdf_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unit commitment pipeline: data generation, prediction, repair, solving"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "perturb base instances and label them");
  std::vector<std::string> base_files;
  int count = 200;
  double gen_gap = 0.0025;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "dataset";
  PerturbParams params;
  gen->add_option("--base", base_files, "base instance JSON files (default: bundled system)");
  gen->add_option("--count", count, "number of samples");
  gen->add_option("--gap", gen_gap, "labeling MIP gap");
  gen->add_option("--seed", gen_seed, "dataset seed");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--load-lo", params.load_lo);
  gen->add_option("--load-hi", params.load_hi);
  gen->add_option("--solar-lo", params.solar_lo);
  gen->add_option("--solar-hi", params.solar_hi);
  gen->add_option("--wind-lo", params.wind_lo);
  gen->add_option("--wind-hi", params.wind_hi);
  gen->add_option("--noise", params.noise);
  gen->add_option("--p-zero-net", params.p_zero_net);
  gen->add_option("--p-full-renewable", params.p_full_renewable);

  // train
  auto* tr = app.add_subcommand("train", "fit the commitment predictor on a dataset");
  std::string train_data, train_out = "checkpoint.json";
  PredictorConfig cfg;
  tr->add_option("--data", train_data, "dataset directory")->required();
  tr->add_option("--out", train_out, "checkpoint path");
  tr->add_option("--epochs", cfg.epochs);
  tr->add_option("--d-model", cfg.d_model);
  tr->add_option("--layers", cfg.layers);
  tr->add_option("--heads", cfg.heads);
  tr->add_option("--ffn", cfg.ffn_dim);
  tr->add_option("--hidden", cfg.classifier_hidden);
  tr->add_option("--batch", cfg.batch_size);
  tr->add_option("--lr", cfg.lr_base);
  tr->add_option("--dropout", cfg.dropout);
  tr->add_option("--seed", cfg.seed);

  // predict
  auto* pr = app.add_subcommand("predict", "commitment probabilities for one instance");
  std::string pred_ckpt, pred_inst, pred_out = "probs.json";
  pr->add_option("--checkpoint", pred_ckpt)->required();
  pr->add_option("--instance", pred_inst)->required();
  pr->add_option("--out", pred_out);

  // repair
  auto* rp = app.add_subcommand("repair", "threshold probabilities and repair the schedule");
  std::string rep_inst, rep_probs, rep_out = "schedule.json", rep_trace;
  double rep_tau = 0.5;
  rp->add_option("--instance", rep_inst)->required();
  rp->add_option("--probs", rep_probs)->required();
  rp->add_option("--tau", rep_tau, "commitment threshold");
  rp->add_option("--out", rep_out);
  rp->add_option("--trace", rep_trace, "write the edit trace as JSON lines");

  // solve
  auto* sv = app.add_subcommand("solve", "branch-and-bound solve, optionally warm started");
  std::string sol_inst, sol_warm, sol_probs, sol_out;
  double sol_gap = 0.0025, sol_tlimit = -1.0;
  long sol_nlimit = -1;
  bool sol_fix = false;
  sv->add_option("--instance", sol_inst)->required();
  sv->add_option("--gap", sol_gap);
  sv->add_option("--node-limit", sol_nlimit);
  sv->add_option("--time-limit", sol_tlimit);
  sv->add_option("--warm", sol_warm, "warm-start schedule JSON");
  sv->add_option("--probs", sol_probs, "probability file for fixation");
  sv->add_flag("--fixation", sol_fix, "pin high-confidence commitments");
  sv->add_option("--schedule", sol_out, "write the solution schedule here");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "run pipeline ablations and write metrics CSV");
  std::string ev_data, ev_ckpt, ev_split = "test", ev_out = "results.csv", ev_cdf;
  std::vector<std::string> ev_variants = {"M1", "M2", "M3", "M4", "M5", "M6"};
  HarnessOptions hopt;
  bool ev_serial = false;
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--checkpoint", ev_ckpt)->required();
  ev->add_option("--variants", ev_variants, "subset of M1..M6");
  ev->add_option("--split", ev_split, "train|validation|test|all");
  ev->add_option("--gap", hopt.gap);
  ev->add_option("--tau", hopt.tau);
  ev->add_option("--tau-high", hopt.tau_high);
  ev->add_option("--tau-low", hopt.tau_low);
  ev->add_option("--node-limit", hopt.node_limit);
  ev->add_option("--out", ev_out, "results CSV path");
  ev->add_option("--cdf", ev_cdf, "optimality-ratio CDF CSV path");
  ev->add_flag("--serial", ev_serial, "evaluate instances one at a time");
  ev->add_flag("--work-clock", hopt.work_clock,
               "deterministic pivot-count clock instead of wall time (implies --serial)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(base_files, count, gen_gap, gen_seed, params, gen_out);
    if (tr->parsed()) return cmd_train(train_data, train_out, cfg);
    if (pr->parsed()) return cmd_predict(pred_ckpt, pred_inst, pred_out);
    if (rp->parsed()) return cmd_repair(rep_inst, rep_probs, rep_tau, rep_out, rep_trace);
    if (sv->parsed())
      return cmd_solve(sol_inst, sol_gap, sol_nlimit, sol_tlimit, sol_warm, sol_probs, sol_fix,
                       sol_out);
    if (ev->parsed())
      return cmd_evaluate(ev_data, ev_ckpt, ev_variants, ev_split, hopt, ev_serial, ev_out,
                          ev_cdf);
  } catch (const UcError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
