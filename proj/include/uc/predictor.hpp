#pragma once

#include <string>
#include <vector>

#include "uc/kernels.hpp"
#include "uc/uc_core.hpp"

namespace uc {

struct PredictorConfig {
  int horizon = 24;
  int num_feats = 3;  // load, solar, wind
  int num_gens = 10;
  int d_model = 32;
  int layers = 2;
  int heads = 4;
  int ffn_dim = 64;
  int classifier_hidden = 64;
  double dropout = 0.05;
  double pos_weight = 1.5;     // positive-class weight in the loss
  double weight_decay = 1e-4;
  double grad_clip = 1.0;
  double lr_base = 1e-3;
  int epochs = 40;
  int batch_size = 16;
  double threshold = 0.5;
  std::uint64_t seed = 1;

  static constexpr double kLayerNormEps = 1e-5;

  int d_head() const { return d_model / heads; }
  void check() const;  // throws ValidationError on bad shapes
};

/// Per-feature standardization statistics, fit on the training split.
struct NormStats {
  static constexpr double kEps = 1e-6;
  std::vector<double> mu;     // size num_feats
  std::vector<double> sigma;  // population sd, size num_feats
};

struct LayerParams {
  Mat ln1_g, ln1_b;  // 1 x d_model
  Mat wq, bq;        // d_model x d_model, 1 x d_model (heads packed by column)
  Mat wk, bk;
  Mat wv, bv;
  Mat wo, bo;
  Mat ln2_g, ln2_b;
  Mat w1, b1;  // d_model x ffn_dim
  Mat w2, b2;  // ffn_dim x d_model
};

struct Params {
  Mat we, be;   // num_feats x d_model, 1 x d_model
  Mat phi;      // horizon x d_model, zero-initialized
  std::vector<LayerParams> layers;
  Mat wc1, bc1;  // d_model x hidden
  Mat wc2, bc2;  // hidden x num_gens

  /// Visits every tensor in a fixed order shared by the optimizer, the
  /// serializer, and the finite-difference tests.
  template <typename Fn>
  void for_each(Fn&& fn) {
    fn("we", we);
    fn("be", be);
    fn("phi", phi);
    for (size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      LayerParams& lp = layers[l];
      fn(p + "ln1_g", lp.ln1_g);
      fn(p + "ln1_b", lp.ln1_b);
      fn(p + "wq", lp.wq);
      fn(p + "bq", lp.bq);
      fn(p + "wk", lp.wk);
      fn(p + "bk", lp.bk);
      fn(p + "wv", lp.wv);
      fn(p + "bv", lp.bv);
      fn(p + "wo", lp.wo);
      fn(p + "bo", lp.bo);
      fn(p + "ln2_g", lp.ln2_g);
      fn(p + "ln2_b", lp.ln2_b);
      fn(p + "w1", lp.w1);
      fn(p + "b1", lp.b1);
      fn(p + "w2", lp.w2);
      fn(p + "b2", lp.b2);
    }
    fn("wc1", wc1);
    fn("bc1", bc1);
    fn("wc2", wc2);
    fn("bc2", bc2);
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    const_cast<Params*>(this)->for_each(
        [&fn](const std::string& name, Mat& m) { fn(name, static_cast<const Mat&>(m)); });
  }
};

/// Gradients share the Params layout.
using Grads = Params;

struct ProbabilityTensor {
  Mat probs;   // num_gens x horizon
  Mat logits;  // num_gens x horizon
};

struct Sample {
  Mat input;    // horizon x num_feats, already normalized
  Mat targets;  // num_gens x horizon, entries 0/1
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;  // element accuracy at threshold 0.5
  double lr_last = 0.0;
};

struct TrainResult {
  Params params;
  NormStats stats;
  std::vector<EpochLog> log;
};

// -- operations --

Params init_params(const PredictorConfig& cfg);

NormStats fit_norm_stats(const std::vector<const Profiles*>& train_profiles);

/// (p_t - mu) / (sigma + eps) per feature column, order load, solar, wind.
Mat normalize_profiles(const Profiles& profiles, const NormStats& stats);

/// Logits num_gens x horizon. Dropout fires only in train mode, driven by a
/// caller-provided stream so batched training stays deterministic.
Mat forward(const Params& params, const Mat& input, const PredictorConfig& cfg, bool train_mode,
            Rng* dropout_rng = nullptr);

double bce_loss(const Mat& logits, const Mat& targets, double pos_weight);

/// Mean loss over the batch plus analytic gradients for every tensor.
double loss_and_gradients(const Params& params, const std::vector<const Sample*>& batch,
                          const PredictorConfig& cfg, bool train_mode, std::uint64_t step,
                          Grads& out);

/// One-cycle schedule as fixed here: linear warmup from lr_base/25 over the
/// first 30% of steps, cosine decay to lr_base/1e4.
double one_cycle_lr(double lr_base, long step, long total_steps);

/// First and second moment buffers for AdamW.
struct AdamState {
  Grads m, v;
  long steps = 0;
};

/// One optimizer step: global-norm clip at grad_clip, decoupled decay
/// theta *= (1 - lr*weight_decay) before the moment update.
void adamw_step(Params& params, const Grads& grads, AdamState& state, double lr,
                double weight_decay, double grad_clip);

TrainResult train(const std::vector<std::pair<const Profiles*, const Schedule*>>& dataset,
                  const PredictorConfig& cfg);

ProbabilityTensor predict_probs(const Params& params, const Profiles& profiles,
                                const NormStats& stats, const PredictorConfig& cfg);

/// u = 1 iff sigma(z) > tau, strictly.
Schedule threshold_schedule(const ProbabilityTensor& probs, double tau);

/// Thresholded commitment plus the probabilities behind it.
std::pair<Schedule, ProbabilityTensor> predict(const Params& params, const Profiles& profiles,
                                               const NormStats& stats, const PredictorConfig& cfg,
                                               double tau);

// Checkpoint and probability-file I/O (the inter-stage contracts).
void save_checkpoint(const Params& params, const NormStats& stats, const PredictorConfig& cfg,
                     const std::string& path);
struct Checkpoint {
  Params params;
  NormStats stats;
  PredictorConfig config;
};
Checkpoint load_checkpoint(const std::string& path);

std::string probs_to_json(const ProbabilityTensor& pt, const std::string& instance_id);
ProbabilityTensor probs_from_json(const std::string& text, std::string* instance_id = nullptr);
void save_probs(const ProbabilityTensor& pt, const std::string& instance_id,
                const std::string& path);
ProbabilityTensor load_probs(const std::string& path, std::string* instance_id = nullptr);

}  // namespace uc
