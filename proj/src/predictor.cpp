#include "uc/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace uc {

using nlohmann::json;

namespace {

constexpr double kLnEps = PredictorConfig::kLayerNormEps;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Mat transpose(const Mat& m) {
  Mat out(m.cols, m.rows);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) out(c, r) = m(r, c);
  return out;
}

Mat col_slice(const Mat& m, int c0, int width) {
  Mat out(m.rows, width);
  for (int r = 0; r < m.rows; ++r)
    for (int j = 0; j < width; ++j) out(r, j) = m(r, c0 + j);
  return out;
}

void col_add(Mat& dst, const Mat& src, int c0) {
  for (int r = 0; r < src.rows; ++r)
    for (int j = 0; j < src.cols; ++j) dst(r, c0 + j) += src(r, j);
}

void add_row_bias(Mat& m, const Mat& bias) {
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) m(r, c) += bias(0, c);
}

void add_colsum(Mat& bias_grad, const Mat& g) {
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) bias_grad(0, c) += g(r, c);
}

Mat affine(const Mat& x, const Mat& w, const Mat& b) {
  Mat out(x.rows, w.cols);
  kernels::matmul(x, w, out);
  add_row_bias(out, b);
  return out;
}

struct LayerCache {
  Mat h_in;   // layer input
  Mat a;      // post first layer norm
  Mat q, k, v;
  std::vector<Mat> attn;  // per-head softmax rows
  Mat concat;
  Mat drop1;  // scaled dropout mask, empty in eval mode
  Mat h_mid;  // after the attention residual
  Mat b;      // post second layer norm
  Mat f1;     // FFN hidden, post ReLU
  Mat drop2;
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  Mat h_final;
  Mat c1;         // classifier hidden, post ReLU
  Mat logits_tn;  // horizon x num_gens
};

Mat dropout_mask(int rows, int cols, double p, Rng& rng) {
  Mat m(rows, cols);
  const double keep = 1.0 - p;
  for (auto& v : m.a) v = (rng.uniform() < keep) ? 1.0 / keep : 0.0;
  return m;
}

void apply_mask(Mat& x, const Mat& mask) {
  for (size_t i = 0; i < x.a.size(); ++i) x.a[i] *= mask.a[i];
}

Mat forward_impl(const Params& P, const Mat& input, const PredictorConfig& cfg, bool train_mode,
                 Rng* rng, ForwardCache* cache) {
  if (input.rows != cfg.horizon || input.cols != cfg.num_feats)
    throw ValidationError("input: expected " + std::to_string(cfg.horizon) + "x" +
                          std::to_string(cfg.num_feats));
  const int d = cfg.d_model;
  const int dk = cfg.d_head();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const bool dropping = train_mode && cfg.dropout > 0.0 && rng != nullptr;

  Mat h(cfg.horizon, d);
  kernels::matmul(input, P.we, h);
  add_row_bias(h, P.be);
  for (size_t i = 0; i < h.a.size(); ++i) h.a[i] += P.phi.a[i];

  if (cache) cache->layers.resize(P.layers.size());
  for (size_t l = 0; l < P.layers.size(); ++l) {
    const LayerParams& lp = P.layers[l];
    LayerCache* lc = cache ? &cache->layers[l] : nullptr;
    if (lc) lc->h_in = h;

    Mat a(cfg.horizon, d);
    kernels::layer_norm_rows(h, lp.ln1_g.a, lp.ln1_b.a, kLnEps, a);
    Mat q = affine(a, lp.wq, lp.bq);
    Mat k = affine(a, lp.wk, lp.bk);
    Mat v = affine(a, lp.wv, lp.bv);

    Mat concat(cfg.horizon, d);
    if (lc) lc->attn.resize(cfg.heads);
    for (int hd = 0; hd < cfg.heads; ++hd) {
      Mat qh = col_slice(q, hd * dk, dk);
      Mat kh = col_slice(k, hd * dk, dk);
      Mat vh = col_slice(v, hd * dk, dk);
      Mat scores(cfg.horizon, cfg.horizon);
      kernels::matmul_bt(qh, kh, scores);
      for (auto& s : scores.a) s *= scale;
      kernels::softmax_rows(scores);
      Mat oh(cfg.horizon, dk);
      kernels::matmul(scores, vh, oh);
      col_add(concat, oh, hd * dk);
      if (lc) lc->attn[hd] = std::move(scores);
    }
    Mat m = affine(concat, lp.wo, lp.bo);
    if (lc) {
      lc->a = std::move(a);
      lc->q = std::move(q);
      lc->k = std::move(k);
      lc->v = std::move(v);
      lc->concat = std::move(concat);
    }
    if (dropping) {
      Mat mask = dropout_mask(m.rows, m.cols, cfg.dropout, *rng);
      apply_mask(m, mask);
      if (lc) lc->drop1 = std::move(mask);
    }
    for (size_t i = 0; i < h.a.size(); ++i) h.a[i] += m.a[i];
    if (lc) lc->h_mid = h;

    Mat b(cfg.horizon, d);
    kernels::layer_norm_rows(h, lp.ln2_g.a, lp.ln2_b.a, kLnEps, b);
    Mat f1 = affine(b, lp.w1, lp.b1);
    for (auto& x : f1.a) x = std::max(0.0, x);
    Mat f2 = affine(f1, lp.w2, lp.b2);
    if (lc) {
      lc->b = std::move(b);
      lc->f1 = std::move(f1);
    }
    if (dropping) {
      Mat mask = dropout_mask(f2.rows, f2.cols, cfg.dropout, *rng);
      apply_mask(f2, mask);
      if (lc) lc->drop2 = std::move(mask);
    }
    for (size_t i = 0; i < h.a.size(); ++i) h.a[i] += f2.a[i];
  }

  Mat c1 = affine(h, P.wc1, P.bc1);
  for (auto& x : c1.a) x = std::max(0.0, x);
  Mat logits_tn = affine(c1, P.wc2, P.bc2);
  if (cache) {
    cache->h_final = std::move(h);
    cache->c1 = c1;
    cache->logits_tn = logits_tn;
  }
  return transpose(logits_tn);
}

/// Layer-norm backward; accumulates gain/offset grads, returns input grad.
Mat ln_backward(const Mat& x, const Mat& dy, const Mat& gain, Mat& dgain, Mat& dbias) {
  const int d = x.cols;
  Mat dx(x.rows, d);
  for (int r = 0; r < x.rows; ++r) {
    double mean = 0.0;
    for (int c = 0; c < d; ++c) mean += x(r, c);
    mean /= d;
    double var = 0.0;
    for (int c = 0; c < d; ++c) {
      const double t = x(r, c) - mean;
      var += t * t;
    }
    var /= d;
    const double rstd = 1.0 / std::sqrt(var + kLnEps);

    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (int c = 0; c < d; ++c) {
      const double xhat = (x(r, c) - mean) * rstd;
      const double g = dy(r, c);
      dgain(0, c) += g * xhat;
      dbias(0, c) += g;
      const double dxhat = g * gain(0, c);
      mean_dxhat += dxhat;
      mean_dxhat_xhat += dxhat * xhat;
    }
    mean_dxhat /= d;
    mean_dxhat_xhat /= d;
    for (int c = 0; c < d; ++c) {
      const double xhat = (x(r, c) - mean) * rstd;
      const double dxhat = dy(r, c) * gain(0, c);
      dx(r, c) = rstd * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
    }
  }
  return dx;
}

void backward_sample(const Params& P, const PredictorConfig& cfg, const ForwardCache& c,
                     const Mat& input, const Mat& dlogits_tn, Grads& g) {
  const int dk = cfg.d_head();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  // Classifier head.
  Mat dwc2_inc(P.wc2.rows, P.wc2.cols);
  kernels::matmul_at(c.c1, dlogits_tn, dwc2_inc);
  for (size_t i = 0; i < g.wc2.a.size(); ++i) g.wc2.a[i] += dwc2_inc.a[i];
  add_colsum(g.bc2, dlogits_tn);
  Mat dc1(c.c1.rows, c.c1.cols);
  kernels::matmul_bt(dlogits_tn, P.wc2, dc1);
  for (size_t i = 0; i < dc1.a.size(); ++i)
    if (c.c1.a[i] <= 0.0) dc1.a[i] = 0.0;
  Mat dwc1_inc(P.wc1.rows, P.wc1.cols);
  kernels::matmul_at(c.h_final, dc1, dwc1_inc);
  for (size_t i = 0; i < g.wc1.a.size(); ++i) g.wc1.a[i] += dwc1_inc.a[i];
  add_colsum(g.bc1, dc1);
  Mat dh(c.h_final.rows, c.h_final.cols);
  kernels::matmul_bt(dc1, P.wc1, dh);

  for (int l = static_cast<int>(P.layers.size()) - 1; l >= 0; --l) {
    const LayerParams& lp = P.layers[l];
    const LayerCache& lc = c.layers[l];
    LayerParams& gl = g.layers[l];

    // FFN block: h = h_mid + drop(f2(b(h_mid))).
    Mat df2 = dh;
    if (lc.drop2.rows > 0) apply_mask(df2, lc.drop2);
    Mat dw2_inc(lp.w2.rows, lp.w2.cols);
    kernels::matmul_at(lc.f1, df2, dw2_inc);
    for (size_t i = 0; i < gl.w2.a.size(); ++i) gl.w2.a[i] += dw2_inc.a[i];
    add_colsum(gl.b2, df2);
    Mat df1(lc.f1.rows, lc.f1.cols);
    kernels::matmul_bt(df2, lp.w2, df1);
    for (size_t i = 0; i < df1.a.size(); ++i)
      if (lc.f1.a[i] <= 0.0) df1.a[i] = 0.0;
    Mat dw1_inc(lp.w1.rows, lp.w1.cols);
    kernels::matmul_at(lc.b, df1, dw1_inc);
    for (size_t i = 0; i < gl.w1.a.size(); ++i) gl.w1.a[i] += dw1_inc.a[i];
    add_colsum(gl.b1, df1);
    Mat db(lc.b.rows, lc.b.cols);
    kernels::matmul_bt(df1, lp.w1, db);
    Mat dh_mid = ln_backward(lc.h_mid, db, lp.ln2_g, gl.ln2_g, gl.ln2_b);
    for (size_t i = 0; i < dh.a.size(); ++i) dh_mid.a[i] += dh.a[i];  // residual

    // Attention block: h_mid = h_in + drop(wo(concat(heads(a(h_in))))).
    Mat dm = dh_mid;
    if (lc.drop1.rows > 0) apply_mask(dm, lc.drop1);
    Mat dwo_inc(lp.wo.rows, lp.wo.cols);
    kernels::matmul_at(lc.concat, dm, dwo_inc);
    for (size_t i = 0; i < gl.wo.a.size(); ++i) gl.wo.a[i] += dwo_inc.a[i];
    add_colsum(gl.bo, dm);
    Mat dconcat(lc.concat.rows, lc.concat.cols);
    kernels::matmul_bt(dm, lp.wo, dconcat);

    Mat dq(lc.q.rows, lc.q.cols), dkq(lc.k.rows, lc.k.cols), dv(lc.v.rows, lc.v.cols);
    for (int hd = 0; hd < cfg.heads; ++hd) {
      Mat doh = col_slice(dconcat, hd * dk, dk);
      const Mat& attn = lc.attn[hd];
      Mat vh = col_slice(lc.v, hd * dk, dk);
      Mat qh = col_slice(lc.q, hd * dk, dk);
      Mat kh = col_slice(lc.k, hd * dk, dk);

      Mat dattn(attn.rows, attn.cols);
      kernels::matmul_bt(doh, vh, dattn);
      Mat dvh(vh.rows, vh.cols);
      kernels::matmul_at(attn, doh, dvh);

      // Softmax rows: ds = p * (dp - <dp, p>).
      Mat ds(attn.rows, attn.cols);
      for (int r = 0; r < attn.rows; ++r) {
        double dot = 0.0;
        for (int cc = 0; cc < attn.cols; ++cc) dot += dattn(r, cc) * attn(r, cc);
        for (int cc = 0; cc < attn.cols; ++cc)
          ds(r, cc) = attn(r, cc) * (dattn(r, cc) - dot);
      }
      for (auto& x : ds.a) x *= scale;

      Mat dqh(qh.rows, qh.cols);
      kernels::matmul(ds, kh, dqh);
      Mat dkh(kh.rows, kh.cols);
      kernels::matmul_at(ds, qh, dkh);

      col_add(dq, dqh, hd * dk);
      col_add(dkq, dkh, hd * dk);
      col_add(dv, dvh, hd * dk);
    }

    Mat da(lc.a.rows, lc.a.cols);
    Mat scratch(lc.a.rows, lc.a.cols);
    Mat dwq_inc(lp.wq.rows, lp.wq.cols);
    kernels::matmul_at(lc.a, dq, dwq_inc);
    for (size_t i = 0; i < gl.wq.a.size(); ++i) gl.wq.a[i] += dwq_inc.a[i];
    add_colsum(gl.bq, dq);
    kernels::matmul_bt(dq, lp.wq, scratch);
    for (size_t i = 0; i < da.a.size(); ++i) da.a[i] += scratch.a[i];

    Mat dwk_inc(lp.wk.rows, lp.wk.cols);
    kernels::matmul_at(lc.a, dkq, dwk_inc);
    for (size_t i = 0; i < gl.wk.a.size(); ++i) gl.wk.a[i] += dwk_inc.a[i];
    add_colsum(gl.bk, dkq);
    kernels::matmul_bt(dkq, lp.wk, scratch);
    for (size_t i = 0; i < da.a.size(); ++i) da.a[i] += scratch.a[i];

    Mat dwv_inc(lp.wv.rows, lp.wv.cols);
    kernels::matmul_at(lc.a, dv, dwv_inc);
    for (size_t i = 0; i < gl.wv.a.size(); ++i) gl.wv.a[i] += dwv_inc.a[i];
    add_colsum(gl.bv, dv);
    kernels::matmul_bt(dv, lp.wv, scratch);
    for (size_t i = 0; i < da.a.size(); ++i) da.a[i] += scratch.a[i];

    Mat dh_in = ln_backward(lc.h_in, da, lp.ln1_g, gl.ln1_g, gl.ln1_b);
    for (size_t i = 0; i < dh.a.size(); ++i) dh.a[i] = dh_mid.a[i] + dh_in.a[i];
  }

  // Embedding: h0 = input * we + be + phi.
  Mat dwe_inc(P.we.rows, P.we.cols);
  kernels::matmul_at(input, dh, dwe_inc);
  for (size_t i = 0; i < g.we.a.size(); ++i) g.we.a[i] += dwe_inc.a[i];
  add_colsum(g.be, dh);
  for (size_t i = 0; i < g.phi.a.size(); ++i) g.phi.a[i] += dh.a[i];
}

Params zero_like(const Params& p) {
  Params z = p;
  z.for_each([](const std::string&, Mat& m) { m.zero(); });
  return z;
}

}  // namespace

void PredictorConfig::check() const {
  if (horizon < 1) throw ValidationError("config.horizon: must be >= 1");
  if (num_feats < 1) throw ValidationError("config.num_feats: must be >= 1");
  if (num_gens < 1) throw ValidationError("config.num_gens: must be >= 1");
  if (d_model < 1 || layers < 1 || heads < 1 || ffn_dim < 1 || classifier_hidden < 1)
    throw ValidationError("config: dimensions must be >= 1");
  if (d_model % heads != 0) throw ValidationError("config.d_model: not divisible by heads");
  if (dropout < 0.0 || dropout >= 1.0) throw ValidationError("config.dropout: outside [0,1)");
  if (pos_weight <= 0.0) throw ValidationError("config.pos_weight: must be > 0");
  if (batch_size < 1 || epochs < 1) throw ValidationError("config: batch/epochs must be >= 1");
}

Params init_params(const PredictorConfig& cfg) {
  cfg.check();
  Params p;
  p.we = Mat(cfg.num_feats, cfg.d_model);
  p.be = Mat(1, cfg.d_model);
  p.phi = Mat(cfg.horizon, cfg.d_model);  // stays exactly zero
  p.layers.resize(cfg.layers);
  for (auto& lp : p.layers) {
    lp.ln1_g = Mat(1, cfg.d_model);
    lp.ln1_b = Mat(1, cfg.d_model);
    lp.wq = Mat(cfg.d_model, cfg.d_model);
    lp.bq = Mat(1, cfg.d_model);
    lp.wk = Mat(cfg.d_model, cfg.d_model);
    lp.bk = Mat(1, cfg.d_model);
    lp.wv = Mat(cfg.d_model, cfg.d_model);
    lp.bv = Mat(1, cfg.d_model);
    lp.wo = Mat(cfg.d_model, cfg.d_model);
    lp.bo = Mat(1, cfg.d_model);
    lp.ln2_g = Mat(1, cfg.d_model);
    lp.ln2_b = Mat(1, cfg.d_model);
    lp.w1 = Mat(cfg.d_model, cfg.ffn_dim);
    lp.b1 = Mat(1, cfg.ffn_dim);
    lp.w2 = Mat(cfg.ffn_dim, cfg.d_model);
    lp.b2 = Mat(1, cfg.d_model);
  }
  p.wc1 = Mat(cfg.d_model, cfg.classifier_hidden);
  p.bc1 = Mat(1, cfg.classifier_hidden);
  p.wc2 = Mat(cfg.classifier_hidden, cfg.num_gens);
  p.bc2 = Mat(1, cfg.num_gens);

  Rng rng(cfg.seed);
  p.for_each([&rng](const std::string& name, Mat& m) {
    const bool is_gain = name.find("ln") != std::string::npos && name.back() == 'g';
    const bool is_offset = name.find("ln") != std::string::npos && name.back() == 'b';
    const bool is_bias = !is_gain && !is_offset && m.rows == 1;
    if (name == "phi" || is_offset || is_bias) return;  // zeros
    if (is_gain) {
      std::fill(m.a.begin(), m.a.end(), 1.0);
      return;
    }
    const double limit = std::sqrt(6.0 / (m.rows + m.cols));
    for (auto& v : m.a) v = rng.uniform(-limit, limit);
  });
  return p;
}

NormStats fit_norm_stats(const std::vector<const Profiles*>& train_profiles) {
  NormStats stats;
  stats.mu.assign(3, 0.0);
  stats.sigma.assign(3, 0.0);
  long count = 0;
  for (const Profiles* p : train_profiles) count += p->horizon;
  if (count == 0) throw ValidationError("norm stats: empty training split");
  for (const Profiles* p : train_profiles) {
    for (int t = 0; t < p->horizon; ++t) {
      stats.mu[0] += p->load[t];
      stats.mu[1] += p->solar[t];
      stats.mu[2] += p->wind[t];
    }
  }
  for (double& m : stats.mu) m /= static_cast<double>(count);
  for (const Profiles* p : train_profiles) {
    for (int t = 0; t < p->horizon; ++t) {
      const double d0 = p->load[t] - stats.mu[0];
      const double d1 = p->solar[t] - stats.mu[1];
      const double d2 = p->wind[t] - stats.mu[2];
      stats.sigma[0] += d0 * d0;
      stats.sigma[1] += d1 * d1;
      stats.sigma[2] += d2 * d2;
    }
  }
  for (double& s : stats.sigma) s = std::sqrt(s / static_cast<double>(count));
  return stats;
}

Mat normalize_profiles(const Profiles& profiles, const NormStats& stats) {
  Mat out(profiles.horizon, 3);
  for (int t = 0; t < profiles.horizon; ++t) {
    out(t, 0) = (profiles.load[t] - stats.mu[0]) / (stats.sigma[0] + NormStats::kEps);
    out(t, 1) = (profiles.solar[t] - stats.mu[1]) / (stats.sigma[1] + NormStats::kEps);
    out(t, 2) = (profiles.wind[t] - stats.mu[2]) / (stats.sigma[2] + NormStats::kEps);
  }
  return out;
}

Mat forward(const Params& params, const Mat& input, const PredictorConfig& cfg, bool train_mode,
            Rng* dropout_rng) {
  return forward_impl(params, input, cfg, train_mode, dropout_rng, nullptr);
}

double bce_loss(const Mat& logits, const Mat& targets, double pos_weight) {
  if (logits.rows != targets.rows || logits.cols != targets.cols)
    throw ValidationError("bce: shape mismatch");
  double total = 0.0;
  for (size_t i = 0; i < logits.a.size(); ++i) {
    const double z = logits.a[i];
    const double y = targets.a[i];
    total += pos_weight * y * softplus(-z) + (1.0 - y) * softplus(z);
  }
  return total / static_cast<double>(logits.a.size());
}

double loss_and_gradients(const Params& params, const std::vector<const Sample*>& batch,
                          const PredictorConfig& cfg, bool train_mode, std::uint64_t step,
                          Grads& out) {
  if (batch.empty()) throw ValidationError("loss_and_gradients: empty batch");
  const int nb = static_cast<int>(batch.size());
  const double denom =
      static_cast<double>(nb) * cfg.num_gens * cfg.horizon;  // mean over (b, i, t)

  std::vector<Grads> partial(nb);
  std::vector<double> losses(nb, 0.0);
  Rng base(cfg.seed);

  par::for_indexed(nb, nb >= 4, [&](int s) {
    const Sample& sample = *batch[s];
    ForwardCache cache;
    Rng drop_rng = base.derive(0xD40F0000ULL + step).derive(static_cast<std::uint64_t>(s));
    Rng* rng_ptr = train_mode && cfg.dropout > 0.0 ? &drop_rng : nullptr;
    Mat logits = forward_impl(params, sample.input, cfg, train_mode, rng_ptr, &cache);

    double local = 0.0;
    Mat dlogits(logits.rows, logits.cols);
    for (size_t i = 0; i < logits.a.size(); ++i) {
      const double z = logits.a[i];
      const double y = sample.targets.a[i];
      local += cfg.pos_weight * y * softplus(-z) + (1.0 - y) * softplus(z);
      dlogits.a[i] =
          (cfg.pos_weight * y * (sigmoid(z) - 1.0) + (1.0 - y) * sigmoid(z)) / denom;
    }
    losses[s] = local;
    partial[s] = zero_like(params);
    Mat dlogits_tn = transpose(dlogits);
    backward_sample(params, cfg, cache, sample.input, dlogits_tn, partial[s]);
  });

  out = zero_like(params);
  double loss = 0.0;
  for (int s = 0; s < nb; ++s) {
    loss += losses[s];
    std::vector<Mat*> dst, src;
    out.for_each([&dst](const std::string&, Mat& m) { dst.push_back(&m); });
    partial[s].for_each([&src](const std::string&, Mat& m) { src.push_back(&m); });
    for (size_t k = 0; k < dst.size(); ++k)
      for (size_t i = 0; i < dst[k]->a.size(); ++i) dst[k]->a[i] += src[k]->a[i];
  }
  return loss / denom;
}

double one_cycle_lr(double lr_base, long step, long total_steps) {
  const long warm = std::max(1L, static_cast<long>(std::floor(0.3 * total_steps)));
  if (step < warm) {
    const double lo = lr_base / 25.0;
    return lo + (lr_base - lo) * (static_cast<double>(step) / static_cast<double>(warm));
  }
  const double lr_end = lr_base * 1e-4;
  double q = total_steps > warm
                 ? static_cast<double>(step - warm) / static_cast<double>(total_steps - warm)
                 : 1.0;
  q = std::min(1.0, std::max(0.0, q));
  return lr_end + (lr_base - lr_end) * 0.5 * (1.0 + std::cos(M_PI * q));
}

void adamw_step(Params& params, const Grads& grads, AdamState& state, double lr,
                double weight_decay, double grad_clip) {
  if (state.m.we.a.empty()) {
    state.m = zero_like(params);
    state.v = zero_like(params);
    state.steps = 0;
  }
  double norm_sq = 0.0;
  grads.for_each([&norm_sq](const std::string&, const Mat& mm) {
    for (double x : mm.a) norm_sq += x * x;
  });
  const double norm = std::sqrt(norm_sq);
  const double clip = (grad_clip > 0.0 && norm > grad_clip) ? grad_clip / norm : 1.0;

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  ++state.steps;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.steps));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.steps));

  std::vector<Mat*> tp, tm, tv;
  std::vector<const Mat*> tg;
  params.for_each([&tp](const std::string&, Mat& mm) { tp.push_back(&mm); });
  state.m.for_each([&tm](const std::string&, Mat& mm) { tm.push_back(&mm); });
  state.v.for_each([&tv](const std::string&, Mat& mm) { tv.push_back(&mm); });
  grads.for_each([&tg](const std::string&, const Mat& mm) { tg.push_back(&mm); });
  for (size_t k = 0; k < tp.size(); ++k) {
    for (size_t i = 0; i < tp[k]->a.size(); ++i) {
      double& theta = tp[k]->a[i];
      theta *= 1.0 - lr * weight_decay;  // decoupled decay first
      const double gval = tg[k]->a[i] * clip;
      double& m1 = tm[k]->a[i];
      double& m2 = tv[k]->a[i];
      m1 = kBeta1 * m1 + (1.0 - kBeta1) * gval;
      m2 = kBeta2 * m2 + (1.0 - kBeta2) * gval * gval;
      theta -= lr * (m1 / bc1) / (std::sqrt(m2 / bc2) + kAdamEps);
    }
  }
}

TrainResult train(const std::vector<std::pair<const Profiles*, const Schedule*>>& dataset,
                  const PredictorConfig& cfg) {
  cfg.check();
  if (dataset.empty()) throw ValidationError("train: empty dataset");
  for (const auto& [prof, sched] : dataset) {
    if (prof->horizon != cfg.horizon || sched->horizon != cfg.horizon ||
        sched->num_gens != cfg.num_gens)
      throw ValidationError("train: sample shape does not match config");
  }

  // Deterministic validation split.
  const int n = static_cast<int>(dataset.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng split_rng = Rng(cfg.seed).derive(0x5137);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[split_rng.uniform_int(0, i)]);
  const int val_n = n >= 10 ? n / 10 : (n >= 2 ? 1 : 0);
  std::vector<int> val_idx(order.begin(), order.begin() + val_n);
  std::vector<int> train_idx(order.begin() + val_n, order.end());

  TrainResult result;
  std::vector<const Profiles*> train_profiles;
  for (int i : train_idx) train_profiles.push_back(dataset[i].first);
  result.stats = fit_norm_stats(train_profiles);

  auto make_sample = [&](int i) {
    Sample s;
    s.input = normalize_profiles(*dataset[i].first, result.stats);
    s.targets = Mat(cfg.num_gens, cfg.horizon);
    for (int g = 0; g < cfg.num_gens; ++g)
      for (int t = 0; t < cfg.horizon; ++t) s.targets(g, t) = dataset[i].second->at(g, t);
    return s;
  };
  std::vector<Sample> train_set, val_set;
  for (int i : train_idx) train_set.push_back(make_sample(i));
  for (int i : val_idx) val_set.push_back(make_sample(i));

  result.params = init_params(cfg);
  AdamState opt;
  Grads grads;
  const int train_n = static_cast<int>(train_set.size());
  const long steps_per_epoch = (train_n + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = steps_per_epoch * cfg.epochs;

  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> perm(train_n);
    for (int i = 0; i < train_n; ++i) perm[i] = i;
    Rng shuffle_rng = Rng(cfg.seed).derive(0xE90C + static_cast<std::uint64_t>(epoch));
    for (int i = train_n - 1; i > 0; --i) std::swap(perm[i], perm[shuffle_rng.uniform_int(0, i)]);

    double epoch_loss = 0.0;
    double lr = 0.0;
    for (int start = 0; start < train_n; start += cfg.batch_size) {
      const int stop = std::min(train_n, start + cfg.batch_size);
      std::vector<const Sample*> batch;
      for (int i = start; i < stop; ++i) batch.push_back(&train_set[perm[i]]);

      const double loss = loss_and_gradients(result.params, batch, cfg, true,
                                             static_cast<std::uint64_t>(step), grads);
      if (!std::isfinite(loss))
        throw NonFiniteLoss("training loss non-finite at step " + std::to_string(step));
      epoch_loss += loss * static_cast<double>(batch.size());

      lr = one_cycle_lr(cfg.lr_base, step, total_steps);
      adamw_step(result.params, grads, opt, lr, cfg.weight_decay, cfg.grad_clip);
      ++step;
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss / std::max(1, train_n);
    log.lr_last = lr;
    if (!val_set.empty()) {
      long correct = 0, total = 0;
      for (const Sample& s : val_set) {
        Mat logits = forward(result.params, s.input, cfg, false);
        for (size_t i = 0; i < logits.a.size(); ++i) {
          const int pred = sigmoid(logits.a[i]) > 0.5 ? 1 : 0;
          correct += pred == static_cast<int>(s.targets.a[i]);
          ++total;
        }
      }
      log.val_accuracy = static_cast<double>(correct) / static_cast<double>(total);
    }
    result.log.push_back(log);
  }
  return result;
}

ProbabilityTensor predict_probs(const Params& params, const Profiles& profiles,
                                const NormStats& stats, const PredictorConfig& cfg) {
  Mat input = normalize_profiles(profiles, stats);
  ProbabilityTensor pt;
  pt.logits = forward(params, input, cfg, false);
  pt.probs = Mat(pt.logits.rows, pt.logits.cols);
  for (size_t i = 0; i < pt.logits.a.size(); ++i) pt.probs.a[i] = sigmoid(pt.logits.a[i]);
  return pt;
}

Schedule threshold_schedule(const ProbabilityTensor& probs, double tau) {
  Schedule s(probs.probs.rows, probs.probs.cols);
  for (int i = 0; i < probs.probs.rows; ++i)
    for (int t = 0; t < probs.probs.cols; ++t) s.at(i, t) = probs.probs(i, t) > tau ? 1 : 0;
  return s;
}

std::pair<Schedule, ProbabilityTensor> predict(const Params& params, const Profiles& profiles,
                                               const NormStats& stats, const PredictorConfig& cfg,
                                               double tau) {
  ProbabilityTensor pt = predict_probs(params, profiles, stats, cfg);
  return {threshold_schedule(pt, tau), std::move(pt)};
}

namespace {

json config_to_json(const PredictorConfig& c) {
  return json{{"horizon", c.horizon},
              {"num_feats", c.num_feats},
              {"num_gens", c.num_gens},
              {"d_model", c.d_model},
              {"layers", c.layers},
              {"heads", c.heads},
              {"ffn_dim", c.ffn_dim},
              {"classifier_hidden", c.classifier_hidden},
              {"dropout", c.dropout},
              {"pos_weight", c.pos_weight},
              {"weight_decay", c.weight_decay},
              {"grad_clip", c.grad_clip},
              {"lr_base", c.lr_base},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"threshold", c.threshold},
              {"seed", c.seed}};
}

PredictorConfig config_from_json(const json& j) {
  PredictorConfig c;
  c.horizon = j.at("horizon").get<int>();
  c.num_feats = j.at("num_feats").get<int>();
  c.num_gens = j.at("num_gens").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.classifier_hidden = j.at("classifier_hidden").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.pos_weight = j.at("pos_weight").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.grad_clip = j.at("grad_clip").get<double>();
  c.lr_base = j.at("lr_base").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.threshold = j.at("threshold").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_checkpoint(const Params& params, const NormStats& stats, const PredictorConfig& cfg,
                     const std::string& path) {
  json j;
  j["version"] = 1;
  j["config"] = config_to_json(cfg);
  j["stats"] = json{{"mu", stats.mu}, {"sigma", stats.sigma}};
  json tensors = json::object();
  params.for_each([&tensors](const std::string& name, const Mat& m) {
    tensors[name] = json{{"shape", {m.rows, m.cols}}, {"data", m.a}};
  });
  j["tensors"] = std::move(tensors);
  std::ofstream f(path);
  if (!f) throw UcError("cannot write " + path);
  f << j.dump() << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  Checkpoint ck;
  try {
    if (j.at("version").get<int>() != 1) throw ParseError("checkpoint: unknown version");
    ck.config = config_from_json(j.at("config"));
    ck.stats.mu = j.at("stats").at("mu").get<std::vector<double>>();
    ck.stats.sigma = j.at("stats").at("sigma").get<std::vector<double>>();
    ck.params = init_params(ck.config);
    const json& tensors = j.at("tensors");
    ck.params.for_each([&tensors](const std::string& name, Mat& m) {
      const json& t = tensors.at(name);
      const auto shape = t.at("shape").get<std::vector<int>>();
      if (shape.size() != 2 || shape[0] != m.rows || shape[1] != m.cols)
        throw ParseError("checkpoint: shape mismatch for " + name);
      m.a = t.at("data").get<std::vector<double>>();
      if (m.a.size() != static_cast<size_t>(m.rows) * m.cols)
        throw ParseError("checkpoint: data size mismatch for " + name);
    });
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  return ck;
}

std::string probs_to_json(const ProbabilityTensor& pt, const std::string& instance_id) {
  json rows = json::array();
  for (int i = 0; i < pt.probs.rows; ++i) {
    json row = json::array();
    for (int t = 0; t < pt.probs.cols; ++t) row.push_back(pt.probs(i, t));
    rows.push_back(std::move(row));
  }
  json j{{"instance_id", instance_id}, {"probs", rows}};
  return j.dump() + "\n";
}

ProbabilityTensor probs_from_json(const std::string& text, std::string* instance_id) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("probs: ") + e.what());
  }
  ProbabilityTensor pt;
  try {
    if (instance_id) *instance_id = j.at("instance_id").get<std::string>();
    const json& rows = j.at("probs");
    const int n = static_cast<int>(rows.size());
    if (n == 0) throw ParseError("probs: empty matrix");
    const int horizon = static_cast<int>(rows[0].size());
    pt.probs = Mat(n, horizon);
    pt.logits = Mat(n, horizon);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(rows[i].size()) != horizon) throw ParseError("probs: ragged rows");
      for (int t = 0; t < horizon; ++t) {
        double p = rows[i][t].get<double>();
        pt.probs(i, t) = p;
        p = std::min(1.0 - 1e-15, std::max(1e-15, p));
        pt.logits(i, t) = std::log(p / (1.0 - p));
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("probs: ") + e.what());
  }
  return pt;
}

void save_probs(const ProbabilityTensor& pt, const std::string& instance_id,
                const std::string& path) {
  std::ofstream f(path);
  if (!f) throw UcError("cannot write " + path);
  f << probs_to_json(pt, instance_id);
}

ProbabilityTensor load_probs(const std::string& path, std::string* instance_id) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return probs_from_json(buf.str(), instance_id);
}

}  // namespace uc
