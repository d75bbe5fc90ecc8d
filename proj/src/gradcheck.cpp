// SPDX-License-Identifier: Apache-2.0
#include "vqa/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "vqa/dual_rank.hpp"
#include "vqa/gru.hpp"
#include "vqa/rng.hpp"
#include "vqa/seq_autoencoder.hpp"

namespace vqa {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

double max_relative_error(const Mat& analytic, const Mat& numeric, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, relative_error(analytic[i], numeric[i], floor));
  }
  return worst;
}

Mat numeric_gradient(const std::function<double()>& loss, Mat& param, double eps) {
  Mat g = zeros_like(param);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double saved = param[i];
    param[i] = saved + eps;
    const double up = loss();
    param[i] = saved - eps;
    const double down = loss();
    param[i] = saved;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

Vec numeric_gradient(const std::function<double()>& loss, Vec& x, double eps) {
  Vec g(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = loss();
    x[i] = saved - eps;
    const double down = loss();
    x[i] = saved;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t draw_dim(Rng& rng, std::size_t max) { return 1 + rng.index(max); }

Vec random_vec(std::size_t n, Rng& rng, double scale = 1.0) {
  Vec v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

void randomize(std::vector<Mat*> params, Rng& rng, double scale) {
  for (Mat* m : params) {
    for (double& v : m->flat()) v = rng.uniform(-scale, scale);
  }
}

double vec_error(const Vec& analytic, const Vec& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, relative_error(analytic[i], numeric[i]));
  }
  return worst;
}

double weighted_sum(const std::vector<Vec>& weights, const std::vector<Vec>& values) {
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += dot(weights[i], values[i]);
  return acc;
}

}  // namespace

GradcheckResult gradcheck_gru_cell(std::uint64_t seed, std::size_t instances) {
  const auto start = Clock::now();
  GradcheckResult res{"gru-cell", instances, 0.0, 0.0};
  Rng rng(seed);
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t d = draw_dim(rng, 6);
    const std::size_t h = draw_dim(rng, 4);
    GruLayer layer = GruLayer::init(d, h, rng, n % 2 == 1);
    randomize(layer.params(), rng, 1.0);
    Vec x = random_vec(d, rng);
    Vec h_prev = random_vec(h, rng, 0.9);
    const Vec w = random_vec(h, rng);

    auto loss = [&] { return dot(w, gru_cell_forward(layer, x, h_prev).h); };

    GruLayer grads = layer.zeros_like();
    const CellGrads cg = gru_cell_backward(layer, gru_cell_forward(layer, x, h_prev), w, grads);

    auto lp = layer.params();
    auto gp = grads.params();
    for (std::size_t i = 0; i < lp.size(); ++i) {
      res.max_rel_error =
          std::max(res.max_rel_error, max_relative_error(*gp[i], numeric_gradient(loss, *lp[i])));
    }
    res.max_rel_error = std::max(res.max_rel_error, vec_error(cg.dx, numeric_gradient(loss, x)));
    res.max_rel_error =
        std::max(res.max_rel_error, vec_error(cg.dh_prev, numeric_gradient(loss, h_prev)));
  }
  res.seconds = seconds_since(start);
  return res;
}

GradcheckResult gradcheck_gru_stack(std::uint64_t seed, std::size_t instances) {
  const auto start = Clock::now();
  GradcheckResult res{"gru-stack", instances, 0.0, 0.0};
  Rng rng(seed);
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t steps = draw_dim(rng, 5);
    const std::size_t d = draw_dim(rng, 6);
    const std::size_t h = draw_dim(rng, 4);
    GruStack stack = GruStack::init(d, h, rng, 2, 0.5);
    randomize(stack.params(), rng, 1.0);
    Mat seq(steps, d);
    for (double& v : seq.flat()) v = rng.uniform(-1.0, 1.0);
    std::vector<Vec> h0{random_vec(h, rng, 0.5), random_vec(h, rng, 0.5)};
    std::vector<Vec> d_top, d_final;
    for (std::size_t t = 0; t < steps; ++t) d_top.push_back(random_vec(h, rng));
    for (std::size_t l = 0; l < 2; ++l) d_final.push_back(random_vec(h, rng));
    const Rng mask_rng = rng.split();

    auto loss = [&] {
      Rng r = mask_rng;
      const StackTrace tr = stack_forward(stack, seq, h0, true, r);
      std::vector<Vec> tops;
      for (std::size_t t = 0; t < steps; ++t) tops.push_back(tr.top(t));
      return weighted_sum(d_top, tops) + weighted_sum(d_final, tr.final_states());
    };

    Rng r = mask_rng;
    const StackTrace tr = stack_forward(stack, seq, h0, true, r);
    GruStack grads = stack.zeros_like();
    const std::vector<Vec> dh0 = stack_backward(stack, tr, d_top, d_final, grads);

    auto sp = stack.params();
    auto gp = grads.params();
    for (std::size_t i = 0; i < sp.size(); ++i) {
      res.max_rel_error =
          std::max(res.max_rel_error, max_relative_error(*gp[i], numeric_gradient(loss, *sp[i])));
    }
    for (std::size_t l = 0; l < 2; ++l) {
      res.max_rel_error =
          std::max(res.max_rel_error, vec_error(dh0[l], numeric_gradient(loss, h0[l])));
    }
  }
  res.seconds = seconds_since(start);
  return res;
}

GradcheckResult gradcheck_seq_autoencoder(std::uint64_t seed, std::size_t instances) {
  const auto start = Clock::now();
  GradcheckResult res{"seq-autoencoder", instances, 0.0, 0.0};
  Rng rng(seed);
  const Variant variants[] = {Variant::kPresent, Variant::kPast, Variant::kFuture};
  for (std::size_t n = 0; n < instances; ++n) {
    SeqAeConfig cfg;
    cfg.variant = variants[n % 3];
    cfg.unroll = draw_dim(rng, 5);
    cfg.feat_dim = draw_dim(rng, 6);
    cfg.hidden = draw_dim(rng, 4);
    SeqAeModel model = SeqAeModel::init(cfg, rng);
    randomize(model.params(), rng, 0.6);
    Mat clip(3 * cfg.unroll, cfg.feat_dim);
    for (double& v : clip.flat()) v = rng.uniform(-1.0, 1.0);
    const Windows w = build_targets(cfg.variant, clip, cfg.unroll, cfg.unroll);
    const Rng mask_rng = rng.split();

    auto loss = [&] {
      Rng r = mask_rng;
      return forward_reconstruct(model, w, true, r).loss;
    };

    Rng r = mask_rng;
    const ReconForward fwd = forward_reconstruct(model, w, true, r);
    SeqAeModel grads = reconstruct_backward(model, w, fwd);
    auto mp = model.params();
    auto gp = grads.params();
    for (std::size_t i = 0; i < mp.size(); ++i) {
      res.max_rel_error =
          std::max(res.max_rel_error, max_relative_error(*gp[i], numeric_gradient(loss, *mp[i])));
    }
  }
  res.seconds = seconds_since(start);
  return res;
}

namespace {

RankItem random_rank_item(const RankConfig& cfg, std::size_t k, Rng& rng) {
  RankItem item;
  item.visual = random_vec(cfg.visual_dim, rng);
  for (std::size_t j = 0; j < k; ++j) {
    item.candidates.push_back(
        {random_vec(cfg.word_dim, rng), random_vec(cfg.sent_dim, rng), "c" + std::to_string(j)});
  }
  item.correct = rng.index(k);
  return item;
}

// Smallest |hinge| over all negatives and both channels.
double min_margin_residual(const RankModel& model, const RankItem& item) {
  double worst = 1e300;
  const ChannelEmbedding pos = embed_channels(model, item.visual, item.candidates[item.correct]);
  for (std::size_t j = 0; j < item.candidates.size(); ++j) {
    if (j == item.correct) continue;
    const ChannelEmbedding neg = embed_channels(model, item.visual, item.candidates[j]);
    const double hw = model.config.alpha - dot(pos.v_p, pos.p) + dot(neg.v_p, neg.p);
    const double hs = model.config.beta - dot(pos.v_s, pos.s) + dot(neg.v_s, neg.s);
    worst = std::min({worst, std::abs(hw), std::abs(hs)});
  }
  return worst;
}

}  // namespace

GradcheckResult gradcheck_dual_rank(std::uint64_t seed, std::size_t instances) {
  const auto start = Clock::now();
  GradcheckResult res{"dual-rank", instances, 0.0, 0.0};
  Rng rng(seed);
  for (std::size_t n = 0; n < instances; ++n) {
    RankConfig cfg;
    cfg.visual_dim = draw_dim(rng, 6);
    cfg.word_dim = draw_dim(rng, 6);
    cfg.sent_dim = draw_dim(rng, 6);
    cfg.word_space = draw_dim(rng, 4);
    cfg.sent_space = draw_dim(rng, 4);
    cfg.lambda = rng.uniform();
    const std::size_t k = 2 + rng.index(4);
    RankModel model;
    RankItem item;
    do {
      model = RankModel::init(cfg, rng);
      randomize(model.params(), rng, 1.0);
      item = random_rank_item(cfg, k, rng);
    } while (min_margin_residual(model, item) < 1e-3);

    auto loss = [&] { return dual_loss(model, item); };
    RankModel grads = dual_loss_gradient(model, item);
    auto mp = model.params();
    auto gp = grads.params();
    for (std::size_t i = 0; i < mp.size(); ++i) {
      res.max_rel_error =
          std::max(res.max_rel_error, max_relative_error(*gp[i], numeric_gradient(loss, *mp[i])));
    }
  }
  res.seconds = seconds_since(start);
  return res;
}

std::vector<GradcheckResult> gradcheck_all(std::uint64_t seed, std::size_t instances) {
  return {gradcheck_gru_cell(seed, instances), gradcheck_gru_stack(seed + 1, instances),
          gradcheck_seq_autoencoder(seed + 2, instances), gradcheck_dual_rank(seed + 3, instances)};
}

}  // namespace vqa
