// SPDX-License-Identifier: Apache-2.0
#include "vqa/dual_rank.hpp"

#include <algorithm>

#include "vqa/error.hpp"
#include "vqa/parallel.hpp"

namespace vqa {

RankModel RankModel::init(const RankConfig& config, Rng& rng) {
  require(config.lambda >= 0.0 && config.lambda <= 1.0, ErrorKind::kConfig,
          "lambda must be in [0, 1]");
  const double a = config.init_range;
  RankModel m;
  m.config = config;
  m.w_vp = uniform_init(config.word_space, config.visual_dim, -a, a, rng);
  m.w_vs = uniform_init(config.sent_space, config.visual_dim, -a, a, rng);
  m.w_pv = uniform_init(config.word_space, config.word_dim, -a, a, rng);
  m.w_sv = uniform_init(config.sent_space, config.sent_dim, -a, a, rng);
  return m;
}

RankModel RankModel::zeros_like() const {
  RankModel g;
  g.config = config;
  g.w_vp = vqa::zeros_like(w_vp);
  g.w_vs = vqa::zeros_like(w_vs);
  g.w_pv = vqa::zeros_like(w_pv);
  g.w_sv = vqa::zeros_like(w_sv);
  return g;
}

std::vector<Mat*> RankModel::params() { return {&w_vp, &w_vs, &w_pv, &w_sv}; }

std::vector<const Mat*> RankModel::params() const { return {&w_vp, &w_vs, &w_pv, &w_sv}; }

std::vector<std::pair<std::string, const Mat*>> RankModel::named_params() const {
  return {{"w_vp", &w_vp}, {"w_vs", &w_vs}, {"w_pv", &w_pv}, {"w_sv", &w_sv}};
}

namespace {

void check_item(const RankItem& item) {
  require(item.candidates.size() >= 2, ErrorKind::kConfig,
          "rank item needs at least two candidates");
  if (item.correct >= item.candidates.size()) {
    fail(ErrorKind::kIndex, "correct index " + std::to_string(item.correct) +
                                " out of range for " + std::to_string(item.candidates.size()) +
                                " candidates");
  }
}

// Normalized inputs and mapped vectors for every candidate of an item.
struct Prepared {
  Vec v_hat, v_p, v_s;
  std::vector<Vec> y_hat, z_hat, p, s;
};

Prepared prepare(const RankModel& model, const RankItem& item) {
  Prepared pr;
  pr.v_hat = l2_normalize(item.visual);
  pr.v_p = matvec(model.w_vp, pr.v_hat);
  pr.v_s = matvec(model.w_vs, pr.v_hat);
  for (const auto& c : item.candidates) {
    pr.y_hat.push_back(l2_normalize(c.word));
    pr.z_hat.push_back(l2_normalize(c.sent));
    pr.p.push_back(matvec(model.w_pv, pr.y_hat.back()));
    pr.s.push_back(matvec(model.w_sv, pr.z_hat.back()));
  }
  return pr;
}

double word_hinge(const RankModel& m, const Prepared& pr, std::size_t pos, std::size_t neg) {
  return m.config.alpha - dot(pr.v_p, pr.p[pos]) + dot(pr.v_p, pr.p[neg]);
}

double sent_hinge(const RankModel& m, const Prepared& pr, std::size_t pos, std::size_t neg) {
  return m.config.beta - dot(pr.v_s, pr.s[pos]) + dot(pr.v_s, pr.s[neg]);
}

void add_word_grad(const Prepared& pr, std::size_t pos, std::size_t neg, double w,
                   RankModel& g) {
  if (w == 0.0) return;
  Vec dp = pr.p[neg];
  axpy(-1.0, pr.p[pos], dp);
  add_outer(g.w_vp, dp, pr.v_hat, w);
  Vec dy = pr.y_hat[neg];
  axpy(-1.0, pr.y_hat[pos], dy);
  add_outer(g.w_pv, pr.v_p, dy, w);
}

void add_sent_grad(const Prepared& pr, std::size_t pos, std::size_t neg, double w,
                   RankModel& g) {
  if (w == 0.0) return;
  Vec ds = pr.s[neg];
  axpy(-1.0, pr.s[pos], ds);
  add_outer(g.w_vs, ds, pr.v_hat, w);
  Vec dz = pr.z_hat[neg];
  axpy(-1.0, pr.z_hat[pos], dz);
  add_outer(g.w_sv, pr.v_s, dz, w);
}

}  // namespace

ChannelEmbedding embed_channels(const RankModel& model, std::span<const double> v,
                                const RankCandidate& cand) {
  const Vec v_hat = l2_normalize(v);
  ChannelEmbedding e;
  e.v_p = matvec(model.w_vp, v_hat);
  e.v_s = matvec(model.w_vs, v_hat);
  e.p = matvec(model.w_pv, l2_normalize(cand.word));
  e.s = matvec(model.w_sv, l2_normalize(cand.sent));
  return e;
}

double dual_loss(const RankModel& model, const RankItem& item) {
  check_item(item);
  const Prepared pr = prepare(model, item);
  const double lam = model.config.lambda;
  double loss = 0.0;
  for (std::size_t j = 0; j < item.candidates.size(); ++j) {
    if (j == item.correct) continue;
    loss += lam * std::max(0.0, word_hinge(model, pr, item.correct, j));
    loss += (1.0 - lam) * std::max(0.0, sent_hinge(model, pr, item.correct, j));
  }
  return loss;
}

RankModel dual_loss_gradient(const RankModel& model, const RankItem& item) {
  check_item(item);
  const Prepared pr = prepare(model, item);
  const double lam = model.config.lambda;
  RankModel g = model.zeros_like();
  for (std::size_t j = 0; j < item.candidates.size(); ++j) {
    if (j == item.correct) continue;
    if (word_hinge(model, pr, item.correct, j) > 0.0) add_word_grad(pr, item.correct, j, lam, g);
    if (sent_hinge(model, pr, item.correct, j) > 0.0) {
      add_sent_grad(pr, item.correct, j, 1.0 - lam, g);
    }
  }
  return g;
}

StepChoice rank_step_gradient(const RankModel& model, const RankItem& item, Rng& rng,
                              RankModel& grads) {
  check_item(item);
  const Prepared pr = prepare(model, item);
  const double lam = model.config.lambda;

  std::vector<std::size_t> negatives;
  for (std::size_t j = 0; j < item.candidates.size(); ++j) {
    if (j != item.correct) negatives.push_back(j);
  }
  std::vector<std::size_t> word_order = negatives;
  std::vector<std::size_t> sent_order = negatives;
  rng.shuffle(word_order);
  rng.shuffle(sent_order);

  StepChoice choice;
  for (std::size_t j : word_order) {
    if (word_hinge(model, pr, item.correct, j) > 0.0) {
      choice.word_negative = j;
      add_word_grad(pr, item.correct, j, lam, grads);
      break;
    }
  }
  for (std::size_t j : sent_order) {
    if (sent_hinge(model, pr, item.correct, j) > 0.0) {
      choice.sent_negative = j;
      add_sent_grad(pr, item.correct, j, 1.0 - lam, grads);
      break;
    }
  }
  return choice;
}

StepChoice train_step(RankModel& model, const RankItem& item, SgdMomentum& optim, Rng& rng) {
  RankModel g = model.zeros_like();
  const StepChoice choice = rank_step_gradient(model, item, rng, g);
  const auto grads = std::as_const(g).params();
  optim.step(model.params(), grads);
  return choice;
}

double score(const RankModel& model, std::span<const double> v, const RankCandidate& cand) {
  const ChannelEmbedding e = embed_channels(model, v, cand);
  const double lam = model.config.lambda;
  return lam * dot(e.v_p, e.p) + (1.0 - lam) * dot(e.v_s, e.s);
}

std::size_t answer(const RankModel& model, const RankItem& item) {
  require(item.candidates.size() >= 2, ErrorKind::kConfig,
          "answer: need at least two candidates");
  const Prepared pr = prepare(model, item);
  const double lam = model.config.lambda;
  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t j = 0; j < item.candidates.size(); ++j) {
    const double sc = lam * dot(pr.v_p, pr.p[j]) + (1.0 - lam) * dot(pr.v_s, pr.s[j]);
    if (j == 0 || sc > best_score) {
      best = j;
      best_score = sc;
    }
  }
  return best;
}

double accuracy(const RankModel& model, const std::vector<RankItem>& items, unsigned threads) {
  if (items.empty()) return 0.0;
  std::vector<char> hit(items.size(), 0);
  parallel_for(items.size(), threads, [&](std::size_t i) { hit[i] = answer(model, items[i]) == items[i].correct; });
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(items.size());
}

std::vector<double> train_ranker(RankModel& model, const std::vector<RankItem>& items,
                                 const RankTrainConfig& config) {
  std::vector<double> curve;
  if (config.epochs == 0) return curve;
  require(!items.empty(), ErrorKind::kDataset, "train_ranker: no training items");
  Rng rng(config.seed);
  SgdMomentum optim(config.optim);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    for (std::size_t i : permutation(items.size(), rng)) {
      total += dual_loss(model, items[i]);
      train_step(model, items[i], optim, rng);
    }
    curve.push_back(total / static_cast<double>(items.size()));
  }
  return curve;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(i / 10.0);
  return g;
}

LambdaSelection select_lambda(const RankConfig& base, const std::vector<RankItem>& train,
                              const std::vector<RankItem>& validation,
                              const RankTrainConfig& train_config,
                              const std::vector<double>& grid) {
  require(!grid.empty(), ErrorKind::kConfig, "select_lambda: empty grid");
  require(!validation.empty(), ErrorKind::kDataset, "select_lambda: empty validation set");
  LambdaSelection sel;
  bool have = false;
  double best_acc = -1.0;
  for (double lam : grid) {
    require(lam >= 0.0 && lam <= 1.0, ErrorKind::kConfig,
            "select_lambda: grid values must lie in [0, 1]");
    RankConfig cfg = base;
    cfg.lambda = lam;
    Rng init_rng(train_config.seed);
    RankModel model = RankModel::init(cfg, init_rng);
    train_ranker(model, train, train_config);
    const double acc = accuracy(model, validation);
    sel.grid.push_back(lam);
    sel.accuracy.push_back(acc);
    if (!have || acc > best_acc || (acc == best_acc && lam < sel.best)) {
      have = true;
      best_acc = acc;
      sel.best = lam;
      sel.model = std::move(model);
    }
  }
  return sel;
}

}  // namespace vqa
