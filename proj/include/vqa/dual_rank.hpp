// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vqa/mat.hpp"
#include "vqa/optim.hpp"
#include "vqa/question.hpp"
#include "vqa/rng.hpp"

namespace vqa {

/// A candidate answer with its two semantic views: the mean word vector of
/// the answer phrase and the sentence vector of the filled-in description.
struct RankCandidate {
  Vec word;
  Vec sent;
  std::string text;
};

/// A question resolved to vectors, ready for ranking.
struct RankItem {
  std::string id;
  Vec visual;
  std::vector<RankCandidate> candidates;
  std::size_t correct = 0;
  Task task = Task::kPresent;
  Difficulty difficulty = Difficulty::kEasy;
};

struct RankConfig {
  std::size_t visual_dim = 32;
  std::size_t word_dim = 300;
  std::size_t sent_dim = 500;
  std::size_t word_space = 300;  // joint space of the word channel
  std::size_t sent_space = 500;  // joint space of the sentence channel
  double alpha = 0.2;
  double beta = 0.2;
  double lambda = 0.5;
  double init_range = 0.01;
};

/// The four linear maps of the two channels.
///   v_p = W_vp v,  p_j = W_pv y_j   (word channel)
///   v_s = W_vs v,  s_j = W_sv z_j   (sentence channel)
/// Inputs v, y_j, z_j are unit-normalized before the maps.
struct RankModel {
  RankConfig config;
  Mat w_vp, w_vs, w_pv, w_sv;

  static RankModel init(const RankConfig& config, Rng& rng);

  RankModel zeros_like() const;
  std::vector<Mat*> params();
  std::vector<const Mat*> params() const;
  std::vector<std::pair<std::string, const Mat*>> named_params() const;
};

struct ChannelEmbedding {
  Vec v_p, v_s, p, s;
};

ChannelEmbedding embed_channels(const RankModel& model, std::span<const double> v,
                                const RankCandidate& cand);

/// sum_{j != j'} lambda * max(0, alpha - v_p.p_j' + v_p.p_j)
///            + (1 - lambda) * max(0, beta - v_s.s_j' + v_s.s_j)
double dual_loss(const RankModel& model, const RankItem& item);

/// Gradient of dual_loss with respect to the four maps (all negatives).
RankModel dual_loss_gradient(const RankModel& model, const RankItem& item);

/// Which negative (if any) each channel used in a train_step.
struct StepChoice {
  std::optional<std::size_t> word_negative;
  std::optional<std::size_t> sent_negative;
};

/// Negatives are visited in a fresh seeded order per channel; each channel
/// applies the gradient of its first margin-violating negative only.
StepChoice rank_step_gradient(const RankModel& model, const RankItem& item, Rng& rng,
                              RankModel& grads);

StepChoice train_step(RankModel& model, const RankItem& item, SgdMomentum& optim, Rng& rng);

/// lambda * v_p.p_j + (1 - lambda) * v_s.s_j
double score(const RankModel& model, std::span<const double> v, const RankCandidate& cand);

/// Highest-scoring candidate; ties go to the lowest index.
std::size_t answer(const RankModel& model, const RankItem& item);

/// Fraction answered correctly. Items are scored on `threads` workers.
double accuracy(const RankModel& model, const std::vector<RankItem>& items,
                unsigned threads = 1);

struct RankTrainConfig {
  std::size_t epochs = 30;
  MomentumConfig optim{};
  std::uint64_t seed = 1;
};

/// Epochs of train_step over shuffled items; returns mean dual_loss per epoch
/// (measured on each item just before its update).
std::vector<double> train_ranker(RankModel& model, const std::vector<RankItem>& items,
                                 const RankTrainConfig& config);

struct LambdaSelection {
  double best = 0.0;
  std::vector<double> grid;
  std::vector<double> accuracy;
  RankModel model;  // trained with `best`
};

std::vector<double> default_lambda_grid();

/// Trains one model per grid value (same seed each time) and keeps the one
/// with the highest validation accuracy; ties go to the smaller lambda.
LambdaSelection select_lambda(const RankConfig& base, const std::vector<RankItem>& train,
                              const std::vector<RankItem>& validation,
                              const RankTrainConfig& train_config,
                              const std::vector<double>& grid);

}  // namespace vqa
