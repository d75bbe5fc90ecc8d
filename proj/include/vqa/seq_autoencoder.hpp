// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vqa/gru.hpp"

namespace vqa {

/// Which temporal context the decoder reconstructs.
enum class Variant { kPresent, kPast, kFuture };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct SeqAeConfig {
  Variant variant = Variant::kPresent;
  std::size_t feat_dim = 8;
  std::size_t hidden = 32;
  std::size_t layers = 2;
  std::size_t unroll = 10;  // encoder length; decoder length is the same
  double dropout = 0.5;
  bool bias = false;
  bool normalize_loss = true;  // divide the squared error by the window length
  bool reverse_present = true;
};

/// Encoder-decoder pair with a linear readout from the decoder's top layer
/// back to feature space. Encoder and decoder never share weights.
struct SeqAeModel {
  SeqAeConfig config;
  GruStack encoder;
  GruStack decoder;
  Mat w_out;  // feat_dim x hidden

  static SeqAeModel init(const SeqAeConfig& config, Rng& rng);

  SeqAeModel zeros_like() const;
  std::vector<Mat*> params();
  std::vector<const Mat*> params() const;
  std::vector<std::pair<std::string, const Mat*>> named_params() const;
};

struct Windows {
  Mat input;
  Mat target;
};

/// Cuts an (input, target) pair out of `clip` starting at frame `position`.
///   Present: input [p, p+T), target the same frames reversed
///   Future:  input [p, p+T), target [p+T, p+2T)
///   Past:    input [p, p+T), target [p-T, p)
/// Throws kWindow if the clip cannot supply both windows.
Windows build_targets(Variant variant, const Mat& clip, std::size_t position,
                      std::size_t unroll, bool reverse_present = true);

/// Every start position for which build_targets succeeds.
std::vector<std::size_t> valid_positions(Variant variant, std::size_t n_frames,
                                         std::size_t unroll);

struct ReconForward {
  double loss = 0.0;
  StackTrace encoder;
  StackTrace decoder;
  std::vector<Vec> predictions;
};

/// Encoder over the input window from zero state; decoder starts from the
/// encoder's final per-layer states and is teacher-forced with the previous
/// target frame (zero vector on the first step).
ReconForward forward_reconstruct(const SeqAeModel& model, const Windows& w, bool train,
                                 Rng& rng);

/// Gradient of the reconstruction loss for a finished forward pass, returned
/// as a model-shaped buffer.
SeqAeModel reconstruct_backward(const SeqAeModel& model, const Windows& w,
                                const ReconForward& fwd);

struct TrainConfig {
  std::size_t batch_size = 64;
  double clip = 1e-4;
  double lr = 1e-3;
  double rho = 0.95;
  double eps = 1e-8;
  std::size_t epochs = 10;
  std::size_t iterations_per_epoch = 0;  // 0: ceil(#windows / batch_size)
  std::uint64_t seed = 1;
};

struct PretrainResult {
  std::vector<double> epoch_loss;
  std::size_t iterations = 0;
};

/// Mini-batch RMSprop on the reconstruction loss. Windows are drawn uniformly
/// with replacement across all clips; the batch-mean gradient is clipped
/// element-wise before each update.
PretrainResult pretrain(SeqAeModel& model, const std::vector<Mat>& dataset,
                        const TrainConfig& config);

/// Mean eval-mode reconstruction loss over every valid window in `dataset`.
double evaluate_loss(const SeqAeModel& model, const std::vector<Mat>& dataset);

/// Mean of the encoder's top-layer states over the clip (eval mode, h0 = 0).
Vec represent(const SeqAeModel& model, const Mat& clip);

/// Order-agnostic baseline: the average frame.
Vec mean_pool(const Mat& clip);

}  // namespace vqa
