// SPDX-License-Identifier: Apache-2.0
#include "vqa/seq_autoencoder.hpp"

#include <algorithm>

#include "vqa/error.hpp"
#include "vqa/optim.hpp"

namespace vqa {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kPresent: return "present";
    case Variant::kPast: return "past";
    case Variant::kFuture: return "future";
  }
  return "present";
}

Variant parse_variant(std::string_view name) {
  if (name == "present") return Variant::kPresent;
  if (name == "past") return Variant::kPast;
  if (name == "future") return Variant::kFuture;
  fail(ErrorKind::kConfig, "unknown variant '" + std::string(name) + "'");
}

SeqAeModel SeqAeModel::init(const SeqAeConfig& config, Rng& rng) {
  require(config.unroll >= 1, ErrorKind::kConfig, "unroll length must be >= 1");
  require(config.feat_dim >= 1 && config.hidden >= 1, ErrorKind::kConfig,
          "feature and hidden sizes must be >= 1");
  SeqAeModel m;
  m.config = config;
  m.encoder = GruStack::init(config.feat_dim, config.hidden, rng, config.layers,
                             config.dropout, config.bias);
  m.decoder = GruStack::init(config.feat_dim, config.hidden, rng, config.layers,
                             config.dropout, config.bias);
  m.w_out = uniform_init(config.feat_dim, config.hidden, -0.05, 0.05, rng);
  return m;
}

SeqAeModel SeqAeModel::zeros_like() const {
  SeqAeModel g;
  g.config = config;
  g.encoder = encoder.zeros_like();
  g.decoder = decoder.zeros_like();
  g.w_out = vqa::zeros_like(w_out);
  return g;
}

std::vector<Mat*> SeqAeModel::params() {
  auto p = encoder.params();
  auto d = decoder.params();
  p.insert(p.end(), d.begin(), d.end());
  p.push_back(&w_out);
  return p;
}

std::vector<const Mat*> SeqAeModel::params() const {
  auto p = encoder.params();
  auto d = decoder.params();
  p.insert(p.end(), d.begin(), d.end());
  p.push_back(&w_out);
  return p;
}

std::vector<std::pair<std::string, const Mat*>> SeqAeModel::named_params() const {
  auto p = encoder.named_params("encoder.");
  auto d = decoder.named_params("decoder.");
  p.insert(p.end(), d.begin(), d.end());
  p.push_back({"w_out", &w_out});
  return p;
}

namespace {

Mat slice_rows(const Mat& clip, std::size_t begin, std::size_t count, bool reversed) {
  Mat out(count, clip.cols());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t src = reversed ? begin + count - 1 - i : begin + i;
    std::copy(clip.row(src).begin(), clip.row(src).end(), out.row(i).begin());
  }
  return out;
}

bool window_fits(Variant variant, std::size_t n, std::size_t p, std::size_t t) {
  switch (variant) {
    case Variant::kPresent: return p + t <= n;
    case Variant::kFuture: return p + 2 * t <= n;
    case Variant::kPast: return p >= t && p + t <= n;
  }
  return false;
}

}  // namespace

Windows build_targets(Variant variant, const Mat& clip, std::size_t position,
                      std::size_t unroll, bool reverse_present) {
  require(unroll >= 1, ErrorKind::kConfig, "unroll length must be >= 1");
  if (!window_fits(variant, clip.rows(), position, unroll)) {
    fail(ErrorKind::kWindow, "build_targets: clip of " + std::to_string(clip.rows()) +
                                 " frames cannot supply " + std::string(variant_name(variant)) +
                                 " windows of length " + std::to_string(unroll) +
                                 " at position " + std::to_string(position));
  }
  Windows w;
  w.input = slice_rows(clip, position, unroll, false);
  switch (variant) {
    case Variant::kPresent:
      w.target = slice_rows(clip, position, unroll, reverse_present);
      break;
    case Variant::kFuture:
      w.target = slice_rows(clip, position + unroll, unroll, false);
      break;
    case Variant::kPast:
      w.target = slice_rows(clip, position - unroll, unroll, false);
      break;
  }
  return w;
}

std::vector<std::size_t> valid_positions(Variant variant, std::size_t n_frames,
                                         std::size_t unroll) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < n_frames; ++p) {
    if (window_fits(variant, n_frames, p, unroll)) out.push_back(p);
  }
  return out;
}

namespace {

Mat teacher_inputs(const Mat& target) {
  Mat in(target.rows(), target.cols());
  for (std::size_t t = 1; t < target.rows(); ++t) {
    std::copy(target.row(t - 1).begin(), target.row(t - 1).end(), in.row(t).begin());
  }
  return in;
}

double loss_scale(const SeqAeModel& model, std::size_t steps) {
  return model.config.normalize_loss ? 1.0 / static_cast<double>(steps) : 1.0;
}

}  // namespace

ReconForward forward_reconstruct(const SeqAeModel& model, const Windows& w, bool train,
                                 Rng& rng) {
  const std::size_t d = model.config.feat_dim;
  require(w.input.cols() == d && w.target.cols() == d, ErrorKind::kDimension,
          "forward_reconstruct: window width does not match feature size");
  require(w.target.rows() >= 1, ErrorKind::kEmptySequence,
          "forward_reconstruct: empty target window");

  ReconForward f;
  f.encoder = stack_forward(model.encoder, w.input, {}, train, rng);
  f.decoder = stack_forward(model.decoder, teacher_inputs(w.target),
                            f.encoder.final_states(), train, rng);

  const double scale = loss_scale(model, w.target.rows());
  double loss = 0.0;
  for (std::size_t t = 0; t < w.target.rows(); ++t) {
    Vec pred = matvec(model.w_out, f.decoder.top(t));
    auto tgt = w.target.row(t);
    for (std::size_t i = 0; i < d; ++i) {
      const double e = pred[i] - tgt[i];
      loss += e * e;
    }
    f.predictions.push_back(std::move(pred));
  }
  f.loss = loss * scale;
  return f;
}

SeqAeModel reconstruct_backward(const SeqAeModel& model, const Windows& w,
                                const ReconForward& fwd) {
  require(fwd.predictions.size() == w.target.rows(), ErrorKind::kCache,
          "reconstruct_backward: forward pass does not match target window");
  SeqAeModel g = model.zeros_like();
  const double scale = loss_scale(model, w.target.rows());

  std::vector<Vec> d_top(w.target.rows());
  for (std::size_t t = 0; t < w.target.rows(); ++t) {
    Vec dpred(model.config.feat_dim);
    auto tgt = w.target.row(t);
    for (std::size_t i = 0; i < dpred.size(); ++i) {
      dpred[i] = 2.0 * scale * (fwd.predictions[t][i] - tgt[i]);
    }
    add_outer(g.w_out, dpred, fwd.decoder.top(t));
    d_top[t] = matvec_t(model.w_out, dpred);
  }

  std::vector<Vec> d_h0 = stack_backward(model.decoder, fwd.decoder, d_top, {}, g.decoder);
  std::vector<Vec> no_top(w.input.rows(), Vec(model.encoder.hidden_dim(), 0.0));
  stack_backward(model.encoder, fwd.encoder, no_top, d_h0, g.encoder);
  return g;
}

namespace {

struct WindowRef {
  std::size_t clip;
  std::size_t position;
};

std::vector<WindowRef> all_windows(const SeqAeModel& model, const std::vector<Mat>& dataset) {
  std::vector<WindowRef> out;
  for (std::size_t c = 0; c < dataset.size(); ++c) {
    for (std::size_t p :
         valid_positions(model.config.variant, dataset[c].rows(), model.config.unroll)) {
      out.push_back({c, p});
    }
  }
  return out;
}

Windows make_windows(const SeqAeModel& model, const std::vector<Mat>& dataset, WindowRef ref) {
  return build_targets(model.config.variant, dataset[ref.clip], ref.position,
                       model.config.unroll, model.config.reverse_present);
}

}  // namespace

PretrainResult pretrain(SeqAeModel& model, const std::vector<Mat>& dataset,
                        const TrainConfig& config) {
  require(config.batch_size >= 1, ErrorKind::kConfig, "batch_size must be >= 1");
  require(config.clip > 0.0, ErrorKind::kConfig, "clip must be > 0");
  PretrainResult result;
  if (config.epochs == 0) return result;
  require(!dataset.empty(), ErrorKind::kDataset, "pretrain: empty dataset");
  const auto windows = all_windows(model, dataset);
  require(!windows.empty(), ErrorKind::kDataset, "pretrain: no valid windows in dataset");

  const std::size_t per_epoch =
      config.iterations_per_epoch > 0
          ? config.iterations_per_epoch
          : (windows.size() + config.batch_size - 1) / config.batch_size;

  Rng rng(config.seed);
  RmsProp optim({config.lr, config.rho, config.eps});
  const auto params = model.params();
  const double inv_batch = 1.0 / static_cast<double>(config.batch_size);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t it = 0; it < per_epoch; ++it) {
      SeqAeModel acc = model.zeros_like();
      auto acc_params = acc.params();
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < config.batch_size; ++b) {
        const Windows w = make_windows(model, dataset, windows[rng.index(windows.size())]);
        const ReconForward fwd = forward_reconstruct(model, w, true, rng);
        batch_loss += fwd.loss;
        SeqAeModel g = reconstruct_backward(model, w, fwd);
        const auto gp = g.params();
        for (std::size_t i = 0; i < gp.size(); ++i) *acc_params[i] += *gp[i];
      }
      std::vector<const Mat*> grads;
      for (Mat* m : acc_params) {
        *m *= inv_batch;
        clip_elementwise_inplace(*m, config.clip);
        grads.push_back(m);
      }
      optim.step(params, grads);
      epoch_loss += batch_loss * inv_batch;
      ++result.iterations;
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(per_epoch));
  }
  return result;
}

double evaluate_loss(const SeqAeModel& model, const std::vector<Mat>& dataset) {
  const auto windows = all_windows(model, dataset);
  require(!windows.empty(), ErrorKind::kDataset, "evaluate_loss: no valid windows");
  Rng unused(0);
  double total = 0.0;
  for (const auto& ref : windows) {
    total += forward_reconstruct(model, make_windows(model, dataset, ref), false, unused).loss;
  }
  return total / static_cast<double>(windows.size());
}

Vec represent(const SeqAeModel& model, const Mat& clip) {
  if (clip.rows() == 0) fail(ErrorKind::kEmptySequence, "represent: empty clip");
  Rng unused(0);
  const StackTrace tr = stack_forward(model.encoder, clip, {}, false, unused);
  Vec mean(model.encoder.hidden_dim(), 0.0);
  for (std::size_t t = 0; t < tr.length(); ++t) axpy(1.0, tr.top(t), mean);
  for (double& v : mean) v /= static_cast<double>(tr.length());
  return mean;
}

Vec mean_pool(const Mat& clip) {
  if (clip.rows() == 0) fail(ErrorKind::kEmptySequence, "mean_pool: empty clip");
  Vec mean(clip.cols(), 0.0);
  for (std::size_t t = 0; t < clip.rows(); ++t) axpy(1.0, clip.row(t), mean);
  for (double& v : mean) v /= static_cast<double>(clip.rows());
  return mean;
}

}  // namespace vqa
