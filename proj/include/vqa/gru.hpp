// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vqa/mat.hpp"
#include "vqa/rng.hpp"

namespace vqa {

/// One GRU layer:
///   r    = sigmoid(W_xr x + W_hr h_prev)
///   z    = sigmoid(W_xz x + W_hz h_prev)
///   hbar = tanh(W_xh x + W_hh (r * h_prev))
///   h    = (1 - z) * h_prev + z * hbar
/// Bias vectors are off by default; when enabled they are added inside the
/// three pre-activations.
struct GruLayer {
  Mat w_xr, w_xz, w_xh;  // hidden x input
  Mat w_hr, w_hz, w_hh;  // hidden x hidden
  Mat b_r, b_z, b_h;     // hidden x 1, empty unless biases are enabled

  static GruLayer init(std::size_t input_dim, std::size_t hidden, Rng& rng,
                       bool with_bias = false, double range = 0.05);

  std::size_t input_dim() const noexcept { return w_xr.cols(); }
  std::size_t hidden_dim() const noexcept { return w_xr.rows(); }
  bool has_bias() const noexcept { return !b_r.empty(); }

  GruLayer zeros_like() const;
  std::vector<Mat*> params();
  std::vector<const Mat*> params() const;
  std::vector<std::pair<std::string, const Mat*>> named_params(const std::string& prefix) const;
};

/// Activations of one forward step, kept for the backward pass.
struct StepCache {
  Vec x, h_prev;
  Vec r, z, hbar, h;
};

struct CellGrads {
  Vec dx;
  Vec dh_prev;
};

StepCache gru_cell_forward(const GruLayer& layer, std::span<const double> x,
                           std::span<const double> h_prev);

/// Accumulates parameter gradients into `grads` (a GruLayer shaped like
/// `layer`) and returns the input and previous-state gradients.
CellGrads gru_cell_backward(const GruLayer& layer, const StepCache& cache,
                            std::span<const double> dh, GruLayer& grads);

/// Bias-free input projection followed by N stacked GRU layers with inverted
/// dropout on the connections between consecutive layers.
struct GruStack {
  Mat w_in;  // proj_dim x feat_dim
  std::vector<GruLayer> layers;
  double dropout = 0.5;

  static GruStack init(std::size_t feat_dim, std::size_t hidden, Rng& rng,
                       std::size_t num_layers = 2, double dropout = 0.5,
                       bool with_bias = false);

  std::size_t feat_dim() const noexcept { return w_in.cols(); }
  std::size_t hidden_dim() const noexcept { return layers.back().hidden_dim(); }
  std::size_t num_layers() const noexcept { return layers.size(); }

  GruStack zeros_like() const;
  std::vector<Mat*> params();
  std::vector<const Mat*> params() const;
  std::vector<std::pair<std::string, const Mat*>> named_params(const std::string& prefix) const;
};

/// Everything a stack forward pass produced: per-layer, per-step caches and
/// the dropout scale applied to each layer's input (layers >= 1 only).
struct StackTrace {
  std::vector<Vec> frames;                   // x^t
  std::vector<Vec> projected;                // W_in x^t
  std::vector<std::vector<StepCache>> steps; // [layer][t]
  std::vector<std::vector<Vec>> masks;       // [layer][t]; empty for layer 0

  std::size_t length() const noexcept { return projected.size(); }
  const Vec& top(std::size_t t) const { return steps.back()[t].h; }
  const Vec& final_state(std::size_t layer) const { return steps[layer].back().h; }
  std::vector<Vec> final_states() const;
};

/// Runs the stack over `seq` (one frame per row). `h0` holds one initial
/// state per layer; an empty vector means zeros. Dropout masks are drawn from
/// `rng` only in train mode.
StackTrace stack_forward(const GruStack& stack, const Mat& seq,
                         const std::vector<Vec>& h0, bool train, Rng& rng);

/// Backpropagation through time. `d_top[t]` is dL/dh^t of the top layer;
/// `d_final[l]` (optional) is an extra gradient on the last state of layer l.
/// Parameter gradients accumulate into `grads`; returns dL/dh0 per layer.
std::vector<Vec> stack_backward(const GruStack& stack, const StackTrace& trace,
                                const std::vector<Vec>& d_top,
                                const std::vector<Vec>& d_final, GruStack& grads);

}  // namespace vqa
