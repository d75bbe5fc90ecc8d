// SPDX-License-Identifier: Apache-2.0
#include "vqa/gru.hpp"

#include <cmath>

#include "vqa/error.hpp"

namespace vqa {

GruLayer GruLayer::init(std::size_t input_dim, std::size_t hidden, Rng& rng,
                        bool with_bias, double range) {
  GruLayer l;
  l.w_xr = uniform_init(hidden, input_dim, -range, range, rng);
  l.w_xz = uniform_init(hidden, input_dim, -range, range, rng);
  l.w_xh = uniform_init(hidden, input_dim, -range, range, rng);
  l.w_hr = uniform_init(hidden, hidden, -range, range, rng);
  l.w_hz = uniform_init(hidden, hidden, -range, range, rng);
  l.w_hh = uniform_init(hidden, hidden, -range, range, rng);
  if (with_bias) {
    l.b_r = Mat(hidden, 1);
    l.b_z = Mat(hidden, 1);
    l.b_h = Mat(hidden, 1);
  }
  return l;
}

GruLayer GruLayer::zeros_like() const {
  GruLayer g;
  g.w_xr = vqa::zeros_like(w_xr);
  g.w_xz = vqa::zeros_like(w_xz);
  g.w_xh = vqa::zeros_like(w_xh);
  g.w_hr = vqa::zeros_like(w_hr);
  g.w_hz = vqa::zeros_like(w_hz);
  g.w_hh = vqa::zeros_like(w_hh);
  g.b_r = vqa::zeros_like(b_r);
  g.b_z = vqa::zeros_like(b_z);
  g.b_h = vqa::zeros_like(b_h);
  return g;
}

std::vector<Mat*> GruLayer::params() {
  std::vector<Mat*> p{&w_xr, &w_xz, &w_xh, &w_hr, &w_hz, &w_hh};
  if (has_bias()) p.insert(p.end(), {&b_r, &b_z, &b_h});
  return p;
}

std::vector<const Mat*> GruLayer::params() const {
  std::vector<const Mat*> p{&w_xr, &w_xz, &w_xh, &w_hr, &w_hz, &w_hh};
  if (has_bias()) p.insert(p.end(), {&b_r, &b_z, &b_h});
  return p;
}

std::vector<std::pair<std::string, const Mat*>> GruLayer::named_params(
    const std::string& prefix) const {
  std::vector<std::pair<std::string, const Mat*>> out{
      {prefix + "w_xr", &w_xr}, {prefix + "w_xz", &w_xz}, {prefix + "w_xh", &w_xh},
      {prefix + "w_hr", &w_hr}, {prefix + "w_hz", &w_hz}, {prefix + "w_hh", &w_hh}};
  if (has_bias()) {
    out.push_back({prefix + "b_r", &b_r});
    out.push_back({prefix + "b_z", &b_z});
    out.push_back({prefix + "b_h", &b_h});
  }
  return out;
}

StepCache gru_cell_forward(const GruLayer& layer, std::span<const double> x,
                           std::span<const double> h_prev) {
  const std::size_t hidden = layer.hidden_dim();
  require(x.size() == layer.input_dim(), ErrorKind::kDimension,
          "gru_cell_forward: input has " + std::to_string(x.size()) + " entries, expected " +
              std::to_string(layer.input_dim()));
  require(h_prev.size() == hidden, ErrorKind::kDimension,
          "gru_cell_forward: state has " + std::to_string(h_prev.size()) +
              " entries, expected " + std::to_string(hidden));

  StepCache c;
  c.x.assign(x.begin(), x.end());
  c.h_prev.assign(h_prev.begin(), h_prev.end());

  Vec ar = matvec(layer.w_xr, x);
  Vec az = matvec(layer.w_xz, x);
  Vec ah = matvec(layer.w_xh, x);
  const Vec hr = matvec(layer.w_hr, h_prev);
  const Vec hz = matvec(layer.w_hz, h_prev);

  c.r.resize(hidden);
  c.z.resize(hidden);
  for (std::size_t i = 0; i < hidden; ++i) {
    double pr = ar[i] + hr[i];
    double pz = az[i] + hz[i];
    if (layer.has_bias()) {
      pr += layer.b_r[i];
      pz += layer.b_z[i];
    }
    c.r[i] = sigmoid(pr);
    c.z[i] = sigmoid(pz);
  }

  Vec gated(hidden);
  for (std::size_t i = 0; i < hidden; ++i) gated[i] = c.r[i] * h_prev[i];
  const Vec hh = matvec(layer.w_hh, gated);

  c.hbar.resize(hidden);
  c.h.resize(hidden);
  for (std::size_t i = 0; i < hidden; ++i) {
    double ph = ah[i] + hh[i];
    if (layer.has_bias()) ph += layer.b_h[i];
    c.hbar[i] = std::tanh(ph);
    c.h[i] = (1.0 - c.z[i]) * h_prev[i] + c.z[i] * c.hbar[i];
  }
  return c;
}

CellGrads gru_cell_backward(const GruLayer& layer, const StepCache& cache,
                            std::span<const double> dh, GruLayer& grads) {
  const std::size_t hidden = layer.hidden_dim();
  const std::size_t in = layer.input_dim();
  if (cache.x.size() != in || cache.h_prev.size() != hidden || cache.r.size() != hidden ||
      cache.z.size() != hidden || cache.hbar.size() != hidden || cache.h.size() != hidden) {
    fail(ErrorKind::kCache, "gru_cell_backward: cache does not match layer shape");
  }
  require(dh.size() == hidden, ErrorKind::kDimension,
          "gru_cell_backward: dh has wrong length");
  require(grads.w_xr.same_shape(layer.w_xr) && grads.has_bias() == layer.has_bias(),
          ErrorKind::kDimension, "gru_cell_backward: gradient buffer shape mismatch");

  const Vec& h_prev = cache.h_prev;
  Vec gated(hidden);
  for (std::size_t i = 0; i < hidden; ++i) gated[i] = cache.r[i] * h_prev[i];

  CellGrads out;
  out.dh_prev.assign(hidden, 0.0);

  // Candidate path: dL/d(preactivation of hbar).
  Vec a_h(hidden), a_z(hidden);
  for (std::size_t i = 0; i < hidden; ++i) {
    const double dhbar = dh[i] * cache.z[i];
    a_h[i] = dhbar * (1.0 - cache.hbar[i] * cache.hbar[i]);
    const double dz = dh[i] * (cache.hbar[i] - h_prev[i]);
    a_z[i] = dz * cache.z[i] * (1.0 - cache.z[i]);
    out.dh_prev[i] = dh[i] * (1.0 - cache.z[i]);
  }

  add_outer(grads.w_xh, a_h, cache.x);
  add_outer(grads.w_hh, a_h, gated);
  const Vec d_gated = matvec_t(layer.w_hh, a_h);

  Vec a_r(hidden);
  for (std::size_t i = 0; i < hidden; ++i) {
    const double dr = d_gated[i] * h_prev[i];
    a_r[i] = dr * cache.r[i] * (1.0 - cache.r[i]);
    out.dh_prev[i] += d_gated[i] * cache.r[i];
  }

  add_outer(grads.w_xz, a_z, cache.x);
  add_outer(grads.w_hz, a_z, h_prev);
  add_outer(grads.w_xr, a_r, cache.x);
  add_outer(grads.w_hr, a_r, h_prev);
  if (layer.has_bias()) {
    for (std::size_t i = 0; i < hidden; ++i) {
      grads.b_r[i] += a_r[i];
      grads.b_z[i] += a_z[i];
      grads.b_h[i] += a_h[i];
    }
  }

  axpy(1.0, matvec_t(layer.w_hz, a_z), out.dh_prev);
  axpy(1.0, matvec_t(layer.w_hr, a_r), out.dh_prev);

  out.dx = matvec_t(layer.w_xh, a_h);
  axpy(1.0, matvec_t(layer.w_xz, a_z), out.dx);
  axpy(1.0, matvec_t(layer.w_xr, a_r), out.dx);
  return out;
}

GruStack GruStack::init(std::size_t feat_dim, std::size_t hidden, Rng& rng,
                        std::size_t num_layers, double dropout, bool with_bias) {
  require(num_layers >= 1, ErrorKind::kConfig, "GruStack: need at least one layer");
  require(dropout >= 0.0 && dropout < 1.0, ErrorKind::kConfig,
          "GruStack: dropout must be in [0, 1)");
  GruStack s;
  s.dropout = dropout;
  s.w_in = uniform_init(hidden, feat_dim, -0.01, 0.01, rng);
  for (std::size_t l = 0; l < num_layers; ++l) {
    s.layers.push_back(GruLayer::init(hidden, hidden, rng, with_bias, 0.05));
  }
  return s;
}

GruStack GruStack::zeros_like() const {
  GruStack g;
  g.w_in = vqa::zeros_like(w_in);
  g.dropout = dropout;
  for (const auto& l : layers) g.layers.push_back(l.zeros_like());
  return g;
}

std::vector<Mat*> GruStack::params() {
  std::vector<Mat*> p{&w_in};
  for (auto& l : layers) {
    auto lp = l.params();
    p.insert(p.end(), lp.begin(), lp.end());
  }
  return p;
}

std::vector<const Mat*> GruStack::params() const {
  std::vector<const Mat*> p{&w_in};
  for (const auto& l : layers) {
    auto lp = l.params();
    p.insert(p.end(), lp.begin(), lp.end());
  }
  return p;
}

std::vector<std::pair<std::string, const Mat*>> GruStack::named_params(
    const std::string& prefix) const {
  std::vector<std::pair<std::string, const Mat*>> out{{prefix + "w_in", &w_in}};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto lp = layers[l].named_params(prefix + "layer" + std::to_string(l) + ".");
    out.insert(out.end(), lp.begin(), lp.end());
  }
  return out;
}

std::vector<Vec> StackTrace::final_states() const {
  std::vector<Vec> out;
  for (std::size_t l = 0; l < steps.size(); ++l) out.push_back(final_state(l));
  return out;
}

StackTrace stack_forward(const GruStack& stack, const Mat& seq,
                         const std::vector<Vec>& h0, bool train, Rng& rng) {
  if (seq.rows() == 0) fail(ErrorKind::kEmptySequence, "stack_forward: empty sequence");
  require(seq.cols() == stack.feat_dim(), ErrorKind::kDimension,
          "stack_forward: frame dimension " + std::to_string(seq.cols()) + ", expected " +
              std::to_string(stack.feat_dim()));
  const std::size_t n_layers = stack.num_layers();
  require(h0.empty() || h0.size() == n_layers, ErrorKind::kDimension,
          "stack_forward: need one initial state per layer");

  const std::size_t steps = seq.rows();
  StackTrace tr;
  tr.frames.reserve(steps);
  tr.projected.reserve(steps);
  tr.steps.assign(n_layers, {});
  tr.masks.assign(n_layers, {});

  std::vector<Vec> state(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    state[l] = h0.empty() ? Vec(stack.layers[l].hidden_dim(), 0.0) : h0[l];
  }

  const double keep = 1.0 - stack.dropout;
  const bool drop = train && stack.dropout > 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    tr.frames.push_back(seq.row_vec(t));
    tr.projected.push_back(matvec(stack.w_in, seq.row(t)));
    Vec input = tr.projected.back();
    for (std::size_t l = 0; l < n_layers; ++l) {
      if (l > 0) {
        Vec mask(input.size(), 1.0);
        if (drop) {
          for (double& m : mask) m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
        }
        for (std::size_t i = 0; i < input.size(); ++i) input[i] *= mask[i];
        tr.masks[l].push_back(std::move(mask));
      }
      tr.steps[l].push_back(gru_cell_forward(stack.layers[l], input, state[l]));
      state[l] = tr.steps[l].back().h;
      input = state[l];
    }
  }
  return tr;
}

std::vector<Vec> stack_backward(const GruStack& stack, const StackTrace& trace,
                                const std::vector<Vec>& d_top,
                                const std::vector<Vec>& d_final, GruStack& grads) {
  const std::size_t n_layers = stack.num_layers();
  const std::size_t steps = trace.length();
  if (trace.steps.size() != n_layers || d_top.size() != steps) {
    fail(ErrorKind::kCache, "stack_backward: trace/gradient length mismatch");
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (trace.steps[l].size() != steps || (l > 0 && trace.masks[l].size() != steps)) {
      fail(ErrorKind::kCache, "stack_backward: trace is incomplete");
    }
  }
  require(d_final.empty() || d_final.size() == n_layers, ErrorKind::kDimension,
          "stack_backward: need one final-state gradient per layer");
  require(grads.layers.size() == n_layers && grads.w_in.same_shape(stack.w_in),
          ErrorKind::kDimension, "stack_backward: gradient buffer shape mismatch");

  std::vector<Vec> carry(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    carry[l] = d_final.empty() ? Vec(stack.layers[l].hidden_dim(), 0.0) : d_final[l];
  }

  for (std::size_t t = steps; t-- > 0;) {
    Vec from_above = d_top[t];
    require(from_above.size() == stack.hidden_dim(), ErrorKind::kDimension,
            "stack_backward: d_top entry has wrong length");
    for (std::size_t l = n_layers; l-- > 0;) {
      Vec dh = carry[l];
      axpy(1.0, from_above, dh);
      CellGrads cg = gru_cell_backward(stack.layers[l], trace.steps[l][t], dh, grads.layers[l]);
      carry[l] = std::move(cg.dh_prev);
      if (l > 0) {
        const Vec& mask = trace.masks[l][t];
        for (std::size_t i = 0; i < cg.dx.size(); ++i) cg.dx[i] *= mask[i];
        from_above = std::move(cg.dx);
      } else {
        add_outer(grads.w_in, cg.dx, trace.frames[t]);
      }
    }
  }
  return carry;
}

}  // namespace vqa
