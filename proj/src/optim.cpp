// SPDX-License-Identifier: Apache-2.0
#include "vqa/optim.hpp"

#include <cmath>
#include <string>

#include "vqa/error.hpp"

namespace vqa {

namespace {

void ensure_state(std::vector<Mat>& state, std::span<Mat* const> params,
                  std::span<const Mat* const> grads, const char* who) {
  require(params.size() == grads.size(), ErrorKind::kDimension,
          std::string(who) + ": parameter/gradient count mismatch");
  if (state.empty()) {
    state.reserve(params.size());
    for (const Mat* p : params) state.push_back(zeros_like(*p));
  }
  require(state.size() == params.size(), ErrorKind::kDimension,
          std::string(who) + ": parameter count changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i]->same_shape(*grads[i]) && params[i]->same_shape(state[i]),
            ErrorKind::kDimension, std::string(who) + ": shape mismatch at parameter " +
                                       std::to_string(i));
  }
}

}  // namespace

void RmsProp::step(std::span<Mat* const> params, std::span<const Mat* const> grads) {
  ensure_state(cache_, params, grads, "rmsprop");
  const double rho = config_.rho;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->flat();
    auto g = grads[i]->flat();
    auto c = cache_[i].flat();
    for (std::size_t k = 0; k < p.size(); ++k) {
      c[k] = rho * c[k] + (1.0 - rho) * g[k] * g[k];
      p[k] -= config_.lr * g[k] / std::sqrt(c[k] + config_.eps);
    }
  }
}

void SgdMomentum::step(std::span<Mat* const> params, std::span<const Mat* const> grads) {
  ensure_state(velocity_, params, grads, "sgd-momentum");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->flat();
    auto g = grads[i]->flat();
    auto v = velocity_[i].flat();
    for (std::size_t k = 0; k < p.size(); ++k) {
      v[k] = config_.momentum * v[k] - config_.lr * g[k];
      p[k] += v[k];
    }
  }
}

}  // namespace vqa
