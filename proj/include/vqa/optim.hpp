// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "vqa/mat.hpp"

namespace vqa {

/// Parameters and their gradients are passed as parallel lists of matrices.
/// Accumulators are created lazily on the first step and must keep the same
/// shapes afterwards.

struct RmsPropConfig {
  double lr = 1e-3;
  double rho = 0.95;
  double eps = 1e-8;
};

/// cache <- rho * cache + (1 - rho) * g^2
/// param <- param - lr * g / sqrt(cache + eps)
class RmsProp {
 public:
  explicit RmsProp(RmsPropConfig config = {}) : config_(config) {}

  void step(std::span<Mat* const> params, std::span<const Mat* const> grads);

  const RmsPropConfig& config() const noexcept { return config_; }
  const std::vector<Mat>& cache() const noexcept { return cache_; }
  std::vector<Mat>& cache() noexcept { return cache_; }

 private:
  RmsPropConfig config_;
  std::vector<Mat> cache_;
};

struct MomentumConfig {
  double lr = 0.01;
  double momentum = 0.9;
};

/// v <- mu * v - lr * g;  param <- param + v
class SgdMomentum {
 public:
  explicit SgdMomentum(MomentumConfig config = {}) : config_(config) {}

  void step(std::span<Mat* const> params, std::span<const Mat* const> grads);

  const MomentumConfig& config() const noexcept { return config_; }
  const std::vector<Mat>& velocity() const noexcept { return velocity_; }
  std::vector<Mat>& velocity() noexcept { return velocity_; }

 private:
  MomentumConfig config_;
  std::vector<Mat> velocity_;
};

}  // namespace vqa
