// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vqa/mat.hpp"

namespace vqa {

/// |a - n| / max(|a|, |n|, floor). Central differences at eps = 1e-5 carry
/// about 1e-11 of roundoff on O(1) losses, so entries under the floor are in
/// effect held to an absolute tolerance of floor * 1e-4.
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Largest elementwise relative error between two same-shaped matrices.
double max_relative_error(const Mat& analytic, const Mat& numeric, double floor = 1e-6);

/// Central differences of `loss` with respect to every entry of `param`,
/// which is perturbed in place and restored.
Mat numeric_gradient(const std::function<double()>& loss, Mat& param, double eps = 1e-5);

/// Central differences for a plain vector input.
Vec numeric_gradient(const std::function<double()>& loss, Vec& x, double eps = 1e-5);

struct GradcheckResult {
  std::string suite;
  std::size_t instances = 0;
  double max_rel_error = 0.0;
  double seconds = 0.0;
};

/// Finite-difference suites over random small instances (T <= 5, D <= 6,
/// H <= 4). Each compares every analytic gradient entry with central
/// differences at eps = 1e-5.
GradcheckResult gradcheck_gru_cell(std::uint64_t seed, std::size_t instances);
GradcheckResult gradcheck_gru_stack(std::uint64_t seed, std::size_t instances);
GradcheckResult gradcheck_seq_autoencoder(std::uint64_t seed, std::size_t instances);
GradcheckResult gradcheck_dual_rank(std::uint64_t seed, std::size_t instances);

std::vector<GradcheckResult> gradcheck_all(std::uint64_t seed, std::size_t instances = 20);

}  // namespace vqa
