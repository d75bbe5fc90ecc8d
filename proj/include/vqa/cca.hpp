// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "vqa/dual_rank.hpp"
#include "vqa/mat.hpp"

namespace vqa {

/// Regularized linear CCA. Rows of A and B are the canonical directions for
/// the x and y views; scoring centers inputs with the training means.
struct CcaModel {
  Mat a;  // k x Dx
  Mat b;  // k x Dy
  Vec rho;  // non-increasing
  Vec mean_x, mean_y;
  double reg_x = 0.0, reg_y = 0.0;
};

/// Samples are rows. `reg` is added to the diagonal of both covariances;
/// when absent each view uses 1e-4 * trace(Cov) / D. k = 0 means
/// min(Dx, Dy). kSample if n < 2, kRank if k > min(Dx, Dy).
CcaModel fit_cca(const Mat& x, const Mat& y, std::optional<double> reg = std::nullopt,
                 std::size_t k = 0);

/// Canonical correlations of the projected training data, component-wise.
Vec projected_correlations(const CcaModel& model, const Mat& x, const Mat& y);

/// sum_i rho_i (A x)_i (B y)_i / (|A x| |B y|). kZeroNorm on a zero projection.
double cca_score(const CcaModel& model, std::span<const double> x, std::span<const double> y);

/// Late fusion of a visual-word CCA and a visual-sentence CCA.
struct CcaFusion {
  CcaModel word;
  CcaModel sent;
  double weight = 0.5;  // on the word model
};

/// Fits both models on (visual, correct candidate) pairs of the items.
/// Inputs are unit-normalized first, as in the ranker.
CcaFusion fit_fusion(const std::vector<RankItem>& items, std::optional<double> reg = std::nullopt,
                     std::size_t k = 0);

double fusion_score(const CcaFusion& f, std::span<const double> visual, const RankCandidate& cand);
/// Highest fused score; ties go to the lowest index.
std::size_t cca_answer(const CcaFusion& f, const RankItem& item);
double cca_accuracy(const CcaFusion& f, const std::vector<RankItem>& items, unsigned threads = 1);

struct FusionSelection {
  double best = 0.0;
  std::vector<double> grid;
  std::vector<double> accuracy;
};

/// Grid value with the best validation accuracy; ties go to the smaller
/// weight. Sets f.weight to the winner. kConfig on an empty grid.
FusionSelection select_fusion_weight(CcaFusion& f, const std::vector<RankItem>& validation,
                                     const std::vector<double>& grid);

}  // namespace vqa
