// SPDX-License-Identifier: Apache-2.0
#include "vqa/cca.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "vqa/error.hpp"
#include "vqa/parallel.hpp"

namespace vqa {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd to_eigen(const Mat& m) {
  MatrixXd e(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
  }
  return e;
}

Mat from_eigen(const MatrixXd& e) {
  Mat m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  for (Eigen::Index r = 0; r < e.rows(); ++r) {
    for (Eigen::Index c = 0; c < e.cols(); ++c) m(r, c) = e(r, c);
  }
  return m;
}

Vec to_vec(const VectorXd& v) { return Vec(v.data(), v.data() + v.size()); }

// (C + reg I)^{-1/2} through the symmetric eigendecomposition.
MatrixXd inverse_sqrt(const MatrixXd& c) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(c);
  VectorXd inv = es.eigenvalues();
  for (Eigen::Index i = 0; i < inv.size(); ++i) {
    require(inv(i) > 0.0, ErrorKind::kRank, "covariance is singular; increase the regularizer");
    inv(i) = 1.0 / std::sqrt(inv(i));
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Vec project(const Mat& p, const Vec& mean, std::span<const double> x) {
  require(x.size() == mean.size(), ErrorKind::kDimension, "cca: input dimension mismatch");
  Vec centered(x.begin(), x.end());
  for (std::size_t i = 0; i < centered.size(); ++i) centered[i] -= mean[i];
  return matvec(p, centered);
}

template <typename F>
double parallel_hits(std::size_t n, unsigned threads, F&& correct) {
  if (n == 0) return 0.0;
  std::vector<char> hit(n, 0);
  parallel_for(n, threads, [&](std::size_t i) { hit[i] = correct(i); });
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(n);
}

}  // namespace

CcaModel fit_cca(const Mat& x, const Mat& y, std::optional<double> reg, std::size_t k) {
  require(x.rows() == y.rows(), ErrorKind::kDimension, "fit_cca: views have different sample counts");
  const std::size_t n = x.rows();
  require(n >= 2, ErrorKind::kSample, "fit_cca: need at least 2 samples");
  const std::size_t dx = x.cols();
  const std::size_t dy = y.cols();
  const std::size_t kmax = std::min(dx, dy);
  if (k == 0) k = kmax;
  require(k <= kmax, ErrorKind::kRank, "fit_cca: k exceeds min(Dx, Dy)");

  MatrixXd ex = to_eigen(x);
  MatrixXd ey = to_eigen(y);
  const VectorXd mx = ex.colwise().mean();
  const VectorXd my = ey.colwise().mean();
  ex.rowwise() -= mx.transpose();
  ey.rowwise() -= my.transpose();
  const double denom = static_cast<double>(n - 1);
  MatrixXd cxx = ex.transpose() * ex / denom;
  MatrixXd cyy = ey.transpose() * ey / denom;
  const MatrixXd cxy = ex.transpose() * ey / denom;

  auto auto_reg = [](const MatrixXd& c) {
    return std::max(1e-4 * c.trace() / static_cast<double>(c.rows()), 1e-12);
  };
  CcaModel m;
  m.reg_x = reg ? *reg : auto_reg(cxx);
  m.reg_y = reg ? *reg : auto_reg(cyy);
  require(m.reg_x >= 0.0 && m.reg_y >= 0.0, ErrorKind::kConfig, "fit_cca: negative regularizer");
  cxx.diagonal().array() += m.reg_x;
  cyy.diagonal().array() += m.reg_y;

  const MatrixXd wx = inverse_sqrt(cxx);
  const MatrixXd wy = inverse_sqrt(cyy);
  Eigen::JacobiSVD<MatrixXd> svd(wx * cxy * wy, Eigen::ComputeFullU | Eigen::ComputeFullV);
  MatrixXd u = svd.matrixU().leftCols(k);
  MatrixXd v = svd.matrixV().leftCols(k);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(k); ++i) {
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      if (std::abs(u(r, i)) > 1e-12) {
        if (u(r, i) < 0.0) {
          u.col(i) *= -1.0;
          v.col(i) *= -1.0;
        }
        break;
      }
    }
  }
  m.a = from_eigen((wx * u).transpose());
  m.b = from_eigen((wy * v).transpose());
  m.rho.resize(k);
  for (std::size_t i = 0; i < k; ++i) m.rho[i] = std::max(0.0, svd.singularValues()(i));
  m.mean_x = to_vec(mx);
  m.mean_y = to_vec(my);
  return m;
}

Vec projected_correlations(const CcaModel& model, const Mat& x, const Mat& y) {
  const std::size_t n = x.rows();
  const std::size_t k = model.rho.size();
  std::vector<Vec> px, py;
  for (std::size_t i = 0; i < n; ++i) {
    px.push_back(project(model.a, model.mean_x, x.row(i)));
    py.push_back(project(model.b, model.mean_y, y.row(i)));
  }
  Vec out(k);
  for (std::size_t c = 0; c < k; ++c) {
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ma += px[i][c] / n;
      mb += py[i][c] / n;
    }
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double da = px[i][c] - ma;
      const double db = py[i][c] - mb;
      sab += da * db;
      saa += da * da;
      sbb += db * db;
    }
    out[c] = sab / std::sqrt(saa * sbb);
  }
  return out;
}

double cca_score(const CcaModel& model, std::span<const double> x, std::span<const double> y) {
  const Vec ax = project(model.a, model.mean_x, x);
  const Vec by = project(model.b, model.mean_y, y);
  const double na = norm2(ax);
  const double nb = norm2(by);
  require(na > 1e-12 && nb > 1e-12, ErrorKind::kZeroNorm, "cca_score: zero canonical projection");
  double s = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) s += model.rho[i] * ax[i] * by[i];
  return s / (na * nb);
}

CcaFusion fit_fusion(const std::vector<RankItem>& items, std::optional<double> reg,
                     std::size_t k) {
  require(!items.empty(), ErrorKind::kSample, "fit_fusion: no items");
  const auto& first = items.front();
  const std::size_t n = items.size();
  Mat vx(n, first.visual.size());
  Mat wy(n, first.candidates.front().word.size());
  Mat sy(n, first.candidates.front().sent.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& it = items[i];
    require(it.correct < it.candidates.size(), ErrorKind::kIndex, "fit_fusion: bad correct index");
    const Vec v = l2_normalize(it.visual);
    const Vec w = l2_normalize(it.candidates[it.correct].word);
    const Vec s = l2_normalize(it.candidates[it.correct].sent);
    require(v.size() == vx.cols() && w.size() == wy.cols() && s.size() == sy.cols(),
            ErrorKind::kDimension, "fit_fusion: ragged item vectors");
    std::copy(v.begin(), v.end(), vx.row(i).begin());
    std::copy(w.begin(), w.end(), wy.row(i).begin());
    std::copy(s.begin(), s.end(), sy.row(i).begin());
  }
  CcaFusion f;
  f.word = fit_cca(vx, wy, reg, k == 0 ? 0 : std::min(k, std::min(vx.cols(), wy.cols())));
  f.sent = fit_cca(vx, sy, reg, k == 0 ? 0 : std::min(k, std::min(vx.cols(), sy.cols())));
  return f;
}

double fusion_score(const CcaFusion& f, std::span<const double> visual, const RankCandidate& cand) {
  const Vec v = l2_normalize(visual);
  return f.weight * cca_score(f.word, v, l2_normalize(cand.word)) +
         (1.0 - f.weight) * cca_score(f.sent, v, l2_normalize(cand.sent));
}

std::size_t cca_answer(const CcaFusion& f, const RankItem& item) {
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < item.candidates.size(); ++j) {
    const double s = fusion_score(f, item.visual, item.candidates[j]);
    if (s > best_score) {
      best_score = s;
      best = j;
    }
  }
  return best;
}

double cca_accuracy(const CcaFusion& f, const std::vector<RankItem>& items, unsigned threads) {
  return parallel_hits(items.size(), threads,
                       [&](std::size_t i) { return cca_answer(f, items[i]) == items[i].correct; });
}

FusionSelection select_fusion_weight(CcaFusion& f, const std::vector<RankItem>& validation,
                                     const std::vector<double>& grid) {
  require(!grid.empty(), ErrorKind::kConfig, "select_fusion_weight: empty grid");
  FusionSelection sel;
  sel.grid = grid;
  std::sort(sel.grid.begin(), sel.grid.end());
  double best_acc = -1.0;
  for (double w : sel.grid) {
    require(w >= 0.0 && w <= 1.0, ErrorKind::kConfig, "fusion weight must be in [0, 1]");
    f.weight = w;
    const double acc = cca_accuracy(f, validation);
    sel.accuracy.push_back(acc);
    if (acc > best_acc) {
      best_acc = acc;
      sel.best = w;
    }
  }
  f.weight = sel.best;
  return sel;
}

}  // namespace vqa
