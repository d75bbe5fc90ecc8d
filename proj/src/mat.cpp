// SPDX-License-Identifier: Apache-2.0
#include "vqa/mat.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vqa/error.hpp"
#include "vqa/rng.hpp"

namespace vqa {

namespace {

std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_same(const Mat& a, const Mat& b, const char* op) {
  if (!a.same_shape(b)) {
    fail(ErrorKind::kDimension,
         std::string(op) + ": shape " + shape_str(a) + " vs " + shape_str(b));
  }
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows * cols, ErrorKind::kDimension,
          "Mat: data length does not match rows x cols");
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, ErrorKind::kDimension, "Mat: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Vec Mat::row_vec(std::size_t r) const {
  auto s = row(r);
  return Vec(s.begin(), s.end());
}

void Mat::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

bool Mat::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Mat& Mat::operator+=(const Mat& other) {
  check_same(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Mat& Mat::operator-=(const Mat& other) {
  check_same(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Mat zeros_like(const Mat& m) { return Mat(m.rows(), m.cols()); }

Mat identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat transpose(const Mat& m) {
  Mat t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

Mat matmul(const Mat& a, const Mat& b) {
  require(a.cols() == b.rows(), ErrorKind::kDimension,
          "matmul: " + shape_str(a) + " * " + shape_str(b));
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Vec matvec(const Mat& m, std::span<const double> x) {
  require(m.cols() == x.size(), ErrorKind::kDimension,
          "matvec: " + shape_str(m) + " * vector of " + std::to_string(x.size()));
  Vec y(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto mr = m.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) acc += mr[c] * x[c];
    y[r] = acc;
  }
  return y;
}

Vec matvec_t(const Mat& m, std::span<const double> x) {
  require(m.rows() == x.size(), ErrorKind::kDimension,
          "matvec_t: " + shape_str(m) + "^T * vector of " + std::to_string(x.size()));
  Vec y(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    auto mr = m.row(r);
    for (std::size_t c = 0; c < y.size(); ++c) y[c] += mr[c] * xr;
  }
  return y;
}

void add_outer(Mat& m, std::span<const double> a, std::span<const double> b,
               double scale) {
  require(m.rows() == a.size() && m.cols() == b.size(), ErrorKind::kDimension,
          "add_outer: target " + shape_str(m));
  for (std::size_t r = 0; r < a.size(); ++r) {
    const double ar = scale * a[r];
    if (ar == 0.0) continue;
    auto mr = m.row(r);
    for (std::size_t c = 0; c < b.size(); ++c) mr[c] += ar * b[c];
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::kDimension, "dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), ErrorKind::kDimension, "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vec scaled(std::span<const double> v, double s) {
  Vec out(v.begin(), v.end());
  for (double& x : out) x *= s;
  return out;
}

Vec l2_normalize(std::span<const double> v) {
  const double n = norm2(v);
  if (!(n > 1e-12)) fail(ErrorKind::kZeroNorm, "l2_normalize: norm below 1e-12");
  return scaled(v, 1.0 / n);
}

void clip_elementwise_inplace(Mat& g, double c) {
  if (!(c > 0.0)) fail(ErrorKind::kInvalidThreshold, "clip threshold must be > 0");
  for (double& v : g.flat()) v = std::min(std::max(v, -c), c);
}

Mat clip_elementwise(const Mat& g, double c) {
  Mat out = g;
  clip_elementwise_inplace(out, c);
  return out;
}

Mat uniform_init(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng) {
  if (!(lo < hi)) fail(ErrorKind::kInvalidRange, "uniform_init: lo must be < hi");
  Mat m(rows, cols);
  for (double& v : m.flat()) v = rng.uniform(lo, hi);
  return m;
}

}  // namespace vqa
