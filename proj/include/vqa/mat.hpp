// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace vqa {

class Rng;

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles. Every weight matrix and every
/// feature sequence (one row per frame) is stored as a Mat.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  Vec row_vec(std::size_t r) const;

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  bool same_shape(const Mat& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  void set_zero();
  bool all_finite() const;

  Mat& operator+=(const Mat& other);
  Mat& operator-=(const Mat& other);
  Mat& operator*=(double s);

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat zeros_like(const Mat& m);
Mat identity(std::size_t n);
Mat transpose(const Mat& m);
Mat matmul(const Mat& a, const Mat& b);

/// y = M x
Vec matvec(const Mat& m, std::span<const double> x);
/// y = M^T x
Vec matvec_t(const Mat& m, std::span<const double> x);
/// M += scale * a b^T
void add_outer(Mat& m, std::span<const double> a, std::span<const double> b,
               double scale = 1.0);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
void axpy(double a, std::span<const double> x, std::span<double> y);
Vec scaled(std::span<const double> v, double s);

/// Unit-length copy of v. Throws kZeroNorm when ||v|| <= 1e-12.
Vec l2_normalize(std::span<const double> v);

/// Clamps every entry to [-c, c]. Throws kInvalidThreshold when c <= 0.
Mat clip_elementwise(const Mat& g, double c);
void clip_elementwise_inplace(Mat& g, double c);

/// i.i.d. uniform entries on [lo, hi]. Throws kInvalidRange when lo >= hi.
Mat uniform_init(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng);

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace vqa
