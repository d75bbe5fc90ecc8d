// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "test_util.hpp"
#include "vqa/error.hpp"
#include "vqa/mat.hpp"
#include "vqa/parallel.hpp"
#include "vqa/optim.hpp"
#include "vqa/rng.hpp"

using namespace vqa;

namespace {

std::vector<std::vector<double>> read_golden_rows(const std::string& name) {
  std::vector<std::vector<double>> rows;
  for (const auto& line : vqa::testing::golden_lines(name)) {
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    rows.push_back(row);
  }
  return rows;
}

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected vqa::Error");
  return ErrorKind::kUsage;
}

}  // namespace

TEST_CASE("rng matches the frozen xoshiro256** stream") {
  Rng rng(7);
  int n = 0;
  for (const auto& line : vqa::testing::golden_lines("rng_seed7_u64.txt")) {
    CHECK(rng.next_u64() == std::stoull(line));
    ++n;
  }
  CHECK(n == 8);
}

TEST_CASE("uniform_init") {
  SUBCASE("single draw lies in range") {
    Rng rng(7);
    Mat m = uniform_init(1, 1, -0.01, 0.01, rng);
    CHECK(m(0, 0) >= -0.01);
    CHECK(m(0, 0) <= 0.01);
  }
  SUBCASE("same seed gives bit-identical matrices") {
    Rng a(7), b(7);
    CHECK(uniform_init(5, 3, -0.05, 0.05, a) == uniform_init(5, 3, -0.05, 0.05, b));
  }
  SUBCASE("seed 42 golden matrix") {
    Rng rng(42);
    Mat m = uniform_init(3, 4, -0.05, 0.05, rng);
    const auto golden = read_golden_rows("uniform_init_3x4_seed42.txt");
    REQUIRE(golden.size() == 3);
    double mean = 0.0;
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 4; ++c) {
        CHECK(m(r, c) == golden[r][c]);
        mean += m(r, c) / 12.0;
      }
    }
    CHECK(std::abs(mean) <= 0.05);
  }
  SUBCASE("empty range is rejected") {
    Rng rng(1);
    CHECK(kind_of([&] { uniform_init(2, 2, 0.1, 0.1, rng); }) == ErrorKind::kInvalidRange);
    CHECK(kind_of([&] { uniform_init(2, 2, 0.2, 0.1, rng); }) == ErrorKind::kInvalidRange);
  }
}

TEST_CASE("rng helpers are deterministic and in range") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) {
    const auto k = a.index(7);
    CHECK(k < 7);
    CHECK(k == b.index(7));
  }
  auto p = permutation(10, a);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < 10; ++i) CHECK(p[i] == i);
}

TEST_CASE("l2_normalize") {
  const Vec a = l2_normalize(Vec{3.0, 4.0});
  CHECK(a[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(l2_normalize(Vec{0.0, 1.0, 0.0}) == Vec{0.0, 1.0, 0.0});
  CHECK(kind_of([] { l2_normalize(Vec{1e-15, 0.0}); }) == ErrorKind::kZeroNorm);

  SUBCASE("positive scaling does not change the result") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      Vec v(1 + rng.index(8));
      for (double& x : v) x = rng.normal();
      const double alpha = std::exp(rng.uniform(-5.0, 5.0));
      const Vec u = l2_normalize(v);
      const Vec w = l2_normalize(scaled(v, alpha));
      CHECK(std::abs(norm2(u) - 1.0) < 1e-9);
      for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(u[i] - w[i]) < 1e-9);
    }
  }
}

TEST_CASE("clip_elementwise") {
  CHECK(clip_elementwise(Mat{{5e-4, -2e-4}}, 1e-4) == Mat{{1e-4, -1e-4}});
  CHECK(clip_elementwise(Mat{{5e-5}}, 1e-4) == Mat{{5e-5}});
  CHECK(clip_elementwise(Mat{{1e-4}}, 1e-4) == Mat{{1e-4}});
  CHECK(kind_of([] { clip_elementwise(Mat{{1.0}}, 0.0); }) == ErrorKind::kInvalidThreshold);
  CHECK(kind_of([] { clip_elementwise(Mat{{1.0}}, -1.0); }) == ErrorKind::kInvalidThreshold);

  SUBCASE("idempotent") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      Mat g(3, 4);
      for (double& v : g.flat()) v = rng.normal() * 1e-3;
      const double c = rng.uniform(1e-5, 1e-3);
      const Mat once = clip_elementwise(g, c);
      CHECK(clip_elementwise(once, c) == once);
    }
  }
}

TEST_CASE("rmsprop step") {
  SUBCASE("closed-form single step") {
    Mat p{{1.0}};
    Mat g{{1.0}};
    RmsProp opt({1e-3, 0.95, 1e-8});
    opt.step(std::vector<Mat*>{&p}, std::vector<const Mat*>{&g});
    CHECK(opt.cache()[0](0, 0) == doctest::Approx(0.05).epsilon(1e-14));
    // 1 - 1e-3 / sqrt(0.05 + 1e-8)
    CHECK(p(0, 0) == doctest::Approx(0.99552786).epsilon(1e-8));
  }
  SUBCASE("zero gradient leaves params and decays the cache") {
    Mat p{{0.3, -0.2}};
    Mat g{{0.0, 0.0}};
    RmsProp opt;
    opt.step(std::vector<Mat*>{&p}, std::vector<const Mat*>{&g});
    opt.cache()[0] = Mat{{0.4, 0.1}};
    opt.step(std::vector<Mat*>{&p}, std::vector<const Mat*>{&g});
    CHECK(p == Mat{{0.3, -0.2}});
    CHECK(opt.cache()[0](0, 0) == doctest::Approx(0.95 * 0.4));
    CHECK(opt.cache()[0](0, 1) == doctest::Approx(0.95 * 0.1));
  }
  SUBCASE("repeated identical gradient grows the cache toward g^2") {
    Mat p{{0.0}};
    Mat g{{0.5}};
    RmsProp opt;
    double prev = 0.0;
    for (int i = 0; i < 20; ++i) {
      opt.step(std::vector<Mat*>{&p}, std::vector<const Mat*>{&g});
      const double c = opt.cache()[0](0, 0);
      CHECK(c > prev);
      CHECK(c < 0.25);
      prev = c;
    }
  }
  SUBCASE("cache stays non-negative") {
    Rng rng(3);
    Mat p(2, 3);
    RmsProp opt;
    for (int i = 0; i < 200; ++i) {
      Mat g(2, 3);
      for (double& v : g.flat()) v = rng.normal();
      opt.step(std::vector<Mat*>{&p}, std::vector<const Mat*>{&g});
      for (double c : opt.cache()[0].flat()) CHECK(c >= 0.0);
    }
  }
  SUBCASE("shape mismatch") {
    Mat p(2, 2), g(2, 3);
    RmsProp opt;
    CHECK(kind_of([&] {
            opt.step(std::vector<Mat*>{&p}, std::vector<const Mat*>{&g});
          }) == ErrorKind::kDimension);
  }
}

TEST_CASE("sgd momentum step") {
  SgdMomentum opt({0.01, 0.9});
  Mat p{{1.0}};
  Mat zero{{0.0}};
  Mat one{{1.0}};
  opt.step(std::vector<Mat*>{&p}, std::vector<const Mat*>{&zero});
  CHECK(p(0, 0) == 1.0);

  opt.step(std::vector<Mat*>{&p}, std::vector<const Mat*>{&one});
  CHECK(opt.velocity()[0](0, 0) == doctest::Approx(-0.01));
  CHECK(p(0, 0) == doctest::Approx(0.99));

  // v = -0.01, g = 0 -> v = -0.009
  opt.step(std::vector<Mat*>{&p}, std::vector<const Mat*>{&zero});
  CHECK(p(0, 0) == doctest::Approx(0.99 - 0.009));

  Mat bad(1, 2);
  CHECK(kind_of([&] {
          opt.step(std::vector<Mat*>{&p}, std::vector<const Mat*>{&bad});
        }) == ErrorKind::kDimension);
}

TEST_CASE("matrix helpers") {
  const Mat a{{1, 2}, {3, 4}};
  CHECK(matvec(a, Vec{1, 1}) == Vec{3, 7});
  CHECK(matvec_t(a, Vec{1, 1}) == Vec{4, 6});
  CHECK(matmul(a, identity(2)) == a);
  CHECK(transpose(a) == Mat{{1, 3}, {2, 4}});
  Mat m(2, 2);
  add_outer(m, Vec{1, 2}, Vec{3, 4}, 0.5);
  CHECK(m == Mat{{1.5, 2}, {3, 4}});
  CHECK(kind_of([&] { matvec(a, Vec{1, 2, 3}); }) == ErrorKind::kDimension);
}

TEST_CASE("parallel_for covers every index and rethrows worker errors") {
  for (unsigned threads : {1u, 3u, 16u}) {
    std::vector<int> seen(10, 0);
    vqa::parallel_for(seen.size(), threads, [&](std::size_t i) { seen[i] += 1; });
    CHECK(seen == std::vector<int>(10, 1));
    CHECK(kind_of([&] {
            vqa::parallel_for(10, threads, [](std::size_t i) {
              if (i == 7) throw vqa::Error(vqa::ErrorKind::kDimension, "boom");
            });
          }) == vqa::ErrorKind::kDimension);
  }
}
