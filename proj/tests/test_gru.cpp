// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"
#include "test_util.hpp"
#include "vqa/error.hpp"
#include "vqa/gradcheck.hpp"
#include "vqa/gru.hpp"

using namespace vqa;

namespace {

GruLayer zero_layer(std::size_t in, std::size_t hidden) {
  Rng rng(0);
  GruLayer l = GruLayer::init(in, hidden, rng);
  for (Mat* m : l.params()) m->set_zero();
  return l;
}

GruStack zero_stack(std::size_t d, std::size_t hidden) {
  Rng rng(0);
  GruStack s = GruStack::init(d, hidden, rng);
  for (Mat* m : s.params()) m->set_zero();
  return s;
}

bool all_zero(const std::vector<const Mat*>& ms) {
  for (const Mat* m : ms)
    for (double v : m->flat())
      if (v != 0.0) return false;
  return true;
}

std::map<std::string, Vec> read_named_vectors(const std::string& name) {
  std::map<std::string, Vec> out;
  for (const auto& line : vqa::testing::golden_lines(name)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    double v;
    while (ls >> v) out[key].push_back(v);
  }
  return out;
}

}  // namespace

TEST_CASE("gru cell forward") {
  SUBCASE("zero weights halve the previous state") {
    const GruLayer l = zero_layer(3, 2);
    const StepCache c = gru_cell_forward(l, Vec{0.7, -1.0, 2.0}, Vec{0.2, -0.4});
    CHECK(c.r == Vec{0.5, 0.5});
    CHECK(c.z == Vec{0.5, 0.5});
    CHECK(c.hbar == Vec{0.0, 0.0});
    CHECK(c.h == Vec{0.1, -0.2});
  }
  SUBCASE("zero state is a fixed point of zero weights") {
    const GruLayer l = zero_layer(3, 2);
    CHECK(gru_cell_forward(l, Vec{1, 2, 3}, Vec{0, 0}).h == Vec{0, 0});
  }
  SUBCASE("seed 42 golden step") {
    Rng rng(42);
    const GruLayer l = GruLayer::init(3, 2, rng);
    const StepCache c = gru_cell_forward(l, Vec{1.0, 0.0, -1.0}, Vec{0.1, 0.1});
    const auto golden = read_named_vectors("gru_cell_d3_h2_seed42.txt");
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(c.r[i] == doctest::Approx(golden.at("r")[i]).epsilon(1e-14));
      CHECK(c.z[i] == doctest::Approx(golden.at("z")[i]).epsilon(1e-14));
      CHECK(c.hbar[i] == doctest::Approx(golden.at("hbar")[i]).epsilon(1e-12));
      CHECK(c.h[i] == doctest::Approx(golden.at("h")[i]).epsilon(1e-14));
    }
  }
  SUBCASE("dimension errors") {
    const GruLayer l = zero_layer(3, 2);
    CHECK_THROWS_AS(gru_cell_forward(l, Vec{1, 2}, Vec{0, 0}), Error);
    CHECK_THROWS_AS(gru_cell_forward(l, Vec{1, 2, 3}, Vec{0}), Error);
  }
}

TEST_CASE("gru cell backward") {
  SUBCASE("zero upstream gradient gives zero gradients") {
    Rng rng(1);
    const GruLayer l = GruLayer::init(3, 2, rng);
    GruLayer g = l.zeros_like();
    const CellGrads cg = gru_cell_backward(l, gru_cell_forward(l, Vec{1, 2, 3}, Vec{0.3, -0.1}),
                                           Vec{0, 0}, g);
    CHECK(cg.dx == Vec{0, 0, 0});
    CHECK(cg.dh_prev == Vec{0, 0});
    CHECK(all_zero(std::as_const(g).params()));
  }
  SUBCASE("zero weights: only the update-gate path carries parameter gradient") {
    const GruLayer l = zero_layer(3, 2);
    GruLayer g = l.zeros_like();
    const Vec dh{0.7, -1.3};
    const CellGrads cg =
        gru_cell_backward(l, gru_cell_forward(l, Vec{1, -2, 0.5}, Vec{0.2, -0.4}), dh, g);
    CHECK(cg.dh_prev[0] == doctest::Approx(0.35));
    CHECK(cg.dh_prev[1] == doctest::Approx(-0.65));
    CHECK(cg.dx == Vec{0, 0, 0});
    CHECK(!all_zero({&g.w_xz}));
    CHECK(!all_zero({&g.w_hz}));
    // dz = dh * (hbar - h_prev) * z (1 - z) with hbar = 0, z = 0.5
    CHECK(g.w_hz(0, 0) == doctest::Approx(0.7 * -0.2 * 0.25 * 0.2));
  }
  SUBCASE("mismatched cache") {
    Rng rng(1);
    const GruLayer small = GruLayer::init(3, 2, rng);
    const GruLayer big = GruLayer::init(4, 2, rng);
    GruLayer g = big.zeros_like();
    const StepCache c = gru_cell_forward(small, Vec{1, 2, 3}, Vec{0, 0});
    try {
      gru_cell_backward(big, c, Vec{1, 1}, g);
      FAIL("expected cache error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kCache);
    }
  }
  SUBCASE("finite differences, with and without biases") {
    const GradcheckResult r = gradcheck_gru_cell(11, 20);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("gru stack forward") {
  Rng rng(3);
  const GruStack stack = GruStack::init(5, 3, rng);

  SUBCASE("empty sequence") {
    try {
      stack_forward(stack, Mat(0, 5), {}, false, rng);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kEmptySequence);
    }
  }
  SUBCASE("eval mode is deterministic") {
    Mat seq(4, 5);
    for (double& v : seq.flat()) v = rng.normal();
    Rng a(1), b(99);
    const StackTrace t1 = stack_forward(stack, seq, {}, false, a);
    const StackTrace t2 = stack_forward(stack, seq, {}, false, b);
    for (std::size_t t = 0; t < 4; ++t) CHECK(t1.top(t) == t2.top(t));
  }
  SUBCASE("train mode is deterministic given the seed") {
    Mat seq(4, 5);
    for (double& v : seq.flat()) v = rng.normal();
    Rng a(17), b(17);
    const StackTrace t1 = stack_forward(stack, seq, {}, true, a);
    const StackTrace t2 = stack_forward(stack, seq, {}, true, b);
    for (std::size_t t = 0; t < 4; ++t) {
      CHECK(t1.top(t) == t2.top(t));
      CHECK(t1.masks[1][t] == t2.masks[1][t]);
    }
  }
  SUBCASE("an all-ones dropout draw doubles the second layer's input") {
    Rng init(4);
    const GruStack s = GruStack::init(3, 2, init);
    Mat seq{{0.5, -1.0, 2.0}};
    Rng none(0);
    const StackTrace eval = stack_forward(s, seq, {}, false, none);
    bool found = false;
    for (std::uint64_t seed = 0; seed < 64 && !found; ++seed) {
      Rng r(seed);
      const StackTrace tr = stack_forward(s, seq, {}, true, r);
      if (tr.masks[1][0] != Vec{2.0, 2.0}) continue;
      found = true;
      const Vec& layer1 = eval.steps[0][0].h;
      CHECK(tr.steps[1][0].x == Vec{2.0 * layer1[0], 2.0 * layer1[1]});
      CHECK(eval.steps[1][0].x == layer1);
    }
    CHECK(found);
  }
  SUBCASE("gate ranges and boundedness") {
    Mat seq(6, 5);
    for (double& v : seq.flat()) v = 3.0 * rng.normal();
    Rng r(8);
    const StackTrace tr = stack_forward(stack, seq, {}, true, r);
    for (const auto& layer : tr.steps) {
      for (const StepCache& c : layer) {
        for (std::size_t i = 0; i < c.h.size(); ++i) {
          CHECK(c.r[i] > 0.0);
          CHECK(c.r[i] < 1.0);
          CHECK(c.z[i] > 0.0);
          CHECK(c.z[i] < 1.0);
          CHECK(std::abs(c.hbar[i]) < 1.0);
          CHECK(std::abs(c.h[i]) < 1.0);
        }
      }
    }
  }
}

TEST_CASE("zero-weight recurrence is exactly geometric") {
  const GruStack s = zero_stack(4, 3);
  Rng rng(2);
  Mat seq(8, 4);
  for (double& v : seq.flat()) v = rng.normal();
  const std::vector<Vec> h0{{0.9, -0.3, 0.5}, {-0.7, 0.25, 0.1}};
  const StackTrace tr = stack_forward(s, seq, h0, false, rng);
  for (std::size_t l = 0; l < 2; ++l) {
    double factor = 1.0;
    for (std::size_t t = 0; t < 8; ++t) {
      factor *= 0.5;
      for (std::size_t i = 0; i < 3; ++i) CHECK(tr.steps[l][t].h[i] == factor * h0[l][i]);
    }
  }
}

TEST_CASE("gru stack backward") {
  Rng rng(5);
  const GruStack stack = GruStack::init(4, 3, rng);
  Mat seq(3, 4);
  for (double& v : seq.flat()) v = rng.normal();

  SUBCASE("zero upstream gradient") {
    Rng r(1);
    const StackTrace tr = stack_forward(stack, seq, {}, true, r);
    GruStack g = stack.zeros_like();
    const auto dh0 =
        stack_backward(stack, tr, std::vector<Vec>(3, Vec(3, 0.0)), {}, g);
    CHECK(all_zero(std::as_const(g).params()));
    for (const Vec& v : dh0) CHECK(v == Vec(3, 0.0));
  }
  SUBCASE("length mismatch is a cache error") {
    Rng r(1);
    const StackTrace tr = stack_forward(stack, seq, {}, true, r);
    GruStack g = stack.zeros_like();
    try {
      stack_backward(stack, tr, std::vector<Vec>(2, Vec(3, 0.0)), {}, g);
      FAIL("expected cache error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kCache);
    }
  }
  SUBCASE("single step equals two chained cells plus the projection") {
    Mat one{{0.3, -0.6, 1.1, 0.2}};
    Rng r(6);
    const StackTrace tr = stack_forward(stack, one, {}, true, r);
    const Vec d_top{0.4, -0.2, 0.9};
    GruStack g = stack.zeros_like();
    stack_backward(stack, tr, {d_top}, {}, g);

    GruStack manual = stack.zeros_like();
    const Vec proj = matvec(stack.w_in, one.row(0));
    const StepCache c0 = gru_cell_forward(stack.layers[0], proj, Vec(3, 0.0));
    Vec in1 = c0.h;
    for (std::size_t i = 0; i < 3; ++i) in1[i] *= tr.masks[1][0][i];
    const StepCache c1 = gru_cell_forward(stack.layers[1], in1, Vec(3, 0.0));
    CellGrads g1 = gru_cell_backward(stack.layers[1], c1, d_top, manual.layers[1]);
    for (std::size_t i = 0; i < 3; ++i) g1.dx[i] *= tr.masks[1][0][i];
    const CellGrads g0 = gru_cell_backward(stack.layers[0], c0, g1.dx, manual.layers[0]);
    add_outer(manual.w_in, g0.dx, one.row(0));

    const auto a = std::as_const(g).params();
    const auto b = std::as_const(manual).params();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
  }
  SUBCASE("finite differences on T=4, D=5, H=3") {
    Rng init(21);
    GruStack s = GruStack::init(5, 3, init);
    for (Mat* m : s.params())
      for (double& v : m->flat()) v = init.uniform(-1.0, 1.0);
    Mat x(4, 5);
    for (double& v : x.flat()) v = init.uniform(-1.0, 1.0);
    std::vector<Vec> d_top;
    for (int t = 0; t < 4; ++t) d_top.push_back({init.normal(), init.normal(), init.normal()});
    const Rng masks(77);
    auto loss = [&] {
      Rng r = masks;
      const StackTrace tr = stack_forward(s, x, {}, true, r);
      double acc = 0.0;
      for (std::size_t t = 0; t < 4; ++t) acc += dot(d_top[t], tr.top(t));
      return acc;
    };
    Rng r = masks;
    const StackTrace tr = stack_forward(s, x, {}, true, r);
    GruStack g = s.zeros_like();
    stack_backward(s, tr, d_top, {}, g);
    auto sp = s.params();
    auto gp = g.params();
    for (std::size_t i = 0; i < sp.size(); ++i) {
      CHECK(max_relative_error(*gp[i], numeric_gradient(loss, *sp[i])) < 1e-4);
    }
  }
  SUBCASE("random instances") {
    CHECK(gradcheck_gru_stack(12, 20).max_rel_error < 1e-4);
  }
}
