// Copyright (c) 2026 The tscd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "core/gradcheck.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "core/tensor_image.hpp"
#include "oracles.hpp"

using namespace tscd;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool grad = false) {
  std::vector<double> v(static_cast<size_t>(numel(shape)));
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::from(std::move(shape), std::move(v), grad);
}

}  // namespace

TEST_CASE("elementwise basics") {
  Tensor a = Tensor::from({2}, {1, 2});
  Tensor b = Tensor::from({2}, {3, 4});
  const Tensor sum = add(a, b);
  CHECK(sum.value_at(0) == 4.0);
  CHECK(sum.value_at(1) == 6.0);

  Tensor x = Tensor::from({3}, {-1, 0, 2});
  const Tensor r = relu(x);
  CHECK(r.value_at(0) == 0.0);
  CHECK(r.value_at(1) == 0.0);
  CHECK(r.value_at(2) == 2.0);

  const Tensor same = mul(x, Tensor::full({3}, 1.0));
  for (int i = 0; i < 3; ++i) CHECK(same.value_at(i) == x.value_at(i));
}

TEST_CASE("broadcast follows the trailing-dimension rule") {
  Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from({3}, {10, 20, 30});
  const Tensor s = add(a, b);
  CHECK(s.value_at(0) == 11);
  CHECK(s.value_at(5) == 36);

  Tensor bad = Tensor::from({2}, {1, 2});
  CHECK_THROWS_AS(add(a, bad), ShapeError);

  // Backward sums the broadcast groups.
  Tensor bb = Tensor::from({3}, {1.0, 1.0, 1.0}, true);
  backward(reduce_sum(add(a, bb)));
  for (int i = 0; i < 3; ++i) CHECK(bb.grad()[i] == doctest::Approx(2.0));
}

TEST_CASE("non-finite results are an error, never silent") {
  Tensor a = Tensor::from({1}, {1.0});
  Tensor z = Tensor::from({1}, {0.0});
  CHECK_THROWS_AS(div(a, z), NumericError);
  CHECK_THROWS_AS(log(z), NumericError);
  CHECK_THROWS_AS(Tensor::from({1}, {std::nan("")}), NumericError);
}

TEST_CASE("reductions") {
  Tensor v = Tensor::from({3}, {1, 2, 3});
  CHECK(reduce_sum(v).item() == 6.0);

  // GAP of a 2x2 map [[1,3],[5,7]] -> 4 (hand arithmetic).
  Tensor map = Tensor::from({2, 2, 1}, {1, 3, 5, 7});
  CHECK(reduce_mean(map, {0, 1}).item() == doctest::Approx(4.0).epsilon(1e-15));

  // Mean over H,W of a constant map is the constant.
  Tensor c = Tensor::full({4, 5, 2}, 0.37);
  const Tensor m = reduce_mean(c, {0, 1});
  for (int i = 0; i < 2; ++i) CHECK(m.value_at(i) == doctest::Approx(0.37).epsilon(1e-15));

  CHECK_THROWS_AS(reduce_sum(v, {1}), ShapeError);
  CHECK_THROWS_AS(reduce_sum(v, {0, 0}), ShapeError);
}

TEST_CASE("reductions commute with axis permutation of the data") {
  Rng rng(7);
  Tensor t = random_tensor({3, 4}, rng);
  // sum over everything equals sum of the transposed layout
  std::vector<double> tr(12);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) tr[static_cast<size_t>(j) * 3 + i] = t.value_at(i * 4 + j);
  }
  Tensor t2 = Tensor::from({4, 3}, std::move(tr));
  CHECK(reduce_sum(t).item() == doctest::Approx(reduce_sum(t2).item()).epsilon(1e-12));
  // per-axis: sum over axis 0 of t == sum over axis 1 of transposed t
  const Tensor s0 = reduce_sum(t, {0});
  const Tensor s1 = reduce_sum(t2, {1});
  for (int j = 0; j < 4; ++j) {
    CHECK(s0.value_at(j) == doctest::Approx(s1.value_at(j)).epsilon(1e-12));
  }
}

TEST_CASE("backward: sum and polynomial") {
  Rng rng(3);
  Tensor x = Tensor::from({4}, {0.5, -0.25, 1.5, 2.0}, true);
  backward(reduce_sum(x));
  for (int i = 0; i < 4; ++i) CHECK(x.grad()[i] == 1.0);

  Tensor y = Tensor::from({2}, {1.0, 2.0}, true);
  backward(reduce_sum(mul(y, y)));
  CHECK(y.grad()[0] == doctest::Approx(2.0));
  CHECK(y.grad()[1] == doctest::Approx(4.0));

  // Accumulation is additive across backward calls.
  backward(reduce_sum(mul(y, y)));
  CHECK(y.grad()[0] == doctest::Approx(4.0));
}

TEST_CASE("backward requires a scalar root") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  CHECK_THROWS_AS(backward(mul(x, x)), ShapeError);
}

TEST_CASE("detach blocks gradient flow and preserves values") {
  Tensor x = Tensor::from({3}, {1.0, -2.0, 3.0}, true);
  Tensor d = detach(x);
  CHECK_FALSE(d.requires_grad());
  for (int i = 0; i < 3; ++i) CHECK(d.value_at(i) == x.value_at(i));

  Tensor s = Tensor::from({3}, {2.0, 2.0, 2.0}, true);
  backward(reduce_sum(mul(d, s)));
  CHECK_FALSE(x.has_grad());
  CHECK(s.grad()[0] == doctest::Approx(1.0));

  // Tape inspection: x's node is not reachable through the detached branch.
  Tensor loss = reduce_sum(mul(detach(x), s));
  const auto nodes = reachable_nodes(loss);
  CHECK(std::find(nodes.begin(), nodes.end(), x.node()) == nodes.end());
  CHECK(std::find(nodes.begin(), nodes.end(), s.node()) != nodes.end());
}

TEST_CASE("bilinear resize: pass-through, constants, and the 1-D oracle") {
  Rng rng(11);
  Tensor t = random_tensor({5, 7, 3}, rng);
  const Tensor same = bilinear_resize(t, 5, 7);
  for (int64_t i = 0; i < t.size(); ++i) CHECK(same.value_at(i) == t.value_at(i));

  const Tensor one = bilinear_resize(Tensor::full({1, 1, 2}, 0.7), 4, 6);
  for (int64_t i = 0; i < one.size(); ++i) CHECK(one.value_at(i) == 0.7);

  // 2x1 map [0,1] -> 4x1, checked against the closed-form 1-D interpolation.
  Tensor col = Tensor::from({2, 1, 1}, {0.0, 1.0});
  const Tensor up = bilinear_resize(col, 4, 1);
  const std::vector<double> src = {0.0, 1.0};
  for (int i = 0; i < 4; ++i) {
    CHECK(up.value_at(i) == doctest::Approx(oracle::bilinear_1d(src, 4, i)).epsilon(1e-15));
  }
  // Frozen values from the oracle evaluated by hand.
  CHECK(up.value_at(0) == doctest::Approx(0.0));
  CHECK(up.value_at(1) == doctest::Approx(0.25));
  CHECK(up.value_at(2) == doctest::Approx(0.75));
  CHECK(up.value_at(3) == doctest::Approx(1.0));

  CHECK_THROWS_AS(bilinear_resize(t, 0, 3), ShapeError);
}

TEST_CASE("resize down and back reproduces constant maps exactly") {
  Tensor c = Tensor::full({8, 6, 2}, 0.123456789);
  const Tensor round_trip = bilinear_resize(bilinear_resize(c, 3, 2), 8, 6);
  for (int64_t i = 0; i < c.size(); ++i) CHECK(round_trip.value_at(i) == 0.123456789);
}

TEST_CASE("primitive gradients match central finite differences") {
  // The suite covers conv2d, resize, matmul/softmax, cosine and every loss.
  for (const auto& r : run_gradient_suite(123)) {
    INFO(r.name, " err=", r.max_rel_err);
    CHECK(r.pass);
  }
}

TEST_CASE("extra finite-difference spot checks on composites") {
  Rng rng(99);
  Tensor x = random_tensor({3, 4}, rng, true);
  auto build = [&] {
    Tensor soft = softmax_rows(x);
    Tensor lse = logsumexp_rows(mul_scalar(x, 0.7));
    return add(reduce_mean(mul(soft, soft)), reduce_mean(lse));
  };
  CHECK(finite_difference_max_err(build, x) <= 1e-4);

  Tensor s = random_tensor({4, 5, 2}, rng, true);
  auto build2 = [&] {
    Tensor window = slice(s, {1, 2, 0}, {2, 3, 2});
    return reduce_mean(abs(hflip(window)));
  };
  CHECK(finite_difference_max_err(build2, s) <= 1e-4);

  Tensor m = random_tensor({2, 6}, rng, true);
  std::vector<int> cols = {3, 0};
  auto build3 = [&] {
    return reduce_mean(take_row_cols(exp(mul_scalar(m, 0.5)), cols));
  };
  CHECK(finite_difference_max_err(build3, m) <= 1e-4);

  Tensor g = random_tensor({3, 3, 2}, rng, true);
  std::vector<Position> pos = {{0, 0}, {2, 1}, {1, 2}};
  auto build4 = [&] { return reduce_mean(gather_positions(sigmoid(g), pos)); };
  CHECK(finite_difference_max_err(build4, g) <= 1e-4);

  Tensor rm = random_tensor({2, 3, 1}, rng, true);
  auto build5 = [&] { return reduce_sum(reduce_max(rm, {0, 1})); };
  CHECK(finite_difference_max_err(build5, rm) <= 1e-4);
}

TEST_CASE("conv2d shape contract and spot values") {
  // 1x1 kernel, identity weight: convolution is a channel mix.
  Tensor img = Tensor::from({2, 2, 1}, {1, 2, 3, 4});
  Tensor w = Tensor::from({1, 1, 1, 1}, {2.0});
  const Tensor out = conv2d(img, w, Tensor(), 1, 0);
  CHECK(out.shape() == Shape{2, 2, 1});
  CHECK(out.value_at(3) == 8.0);

  // stride-2 halves even dims with pad 1 and 3x3 kernels.
  Tensor big = Tensor::full({8, 8, 2}, 1.0);
  Rng rng(5);
  Tensor k = random_tensor({3, 3, 2, 4}, rng);
  const Tensor down = conv2d(big, k, Tensor(), 2, 1);
  CHECK(down.shape() == Shape{4, 4, 4});

  CHECK_THROWS_AS(conv2d(img, random_tensor({3, 3, 2, 1}, rng), Tensor(), 1, 1),
                  ShapeError);
}

TEST_CASE("hflip is an exact involution") {
  Rng rng(21);
  Tensor t = random_tensor({4, 5, 3}, rng);
  const Tensor twice = hflip(hflip(t));
  for (int64_t i = 0; i < t.size(); ++i) CHECK(twice.value_at(i) == t.value_at(i));
}

TEST_CASE("cosine matrix bounds and zero-norm handling") {
  Rng rng(31);
  Tensor a = random_tensor({6, 3}, rng);
  Tensor b = random_tensor({6, 3}, rng);
  const Tensor m = cosine_matrix(a, b);
  for (int64_t i = 0; i < m.size(); ++i) {
    CHECK(m.value_at(i) <= 1.0 + 1e-12);
    CHECK(m.value_at(i) >= -1.0 - 1e-12);
  }
  const Tensor self = cosine_matrix(a, a);
  for (int i = 0; i < 6; ++i) CHECK(self.value_at(i * 6 + i) == doctest::Approx(1.0));

  Tensor zero_row = Tensor::from({2, 3}, {0, 0, 0, 1, 2, 3});
  const Tensor z = cosine_matrix(zero_row, b);
  for (int j = 0; j < 6; ++j) CHECK(z.value_at(j) == 0.0);
}

TEST_CASE("matmul matches a plain triple loop") {
  Rng rng(41);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  const Tensor out = matmul(a, b);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += a.value_at(i * 4 + k) * b.value_at(k * 2 + j);
      CHECK(out.value_at(i * 2 + j) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}
