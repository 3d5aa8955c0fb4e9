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

#include "core/cam.hpp"
#include "core/rng.hpp"
#include "oracles.hpp"

using namespace tscd;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(static_cast<size_t>(numel(shape)));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v));
}

}  // namespace

TEST_CASE("class scores: constants and zero weights") {
  const int k = 5, c = 3;
  ClassifierHead head{Tensor::full({c, k}, 1.0)};
  const Tensor f = Tensor::full({4, 4, k}, 1.0);
  const Tensor y = class_scores(f, head);
  for (int i = 0; i < c; ++i) CHECK(y.value_at(i) == doctest::Approx(k).epsilon(1e-12));

  ClassifierHead zero{Tensor::zeros({c, k})};
  const Tensor y0 = class_scores(f, zero);
  for (int i = 0; i < c; ++i) CHECK(y0.value_at(i) == 0.0);
}

TEST_CASE("class scores match the triple-loop oracle") {
  Rng rng(17);
  Tensor f = random_tensor({2, 2, 3}, rng);
  Tensor w = random_tensor({2, 3}, rng);
  const Tensor y = class_scores(f, ClassifierHead{w});
  const auto expected = oracle::class_scores(
      {f.values().begin(), f.values().end()}, 2, 2, 3,
      {w.values().begin(), w.values().end()}, 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(y.value_at(i) == doctest::Approx(expected[static_cast<size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("class scores equal the mean of per-position logits") {
  Rng rng(18);
  Tensor f = random_tensor({3, 4, 5}, rng);
  Tensor w = random_tensor({2, 5}, rng);
  const Tensor y = class_scores(f, ClassifierHead{w});
  // GAP and the linear head commute.
  Tensor per_pos = matmul(reshape(f, {12, 5}), transpose(w));
  const Tensor mean_logits = reduce_mean(per_pos, {0});
  for (int i = 0; i < 2; ++i) {
    CHECK(y.value_at(i) == doctest::Approx(mean_logits.value_at(i)).epsilon(1e-12));
  }
}

TEST_CASE("compute_cam: selector weights and nonnegativity") {
  Rng rng(19);
  Tensor f = random_tensor({3, 3, 4}, rng);
  // Selector head: class 0 reads channel 2 only.
  std::vector<double> wsel(4, 0.0);
  wsel[2] = 1.0;
  const Cam cam = compute_cam(f, ClassifierHead{Tensor::from({1, 4}, std::move(wsel))});
  CHECK_FALSE(cam.normalized);
  for (int i = 0; i < 9; ++i) {
    const double expected = std::max(f.value_at(i * 4 + 2), 0.0);
    CHECK(cam.maps.value_at(i) == doctest::Approx(expected).epsilon(1e-12));
  }

  Tensor fpos = random_tensor({3, 3, 4}, rng, 0.0, 1.0);
  Tensor wpos = random_tensor({2, 4}, rng, 0.0, 1.0);
  const Cam cam_pos = compute_cam(fpos, ClassifierHead{wpos});
  const auto expected = oracle::cam_maps({fpos.values().begin(), fpos.values().end()},
                                         3, 3, 4,
                                         {wpos.values().begin(), wpos.values().end()}, 2);
  for (int64_t i = 0; i < cam_pos.maps.size(); ++i) {
    CHECK(cam_pos.maps.value_at(i) ==
          doctest::Approx(expected[static_cast<size_t>(i)]).epsilon(1e-12));
    CHECK(cam_pos.maps.value_at(i) >= 0.0);
  }
}

TEST_CASE("compute_cam matches the naive oracle on random input") {
  Rng rng(23);
  Tensor f = random_tensor({4, 5, 3}, rng);
  Tensor w = random_tensor({3, 3}, rng);
  const Cam cam = compute_cam(f, ClassifierHead{w});
  const auto expected = oracle::cam_maps({f.values().begin(), f.values().end()}, 4, 5,
                                         3, {w.values().begin(), w.values().end()}, 3);
  for (int64_t i = 0; i < cam.maps.size(); ++i) {
    CHECK(cam.maps.value_at(i) ==
          doctest::Approx(expected[static_cast<size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("normalize_cam scales present classes and zeroes absent ones") {
  Tensor maps = Tensor::from({1, 2, 3}, {2.0, 0.0, 0.4, 1.0, 0.0, 0.8});
  const Cam norm = normalize_cam(Cam{maps, false}, {0, 1});
  CHECK(norm.normalized);
  CHECK(norm.maps.value_at(0) == doctest::Approx(1.0));
  CHECK(norm.maps.value_at(3) == doctest::Approx(0.5));
  CHECK(norm.maps.value_at(1) == 0.0);  // all-zero class stays zero
  CHECK(norm.maps.value_at(2) == 0.0);  // absent class zeroed
  CHECK(norm.maps.value_at(5) == 0.0);

  CHECK_THROWS(normalize_cam(norm, {0}));
}

TEST_CASE("dual-threshold labeling: hi, lo, and the ignore band") {
  // scores: one class map per pixel already normalized
  Tensor maps = Tensor::from({1, 3, 2},
                             {0.9, 0.1,   // class 1 wins above hi
                              0.1, 0.05,  // below lo -> background
                              0.45, 0.2});  // mid band -> ignore
  const Cam cam{maps, true};
  const PseudoLabel label = cam_to_pseudo_label(cam, 0.55, 0.35);
  CHECK(label.at(0, 0) == 1);
  CHECK(label.at(0, 1) == 0);
  CHECK(label.at(0, 2) == PseudoLabel::kIgnore);

  CHECK_THROWS(cam_to_pseudo_label(Cam{maps, false}, 0.55, 0.35));
  CHECK_THROWS(cam_to_pseudo_label(cam, 0.3, 0.5));
}

TEST_CASE("labeling ties break to the lowest class index") {
  Tensor maps = Tensor::from({1, 1, 3}, {0.8, 0.8, 0.8});
  const PseudoLabel label = cam_to_pseudo_label(Cam{maps, true}, 0.55, 0.35);
  CHECK(label.at(0, 0) == 1);
}

TEST_CASE("scaling features leaves normalized cam and labels unchanged") {
  Rng rng(29);
  Tensor f = random_tensor({4, 4, 3}, rng);
  Tensor w = random_tensor({2, 3}, rng);
  const Cam cam1 = compute_cam(f, ClassifierHead{w});
  const Cam cam2 = compute_cam(mul_scalar(f, 3.7), ClassifierHead{w});
  for (int64_t i = 0; i < cam1.maps.size(); ++i) {
    CHECK(cam2.maps.value_at(i) == doctest::Approx(3.7 * cam1.maps.value_at(i)).epsilon(1e-12));
  }
  const Cam n1 = normalize_cam(cam1, {0, 1});
  const Cam n2 = normalize_cam(cam2, {0, 1});
  for (int64_t i = 0; i < n1.maps.size(); ++i) {
    CHECK(n2.maps.value_at(i) == doctest::Approx(n1.maps.value_at(i)).epsilon(1e-9));
  }
  const PseudoLabel l1 = cam_to_pseudo_label(n1, 0.55, 0.35);
  const PseudoLabel l2 = cam_to_pseudo_label(n2, 0.55, 0.35);
  CHECK(l1.labels == l2.labels);
}

TEST_CASE("raising hi never converts background to foreground") {
  Rng rng(31);
  Tensor f = random_tensor({5, 5, 3}, rng);
  Tensor w = random_tensor({3, 3}, rng);
  const Cam norm = normalize_cam(compute_cam(f, ClassifierHead{w}), {0, 1, 2});
  const PseudoLabel low_hi = cam_to_pseudo_label(norm, 0.5, 0.35);
  const PseudoLabel high_hi = cam_to_pseudo_label(norm, 0.8, 0.35);
  for (size_t i = 0; i < low_hi.labels.size(); ++i) {
    if (low_hi.labels[i] == 0) CHECK(high_hi.labels[i] == 0);
    // foreground can only demote to ignore, never to a different class
    if (high_hi.labels[i] != 0 && high_hi.labels[i] != PseudoLabel::kIgnore) {
      CHECK(high_hi.labels[i] == low_hi.labels[i]);
    }
  }
}

TEST_CASE("channel mismatch is an error") {
  Rng rng(37);
  Tensor f = random_tensor({2, 2, 4}, rng);
  Tensor w = random_tensor({2, 3}, rng);
  CHECK_THROWS_AS(class_scores(f, ClassifierHead{w}), ShapeError);
  CHECK_THROWS_AS(compute_cam(f, ClassifierHead{w}), ShapeError);
}
