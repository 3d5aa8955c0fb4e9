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

#include "core/rng.hpp"
#include "core/varm.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace tscd;

namespace {

Tensor random_image(int h, int w, Rng& rng) {
  std::vector<double> v(static_cast<size_t>(h) * w * 3);
  for (auto& x : v) x = rng.uniform(0.0, 1.0);
  return Tensor::from({h, w, 3}, std::move(v));
}

}  // namespace

TEST_CASE("pixel variation: constants, a step edge, and the naive oracle") {
  const Tensor flat = Tensor::full({4, 4, 3}, 0.5);
  const Tensor v0 = pixel_variation(flat);
  for (int64_t i = 0; i < v0.size(); ++i) CHECK(v0.value_at(i) == 0.0);

  // Vertical step of height 1 in channel 0 between columns 1 and 2:
  // V = (left - here)^2 picks up 1.0 exactly on the right-of-edge column.
  std::vector<double> img(5 * 5 * 3, 0.0);
  for (int y = 0; y < 5; ++y) {
    for (int x = 2; x < 5; ++x) img[(static_cast<size_t>(y) * 5 + x) * 3 + 0] = 1.0;
  }
  const Tensor v = pixel_variation(Tensor::from({5, 5, 3}, std::move(img)));
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) {
      const double expected = x == 2 ? 1.0 : 0.0;
      CHECK(v.value_at(y * 5 + x) == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  Rng rng(3);
  const Tensor rand_img = random_image(4, 4, rng);
  const Tensor vr = pixel_variation(rand_img);
  const auto expected = oracle::pixel_variation(
      {rand_img.values().begin(), rand_img.values().end()}, 4, 4);
  for (int64_t i = 0; i < vr.size(); ++i) {
    CHECK(vr.value_at(i) == doctest::Approx(expected[static_cast<size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("local kernel: zero difference and the degenerate sigma guard") {
  VarmConfig cfg;
  cfg.dilations = {1};
  const Tensor flat = Tensor::full({3, 3, 3}, 0.42);
  const Tensor k = local_kernel(flat, cfg);
  for (int64_t i = 0; i < k.size(); ++i) CHECK(k.value_at(i) == 0.0);

  // Center tap always has zero difference, hence affinity 0 (the max).
  Rng rng(5);
  const Tensor img = random_image(4, 4, rng);
  const Tensor kr = local_kernel(img, cfg);
  const int taps = cfg.taps();
  for (int i = 0; i < 16; ++i) {
    CHECK(kr.value_at(static_cast<int64_t>(i) * taps) == 0.0);
    for (int t = 1; t < taps; ++t) {
      CHECK(kr.value_at(static_cast<int64_t>(i) * taps + t) <= 0.0);
    }
  }
}

TEST_CASE("two-tone image: larger color difference, smaller affinity") {
  VarmConfig cfg;
  cfg.dilations = {1};
  // Pixel (1,1) has a mild neighbor (right) and a strong neighbor (below).
  std::vector<double> img(3 * 3 * 3, 0.5);
  auto set = [&](int y, int x, double v) {
    for (int c = 0; c < 3; ++c) img[(static_cast<size_t>(y) * 3 + x) * 3 + c] = v;
  };
  set(1, 2, 0.6);
  set(2, 1, 0.9);
  const Tensor k = local_kernel(Tensor::from({3, 3, 3}, std::move(img)), cfg);
  const auto offsets = varm_offsets(cfg);
  const int taps = cfg.taps();
  int right_tap = -1, down_tap = -1;
  for (int t = 0; t < taps; ++t) {
    if (offsets[t] == std::pair<int, int>{0, 1}) right_tap = t;
    if (offsets[t] == std::pair<int, int>{1, 0}) down_tap = t;
  }
  const int64_t center = (1 * 3 + 1) * taps;
  CHECK(k.value_at(center + down_tap) < k.value_at(center + right_tap));
}

TEST_CASE("correction kernel: uniform for beta=0 on constant images") {
  VarmConfig cfg;
  cfg.beta = 0.0;
  const Tensor flat = Tensor::full({4, 4, 3}, 0.3);
  const VarmKernel k = correction_kernel(flat, cfg);
  CHECK(k.row_normalized);
  const int taps = cfg.taps();
  REQUIRE(taps == 49);
  for (int64_t i = 0; i < k.weights.size(); ++i) {
    CHECK(k.weights.value_at(i) == doctest::Approx(1.0 / taps).epsilon(1e-9));
  }
}

TEST_CASE("beta=0 kernel equals the softmax of the rgb affinities") {
  Rng rng(7);
  VarmConfig cfg;
  cfg.beta = 0.0;
  cfg.dilations = {1, 2};
  const Tensor img = random_image(5, 5, rng);
  const VarmKernel k = correction_kernel(img, cfg);
  const Tensor raw = local_kernel(img, cfg);
  const int taps = cfg.taps();
  for (int i = 0; i < 25; ++i) {
    double z = 0.0;
    for (int t = 0; t < taps; ++t) z += std::exp(raw.value_at(static_cast<int64_t>(i) * taps + t));
    for (int t = 0; t < taps; ++t) {
      const double expected = std::exp(raw.value_at(static_cast<int64_t>(i) * taps + t)) / z;
      CHECK(k.weights.value_at(static_cast<int64_t>(i) * taps + t) ==
            doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("correction kernel matches the naive per-pixel oracle") {
  Rng rng(11);
  VarmConfig cfg;
  cfg.dilations = {1};
  cfg.beta = 0.01;
  const Tensor img = random_image(5, 5, rng);
  const VarmKernel k = correction_kernel(img, cfg);
  const auto expected = oracle::correction_kernel(
      {img.values().begin(), img.values().end()}, 5, 5, varm_offsets(cfg), cfg.alpha,
      cfg.beta);
  REQUIRE(k.weights.size() == static_cast<int64_t>(expected.size()));
  for (int64_t i = 0; i < k.weights.size(); ++i) {
    CHECK(k.weights.value_at(i) ==
          doctest::Approx(expected[static_cast<size_t>(i)]).epsilon(1e-10));
  }
}

TEST_CASE("kernel rows are convex combinations") {
  Rng rng(13);
  VarmConfig cfg;  // defaults: 49 taps, beta 0.01
  const Tensor img = random_image(9, 9, rng);
  const VarmKernel k = correction_kernel(img, cfg);
  const int taps = cfg.taps();
  for (int i = 0; i < 81; ++i) {
    double sum = 0.0;
    for (int t = 0; t < taps; ++t) {
      const double w = k.weights.value_at(static_cast<int64_t>(i) * taps + t);
      CHECK(w >= 0.0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("refine: zero iterations and the constant fixed point") {
  Rng rng(17);
  const Tensor img = random_image(6, 6, rng);
  VarmConfig cfg;
  cfg.iterations = 0;
  std::vector<double> scores(6 * 6 * 2);
  for (auto& s : scores) s = rng.uniform(0.0, 1.0);
  const Tensor p0 = Tensor::from({6, 6, 2}, scores);
  const Tensor same = refine(p0, img, cfg);
  for (int64_t i = 0; i < p0.size(); ++i) CHECK(same.value_at(i) == p0.value_at(i));

  // Spatially constant per class: fixed point for any row-normalized kernel.
  cfg.iterations = 10;
  std::vector<double> flat(6 * 6 * 3);
  for (int i = 0; i < 36; ++i) {
    flat[static_cast<size_t>(i) * 3 + 0] = 0.2;
    flat[static_cast<size_t>(i) * 3 + 1] = 0.5;
    flat[static_cast<size_t>(i) * 3 + 2] = 0.3;
  }
  const Tensor fixed = refine(Tensor::from({6, 6, 3}, std::move(flat)), img, cfg);
  for (int i = 0; i < 36; ++i) {
    CHECK(fixed.value_at(i * 3 + 0) == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(fixed.value_at(i * 3 + 1) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(fixed.value_at(i * 3 + 2) == doctest::Approx(0.3).epsilon(1e-9));
  }
}

TEST_CASE("refine preserves range and per-pixel class sums") {
  Rng rng(19);
  const Tensor img = random_image(8, 8, rng);
  VarmConfig cfg;
  std::vector<double> scores(8 * 8 * 3);
  // Rows sum to 1 like softmax scores.
  for (int i = 0; i < 64; ++i) {
    double a = rng.uniform(0.0, 1.0), b = rng.uniform(0.0, 1.0 - a);
    scores[static_cast<size_t>(i) * 3 + 0] = a;
    scores[static_cast<size_t>(i) * 3 + 1] = b;
    scores[static_cast<size_t>(i) * 3 + 2] = 1.0 - a - b;
  }
  const Tensor p0 = Tensor::from({8, 8, 3}, scores);
  const Tensor refined = refine(p0, img, cfg);

  for (int c = 0; c < 3; ++c) {
    double lo = 1e9, hi = -1e9, rlo = 1e9, rhi = -1e9;
    for (int i = 0; i < 64; ++i) {
      lo = std::min(lo, p0.value_at(i * 3 + c));
      hi = std::max(hi, p0.value_at(i * 3 + c));
      rlo = std::min(rlo, refined.value_at(i * 3 + c));
      rhi = std::max(rhi, refined.value_at(i * 3 + c));
    }
    CHECK(rlo >= lo - 1e-9);
    CHECK(rhi <= hi + 1e-9);
  }
  for (int i = 0; i < 64; ++i) {
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) sum += refined.value_at(i * 3 + c);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("refine is equivariant to horizontal flips") {
  Rng rng(23);
  const int h = 6, w = 8, c = 2;
  const Tensor img = random_image(h, w, rng);
  std::vector<double> scores(static_cast<size_t>(h) * w * c);
  for (auto& s : scores) s = rng.uniform(0.0, 1.0);
  const Tensor p0 = Tensor::from({h, w, c}, std::move(scores));
  VarmConfig cfg;
  cfg.dilations = {1, 2};
  // The variation term uses one-sided (left/down) differences, so exact flip
  // equivariance holds for the beta = 0 kernel family.
  cfg.beta = 0.0;

  auto flip_hwc = [&](const Tensor& t) {
    std::vector<double> out(static_cast<size_t>(t.size()));
    const int ch = t.dim(2);
    for (int y = 0; y < t.dim(0); ++y) {
      for (int x = 0; x < t.dim(1); ++x) {
        for (int k = 0; k < ch; ++k) {
          out[(static_cast<size_t>(y) * t.dim(1) + x) * ch + k] =
              t.value_at((static_cast<int64_t>(y) * t.dim(1) + (t.dim(1) - 1 - x)) * ch + k);
        }
      }
    }
    return Tensor::from(t.shape(), std::move(out));
  };

  const Tensor a = flip_hwc(refine(p0, img, cfg));
  const Tensor b = refine(flip_hwc(p0), flip_hwc(img), cfg);
  for (int64_t i = 0; i < a.size(); ++i) {
    CHECK(a.value_at(i) == doctest::Approx(b.value_at(i)).epsilon(1e-12));
  }
}

TEST_CASE("beta=0 dilation-1 refine equals plain pixel-adaptive smoothing") {
  Rng rng(29);
  const Tensor img = random_image(7, 7, rng);
  std::vector<double> scores(7 * 7 * 2);
  for (auto& s : scores) s = rng.uniform(0.0, 1.0);
  VarmConfig cfg;
  cfg.beta = 0.0;
  cfg.dilations = {1};
  cfg.iterations = 4;
  const Tensor ours = refine(Tensor::from({7, 7, 2}, scores), img, cfg);
  const auto baseline = oracle::plain_adaptive_smooth(
      {img.values().begin(), img.values().end()}, 7, 7, scores, 2, cfg.alpha,
      cfg.iterations);
  for (int64_t i = 0; i < ours.size(); ++i) {
    CHECK(ours.value_at(i) ==
          doctest::Approx(baseline[static_cast<size_t>(i)]).epsilon(1e-10));
  }
}

TEST_CASE("two-region denoising: agreement with the clean labels increases") {
  const fixtures::TwoRegion f = fixtures::two_region(24, 24, 404);
  const int before = fixtures::agreement(f.noisy, f.clean);
  REQUIRE(before < static_cast<int>(f.clean.size()));

  VarmConfig cfg;  // (alpha, beta) = (4, 0.01), dilations 1..24, 10 iterations
  const Tensor p0 = Tensor::from({f.h, f.w, 2}, fixtures::one_hot_scores(f.noisy, 2));
  const Tensor refined = refine(p0, f.image, cfg);
  std::vector<uint8_t> result(f.clean.size());
  for (size_t i = 0; i < result.size(); ++i) {
    result[i] = refined.value_at(static_cast<int64_t>(i) * 2 + 1) >
                        refined.value_at(static_cast<int64_t>(i) * 2 + 0)
                    ? 1
                    : 0;
  }
  const int after = fixtures::agreement(result, f.clean);
  CHECK(after > before);
}

TEST_CASE("config validation") {
  VarmConfig bad;
  bad.alpha = 0.0;
  CHECK_THROWS(bad.validate());
  bad = VarmConfig{};
  bad.dilations = {0};
  CHECK_THROWS(bad.validate());
  bad = VarmConfig{};
  bad.iterations = -1;
  CHECK_THROWS(bad.validate());

  Rng rng(31);
  const Tensor img = random_image(4, 4, rng);
  CHECK_THROWS_AS(refine(Tensor::full({3, 4, 2}, 0.5), img, VarmConfig{}), ShapeError);
}
