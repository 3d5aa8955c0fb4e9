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

#pragma once

#include <algorithm>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace fixtures {

// Piecewise-constant two-region image with clean region labels and a copy
// whose interior labels carry 5% flip noise. Used by the refinement tests,
// the refine CLI fixture, and the acceptance suite.
struct TwoRegion {
  tscd::Tensor image;
  std::vector<uint8_t> clean;
  std::vector<uint8_t> noisy;
  int h = 0, w = 0;
};

inline TwoRegion two_region(int h, int w, uint64_t seed) {
  TwoRegion f;
  f.h = h;
  f.w = w;
  tscd::Rng rng(seed);
  std::vector<double> img(static_cast<size_t>(h) * w * 3);
  f.clean.assign(static_cast<size_t>(h) * w, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool right = x >= w / 2;
      const double base[3] = {right ? 0.15 : 0.85, right ? 0.75 : 0.25, 0.3};
      for (int c = 0; c < 3; ++c) {
        img[(static_cast<size_t>(y) * w + x) * 3 + c] =
            std::clamp(base[c] + rng.uniform(-0.02, 0.02), 0.0, 1.0);
      }
      f.clean[static_cast<size_t>(y) * w + x] = right ? 1 : 0;
    }
  }
  f.image = tscd::Tensor::from({h, w, 3}, std::move(img));

  f.noisy = f.clean;
  const int interior = (h - 2) * (w - 2);
  const int flips = interior / 20;  // 5%
  tscd::Rng noise(seed + 1);
  for (int i = 0; i < flips; ++i) {
    const int y = 1 + noise.uniform_int(h - 2);
    const int x = 1 + noise.uniform_int(w - 2);
    auto& v = f.noisy[static_cast<size_t>(y) * w + x];
    v = v == 0 ? 1 : 0;
  }
  return f;
}

inline std::vector<double> one_hot_scores(const std::vector<uint8_t>& labels,
                                          int classes) {
  std::vector<double> scores(labels.size() * static_cast<size_t>(classes), 0.0);
  for (size_t i = 0; i < labels.size(); ++i) scores[i * classes + labels[i]] = 1.0;
  return scores;
}

inline int agreement(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b) {
  int same = 0;
  for (size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return same;
}

}  // namespace fixtures
