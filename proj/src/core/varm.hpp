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

#include <utility>
#include <vector>

#include "core/tensor.hpp"

namespace tscd {

/// Variation-aware refinement settings. The neighborhood is the center pixel
/// plus the 8-connected offsets at each dilation rate (replicate padding),
/// so the default tap count is 6 * 8 + 1 = 49.
struct VarmConfig {
  double alpha = 4.0;
  double beta = 0.01;
  std::vector<int> dilations = {1, 2, 4, 8, 12, 24};
  int iterations = 10;

  void validate() const;
  int taps() const { return static_cast<int>(dilations.size()) * 8 + 1; }
};

/// Neighbor offsets (dr, dc) in kernel order; entry 0 is the center.
std::vector<std::pair<int, int>> varm_offsets(const VarmConfig& cfg);

/// Per-pixel correction weights over the neighborhood, [H,W,taps].
struct VarmKernel {
  Tensor weights;
  std::vector<std::pair<int, int>> offsets;
  bool row_normalized = false;
};

/// Forward-difference variation energy of an [H,W,3] image: squared left and
/// down differences summed over channels, replicate padding. [H,W].
Tensor pixel_variation(const Tensor& img);

/// Raw affinity term -(alpha*|dI|)^2 / sigma^2 per neighbor, [H,W,taps].
/// |dI| is the channel-mean absolute difference; sigma is its per-pixel
/// standard deviation over the neighborhood, floored at 1e-6.
Tensor local_kernel(const Tensor& img, const VarmConfig& cfg);

/// softmax(local) - beta * softmax(variation at neighbors), clamped at zero
/// and renormalized so every pixel's weights are a convex combination.
VarmKernel correction_kernel(const Tensor& img, const VarmConfig& cfg);

/// Iterative pixel-adaptive smoothing of score maps [H,W,C'] against the
/// image the kernel was built from. The kernel is computed once and reused
/// across iterations. The result is detached: refined scores are supervision
/// targets and never carry gradient.
Tensor refine(const Tensor& scores, const Tensor& img, const VarmConfig& cfg);

}  // namespace tscd
