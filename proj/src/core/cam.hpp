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

#include <cstdint>
#include <vector>

#include "core/tensor.hpp"

namespace tscd {

/// Fully connected classification head, no bias. weights is [C, K].
struct ClassifierHead {
  Tensor weights;

  int num_classes() const { return weights.dim(0); }
  int feature_channels() const { return weights.dim(1); }
};

/// Per-class activation maps [H',W',C], nonnegative. `normalized` marks maps
/// whose per-class max is 0 or 1.
struct Cam {
  Tensor maps;
  bool normalized = false;
};

/// Per-pixel class assignment. 0 = background, 1..C = classes, 255 = ignore.
struct PseudoLabel {
  static constexpr uint8_t kIgnore = 255;
  int height = 0;
  int width = 0;
  std::vector<uint8_t> labels;

  uint8_t at(int y, int x) const { return labels[static_cast<size_t>(y) * width + x]; }
};

/// Class scores via global average pooling + the head: y_c over [H',W',K].
Tensor class_scores(const Tensor& features, const ClassifierHead& head);

/// Activation maps: relu of the per-position weighted channel sum.
Cam compute_cam(const Tensor& features, const ClassifierHead& head);

/// Per-class max normalization; classes absent from the image-level label
/// are zeroed. Output is detached (pseudo-label plumbing carries no grad).
Cam normalize_cam(const Cam& cam, const std::vector<int>& present_classes);

/// Dual-threshold labeling: argmax score >= hi takes the class, max below lo
/// is background, the band in between is ignored. Ties break to the lowest
/// class index.
PseudoLabel cam_to_pseudo_label(const Cam& cam, double hi = 0.55, double lo = 0.35);

}  // namespace tscd
