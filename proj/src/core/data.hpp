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
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace tscd {

/// Canonical class universe. Index 0 is background; classes are 1-based.
const std::vector<std::string>& class_names();
int num_canonical_classes();

/// Generator settings for the synthetic shapes dataset. Every image
/// contains 1..max_shapes colored shapes over a textured background;
/// ground-truth masks exist for evaluation only.
struct SyntheticSpec {
  int num_images = 200;
  int size = 64;
  int max_shapes = 3;
  double color_jitter = 0.05;
  double texture_amplitude = 0.06;
  uint64_t seed = 0;
  std::vector<int> classes = {1, 2, 3};  // subset of the canonical class ids

  void validate() const;
};

struct Sample {
  Tensor image;                 // [H,W,3] in [0,1]
  std::vector<int> label;       // multi-hot over canonical classes
  std::vector<uint8_t> gt_mask; // class-index map, 0 = background
  int height = 0;
  int width = 0;
};

struct Dataset {
  std::vector<Sample> samples;
};

/// Deterministic under spec.seed; byte-identical on regeneration. Every
/// shape keeps at least 25 visible pixels after occlusion (bounded retries).
Dataset generate(const SyntheticSpec& spec);

/// Directory layout: images/NNNN.ppm, labels/NNNN.txt (comma-separated
/// class names), masks/NNNN.pgm.
void write_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

/// Random rescale, horizontal flip, and crop to crop_size. The mask moves
/// with the image (nearest-neighbor) and the multi-hot label is recounted,
/// so a fully cropped-out class drops off the label.
Sample augment(const Sample& s, int crop_size, Rng& rng);

}  // namespace tscd
