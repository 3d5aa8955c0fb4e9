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

#include "core/cam.hpp"
#include "core/tensor.hpp"

namespace tscd {

enum class TransformKind { kIdentity, kHflip, kRescale, kHflipRescale };

/// Spatial transform relating the two training views. Rescale factors are
/// restricted to {0.5, 0.75} so both views keep dims divisible by 4, and the
/// coordinate correspondence below stays exact for hflip.
struct AffineTransform {
  TransformKind kind = TransformKind::kIdentity;
  double factor = 1.0;

  static AffineTransform identity() { return {TransformKind::kIdentity, 1.0}; }
  static AffineTransform flip() { return {TransformKind::kHflip, 1.0}; }
  static AffineTransform rescale(double f) { return {TransformKind::kRescale, f}; }
  static AffineTransform flip_rescale(double f) {
    return {TransformKind::kHflipRescale, f};
  }
};

/// Applies the transform to an [H,W,D] map. Rescale composes with flip as
/// rescale-then-flip. Differentiable.
Tensor apply_transform(const AffineTransform& t, const Tensor& map);

/// Output dims of apply_transform for an input of (h, w).
std::pair<int, int> transformed_dims(const AffineTransform& t, int h, int w);

/// Maps a view-1 grid coordinate to the corresponding view-2 coordinate
/// (nearest grid point under the shared half-pixel-centers convention).
Position map_position(const AffineTransform& t, Position p, int h1, int w1);

/// Sampled correspondence sub-volume: matrix[i][j] is the cosine similarity
/// between view-1 features at positions_1[i] and view-2 features at
/// positions_2[j].
struct CorrSample {
  std::vector<Position> positions_1;
  std::vector<Position> positions_2;
  Tensor matrix;  // [n, n]
};

CorrSample corr_volume(const Tensor& a, const Tensor& b,
                       const std::vector<Position>& positions_1,
                       const std::vector<Position>& positions_2);

/// n distinct grid coordinates, uniform without replacement, deterministic
/// under the seed.
std::vector<Position> sample_positions(int h, int w, int n, uint64_t rng_seed);

/// Distillation loss: -(1/n^2) sum_ij M_ij * max(S_ij, 0). M is the
/// distillation target; its side of the graph receives no gradient. Both
/// samples must have been built from the same position lists.
Tensor scd_loss(const CorrSample& m, const CorrSample& s);

/// Mean L1 gap between the transformed view-1 cam and the view-2 cam.
Tensor equivariant_loss(const Cam& m1, const Cam& m2, const AffineTransform& t);

}  // namespace tscd
