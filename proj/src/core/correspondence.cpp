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

#include "core/correspondence.hpp"

#include <algorithm>
#include <cmath>

#include "core/rng.hpp"
#include "core/tensor_image.hpp"

namespace tscd {

std::pair<int, int> transformed_dims(const AffineTransform& t, int h, int w) {
  switch (t.kind) {
    case TransformKind::kIdentity:
    case TransformKind::kHflip:
      return {h, w};
    case TransformKind::kRescale:
    case TransformKind::kHflipRescale: {
      const int oh = std::max(1, static_cast<int>(std::lround(h * t.factor)));
      const int ow = std::max(1, static_cast<int>(std::lround(w * t.factor)));
      return {oh, ow};
    }
  }
  return {h, w};
}

Tensor apply_transform(const AffineTransform& t, const Tensor& map) {
  if (map.rank() != 3) throw ShapeError("apply_transform expects [H,W,D]");
  switch (t.kind) {
    case TransformKind::kIdentity:
      return map;
    case TransformKind::kHflip:
      return hflip(map);
    case TransformKind::kRescale: {
      const auto [oh, ow] = transformed_dims(t, map.dim(0), map.dim(1));
      return bilinear_resize(map, oh, ow);
    }
    case TransformKind::kHflipRescale: {
      const auto [oh, ow] = transformed_dims(t, map.dim(0), map.dim(1));
      return hflip(bilinear_resize(map, oh, ow));
    }
  }
  return map;
}

Position map_position(const AffineTransform& t, Position p, int h1, int w1) {
  const auto [h2, w2] = transformed_dims(t, h1, w1);
  auto nearest = [](double src) { return static_cast<int>(std::lround(src)); };
  int r = p.row, c = p.col;
  if (t.kind == TransformKind::kRescale || t.kind == TransformKind::kHflipRescale) {
    // Inverse of the resize source mapping: dst = (src + 0.5)/scale - 0.5.
    const double sy = static_cast<double>(h1) / h2;
    const double sx = static_cast<double>(w1) / w2;
    r = std::clamp(nearest((p.row + 0.5) / sy - 0.5), 0, h2 - 1);
    c = std::clamp(nearest((p.col + 0.5) / sx - 0.5), 0, w2 - 1);
  }
  if (t.kind == TransformKind::kHflip || t.kind == TransformKind::kHflipRescale) {
    c = w2 - 1 - c;
  }
  return {r, c};
}

CorrSample corr_volume(const Tensor& a, const Tensor& b,
                       const std::vector<Position>& positions_1,
                       const std::vector<Position>& positions_2) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(2) != b.dim(2)) {
    throw ShapeError("corr_volume: views must be [H,W,C] with equal C");
  }
  if (positions_1.size() != positions_2.size()) {
    throw ShapeError("corr_volume: position lists must have equal length");
  }
  Tensor fa = gather_positions(a, positions_1);  // bounds-checked
  Tensor fb = gather_positions(b, positions_2);
  return CorrSample{positions_1, positions_2, cosine_matrix(fa, fb)};
}

std::vector<Position> sample_positions(int h, int w, int n, uint64_t rng_seed) {
  if (n < 0 || n > h * w) {
    throw Error("sample_positions: n must satisfy 0 <= n <= h*w");
  }
  Rng rng(rng_seed);
  std::vector<Position> out;
  out.reserve(static_cast<size_t>(n));
  for (int flat : rng.sample_without_replacement(h * w, n)) {
    out.push_back({flat / w, flat % w});
  }
  return out;
}

Tensor scd_loss(const CorrSample& m, const CorrSample& s) {
  if (m.positions_1 != s.positions_1 || m.positions_2 != s.positions_2) {
    throw Error("scd_loss: M and S were sampled at different positions");
  }
  // detach() enforces the target semantics even if the caller forgot to.
  Tensor target = detach(m.matrix);
  return neg(reduce_mean(mul(target, relu(s.matrix))));
}

Tensor equivariant_loss(const Cam& m1, const Cam& m2, const AffineTransform& t) {
  Tensor warped = apply_transform(t, m1.maps);
  if (warped.shape() != m2.maps.shape()) {
    throw ShapeError("equivariant_loss: shapes differ after transform, " +
                     shape_str(warped.shape()) + " vs " + shape_str(m2.maps.shape()));
  }
  return reduce_mean(abs(sub(warped, m2.maps)));
}

}  // namespace tscd
