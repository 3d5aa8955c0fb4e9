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

#include "core/cam.hpp"

#include <algorithm>

namespace tscd {

namespace {

void check_features(const Tensor& f, const ClassifierHead& head) {
  if (f.rank() != 3) throw ShapeError("features must be [H',W',K]");
  if (f.dim(2) != head.feature_channels()) {
    throw ShapeError("feature channels " + std::to_string(f.dim(2)) +
                     " do not match head K=" + std::to_string(head.feature_channels()));
  }
}

}  // namespace

Tensor class_scores(const Tensor& features, const ClassifierHead& head) {
  check_features(features, head);
  const int k = head.feature_channels();
  Tensor pooled = reduce_mean(features, {0, 1});                    // [K]
  Tensor col = reshape(pooled, {k, 1});
  return reshape(matmul(head.weights, col), {head.num_classes()});  // [C]
}

Cam compute_cam(const Tensor& features, const ClassifierHead& head) {
  check_features(features, head);
  const int h = features.dim(0), w = features.dim(1), k = features.dim(2);
  Tensor flat = reshape(features, {h * w, k});
  Tensor maps = matmul(flat, transpose(head.weights));  // [H'W', C]
  maps = relu(reshape(maps, {h, w, head.num_classes()}));
  return Cam{maps, false};
}

Cam normalize_cam(const Cam& cam, const std::vector<int>& present_classes) {
  if (cam.normalized) throw Error("normalize_cam: input is already normalized");
  const int h = cam.maps.dim(0), w = cam.maps.dim(1), c = cam.maps.dim(2);
  std::vector<bool> present(static_cast<size_t>(c), false);
  for (int cls : present_classes) {
    if (cls < 0 || cls >= c) throw ShapeError("normalize_cam: class index out of range");
    present[static_cast<size_t>(cls)] = true;
  }
  const auto v = cam.maps.values();
  std::vector<double> max_per_class(static_cast<size_t>(c), 0.0);
  for (int64_t i = 0; i < cam.maps.size(); ++i) {
    const int cls = static_cast<int>(i % c);
    max_per_class[static_cast<size_t>(cls)] =
        std::max(max_per_class[static_cast<size_t>(cls)], v[static_cast<size_t>(i)]);
  }
  std::vector<double> out(static_cast<size_t>(cam.maps.size()), 0.0);
  for (int64_t i = 0; i < cam.maps.size(); ++i) {
    const int cls = static_cast<int>(i % c);
    if (!present[static_cast<size_t>(cls)]) continue;
    const double m = max_per_class[static_cast<size_t>(cls)];
    out[static_cast<size_t>(i)] = m > 0.0 ? v[static_cast<size_t>(i)] / m : 0.0;
  }
  return Cam{Tensor::from({h, w, c}, std::move(out)), true};
}

PseudoLabel cam_to_pseudo_label(const Cam& cam, double hi, double lo) {
  if (!cam.normalized) throw Error("cam_to_pseudo_label: normalize the cam first");
  if (!(lo < hi)) throw Error("cam_to_pseudo_label: requires lo < hi");
  const int h = cam.maps.dim(0), w = cam.maps.dim(1), c = cam.maps.dim(2);
  PseudoLabel out;
  out.height = h;
  out.width = w;
  out.labels.assign(static_cast<size_t>(h) * w, 0);
  const auto v = cam.maps.values();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t base = (static_cast<size_t>(y) * w + x) * c;
      double best = v[base];
      int best_cls = 0;
      for (int cls = 1; cls < c; ++cls) {
        if (v[base + cls] > best) {
          best = v[base + cls];
          best_cls = cls;
        }
      }
      uint8_t label;
      if (best >= hi) label = static_cast<uint8_t>(best_cls + 1);
      else if (best < lo) label = 0;
      else label = PseudoLabel::kIgnore;
      out.labels[static_cast<size_t>(y) * w + x] = label;
    }
  }
  return out;
}

}  // namespace tscd
