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

#include "core/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "core/common.hpp"
#include "core/data.hpp"

namespace tscd {

Metrics::Metrics(int num_classes_with_bg) : c_(num_classes_with_bg) {
  if (c_ < 1) throw Error("metrics: need at least one class");
  matrix_.assign(static_cast<size_t>(c_) * c_, 0);
}

void Metrics::update(const std::vector<uint8_t>& prediction,
                     const std::vector<uint8_t>& ground_truth) {
  if (prediction.size() != ground_truth.size()) {
    throw Error("metrics: prediction/ground truth size mismatch");
  }
  for (size_t i = 0; i < prediction.size(); ++i) {
    const uint8_t t = ground_truth[i];
    const uint8_t p = prediction[i];
    if (t == 255) continue;
    if (t >= c_ || p >= c_) throw Error("metrics: class index out of range");
    ++matrix_[static_cast<size_t>(t) * c_ + p];
  }
}

double Metrics::class_iou(int cls) const {
  uint64_t tp = confusion(cls, cls);
  uint64_t fp = 0, fn = 0;
  for (int k = 0; k < c_; ++k) {
    if (k == cls) continue;
    fp += confusion(k, cls);
    fn += confusion(cls, k);
  }
  const uint64_t uni = tp + fp + fn;
  if (uni == 0) return std::nan("");
  return static_cast<double>(tp) / static_cast<double>(uni);
}

double Metrics::miou() const {
  double sum = 0.0;
  int counted = 0;
  for (int cls = 0; cls < c_; ++cls) {
    const double iou = class_iou(cls);
    if (std::isnan(iou)) continue;
    sum += iou;
    ++counted;
  }
  return counted > 0 ? sum / counted : 0.0;
}

double Metrics::pixel_accuracy() const {
  uint64_t correct = 0, total = 0;
  for (int t = 0; t < c_; ++t) {
    for (int p = 0; p < c_; ++p) {
      total += confusion(t, p);
      if (t == p) correct += confusion(t, p);
    }
  }
  return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

std::string Metrics::to_csv() const {
  std::string out = "class,iou\n";
  char buf[64];
  for (int cls = 0; cls < c_; ++cls) {
    const std::string name =
        cls == 0 ? "background"
                 : (cls - 1 < num_canonical_classes() ? class_names()[static_cast<size_t>(cls - 1)]
                                                      : "class" + std::to_string(cls));
    const double iou = class_iou(cls);
    if (std::isnan(iou)) {
      out += name + ",nan\n";
    } else {
      std::snprintf(buf, sizeof(buf), "%.6f", iou);
      out += name + "," + buf + "\n";
    }
  }
  std::snprintf(buf, sizeof(buf), "%.6f", miou());
  out += "miou," + std::string(buf) + "\n";
  return out;
}

}  // namespace tscd
