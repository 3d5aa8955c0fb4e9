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

namespace tscd {

/// Segmentation metrics over C'=C+1 classes (background included). Classes
/// with zero union are excluded from the mIoU mean.
class Metrics {
 public:
  explicit Metrics(int num_classes_with_bg);

  /// Accumulates one prediction/ground-truth pair. Entries equal to 255 in
  /// the ground truth are skipped.
  void update(const std::vector<uint8_t>& prediction,
              const std::vector<uint8_t>& ground_truth);

  int num_classes() const { return c_; }
  uint64_t confusion(int truth, int pred) const {
    return matrix_[static_cast<size_t>(truth) * c_ + pred];
  }

  double class_iou(int cls) const;  // NaN when the union is empty
  double miou() const;
  double pixel_accuracy() const;

  /// `class,iou` rows (named via the canonical classes) plus a miou footer.
  std::string to_csv() const;

 private:
  int c_;
  std::vector<uint64_t> matrix_;  // row = truth, col = prediction
};

}  // namespace tscd
