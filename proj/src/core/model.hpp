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

#include <map>
#include <string>

#include "core/cam.hpp"
#include "core/tensor.hpp"

namespace tscd {

/// Desk-scale stand-in for the transformer backbone: a 4-stage CNN that
/// downsamples to 1/4 resolution, two single-head self-attention blocks at
/// the low resolution, a shared classifier head, and a per-pixel
/// segmentation head upsampled back to input resolution. Both training
/// views run through the same parameter set.
struct ModelConfig {
  int num_classes = 3;
  int channels = 32;  // K; must be a multiple of 4

  void validate() const;
};

/// Encoder/decoder outputs for one view.
struct ForwardOut {
  Tensor features;      // pre-attention [H',W',K]; the cam source
  Tensor attn1;         // [N,N] row-softmax weights, N = H'*W'
  Tensor attn2;         // [N,N]
  Tensor attn1_scores;  // [N,N] pre-softmax pair scores (logit scale)
  Tensor attn2_scores;  // [N,N]
  Tensor cls_logits;    // [C]
  Tensor seg_logits;    // [H,W,C+1], channel 0 = background
  int grid_h = 0;
  int grid_w = 0;
};

class Model {
 public:
  Model() = default;

  /// Scaled-uniform initialization, reproducible under the seed.
  static Model init(const ModelConfig& cfg, uint64_t seed);

  /// Requires H and W divisible by 4.
  ForwardOut forward(const Tensor& img) const;

  const ModelConfig& config() const { return cfg_; }
  ClassifierHead head() const { return ClassifierHead{params_.at("cls.w")}; }

  std::map<std::string, Tensor>& params() { return params_; }
  const std::map<std::string, Tensor>& params() const { return params_; }

  /// Versioned binary checkpoint: magic, model dims, shape table, and
  /// little-endian fp64 payloads.
  void save(const std::string& path) const;
  static Model load(const std::string& path);

 private:
  ModelConfig cfg_;
  std::map<std::string, Tensor> params_;
};

}  // namespace tscd
