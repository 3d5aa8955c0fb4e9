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

#include <vector>

#include "core/cam.hpp"
#include "core/tensor.hpp"

namespace tscd {

/// Eq. 15 weights.
struct LossWeights {
  double lambda1 = 0.1;
  double lambda2 = 0.01;
  double lambda3 = 1.0;
};

/// Multi-label soft-margin loss over C independent class logits:
/// mean_c of l_c*softplus(-p_c) + (1-l_c)*softplus(p_c).
Tensor classification_loss(const Tensor& logits, const std::vector<int>& multi_hot);

/// Pixel-pair affinity supervision derived from a refined pseudo-label.
/// Pairs touching an ignored pixel belong to neither set.
struct AffinityLabels {
  std::vector<std::pair<Position, Position>> positive;
  std::vector<std::pair<Position, Position>> negative;
};

AffinityLabels build_affinity_labels(const PseudoLabel& refined,
                                     const std::vector<Position>& positions);

/// Affinity loss on the fused attention maps a1/a2 ([N,N], N = grid_h*grid_w).
/// The pair logit is the symmetrized mean of the two maps. Positives are
/// pushed toward sigmoid 1, negatives toward 0; an empty pair set contributes
/// 0 and `undefined` is set when both sets are empty.
Tensor aux_affinity_loss(const Tensor& a1, const Tensor& a2,
                         const AffinityLabels& labels, int grid_w,
                         bool* undefined = nullptr);

/// Softmax cross-entropy over non-ignored pixels of [H,W,C'] logits.
/// `all_ignored` is set (and 0 returned) when no pixel is labeled.
Tensor segmentation_loss(const Tensor& seg_logits, const PseudoLabel& target,
                         bool* all_ignored = nullptr);

/// Image-gradient-weighted total variation of softmax probabilities [H,W,C']:
/// right/down differences weighted by exp(-|dI|^2 / sigma_r^2), sigma_r = 0.1.
Tensor reg_loss(const Tensor& probs, const Tensor& img);

/// Scalar components of the total loss; undefined tensors count as zero.
struct LossComponents {
  Tensor scd;
  Tensor seg;
  Tensor equ;
  Tensor aux;
  Tensor reg;
  Tensor cls;
};

/// lambda1*(scd + seg + equ + aux) + lambda2*reg + lambda3*cls.
/// During warmup only the classification term is taken.
Tensor total_loss(const LossComponents& parts, const LossWeights& w, bool warmup);

}  // namespace tscd
