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

#include "core/losses.hpp"

#include <cmath>

namespace tscd {

Tensor classification_loss(const Tensor& logits, const std::vector<int>& multi_hot) {
  if (logits.rank() != 1) throw ShapeError("classification_loss expects [C] logits");
  const int c = logits.dim(0);
  if (static_cast<int>(multi_hot.size()) != c) {
    throw ShapeError("classification_loss: label size mismatch");
  }
  std::vector<double> pos(static_cast<size_t>(c)), negv(static_cast<size_t>(c));
  for (int i = 0; i < c; ++i) {
    pos[static_cast<size_t>(i)] = multi_hot[static_cast<size_t>(i)] ? 1.0 : 0.0;
    negv[static_cast<size_t>(i)] = 1.0 - pos[static_cast<size_t>(i)];
  }
  Tensor l = Tensor::from({c}, std::move(pos));
  Tensor not_l = Tensor::from({c}, std::move(negv));
  Tensor terms = add(mul(l, softplus(neg(logits))), mul(not_l, softplus(logits)));
  return reduce_mean(terms);
}

AffinityLabels build_affinity_labels(const PseudoLabel& refined,
                                     const std::vector<Position>& positions) {
  AffinityLabels out;
  const size_t n = positions.size();
  for (size_t i = 0; i < n; ++i) {
    const uint8_t li = refined.at(positions[i].row, positions[i].col);
    if (li == PseudoLabel::kIgnore) continue;
    for (size_t j = i + 1; j < n; ++j) {
      const uint8_t lj = refined.at(positions[j].row, positions[j].col);
      if (lj == PseudoLabel::kIgnore) continue;
      if (li == lj) out.positive.emplace_back(positions[i], positions[j]);
      else out.negative.emplace_back(positions[i], positions[j]);
    }
  }
  return out;
}

namespace {

std::vector<int64_t> pair_flat_indices(
    const std::vector<std::pair<Position, Position>>& pairs, int grid_w, int n,
    bool transposed) {
  std::vector<int64_t> idx;
  idx.reserve(pairs.size());
  for (const auto& [u, v] : pairs) {
    const int64_t ui = static_cast<int64_t>(u.row) * grid_w + u.col;
    const int64_t vi = static_cast<int64_t>(v.row) * grid_w + v.col;
    idx.push_back(transposed ? vi * n + ui : ui * n + vi);
  }
  return idx;
}

}  // namespace

Tensor aux_affinity_loss(const Tensor& a1, const Tensor& a2,
                         const AffinityLabels& labels, int grid_w,
                         bool* undefined) {
  if (a1.rank() != 2 || a1.dim(0) != a1.dim(1) || a1.shape() != a2.shape()) {
    throw ShapeError("aux_affinity_loss: attention maps must be square and equal");
  }
  if (undefined) *undefined = false;
  if (labels.positive.empty() && labels.negative.empty()) {
    if (undefined) *undefined = true;
    return Tensor::scalar(0.0);
  }
  const int n = a1.dim(0);

  // Fused pair logit: mean of both maps, symmetrized over (u,v)/(v,u).
  auto pair_logits = [&](const std::vector<std::pair<Position, Position>>& pairs) {
    const auto fwd = pair_flat_indices(pairs, grid_w, n, false);
    const auto rev = pair_flat_indices(pairs, grid_w, n, true);
    Tensor s = add(add(gather_flat(a1, fwd), gather_flat(a1, rev)),
                   add(gather_flat(a2, fwd), gather_flat(a2, rev)));
    return mul_scalar(s, 0.25);
  };

  Tensor loss = Tensor::scalar(0.0);
  if (!labels.positive.empty()) {
    Tensor sp = sigmoid(pair_logits(labels.positive));
    Tensor miss = sub(Tensor::full(sp.shape(), 1.0), sp);
    loss = add(loss, reduce_mean(miss));
  }
  if (!labels.negative.empty()) {
    Tensor sn = sigmoid(pair_logits(labels.negative));
    loss = add(loss, reduce_mean(sn));
  }
  return loss;
}

Tensor segmentation_loss(const Tensor& seg_logits, const PseudoLabel& target,
                         bool* all_ignored) {
  if (seg_logits.rank() != 3) throw ShapeError("segmentation_loss expects [H,W,C']");
  const int h = seg_logits.dim(0), w = seg_logits.dim(1), c = seg_logits.dim(2);
  if (target.height != h || target.width != w) {
    throw ShapeError("segmentation_loss: target dims differ from logits");
  }
  if (all_ignored) *all_ignored = false;

  const int64_t pixels = static_cast<int64_t>(h) * w;
  std::vector<int> cols(static_cast<size_t>(pixels), 0);
  std::vector<double> mask(static_cast<size_t>(pixels), 0.0);
  int64_t labeled = 0;
  for (int64_t i = 0; i < pixels; ++i) {
    const uint8_t l = target.labels[static_cast<size_t>(i)];
    if (l == PseudoLabel::kIgnore) continue;
    if (l >= c) throw ShapeError("segmentation_loss: label exceeds channel count");
    cols[static_cast<size_t>(i)] = l;
    mask[static_cast<size_t>(i)] = 1.0;
    ++labeled;
  }
  if (labeled == 0) {
    if (all_ignored) *all_ignored = true;
    return Tensor::scalar(0.0);
  }
  Tensor rows = reshape(seg_logits, {static_cast<int>(pixels), c});
  Tensor per_pixel = sub(logsumexp_rows(rows), take_row_cols(rows, cols));
  Tensor masked = mul(per_pixel, Tensor::from({static_cast<int>(pixels)}, std::move(mask)));
  return mul_scalar(reduce_sum(masked), 1.0 / static_cast<double>(labeled));
}

Tensor reg_loss(const Tensor& probs, const Tensor& img) {
  if (probs.rank() != 3) throw ShapeError("reg_loss expects [H,W,C'] probabilities");
  if (img.rank() != 3 || img.dim(2) != 3) throw ShapeError("reg_loss expects an [H,W,3] image");
  const int h = probs.dim(0), w = probs.dim(1), c = probs.dim(2);
  if (img.dim(0) != h || img.dim(1) != w) {
    throw ShapeError("reg_loss: image dims differ from probabilities");
  }
  constexpr double kSigmaR = 0.1;

  // Edge-stopping weights from the image (constants w.r.t. the tape).
  const auto iv = img.values();
  auto edge_weight = [&](int y, int x, int ny, int nx) {
    double d2 = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
      const double d = iv[(static_cast<size_t>(y) * w + x) * 3 + ch] -
                       iv[(static_cast<size_t>(ny) * w + nx) * 3 + ch];
      d2 += d * d;
    }
    d2 /= 3.0;
    return std::exp(-d2 / (kSigmaR * kSigmaR));
  };

  Tensor loss = Tensor::scalar(0.0);
  const double norm = 1.0 / (2.0 * static_cast<double>(h) * w * c);
  if (w > 1) {
    std::vector<double> wr(static_cast<size_t>(h) * (w - 1) * c);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x + 1 < w; ++x) {
        const double we = edge_weight(y, x, y, x + 1);
        for (int ch = 0; ch < c; ++ch) {
          wr[(static_cast<size_t>(y) * (w - 1) + x) * c + ch] = we;
        }
      }
    }
    Tensor left = slice(probs, {0, 0, 0}, {h, w - 1, c});
    Tensor right = slice(probs, {0, 1, 0}, {h, w - 1, c});
    Tensor term = mul(abs(sub(left, right)),
                      Tensor::from({h, w - 1, c}, std::move(wr)));
    loss = add(loss, reduce_sum(term));
  }
  if (h > 1) {
    std::vector<double> wd(static_cast<size_t>(h - 1) * w * c);
    for (int y = 0; y + 1 < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double we = edge_weight(y, x, y + 1, x);
        for (int ch = 0; ch < c; ++ch) {
          wd[(static_cast<size_t>(y) * w + x) * c + ch] = we;
        }
      }
    }
    Tensor top = slice(probs, {0, 0, 0}, {h - 1, w, c});
    Tensor bottom = slice(probs, {1, 0, 0}, {h - 1, w, c});
    Tensor term = mul(abs(sub(top, bottom)),
                      Tensor::from({h - 1, w, c}, std::move(wd)));
    loss = add(loss, reduce_sum(term));
  }
  return mul_scalar(loss, norm);
}

Tensor total_loss(const LossComponents& parts, const LossWeights& w, bool warmup) {
  auto term = [](const Tensor& t) { return t.defined() ? t : Tensor::scalar(0.0); };
  Tensor cls_term = mul_scalar(term(parts.cls), w.lambda3);
  if (warmup) return cls_term;
  Tensor group = add(add(term(parts.scd), term(parts.seg)),
                     add(term(parts.equ), term(parts.aux)));
  return add(add(mul_scalar(group, w.lambda1), mul_scalar(term(parts.reg), w.lambda2)),
             cls_term);
}

}  // namespace tscd
