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

#include "core/gradcheck.hpp"

#include <cmath>
#include <cstdio>

#include "core/cam.hpp"
#include "core/correspondence.hpp"
#include "core/losses.hpp"
#include "core/rng.hpp"
#include "core/tensor_image.hpp"

namespace tscd {

double finite_difference_max_err(const std::function<Tensor()>& build_loss,
                                 Tensor& input, double h) {
  if (!input.requires_grad()) throw Error("gradcheck input must require grad");
  if (input.has_grad()) input.zero_grad();
  Tensor loss = build_loss();
  backward(loss);
  const std::vector<double> analytic(input.grad().begin(), input.grad().end());

  double max_err = 0.0;
  auto values = input.raw_values();
  for (size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const double up = build_loss().item();
    values[i] = saved - h;
    const double down = build_loss().item();
    values[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(fd), 1e-4});
    max_err = std::max(max_err, std::abs(analytic[i] - fd) / denom);
  }
  return max_err;
}

namespace {

constexpr double kTol = 1e-4;

// Random values bounded away from 0 so relu/abs kinks sit far from the
// finite-difference probe.
Tensor random_signed(Shape shape, Rng& rng, bool requires_grad = true) {
  std::vector<double> v(static_cast<size_t>(numel(shape)));
  for (auto& x : v) {
    const double mag = rng.uniform(0.15, 1.1);
    x = rng.uniform01() < 0.5 ? -mag : mag;
  }
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

Tensor random_positive(Shape shape, Rng& rng, bool requires_grad = true) {
  std::vector<double> v(static_cast<size_t>(numel(shape)));
  for (auto& x : v) x = rng.uniform(0.1, 1.0);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

GradCheckResult check(const std::string& name, Tensor& input,
                      const std::function<Tensor()>& build) {
  GradCheckResult r;
  r.name = name;
  r.max_rel_err = finite_difference_max_err(build, input);
  r.pass = r.max_rel_err <= kTol;
  return r;
}

}  // namespace

std::vector<GradCheckResult> run_gradient_suite(uint64_t seed) {
  std::vector<GradCheckResult> results;
  Rng rng(Rng::derive(seed, /*stream=*/0x9cad, 0));

  {  // conv2d: input, weight, and bias paths
    Tensor in = random_signed({5, 5, 2}, rng);
    Tensor w = random_signed({3, 3, 2, 1}, rng);
    Tensor b = random_signed({1}, rng);
    auto build = [&] { return reduce_mean(relu(conv2d(in, w, b, 2, 1))); };
    results.push_back(check("op.conv2d.input", in, build));
    results.push_back(check("op.conv2d.weight", w, build));
    results.push_back(check("op.conv2d.bias", b, build));
  }
  {  // bilinear resize, up and down
    Tensor in = random_signed({4, 3, 2}, rng);
    auto build = [&] {
      return reduce_mean(mul(bilinear_resize(in, 7, 5), bilinear_resize(in, 7, 5)));
    };
    results.push_back(check("op.bilinear_resize", in, build));
  }
  {  // matmul + transpose + softmax rows
    Tensor a = random_signed({4, 3}, rng);
    Tensor b = random_signed({3, 4}, rng);
    auto build = [&] {
      return reduce_mean(mul(softmax_rows(matmul(a, b)), transpose(matmul(a, b))));
    };
    results.push_back(check("op.matmul_softmax.a", a, build));
    results.push_back(check("op.matmul_softmax.b", b, build));
  }
  {  // cosine similarity matrix
    Tensor a = random_signed({5, 3}, rng);
    Tensor b = random_signed({4, 3}, rng);
    auto build = [&] { return reduce_mean(cosine_matrix(a, b)); };
    results.push_back(check("op.cosine_matrix.a", a, build));
    results.push_back(check("op.cosine_matrix.b", b, build));
  }
  {  // distillation loss (Eq. 7 shape): grad flows through S only
    const auto pos = sample_positions(4, 4, 6, seed ^ 0x111);
    Tensor cam_a = random_positive({4, 4, 3}, rng, false);
    Tensor cam_b = random_positive({4, 4, 3}, rng, false);
    Tensor seg_a = random_signed({4, 4, 3}, rng);
    Tensor seg_b = random_signed({4, 4, 3}, rng);
    auto build = [&] {
      const CorrSample m = corr_volume(cam_a, cam_b, pos, pos);
      const CorrSample s = corr_volume(seg_a, seg_b, pos, pos);
      return scd_loss(m, s);
    };
    results.push_back(check("loss.scd.seg1", seg_a, build));
    results.push_back(check("loss.scd.seg2", seg_b, build));
  }
  {  // equivariant loss
    Tensor m1 = random_positive({8, 8, 2}, rng);
    Tensor m2 = random_positive({4, 4, 2}, rng);
    const AffineTransform t = AffineTransform::flip_rescale(0.5);
    auto build = [&] { return equivariant_loss(Cam{m1, false}, Cam{m2, false}, t); };
    results.push_back(check("loss.equivariant.m1", m1, build));
    results.push_back(check("loss.equivariant.m2", m2, build));
  }
  {  // classification loss
    Tensor logits = random_signed({4}, rng);
    const std::vector<int> label = {1, 0, 1, 0};
    auto build = [&] { return classification_loss(logits, label); };
    results.push_back(check("loss.classification", logits, build));
  }
  {  // auxiliary affinity loss through row-softmax attention
    PseudoLabel grid;
    grid.height = 3;
    grid.width = 3;
    grid.labels = {1, 1, 0, 1, PseudoLabel::kIgnore, 0, 2, 2, 0};
    const auto pos = sample_positions(3, 3, 9, seed ^ 0x222);
    const AffinityLabels labels = build_affinity_labels(grid, pos);
    Tensor z1 = random_signed({9, 9}, rng);
    Tensor z2 = random_signed({9, 9}, rng);
    auto build = [&] {
      return aux_affinity_loss(softmax_rows(z1), softmax_rows(z2), labels, 3);
    };
    results.push_back(check("loss.aux_affinity.a1", z1, build));
    results.push_back(check("loss.aux_affinity.a2", z2, build));
  }
  {  // segmentation cross-entropy with an ignored pixel
    Tensor logits = random_signed({3, 3, 4}, rng);
    PseudoLabel target;
    target.height = 3;
    target.width = 3;
    target.labels = {0, 1, 2, 3, PseudoLabel::kIgnore, 1, 0, 2, PseudoLabel::kIgnore};
    auto build = [&] { return segmentation_loss(logits, target); };
    results.push_back(check("loss.segmentation_ce", logits, build));
  }
  {  // smoothness regularization through softmax probabilities
    Tensor logits = random_signed({4, 4, 3}, rng);
    Tensor img = random_positive({4, 4, 3}, rng, false);
    auto build = [&] {
      Tensor probs = reshape(softmax_rows(reshape(logits, {16, 3})), {4, 4, 3});
      return reg_loss(probs, img);
    };
    results.push_back(check("loss.regularization", logits, build));
  }
  {  // weighted total over live component instances
    Tensor cls_logits = random_signed({3}, rng);
    Tensor seg_logits = random_signed({3, 3, 4}, rng);
    Tensor m1 = random_positive({4, 4, 2}, rng);
    Tensor m2 = random_positive({4, 4, 2}, rng);
    Tensor img = random_positive({3, 3, 3}, rng, false);
    PseudoLabel target;
    target.height = 3;
    target.width = 3;
    target.labels = {0, 1, 2, 3, 0, 1, PseudoLabel::kIgnore, 2, 0};
    const auto pos = sample_positions(4, 4, 5, seed ^ 0x333);
    // The distillation target is a constant of the optimization; freeze it
    // outside the rebuild closure so the probe agrees with the analytic
    // stop-gradient semantics.
    const CorrSample mm = corr_volume(detach(m1), detach(m2), pos, pos);
    auto build = [&] {
      LossComponents parts;
      parts.cls = classification_loss(cls_logits, {1, 0, 1});
      parts.seg = segmentation_loss(seg_logits, target);
      parts.equ = equivariant_loss(Cam{m1, false}, Cam{m2, false},
                                   AffineTransform::identity());
      const CorrSample ss = corr_volume(m1, m2, pos, pos);
      parts.scd = scd_loss(mm, ss);
      Tensor probs = reshape(softmax_rows(reshape(seg_logits, {9, 4})), {3, 3, 4});
      parts.reg = reg_loss(probs, img);
      return total_loss(parts, LossWeights{}, false);
    };
    results.push_back(check("loss.total.cls_path", cls_logits, build));
    results.push_back(check("loss.total.seg_path", seg_logits, build));
    results.push_back(check("loss.total.cam_path", m1, build));
  }
  return results;
}

bool gradient_suite_passes(uint64_t seed, std::string* report) {
  bool all_pass = true;
  std::string text;
  for (const auto& r : run_gradient_suite(seed)) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-28s max_rel_err=%.3e %s\n", r.name.c_str(),
                  r.max_rel_err, r.pass ? "ok" : "FAIL");
    text += line;
    all_pass = all_pass && r.pass;
  }
  if (report) *report = text;
  return all_pass;
}

}  // namespace tscd
