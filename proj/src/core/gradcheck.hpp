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
#include <functional>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace tscd {

/// Central finite differences against the analytic gradient of a scalar
/// function of one input tensor. Returns the maximum relative error
/// |analytic - fd| / max(|analytic|, |fd|, 1e-4) over all elements,
/// h = 1e-5.
double finite_difference_max_err(const std::function<Tensor()>& build_loss,
                                 Tensor& input, double h = 1e-5);

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

/// Finite-difference suite over every loss (distillation, equivariant,
/// classification, auxiliary affinity, segmentation cross-entropy,
/// smoothness regularization, weighted total) plus the trickier tensor
/// kernels. Each check uses <= 64 parameters; tolerance 1e-4.
std::vector<GradCheckResult> run_gradient_suite(uint64_t seed);

/// True if every check passed; report gets one line per check.
bool gradient_suite_passes(uint64_t seed, std::string* report);

}  // namespace tscd
