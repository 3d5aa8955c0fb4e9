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

namespace tscd {

/// Deterministic splitmix64 generator. All randomness in the library flows
/// through explicit Rng instances seeded from a single master seed; nothing
/// draws from ambient state, so identical seeds give identical streams on
/// any platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform01();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n). Requires n > 0.
  int uniform_int(int n);

  /// Standard normal via Box-Muller.
  double normal();

  /// First k entries of a partial Fisher-Yates shuffle of {0..n-1}.
  std::vector<int> sample_without_replacement(int n, int k);

  /// Mixes (seed, stream, index) into an independent substream seed.
  static uint64_t derive(uint64_t seed, uint64_t stream, uint64_t index);

 private:
  uint64_t state_;
};

}  // namespace tscd
