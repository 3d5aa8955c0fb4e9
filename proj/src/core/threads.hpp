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

namespace tscd {

/// Worker-thread cap, read once from SCD_THREADS (default 1).
int worker_threads();

/// Runs fn over [0, n) split into contiguous chunks. Every index is written
/// by exactly one worker, so results are bitwise identical for any thread
/// count. Kernels that reduce across indices stay serial.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace tscd
