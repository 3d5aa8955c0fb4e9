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

#include <string>
#include <vector>

#include "core/model.hpp"

namespace tscd {

/// Writes one cam heatmap per predicted-present class
/// (<prefix>_cam_<class>.ppm) and a color segmentation overlay
/// (<prefix>_seg.ppm). Returns the rendered class names.
std::vector<std::string> render_outputs(const Model& model, const Tensor& image,
                                        const std::string& prefix);

}  // namespace tscd
