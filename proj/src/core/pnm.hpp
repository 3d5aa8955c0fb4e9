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

#include "core/tensor.hpp"

namespace tscd {

/// 8-bit raster, 1 channel (P5) or 3 channels (P6), row-major interleaved.
struct ImageU8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<uint8_t> pixels;

  uint8_t at(int y, int x, int c = 0) const {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
};

/// Binary portable pixmap, maxval 255. Malformed headers and truncated
/// payloads raise IoError.
ImageU8 read_ppm(const std::string& path);
void write_ppm(const std::string& path, const ImageU8& img);

/// Binary portable graymap, maxval 255. Used for masks and pseudo-labels
/// (pixel value = class index, 255 = ignore).
ImageU8 read_pgm(const std::string& path);
void write_pgm(const std::string& path, const ImageU8& img);

/// [H,W,3] in [0,1] -> quantized bytes (round to nearest).
ImageU8 tensor_to_u8(const Tensor& hwc);
/// bytes / 255 -> [H,W,3] in [0,1].
Tensor u8_to_tensor(const ImageU8& img);

}  // namespace tscd
