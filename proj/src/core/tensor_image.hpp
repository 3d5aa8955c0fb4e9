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

#include "core/tensor.hpp"

namespace tscd {

/// Direct 2-D convolution on [H,W,Cin] with weights [kh,kw,Cin,Cout] and
/// zero padding. bias may be undefined. Output [Ho,Wo,Cout] with
/// Ho = (H + 2*pad - kh) / stride + 1 (floor).
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int pad);

/// Bilinear resampling of [H,W,C] with the half-pixel-centers convention
/// shared by the correspondence coordinate mapping. Equal output dims are an
/// exact pass-through, and constant maps are reproduced exactly.
Tensor bilinear_resize(const Tensor& hwc, int out_h, int out_w);

/// Exact column reversal of [H,W,C].
Tensor hflip(const Tensor& hwc);

/// src row/col for a destination coordinate under half-pixel-centers
/// resampling, clamped to [0, in_dim - 1].
double resize_source_coord(int dst, int in_dim, int out_dim);

}  // namespace tscd
