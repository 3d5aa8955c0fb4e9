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

#include "core/render.hpp"

#include <algorithm>
#include <cmath>

#include "core/data.hpp"
#include "core/pnm.hpp"
#include "core/tensor_image.hpp"
#include "core/train.hpp"

namespace tscd {

namespace {

const double kOverlayColors[4][3] = {
    {0.0, 0.0, 0.0},  // background: untinted
    {0.9, 0.1, 0.1},
    {0.1, 0.9, 0.1},
    {0.2, 0.3, 0.95},
};

void heat_color(double v, double rgb[3]) {
  v = std::clamp(v, 0.0, 1.0);
  rgb[0] = v;
  rgb[1] = 0.25 * v;
  rgb[2] = 1.0 - v;
}

}  // namespace

std::vector<std::string> render_outputs(const Model& model, const Tensor& image,
                                        const std::string& prefix) {
  const ForwardOut fo = model.forward(image);
  const int h = image.dim(0), w = image.dim(1);
  const int c = model.config().num_classes;

  // Classes the model itself predicts as present.
  std::vector<int> present;
  for (int cls = 0; cls < c; ++cls) {
    if (fo.cls_logits.value_at(cls) > 0.0) present.push_back(cls);
  }
  const Cam cam = normalize_cam(compute_cam(fo.features, model.head()), present);
  Tensor cam_full = bilinear_resize(cam.maps, h, w);

  std::vector<std::string> rendered;
  for (int cls : present) {
    ImageU8 out;
    out.width = w;
    out.height = h;
    out.channels = 3;
    out.pixels.resize(static_cast<size_t>(h) * w * 3);
    for (int i = 0; i < h * w; ++i) {
      double rgb[3];
      heat_color(cam_full.value_at(static_cast<int64_t>(i) * c + cls), rgb);
      for (int ch = 0; ch < 3; ++ch) {
        out.pixels[static_cast<size_t>(i) * 3 + ch] =
            static_cast<uint8_t>(std::lround(rgb[ch] * 255.0));
      }
    }
    const std::string name = cls < num_canonical_classes()
                                 ? class_names()[static_cast<size_t>(cls)]
                                 : "class" + std::to_string(cls + 1);
    write_ppm(prefix + "_cam_" + name + ".ppm", out);
    rendered.push_back(name);
  }

  // Segmentation overlay: argmax class tint at 50% over the input.
  const std::vector<uint8_t> pred = predict_mask(model, image);
  ImageU8 overlay;
  overlay.width = w;
  overlay.height = h;
  overlay.channels = 3;
  overlay.pixels.resize(static_cast<size_t>(h) * w * 3);
  const auto iv = image.values();
  for (int i = 0; i < h * w; ++i) {
    const int cls = pred[static_cast<size_t>(i)];
    for (int ch = 0; ch < 3; ++ch) {
      double v = iv[static_cast<size_t>(i) * 3 + ch];
      if (cls > 0 && cls <= 3) {
        v = 0.5 * v + 0.5 * kOverlayColors[cls][ch];
      }
      overlay.pixels[static_cast<size_t>(i) * 3 + ch] =
          static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
  }
  write_ppm(prefix + "_seg.ppm", overlay);
  return rendered;
}

}  // namespace tscd
