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

#include "core/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/pnm.hpp"
#include "core/tensor_image.hpp"

namespace fs = std::filesystem;

namespace tscd {

const std::vector<std::string>& class_names() {
  static const std::vector<std::string> names = {"circle", "square", "triangle"};
  return names;
}

int num_canonical_classes() { return static_cast<int>(class_names().size()); }

void SyntheticSpec::validate() const {
  if (num_images < 1) throw Error("dataset spec: num_images must be >= 1");
  if (size < 16 || size % 4 != 0) {
    throw Error("dataset spec: size must be >= 16 and divisible by 4");
  }
  if (max_shapes < 1 || max_shapes > 8) throw Error("dataset spec: max_shapes in [1,8]");
  if (color_jitter < 0.0 || texture_amplitude < 0.0) {
    throw Error("dataset spec: jitter/texture must be >= 0");
  }
  if (classes.empty()) throw Error("dataset spec: at least one class required");
  for (int cls : classes) {
    if (cls < 1 || cls > num_canonical_classes()) {
      throw Error("dataset spec: class id out of range");
    }
  }
}

namespace {

constexpr int kMinVisiblePixels = 25;

struct ShapeInstance {
  int cls = 0;  // 1-based
  double cx = 0, cy = 0, radius = 0;
  double color[3] = {0, 0, 0};
};

// Base colors per class; instances jitter around these.
const double kBaseColors[3][3] = {
    {0.82, 0.25, 0.20},  // circle
    {0.22, 0.72, 0.30},  // square
    {0.25, 0.35, 0.85},  // triangle
};

bool inside_shape(const ShapeInstance& s, double x, double y) {
  const double dx = x - s.cx, dy = y - s.cy;
  switch (s.cls) {
    case 1:
      return dx * dx + dy * dy <= s.radius * s.radius;
    case 2:
      return std::abs(dx) <= s.radius * 0.9 && std::abs(dy) <= s.radius * 0.9;
    case 3: {
      // Upward triangle inscribed in the radius.
      const double top = -s.radius;
      const double bot = s.radius * 0.8;
      if (dy < top || dy > bot) return false;
      const double half_width = s.radius * (dy - top) / (bot - top);
      return std::abs(dx) <= half_width;
    }
    default:
      return false;
  }
}

Sample render_attempt(const SyntheticSpec& spec, Rng& rng) {
  const int s = spec.size;
  Sample out;
  out.height = s;
  out.width = s;
  out.label.assign(static_cast<size_t>(num_canonical_classes()), 0);
  out.gt_mask.assign(static_cast<size_t>(s) * s, 0);

  // Textured background: base gray plus a low-frequency sinusoid and a
  // touch of per-pixel noise.
  const double base = rng.uniform(0.40, 0.62);
  const double fx = rng.uniform(0.5, 2.0), fy = rng.uniform(0.5, 2.0);
  const double phase = rng.uniform(0.0, 2.0 * M_PI);
  std::vector<double> img(static_cast<size_t>(s) * s * 3);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const double tex = spec.texture_amplitude *
                         std::sin(2.0 * M_PI * (fx * x + fy * y) / s + phase);
      for (int c = 0; c < 3; ++c) {
        const double noise = rng.uniform(-0.01, 0.01);
        img[(static_cast<size_t>(y) * s + x) * 3 + c] =
            std::clamp(base + tex + noise, 0.0, 1.0);
      }
    }
  }

  const int count = 1 + rng.uniform_int(spec.max_shapes);
  std::vector<ShapeInstance> shapes;
  for (int i = 0; i < count; ++i) {
    ShapeInstance sh;
    sh.cls = spec.classes[static_cast<size_t>(
        rng.uniform_int(static_cast<int>(spec.classes.size())))];
    sh.radius = rng.uniform(s * 0.10, s * 0.22);
    sh.cx = rng.uniform(sh.radius, s - sh.radius);
    sh.cy = rng.uniform(sh.radius, s - sh.radius);
    for (int c = 0; c < 3; ++c) {
      sh.color[c] = std::clamp(kBaseColors[sh.cls - 1][c] +
                                   rng.uniform(-spec.color_jitter, spec.color_jitter),
                               0.0, 1.0);
    }
    shapes.push_back(sh);
  }

  // Later shapes draw on top of earlier ones.
  std::vector<int> owner(static_cast<size_t>(s) * s, -1);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      for (int i = count - 1; i >= 0; --i) {
        if (inside_shape(shapes[static_cast<size_t>(i)], x + 0.5, y + 0.5)) {
          owner[static_cast<size_t>(y) * s + x] = i;
          break;
        }
      }
    }
  }
  std::vector<int> visible(static_cast<size_t>(count), 0);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const int i = owner[static_cast<size_t>(y) * s + x];
      if (i < 0) continue;
      ++visible[static_cast<size_t>(i)];
      const ShapeInstance& sh = shapes[static_cast<size_t>(i)];
      out.gt_mask[static_cast<size_t>(y) * s + x] = static_cast<uint8_t>(sh.cls);
      for (int c = 0; c < 3; ++c) {
        img[(static_cast<size_t>(y) * s + x) * 3 + c] = sh.color[c];
      }
    }
  }
  for (int i = 0; i < count; ++i) {
    if (visible[static_cast<size_t>(i)] < kMinVisiblePixels) {
      return Sample{};  // degenerate; caller retries
    }
  }
  for (uint8_t m : out.gt_mask) {
    if (m > 0) out.label[static_cast<size_t>(m - 1)] = 1;
  }
  out.image = Tensor::from({s, s, 3}, std::move(img));
  return out;
}

std::string index_name(size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04zu", i);
  return buf;
}

}  // namespace

Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.samples.reserve(static_cast<size_t>(spec.num_images));
  for (int i = 0; i < spec.num_images; ++i) {
    Sample sample;
    bool ok = false;
    for (int attempt = 0; attempt < 100; ++attempt) {
      Rng rng(Rng::derive(spec.seed, /*stream=*/0xda7a,
                          static_cast<uint64_t>(i) * 128 + attempt));
      sample = render_attempt(spec, rng);
      if (sample.image.defined()) {
        ok = true;
        break;
      }
    }
    if (!ok) throw Error("dataset generation: no valid placement after 100 attempts");
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "images");
  fs::create_directories(fs::path(dir) / "labels");
  fs::create_directories(fs::path(dir) / "masks");
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    const Sample& s = ds.samples[i];
    const std::string stem = index_name(i);
    write_ppm((fs::path(dir) / "images" / (stem + ".ppm")).string(), tensor_to_u8(s.image));

    std::ofstream label((fs::path(dir) / "labels" / (stem + ".txt")).string());
    if (!label) throw IoError("cannot write label file for " + stem);
    bool first = true;
    for (size_t c = 0; c < s.label.size(); ++c) {
      if (!s.label[c]) continue;
      if (!first) label << ",";
      label << class_names()[c];
      first = false;
    }
    label << "\n";

    ImageU8 mask;
    mask.width = s.width;
    mask.height = s.height;
    mask.channels = 1;
    mask.pixels = s.gt_mask;
    write_pgm((fs::path(dir) / "masks" / (stem + ".pgm")).string(), mask);
  }
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root / "images")) {
    throw IoError(dir + ": not a dataset directory (missing images/)");
  }
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(root / "images")) {
    if (entry.path().extension() == ".ppm") stems.push_back(entry.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw IoError(dir + ": dataset has no images");

  Dataset ds;
  for (const auto& stem : stems) {
    Sample s;
    const ImageU8 img = read_ppm((root / "images" / (stem + ".ppm")).string());
    s.image = u8_to_tensor(img);
    s.height = img.height;
    s.width = img.width;

    s.label.assign(static_cast<size_t>(num_canonical_classes()), 0);
    std::ifstream label((root / "labels" / (stem + ".txt")).string());
    if (!label) throw IoError(dir + ": missing label file for " + stem);
    std::string line;
    std::getline(label, line);
    std::stringstream ss(line);
    std::string name;
    while (std::getline(ss, name, ',')) {
      name.erase(name.find_last_not_of(" \t\r\n") + 1);
      name.erase(0, name.find_first_not_of(" \t\r\n"));
      if (name.empty()) continue;
      const auto& names = class_names();
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) throw IoError(dir + ": unknown class '" + name + "' in " + stem);
      s.label[static_cast<size_t>(it - names.begin())] = 1;
    }

    const fs::path mask_path = root / "masks" / (stem + ".pgm");
    if (fs::exists(mask_path)) {
      const ImageU8 mask = read_pgm(mask_path.string());
      if (mask.width != s.width || mask.height != s.height) {
        throw IoError(dir + ": mask dims differ from image for " + stem);
      }
      s.gt_mask = mask.pixels;
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Sample augment(const Sample& s, int crop_size, Rng& rng) {
  if (crop_size < 4 || crop_size % 4 != 0) {
    throw Error("augment: crop size must be a positive multiple of 4");
  }
  const double factor = rng.uniform(0.75, 1.25);
  const bool flip = rng.uniform01() < 0.5;
  const int rh = std::max(1, static_cast<int>(std::lround(s.height * factor)));
  const int rw = std::max(1, static_cast<int>(std::lround(s.width * factor)));

  Tensor img = bilinear_resize(s.image, rh, rw);
  if (flip) img = hflip(img);
  img = detach(img);

  // Nearest-neighbor companion warp for the mask.
  std::vector<uint8_t> mask(static_cast<size_t>(rh) * rw, 0);
  const bool has_mask = !s.gt_mask.empty();
  if (has_mask) {
    for (int y = 0; y < rh; ++y) {
      const int sy = std::clamp(static_cast<int>(std::lround(resize_source_coord(y, s.height, rh))),
                                0, s.height - 1);
      for (int x = 0; x < rw; ++x) {
        const int xx = flip ? rw - 1 - x : x;
        const int sx = std::clamp(static_cast<int>(std::lround(resize_source_coord(xx, s.width, rw))),
                                  0, s.width - 1);
        mask[static_cast<size_t>(y) * rw + x] = s.gt_mask[static_cast<size_t>(sy) * s.width + sx];
      }
    }
  }

  // Crop with replicate padding when the rescaled canvas is smaller.
  const int off_y = rh > crop_size ? rng.uniform_int(rh - crop_size + 1) : -(crop_size - rh) / 2;
  const int off_x = rw > crop_size ? rng.uniform_int(rw - crop_size + 1) : -(crop_size - rw) / 2;

  Sample out;
  out.height = crop_size;
  out.width = crop_size;
  std::vector<double> pixels(static_cast<size_t>(crop_size) * crop_size * 3);
  out.gt_mask.assign(static_cast<size_t>(crop_size) * crop_size, 0);
  const auto iv = img.values();
  for (int y = 0; y < crop_size; ++y) {
    const int sy = std::clamp(y + off_y, 0, rh - 1);
    for (int x = 0; x < crop_size; ++x) {
      const int sx = std::clamp(x + off_x, 0, rw - 1);
      for (int c = 0; c < 3; ++c) {
        pixels[(static_cast<size_t>(y) * crop_size + x) * 3 + c] =
            iv[(static_cast<size_t>(sy) * rw + sx) * 3 + c];
      }
      if (has_mask) {
        out.gt_mask[static_cast<size_t>(y) * crop_size + x] =
            mask[static_cast<size_t>(sy) * rw + sx];
      }
    }
  }
  out.image = Tensor::from({crop_size, crop_size, 3}, std::move(pixels));

  out.label.assign(static_cast<size_t>(num_canonical_classes()), 0);
  if (has_mask) {
    for (uint8_t m : out.gt_mask) {
      if (m > 0 && m != 255) out.label[static_cast<size_t>(m - 1)] = 1;
    }
  } else {
    out.label = s.label;
  }
  return out;
}

}  // namespace tscd
