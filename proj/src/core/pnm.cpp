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

#include "core/pnm.hpp"

#include <cmath>
#include <fstream>

namespace tscd {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in, const std::string& path) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw IoError(path + ": truncated header");
  return tok;
}

int parse_dim(const std::string& tok, const std::string& path) {
  try {
    size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v < 1) throw IoError("");
    return v;
  } catch (...) {
    throw IoError(path + ": malformed header field '" + tok + "'");
  }
}

ImageU8 read_pnm(const std::string& path, const char* magic, int channels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  if (next_token(in, path) != magic) {
    throw IoError(path + ": not a " + std::string(magic) + " file");
  }
  ImageU8 img;
  img.width = parse_dim(next_token(in, path), path);
  img.height = parse_dim(next_token(in, path), path);
  img.channels = channels;
  const int maxval = parse_dim(next_token(in, path), path);
  if (maxval != 255) throw IoError(path + ": only maxval 255 is supported");
  // The header's final whitespace byte was consumed by next_token.
  const size_t n = static_cast<size_t>(img.width) * img.height * channels;
  img.pixels.resize(n);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw IoError(path + ": truncated pixel payload");
  }
  return img;
}

void write_pnm(const std::string& path, const ImageU8& img, const char* magic,
               int channels) {
  if (img.channels != channels || img.width < 1 || img.height < 1) {
    throw IoError(path + ": invalid image for " + std::string(magic));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << magic << "\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace

ImageU8 read_ppm(const std::string& path) { return read_pnm(path, "P6", 3); }

void write_ppm(const std::string& path, const ImageU8& img) {
  write_pnm(path, img, "P6", 3);
}

ImageU8 read_pgm(const std::string& path) { return read_pnm(path, "P5", 1); }

void write_pgm(const std::string& path, const ImageU8& img) {
  write_pnm(path, img, "P5", 1);
}

ImageU8 tensor_to_u8(const Tensor& hwc) {
  if (hwc.rank() != 3 || hwc.dim(2) != 3) throw ShapeError("tensor_to_u8 expects [H,W,3]");
  ImageU8 img;
  img.height = hwc.dim(0);
  img.width = hwc.dim(1);
  img.channels = 3;
  img.pixels.resize(static_cast<size_t>(hwc.size()));
  const auto v = hwc.values();
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    const double x = std::round(v[i] * 255.0);
    img.pixels[i] = static_cast<uint8_t>(x < 0.0 ? 0.0 : (x > 255.0 ? 255.0 : x));
  }
  return img;
}

Tensor u8_to_tensor(const ImageU8& img) {
  std::vector<double> v(img.pixels.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = img.pixels[i] / 255.0;
  return Tensor::from({img.height, img.width, img.channels}, std::move(v));
}

}  // namespace tscd
