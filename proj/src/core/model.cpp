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

#include "core/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "core/rng.hpp"
#include "core/tensor_image.hpp"

namespace tscd {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'C', 'D', 'C', 'K', 'P', '1'};

Tensor uniform_param(Shape shape, double bound, Rng& rng) {
  std::vector<double> v(static_cast<size_t>(numel(shape)));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v), /*requires_grad=*/true);
}

Tensor conv_weight(int kh, int kw, int cin, int cout, Rng& rng) {
  const double bound = std::sqrt(6.0 / (kh * kw * cin));
  return uniform_param({kh, kw, cin, cout}, bound, rng);
}

Tensor linear_weight(int in, int out, double scale, Rng& rng) {
  const double bound = scale * std::sqrt(6.0 / in);
  return uniform_param({in, out}, bound, rng);
}

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError(path + ": truncated checkpoint");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void ModelConfig::validate() const {
  if (num_classes < 1) throw Error("model: num_classes must be >= 1");
  if (channels < 4 || channels % 4 != 0) {
    throw Error("model: channels must be a positive multiple of 4");
  }
}

Model Model::init(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Model m;
  m.cfg_ = cfg;
  const int k = cfg.channels;
  const int c1 = k / 2, c2 = 3 * k / 4;
  Rng rng(Rng::derive(seed, /*stream=*/0x7a11, /*index=*/0));

  m.params_["enc1.w"] = conv_weight(3, 3, 3, c1, rng);
  m.params_["enc1.b"] = Tensor::zeros({c1}, true);
  m.params_["enc2.w"] = conv_weight(3, 3, c1, c2, rng);
  m.params_["enc2.b"] = Tensor::zeros({c2}, true);
  m.params_["enc3.w"] = conv_weight(3, 3, c2, k, rng);
  m.params_["enc3.b"] = Tensor::zeros({k}, true);
  m.params_["enc4.w"] = conv_weight(3, 3, k, k, rng);
  m.params_["enc4.b"] = Tensor::zeros({k}, true);
  for (const char* blk : {"attn1", "attn2"}) {
    m.params_[std::string(blk) + ".wq"] = linear_weight(k, k, 1.0, rng);
    m.params_[std::string(blk) + ".wk"] = linear_weight(k, k, 1.0, rng);
    m.params_[std::string(blk) + ".wv"] = linear_weight(k, k, 1.0, rng);
    // Small output scale keeps early blocks near-identity.
    m.params_[std::string(blk) + ".wo"] = linear_weight(k, k, 0.1, rng);
  }
  // The shared classifier head is stored [C, K].
  m.params_["cls.w"] = uniform_param({cfg.num_classes, k}, std::sqrt(6.0 / k), rng);
  m.params_["seg.w"] = linear_weight(k, cfg.num_classes + 1, 1.0, rng);
  m.params_["seg.b"] = Tensor::zeros({cfg.num_classes + 1}, true);
  return m;
}

ForwardOut Model::forward(const Tensor& img) const {
  if (img.rank() != 3 || img.dim(2) != 3) throw ShapeError("forward expects [H,W,3]");
  const int h = img.dim(0), w = img.dim(1);
  if (h % 4 != 0 || w % 4 != 0) {
    throw ShapeError("forward: image dims must be divisible by 4, got " +
                     shape_str(img.shape()));
  }
  const int k = cfg_.channels;
  auto p = [this](const std::string& name) { return params_.at(name); };

  Tensor x = relu(conv2d(img, p("enc1.w"), p("enc1.b"), 1, 1));
  x = relu(conv2d(x, p("enc2.w"), p("enc2.b"), 2, 1));
  x = relu(conv2d(x, p("enc3.w"), p("enc3.b"), 2, 1));
  Tensor f_pre = relu(conv2d(x, p("enc4.w"), p("enc4.b"), 1, 1));

  const int gh = h / 4, gw = w / 4;
  const int n = gh * gw;
  Tensor tokens = reshape(f_pre, {n, k});
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(k));

  struct Block {
    Tensor out, weights, scores;
  };
  auto attention = [&](const Tensor& in, const std::string& blk) {
    Tensor q = matmul(in, p(blk + ".wq"));
    Tensor kk = matmul(in, p(blk + ".wk"));
    Tensor v = matmul(in, p(blk + ".wv"));
    Tensor scores = mul_scalar(matmul(q, transpose(kk)), inv_sqrt_d);
    Tensor weights = softmax_rows(scores);
    Tensor out = add(in, matmul(matmul(weights, v), p(blk + ".wo")));
    return Block{out, weights, scores};
  };
  const Block b1 = attention(tokens, "attn1");
  const Block b2 = attention(b1.out, "attn2");
  const Tensor x2 = b2.out;

  Tensor post = reshape(x2, {gh, gw, k});
  Tensor cls_logits = class_scores(post, ClassifierHead{p("cls.w")});

  Tensor seg_low = add(matmul(x2, p("seg.w")), p("seg.b"));
  seg_low = reshape(seg_low, {gh, gw, cfg_.num_classes + 1});
  Tensor seg = bilinear_resize(seg_low, h, w);

  ForwardOut out;
  out.features = f_pre;
  out.attn1 = b1.weights;
  out.attn2 = b2.weights;
  out.attn1_scores = b1.scores;
  out.attn2_scores = b2.scores;
  out.cls_logits = cls_logits;
  out.seg_logits = seg;
  out.grid_h = gh;
  out.grid_w = gw;
  return out;
}

void Model::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, static_cast<uint32_t>(cfg_.num_classes));
  write_u32(out, static_cast<uint32_t>(cfg_.channels));
  write_u32(out, static_cast<uint32_t>(params_.size()));
  for (const auto& [name, tensor] : params_) {
    write_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<uint32_t>(tensor.rank()));
    for (int d = 0; d < tensor.rank(); ++d) write_u32(out, static_cast<uint32_t>(tensor.dim(d)));
    const auto v = tensor.values();
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!out) throw IoError(path + ": write failed");
}

Model Model::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(path + ": not a tscd checkpoint");
  }
  Model m;
  m.cfg_.num_classes = static_cast<int>(read_u32(in, path));
  m.cfg_.channels = static_cast<int>(read_u32(in, path));
  m.cfg_.validate();
  const uint32_t count = read_u32(in, path);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_u32(in, path);
    if (name_len > 256) throw IoError(path + ": corrupt checkpoint entry");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const uint32_t rank = read_u32(in, path);
    if (rank < 1 || rank > 8) throw IoError(path + ": corrupt tensor rank");
    Shape shape;
    for (uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int>(read_u32(in, path)));
    std::vector<double> values(static_cast<size_t>(numel(shape)));
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw IoError(path + ": truncated checkpoint payload");
    m.params_[name] = Tensor::from(std::move(shape), std::move(values), true);
  }
  return m;
}

}  // namespace tscd
