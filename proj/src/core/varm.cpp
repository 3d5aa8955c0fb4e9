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

#include "core/varm.hpp"

#include <algorithm>
#include <cmath>

#include "core/threads.hpp"

namespace tscd {

namespace {

constexpr double kSigmaFloor = 1e-6;

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

void check_rgb(const Tensor& img) {
  if (img.rank() != 3 || img.dim(2) != 3) throw ShapeError("expected an [H,W,3] image");
}

}  // namespace

void VarmConfig::validate() const {
  if (!(alpha > 0.0)) throw Error("varm: alpha must be > 0");
  if (beta < 0.0) throw Error("varm: beta must be >= 0");
  if (iterations < 0) throw Error("varm: iterations must be >= 0");
  if (dilations.empty()) throw Error("varm: at least one dilation required");
  for (int d : dilations) {
    if (d < 1) throw Error("varm: dilations must be strictly positive");
  }
}

std::vector<std::pair<int, int>> varm_offsets(const VarmConfig& cfg) {
  std::vector<std::pair<int, int>> offsets;
  offsets.reserve(static_cast<size_t>(cfg.taps()));
  offsets.emplace_back(0, 0);
  for (int d : cfg.dilations) {
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        offsets.emplace_back(dr * d, dc * d);
      }
    }
  }
  return offsets;
}

Tensor pixel_variation(const Tensor& img) {
  check_rgb(img);
  const int h = img.dim(0), w = img.dim(1);
  const auto v = img.values();
  std::vector<double> out(static_cast<size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int xl = clampi(x - 1, 0, w - 1);
      const int yd = clampi(y + 1, 0, h - 1);
      double acc = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double here = v[(static_cast<size_t>(y) * w + x) * 3 + c];
        const double left = v[(static_cast<size_t>(y) * w + xl) * 3 + c];
        const double down = v[(static_cast<size_t>(yd) * w + x) * 3 + c];
        acc += (left - here) * (left - here) + (down - here) * (down - here);
      }
      out[static_cast<size_t>(y) * w + x] = acc;
    }
  }
  return Tensor::from({h, w}, std::move(out));
}

Tensor local_kernel(const Tensor& img, const VarmConfig& cfg) {
  check_rgb(img);
  cfg.validate();
  const int h = img.dim(0), w = img.dim(1);
  const auto offsets = varm_offsets(cfg);
  const int taps = static_cast<int>(offsets.size());
  const auto v = img.values();

  std::vector<double> out(static_cast<size_t>(h) * w * taps);
  parallel_for(h, [&](int64_t row0, int64_t row1) {
    std::vector<double> diff(static_cast<size_t>(taps));
    for (int64_t y = row0; y < row1; ++y) {
      for (int x = 0; x < w; ++x) {
        const double* here = &v[(static_cast<size_t>(y) * w + x) * 3];
        double mean = 0.0;
        for (int t = 0; t < taps; ++t) {
          const int ny = clampi(static_cast<int>(y) + offsets[t].first, 0, h - 1);
          const int nx = clampi(x + offsets[t].second, 0, w - 1);
          const double* there = &v[(static_cast<size_t>(ny) * w + nx) * 3];
          double d = 0.0;
          for (int c = 0; c < 3; ++c) d += std::abs(here[c] - there[c]);
          diff[static_cast<size_t>(t)] = d / 3.0;
          mean += diff[static_cast<size_t>(t)];
        }
        mean /= taps;
        double var = 0.0;
        for (int t = 0; t < taps; ++t) {
          const double d = diff[static_cast<size_t>(t)] - mean;
          var += d * d;
        }
        double sigma = std::sqrt(var / taps);
        if (sigma < kSigmaFloor) sigma = kSigmaFloor;
        double* row = &out[(static_cast<size_t>(y) * w + x) * taps];
        for (int t = 0; t < taps; ++t) {
          const double a = cfg.alpha * diff[static_cast<size_t>(t)];
          row[t] = -(a * a) / (sigma * sigma);
        }
      }
    }
  });
  return Tensor::from({h, w, taps}, std::move(out));
}

VarmKernel correction_kernel(const Tensor& img, const VarmConfig& cfg) {
  check_rgb(img);
  cfg.validate();
  const int h = img.dim(0), w = img.dim(1);
  const auto offsets = varm_offsets(cfg);
  const int taps = static_cast<int>(offsets.size());

  Tensor rgb_term = local_kernel(img, cfg);
  Tensor variation = pixel_variation(img);
  const auto kv = rgb_term.values();
  const auto vv = variation.values();

  std::vector<double> out(static_cast<size_t>(h) * w * taps);
  parallel_for(h, [&](int64_t row0, int64_t row1) {
    std::vector<double> vn(static_cast<size_t>(taps));
    for (int64_t y = row0; y < row1; ++y) {
      for (int x = 0; x < w; ++x) {
        const double* krow = &kv[(static_cast<size_t>(y) * w + x) * taps];
        double* orow = &out[(static_cast<size_t>(y) * w + x) * taps];

        // softmax over the rgb affinities; entries are <= 0 so exp is safe.
        double zk = 0.0;
        for (int t = 0; t < taps; ++t) zk += std::exp(krow[t]);
        // softmax over the variation evaluated at each neighbor position.
        double vmax = -1.0;
        for (int t = 0; t < taps; ++t) {
          const int ny = clampi(static_cast<int>(y) + offsets[t].first, 0, h - 1);
          const int nx = clampi(x + offsets[t].second, 0, w - 1);
          vn[static_cast<size_t>(t)] = vv[static_cast<size_t>(ny) * w + nx];
          vmax = std::max(vmax, vn[static_cast<size_t>(t)]);
        }
        double zv = 0.0;
        for (int t = 0; t < taps; ++t) zv += std::exp(vn[static_cast<size_t>(t)] - vmax);

        double sum = 0.0;
        for (int t = 0; t < taps; ++t) {
          const double kw = std::exp(krow[t]) / zk -
                            cfg.beta * (std::exp(vn[static_cast<size_t>(t)] - vmax) / zv);
          orow[t] = kw > 0.0 ? kw : 0.0;
          sum += orow[t];
        }
        if (sum > 1e-12) {
          for (int t = 0; t < taps; ++t) orow[t] /= sum;
        } else {
          // Degenerate row (large beta): fall back to the identity kernel.
          for (int t = 0; t < taps; ++t) orow[t] = 0.0;
          orow[0] = 1.0;
        }
      }
    }
  });
  return VarmKernel{Tensor::from({h, w, taps}, std::move(out)), offsets, true};
}

Tensor refine(const Tensor& scores, const Tensor& img, const VarmConfig& cfg) {
  check_rgb(img);
  if (scores.rank() != 3) throw ShapeError("refine expects scores [H,W,C']");
  if (scores.dim(0) != img.dim(0) || scores.dim(1) != img.dim(1)) {
    throw ShapeError("refine: scores and image dims differ");
  }
  cfg.validate();
  const int h = scores.dim(0), w = scores.dim(1), c = scores.dim(2);
  std::vector<double> cur(scores.values().begin(), scores.values().end());
  if (cfg.iterations == 0) return Tensor::from({h, w, c}, std::move(cur));

  const VarmKernel kernel = correction_kernel(img, cfg);
  const auto kw = kernel.weights.values();
  const int taps = static_cast<int>(kernel.offsets.size());

  std::vector<double> next(cur.size());
  for (int it = 0; it < cfg.iterations; ++it) {
    parallel_for(h, [&](int64_t row0, int64_t row1) {
      for (int64_t y = row0; y < row1; ++y) {
        for (int x = 0; x < w; ++x) {
          const double* wrow = &kw[(static_cast<size_t>(y) * w + x) * taps];
          double* orow = &next[(static_cast<size_t>(y) * w + x) * c];
          for (int ch = 0; ch < c; ++ch) orow[ch] = 0.0;
          for (int t = 0; t < taps; ++t) {
            if (wrow[t] == 0.0) continue;
            const int ny = clampi(static_cast<int>(y) + kernel.offsets[t].first, 0, h - 1);
            const int nx = clampi(x + kernel.offsets[t].second, 0, w - 1);
            const double* prow = &cur[(static_cast<size_t>(ny) * w + nx) * c];
            for (int ch = 0; ch < c; ++ch) orow[ch] += wrow[t] * prow[ch];
          }
        }
      }
    });
    cur.swap(next);
  }
  return Tensor::from({h, w, c}, std::move(cur));
}

}  // namespace tscd
