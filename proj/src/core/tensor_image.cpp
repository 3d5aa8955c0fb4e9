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

#include "core/tensor_image.hpp"

#include <algorithm>
#include <cmath>

#include "core/threads.hpp"

namespace tscd {

namespace {

// Shared with tensor.cpp by re-declaration; kept local to avoid a wider API.
void check_finite_or_throw(const std::vector<double>& values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by '") + op + "'");
    }
  }
}

Tensor finish(Shape shape, std::vector<double> values, const char* op,
              std::vector<std::shared_ptr<Node>> parents,
              std::function<void(Node&)> backward) {
  check_finite_or_throw(values, op);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  for (const auto& p : parents) node->requires_grad = node->requires_grad || p->requires_grad;
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor::wrap(std::move(node));
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int pad) {
  if (input.rank() != 3 || weight.rank() != 4) {
    throw ShapeError("conv2d expects input [H,W,Cin] and weight [kh,kw,Cin,Cout]");
  }
  const int h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const int kh = weight.dim(0), kw = weight.dim(1);
  if (weight.dim(2) != cin) throw ShapeError("conv2d: channel mismatch");
  const int cout = weight.dim(3);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != cout)) {
    throw ShapeError("conv2d: bias must be [Cout]");
  }
  if (stride < 1 || pad < 0) throw ShapeError("conv2d: bad stride/pad");
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (w + 2 * pad - kw) / stride + 1;
  if (oh < 1 || ow < 1) throw ShapeError("conv2d: kernel larger than padded input");

  std::vector<double> out(static_cast<size_t>(oh) * ow * cout, 0.0);
  const auto in = input.values();
  const auto wv = weight.values();

  parallel_for(oh, [&](int64_t row0, int64_t row1) {
    for (int64_t oy = row0; oy < row1; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double* acc = &out[(static_cast<size_t>(oy) * ow + ox) * cout];
        if (bias.defined()) {
          const auto bv = bias.values();
          for (int oc = 0; oc < cout; ++oc) acc[oc] = bv[static_cast<size_t>(oc)];
        }
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = static_cast<int>(oy) * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= w) continue;
            const double* in_px = &in[(static_cast<size_t>(iy) * w + ix) * cin];
            const double* w_px = &wv[(static_cast<size_t>(ky) * kw + kx) * cin * cout];
            for (int ic = 0; ic < cin; ++ic) {
              const double x = in_px[ic];
              const double* w_row = w_px + static_cast<size_t>(ic) * cout;
              for (int oc = 0; oc < cout; ++oc) acc[oc] += x * w_row[oc];
            }
          }
        }
      }
    }
  });

  std::vector<std::shared_ptr<Node>> parents{input.node_ptr(), weight.node_ptr()};
  if (bias.defined()) parents.push_back(bias.node_ptr());
  const bool has_bias = bias.defined();
  return finish(
      {oh, ow, cout}, std::move(out), "conv2d", std::move(parents),
      [h, w, cin, kh, kw, cout, oh, ow, stride, pad, has_bias](Node& node) {
        Node& nin = *node.parents[0];
        Node& nw = *node.parents[1];
        Node* nb = has_bias ? node.parents[2].get() : nullptr;
        if (nin.requires_grad) nin.ensure_grad();
        if (nw.requires_grad) nw.ensure_grad();
        if (nb && nb->requires_grad) nb->ensure_grad();
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            const double* g = &node.grad[(static_cast<size_t>(oy) * ow + ox) * cout];
            if (nb && nb->requires_grad) {
              for (int oc = 0; oc < cout; ++oc) nb->grad[static_cast<size_t>(oc)] += g[oc];
            }
            for (int ky = 0; ky < kh; ++ky) {
              const int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= h) continue;
              for (int kx = 0; kx < kw; ++kx) {
                const int ix = ox * stride + kx - pad;
                if (ix < 0 || ix >= w) continue;
                const size_t in_off = (static_cast<size_t>(iy) * w + ix) * cin;
                const size_t w_off = (static_cast<size_t>(ky) * kw + kx) * cin * cout;
                for (int ic = 0; ic < cin; ++ic) {
                  const size_t w_row = w_off + static_cast<size_t>(ic) * cout;
                  if (nw.requires_grad) {
                    const double x = nin.values[in_off + ic];
                    for (int oc = 0; oc < cout; ++oc) nw.grad[w_row + oc] += x * g[oc];
                  }
                  if (nin.requires_grad) {
                    double s = 0.0;
                    for (int oc = 0; oc < cout; ++oc) s += nw.values[w_row + oc] * g[oc];
                    nin.grad[in_off + ic] += s;
                  }
                }
              }
            }
          }
        }
      });
}

double resize_source_coord(int dst, int in_dim, int out_dim) {
  const double scale = static_cast<double>(in_dim) / out_dim;
  const double src = (static_cast<double>(dst) + 0.5) * scale - 0.5;
  return std::clamp(src, 0.0, static_cast<double>(in_dim - 1));
}

Tensor bilinear_resize(const Tensor& hwc, int out_h, int out_w) {
  if (hwc.rank() != 3) throw ShapeError("bilinear_resize expects [H,W,C]");
  if (out_h < 1 || out_w < 1) throw ShapeError("bilinear_resize: zero-size output");
  const int h = hwc.dim(0), w = hwc.dim(1), c = hwc.dim(2);
  const auto in = hwc.values();

  std::vector<double> out(static_cast<size_t>(out_h) * out_w * c);
  for (int oy = 0; oy < out_h; ++oy) {
    const double sy = resize_source_coord(oy, h, out_h);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - y0;
    for (int ox = 0; ox < out_w; ++ox) {
      const double sx = resize_source_coord(ox, w, out_w);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - x0;
      const double* p00 = &in[(static_cast<size_t>(y0) * w + x0) * c];
      const double* p01 = &in[(static_cast<size_t>(y0) * w + x1) * c];
      const double* p10 = &in[(static_cast<size_t>(y1) * w + x0) * c];
      const double* p11 = &in[(static_cast<size_t>(y1) * w + x1) * c];
      double* o = &out[(static_cast<size_t>(oy) * out_w + ox) * c];
      for (int ch = 0; ch < c; ++ch) {
        // Lerp form keeps constants exact (zero differences cannot drift).
        const double top = p00[ch] + fx * (p01[ch] - p00[ch]);
        const double bot = p10[ch] + fx * (p11[ch] - p10[ch]);
        o[ch] = top + fy * (bot - top);
      }
    }
  }
  return finish({out_h, out_w, c}, std::move(out), "bilinear_resize",
                {hwc.node_ptr()}, [h, w, c, out_h, out_w](Node& node) {
                  Node& nin = *node.parents[0];
                  nin.ensure_grad();
                  for (int oy = 0; oy < out_h; ++oy) {
                    const double sy = resize_source_coord(oy, h, out_h);
                    const int y0 = static_cast<int>(sy);
                    const int y1 = std::min(y0 + 1, h - 1);
                    const double fy = sy - y0;
                    for (int ox = 0; ox < out_w; ++ox) {
                      const double sx = resize_source_coord(ox, w, out_w);
                      const int x0 = static_cast<int>(sx);
                      const int x1 = std::min(x0 + 1, w - 1);
                      const double fx = sx - x0;
                      const double* g = &node.grad[(static_cast<size_t>(oy) * out_w + ox) * c];
                      for (int ch = 0; ch < c; ++ch) {
                        if (g[ch] == 0.0) continue;
                        nin.grad[(static_cast<size_t>(y0) * w + x0) * c + ch] +=
                            g[ch] * (1.0 - fy) * (1.0 - fx);
                        nin.grad[(static_cast<size_t>(y0) * w + x1) * c + ch] +=
                            g[ch] * (1.0 - fy) * fx;
                        nin.grad[(static_cast<size_t>(y1) * w + x0) * c + ch] +=
                            g[ch] * fy * (1.0 - fx);
                        nin.grad[(static_cast<size_t>(y1) * w + x1) * c + ch] +=
                            g[ch] * fy * fx;
                      }
                    }
                  }
                });
}

Tensor hflip(const Tensor& hwc) {
  if (hwc.rank() != 3) throw ShapeError("hflip expects [H,W,C]");
  const int h = hwc.dim(0), w = hwc.dim(1), c = hwc.dim(2);
  std::vector<double> out(static_cast<size_t>(hwc.size()));
  const auto in = hwc.values();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t src = (static_cast<size_t>(y) * w + (w - 1 - x)) * c;
      const size_t dst = (static_cast<size_t>(y) * w + x) * c;
      for (int ch = 0; ch < c; ++ch) out[dst + ch] = in[src + ch];
    }
  }
  return finish({h, w, c}, std::move(out), "hflip", {hwc.node_ptr()},
                [h, w, c](Node& node) {
                  Node& nin = *node.parents[0];
                  nin.ensure_grad();
                  for (int y = 0; y < h; ++y) {
                    for (int x = 0; x < w; ++x) {
                      const size_t src = (static_cast<size_t>(y) * w + (w - 1 - x)) * c;
                      const size_t dst = (static_cast<size_t>(y) * w + x) * c;
                      for (int ch = 0; ch < c; ++ch) nin.grad[src + ch] += node.grad[dst + ch];
                    }
                  }
                });
}

}  // namespace tscd
