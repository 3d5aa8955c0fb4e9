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

#include "tscd.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <string>

#include "core/config.hpp"
#include "core/data.hpp"
#include "core/gradcheck.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/pnm.hpp"
#include "core/render.hpp"
#include "core/train.hpp"
#include "core/varm.hpp"

namespace {

thread_local std::string g_last_error;

void copy_out(const std::string& text, char* buf, size_t buf_size) {
  if (buf == nullptr || buf_size == 0) return;
  const size_t n = std::min(text.size(), buf_size - 1);
  std::memcpy(buf, text.data(), n);
  buf[n] = '\0';
}

// Runs fn, translating exceptions into status codes.
template <class Fn>
tscd_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const tscd::NumericError& e) {
    g_last_error = e.what();
    return TSCD_ERR_NUMERIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TSCD_ERR_INVALID;
  } catch (...) {
    g_last_error = "unknown error";
    return TSCD_ERR_INVALID;
  }
}

tscd_status require(bool cond, const char* message) {
  if (cond) return TSCD_OK;
  g_last_error = message;
  return TSCD_ERR_INVALID;
}

}  // namespace

struct tscd_config {
  tscd::Config impl;
};

struct tscd_metrics {
  tscd::Metrics impl;
};

extern "C" {

const char* tscd_version(void) { return "1.0.0"; }

const char* tscd_last_error(void) { return g_last_error.c_str(); }

tscd_config* tscd_config_new(void) { return new tscd_config{}; }

void tscd_config_free(tscd_config* cfg) { delete cfg; }

tscd_status tscd_config_load(tscd_config* cfg, const char* path) {
  if (auto s = require(cfg && path, "null argument")) return s;
  return guarded([&] {
    cfg->impl.load_file(path);
    return TSCD_OK;
  });
}

tscd_status tscd_config_set(tscd_config* cfg, const char* key, const char* value) {
  if (auto s = require(cfg && key && value, "null argument")) return s;
  return guarded([&] {
    cfg->impl.set(key, value);
    return TSCD_OK;
  });
}

tscd_status tscd_config_get(const tscd_config* cfg, const char* key, char* buf,
                            size_t buf_size) {
  if (auto s = require(cfg && key && buf, "null argument")) return s;
  return guarded([&] {
    copy_out(cfg->impl.get(key), buf, buf_size);
    return TSCD_OK;
  });
}

tscd_status tscd_generate(uint64_t seed, int count, int size, int max_shapes,
                          double color_jitter, double texture_amplitude,
                          const char* out_dir) {
  if (auto s = require(out_dir != nullptr, "null out_dir")) return s;
  return guarded([&] {
    tscd::SyntheticSpec spec;
    spec.seed = seed;
    spec.num_images = count;
    spec.size = size;
    spec.max_shapes = max_shapes;
    spec.color_jitter = color_jitter;
    spec.texture_amplitude = texture_amplitude;
    spec.validate();
    tscd::write_dataset(tscd::generate(spec), out_dir);
    return TSCD_OK;
  });
}

tscd_status tscd_train(const tscd_config* cfg, const char* data_dir,
                       const char* out_dir) {
  if (auto s = require(cfg && data_dir && out_dir, "null argument")) return s;
  return guarded([&] {
    tscd::train_run(cfg->impl, data_dir, out_dir);
    return TSCD_OK;
  });
}

tscd_status tscd_evaluate(const char* data_dir, const char* ckpt_path,
                          tscd_metrics** out) {
  if (auto s = require(data_dir && ckpt_path && out, "null argument")) return s;
  *out = nullptr;
  return guarded([&] {
    const tscd::Model model = tscd::Model::load(ckpt_path);
    const tscd::Dataset data = tscd::load_dataset(data_dir);
    *out = new tscd_metrics{tscd::evaluate(model, data)};
    return TSCD_OK;
  });
}

void tscd_metrics_free(tscd_metrics* m) { delete m; }

double tscd_metrics_miou(const tscd_metrics* m) { return m ? m->impl.miou() : 0.0; }

double tscd_metrics_pixel_accuracy(const tscd_metrics* m) {
  return m ? m->impl.pixel_accuracy() : 0.0;
}

int tscd_metrics_num_classes(const tscd_metrics* m) {
  return m ? m->impl.num_classes() : 0;
}

double tscd_metrics_class_iou(const tscd_metrics* m, int cls) {
  return m ? m->impl.class_iou(cls) : 0.0;
}

tscd_status tscd_metrics_csv(const tscd_metrics* m, char* buf, size_t buf_size) {
  if (auto s = require(m && buf, "null argument")) return s;
  copy_out(m->impl.to_csv(), buf, buf_size);
  return TSCD_OK;
}

tscd_status tscd_ablation(const tscd_config* cfg, const char* train_dir,
                          const char* val_dir, const uint64_t* seeds,
                          int num_seeds, const char* csv_path) {
  if (auto s = require(cfg && train_dir && val_dir && seeds && csv_path &&
                           num_seeds > 0,
                       "null/empty argument")) {
    return s;
  }
  return guarded([&] {
    const tscd::TrainSettings base = tscd::TrainSettings::from_config(cfg->impl);
    const tscd::Dataset train_data = tscd::load_dataset(train_dir);
    const tscd::Dataset val_data = tscd::load_dataset(val_dir);
    const std::vector<uint64_t> seed_list(seeds, seeds + num_seeds);
    const auto rows = tscd::ablation_run(base, train_data, val_data, seed_list);
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) throw tscd::IoError(std::string(csv_path) + ": cannot write");
    f << tscd::ablation_csv(rows);
    return TSCD_OK;
  });
}

tscd_status tscd_refine(const char* image_path, const char* label_path,
                        const char* out_path, double alpha, double beta,
                        const int* dilations, int num_dilations, int iterations) {
  if (auto s = require(image_path && label_path && out_path, "null path")) return s;
  return guarded([&] {
    const tscd::ImageU8 image = tscd::read_ppm(image_path);
    const tscd::ImageU8 label = tscd::read_pgm(label_path);
    if (image.width != label.width || image.height != label.height) {
      throw tscd::Error("refine: image and label dims differ");
    }
    tscd::VarmConfig cfg;
    cfg.alpha = alpha;
    cfg.beta = beta;
    cfg.iterations = iterations;
    if (dilations && num_dilations > 0) {
      cfg.dilations.assign(dilations, dilations + num_dilations);
    }
    cfg.validate();

    const int h = label.height, w = label.width;
    // One-hot score maps over the classes in the file; 255 stays ignored.
    int num_classes = 0;
    for (uint8_t v : label.pixels) {
      if (v != 255) num_classes = std::max(num_classes, static_cast<int>(v) + 1);
    }
    num_classes = std::max(num_classes, 1);

    tscd::ImageU8 out_label = label;
    if (iterations > 0) {
      std::vector<double> scores(static_cast<size_t>(h) * w * num_classes, 0.0);
      for (int i = 0; i < h * w; ++i) {
        const uint8_t v = label.pixels[static_cast<size_t>(i)];
        if (v != 255) scores[static_cast<size_t>(i) * num_classes + v] = 1.0;
      }
      const tscd::Tensor refined =
          tscd::refine(tscd::Tensor::from({h, w, num_classes}, std::move(scores)),
                       tscd::u8_to_tensor(image), cfg);
      for (int i = 0; i < h * w; ++i) {
        double best = 0.0;
        int best_cls = -1;
        for (int c = 0; c < num_classes; ++c) {
          const double v = refined.value_at(static_cast<int64_t>(i) * num_classes + c);
          if (v > best) {
            best = v;
            best_cls = c;
          }
        }
        out_label.pixels[static_cast<size_t>(i)] =
            best_cls < 0 ? 255 : static_cast<uint8_t>(best_cls);
      }
    }
    tscd::write_pgm(out_path, out_label);
    return TSCD_OK;
  });
}

tscd_status tscd_gradcheck(uint64_t seed, char* report_buf, size_t buf_size) {
  bool pass = false;
  const tscd_status status = guarded([&] {
    std::string report;
    pass = tscd::gradient_suite_passes(seed, &report);
    copy_out(report, report_buf, buf_size);
    return TSCD_OK;
  });
  if (status != TSCD_OK) return status;
  if (!pass) {
    g_last_error = "gradient check failed";
    return TSCD_ERR_CHECK;
  }
  return TSCD_OK;
}

tscd_status tscd_render(const char* ckpt_path, const char* image_path,
                        const char* out_prefix) {
  if (auto s = require(ckpt_path && image_path && out_prefix, "null path")) return s;
  return guarded([&] {
    const tscd::Model model = tscd::Model::load(ckpt_path);
    const tscd::ImageU8 image = tscd::read_ppm(image_path);
    tscd::render_outputs(model, tscd::u8_to_tensor(image), out_prefix);
    return TSCD_OK;
  });
}

}  // extern "C"
