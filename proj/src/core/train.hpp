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

#include "core/config.hpp"
#include "core/data.hpp"
#include "core/losses.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/varm.hpp"

namespace tscd {

/// Adaptive moment estimation with decoupled weight decay, applied in the
/// deterministic (name-sorted) parameter order.
class AdamW {
 public:
  AdamW(double lr, double weight_decay)
      : lr_(lr), weight_decay_(weight_decay) {}

  void step(Model& model);
  static void zero_grad(Model& model);

 private:
  double lr_;
  double weight_decay_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  int64_t t_ = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> state_;
};

/// Parsed training settings (see Config for defaults and docs).
struct TrainSettings {
  int iterations = 3000;
  int warmup_iterations = -1;  // -1 = 10% of iterations
  int batch = 4;
  double lr = 6e-5;
  double weight_decay = 0.01;
  int crop = 64;
  uint64_t seed = 0;
  int log_every = 1;
  bool use_varm = true;
  bool use_scd = true;
  bool use_aux = true;
  bool use_equ = true;
  LossWeights weights;
  VarmConfig varm;
  int scd_n = 40;
  double threshold_hi = 0.55;
  double threshold_lo = 0.35;
  int channels = 32;

  static TrainSettings from_config(const Config& cfg);
  void validate() const;
  int effective_warmup() const {
    return warmup_iterations >= 0 ? warmup_iterations : iterations / 10;
  }
};

/// Per-step loss components (batch means).
struct StepLoss {
  int iteration = 0;
  double total = 0, cls = 0, seg = 0, scd = 0, equ = 0, aux = 0, reg = 0;
};

/// One end-to-end training step: forward both views, derive refined
/// pseudo-labels from the current cams, assemble the gated losses, backward,
/// and one optimizer update. Throws NumericError (with a component dump in
/// the message) if any loss goes non-finite.
class Trainer {
 public:
  Trainer(const TrainSettings& settings, const Dataset& data);

  StepLoss step(int iteration);
  Model& model() { return model_; }
  const TrainSettings& settings() const { return settings_; }

 private:
  TrainSettings settings_;
  const Dataset& data_;
  Model model_;
  AdamW optimizer_;
};

/// Full training loop over settings.iterations steps.
Model train_model(const TrainSettings& settings, const Dataset& data,
                  std::vector<StepLoss>* log);

/// CSV loss log, one row per log_every-th step, %.17g throughout so reruns
/// are byte-comparable.
std::string loss_log_csv(const std::vector<StepLoss>& log, int log_every);

/// CLI-facing run: loads the dataset, trains, and writes model.ckpt,
/// loss_log.csv, and metrics.csv (self-evaluation) under out_dir.
void train_run(const Config& cfg, const std::string& data_dir,
               const std::string& out_dir);

/// Confusion-matrix evaluation of argmax segmentation predictions against
/// ground-truth masks.
Metrics evaluate(const Model& model, const Dataset& data);

/// Pixel-wise argmax over seg logits, 0..C with background = 0.
std::vector<uint8_t> predict_mask(const Model& model, const Tensor& image);

/// Ablation table in fixed row order: baseline, +VARM, +VARM+SCD, +aux,
/// +equ. Every variant trains under the same per-seed stream.
struct AblationRow {
  std::string name;
  std::vector<double> seed_mious;
  double median_miou = 0.0;
};

std::vector<AblationRow> ablation_run(const TrainSettings& base,
                                      const Dataset& train_data,
                                      const Dataset& val_data,
                                      const std::vector<uint64_t>& seeds);

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace tscd
