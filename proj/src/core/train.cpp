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

#include "core/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/correspondence.hpp"
#include "core/tensor_image.hpp"

namespace fs = std::filesystem;

namespace tscd {

// ---------------------------------------------------------------------------
// optimizer
// ---------------------------------------------------------------------------

void AdamW::step(Model& model) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& [name, param] : model.params()) {
    if (!param.has_grad()) continue;
    auto& [m, v] = state_[name];
    const auto g = param.grad();
    auto values = param.raw_values();
    if (m.size() != values.size()) {
      m.assign(values.size(), 0.0);
      v.assign(values.size(), 0.0);
    }
    for (size_t i = 0; i < values.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      values[i] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * values[i]);
    }
  }
}

void AdamW::zero_grad(Model& model) {
  for (auto& [name, param] : model.params()) {
    if (param.has_grad()) param.zero_grad();
  }
}

// ---------------------------------------------------------------------------
// settings
// ---------------------------------------------------------------------------

TrainSettings TrainSettings::from_config(const Config& cfg) {
  TrainSettings s;
  s.iterations = cfg.get_int("train.iterations");
  s.warmup_iterations = cfg.get_int("train.warmup_iterations");
  s.batch = cfg.get_int("train.batch");
  s.lr = cfg.get_double("train.lr");
  s.weight_decay = cfg.get_double("train.weight_decay");
  s.crop = cfg.get_int("train.crop");
  s.seed = cfg.get_u64("train.seed");
  s.log_every = cfg.get_int("train.log_every");
  s.use_varm = cfg.get_bool("train.use_varm");
  s.use_scd = cfg.get_bool("train.use_scd");
  s.use_aux = cfg.get_bool("train.use_aux");
  s.use_equ = cfg.get_bool("train.use_equ");
  s.weights.lambda1 = cfg.get_double("loss.lambda1");
  s.weights.lambda2 = cfg.get_double("loss.lambda2");
  s.weights.lambda3 = cfg.get_double("loss.lambda3");
  s.varm.alpha = cfg.get_double("varm.alpha");
  s.varm.beta = cfg.get_double("varm.beta");
  s.varm.dilations = cfg.get_int_list("varm.dilations");
  s.varm.iterations = cfg.get_int("varm.iterations");
  s.scd_n = cfg.get_int("scd.n");
  s.threshold_hi = cfg.get_double("cam.threshold_hi");
  s.threshold_lo = cfg.get_double("cam.threshold_lo");
  s.channels = cfg.get_int("model.channels");
  s.validate();
  return s;
}

void TrainSettings::validate() const {
  if (iterations < 1) throw ConfigError("train.iterations must be >= 1");
  if (effective_warmup() > iterations) {
    throw ConfigError("train.warmup_iterations must be <= train.iterations");
  }
  if (batch < 1) throw ConfigError("train.batch must be >= 1");
  if (!(lr >= 0.0)) throw ConfigError("train.lr must be >= 0");
  if (crop < 16 || crop % 16 != 0) {
    throw ConfigError("train.crop must be a positive multiple of 16");
  }
  if (log_every < 1) throw ConfigError("train.log_every must be >= 1");
  if (!(threshold_lo < threshold_hi)) {
    throw ConfigError("cam.threshold_lo must be < cam.threshold_hi");
  }
  if (scd_n < 1) throw ConfigError("scd.n must be >= 1");
  varm.validate();
}

// ---------------------------------------------------------------------------
// pipeline pieces
// ---------------------------------------------------------------------------

namespace {

// Normalized cam + background channel, upsampled to image resolution,
// optionally refined; returns the per-view pseudo-label. Detached throughout.
PseudoLabel view_pseudo_label(const ForwardOut& fo, const ClassifierHead& head,
                              const Tensor& img, const std::vector<int>& present,
                              const TrainSettings& s, Cam* refined_cam = nullptr) {
  const Cam cam = compute_cam(fo.features, head);
  const Cam norm = normalize_cam(cam, present);
  const int gh = norm.maps.dim(0), gw = norm.maps.dim(1), c = norm.maps.dim(2);

  // Scores with background: bkg = 1 - max_c score.
  std::vector<double> scores(static_cast<size_t>(gh) * gw * (c + 1));
  const auto nv = norm.maps.values();
  for (int i = 0; i < gh * gw; ++i) {
    double best = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      best = std::max(best, nv[static_cast<size_t>(i) * c + ch]);
      scores[static_cast<size_t>(i) * (c + 1) + 1 + ch] = nv[static_cast<size_t>(i) * c + ch];
    }
    scores[static_cast<size_t>(i) * (c + 1)] = 1.0 - best;
  }
  Tensor with_bg = Tensor::from({gh, gw, c + 1}, std::move(scores));
  Tensor up = bilinear_resize(with_bg, img.dim(0), img.dim(1));
  Tensor refined = s.use_varm ? refine(up, img, s.varm) : up;

  // Foreground channels drive the dual-threshold labeling.
  const int h = refined.dim(0), w = refined.dim(1);
  std::vector<double> fg(static_cast<size_t>(h) * w * c);
  const auto rv = refined.values();
  for (int i = 0; i < h * w; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      fg[static_cast<size_t>(i) * c + ch] = rv[static_cast<size_t>(i) * (c + 1) + 1 + ch];
    }
  }
  Cam cam_refined{Tensor::from({h, w, c}, std::move(fg)), true};
  if (refined_cam) *refined_cam = cam_refined;
  return cam_to_pseudo_label(cam_refined, s.threshold_hi, s.threshold_lo);
}

// Nearest-neighbor downsample of a pseudo-label onto the attention grid.
PseudoLabel label_to_grid(const PseudoLabel& label, int gh, int gw) {
  PseudoLabel out;
  out.height = gh;
  out.width = gw;
  out.labels.resize(static_cast<size_t>(gh) * gw);
  for (int y = 0; y < gh; ++y) {
    const int sy = static_cast<int>(std::lround(resize_source_coord(y, label.height, gh)));
    for (int x = 0; x < gw; ++x) {
      const int sx = static_cast<int>(std::lround(resize_source_coord(x, label.width, gw)));
      out.labels[static_cast<size_t>(y) * gw + x] = label.at(sy, sx);
    }
  }
  return out;
}

AffineTransform draw_transform(Rng& rng) {
  switch (rng.uniform_int(5)) {
    case 0: return AffineTransform::flip();
    case 1: return AffineTransform::rescale(0.5);
    case 2: return AffineTransform::rescale(0.75);
    case 3: return AffineTransform::flip_rescale(0.5);
    default: return AffineTransform::flip_rescale(0.75);
  }
}

std::vector<int> present_classes(const std::vector<int>& multi_hot) {
  std::vector<int> out;
  for (size_t c = 0; c < multi_hot.size(); ++c) {
    if (multi_hot[c]) out.push_back(static_cast<int>(c));
  }
  return out;
}

// Differentiable counterpart of normalize_cam for the loss paths: each class
// map divided by its (detached) max, absent classes masked out. Keeping the
// scale constant w.r.t. the tape removes the shrink-everything shortcut a raw
// L1 equivariance term would otherwise reward.
Tensor soft_normalize_cam(const Cam& cam, const std::vector<int>& multi_hot) {
  const int c = cam.maps.dim(2);
  Tensor scale = add_scalar(detach(reduce_max(cam.maps, {0, 1})), 1e-6);  // [C]
  std::vector<double> mask(static_cast<size_t>(c), 0.0);
  for (size_t i = 0; i < multi_hot.size(); ++i) {
    if (multi_hot[i]) mask[i] = 1.0;
  }
  return mul(div(cam.maps, scale), Tensor::from({c}, std::move(mask)));
}

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// trainer
// ---------------------------------------------------------------------------

Trainer::Trainer(const TrainSettings& settings, const Dataset& data)
    : settings_(settings),
      data_(data),
      model_(Model::init(ModelConfig{num_canonical_classes(), settings.channels},
                         settings.seed)),
      optimizer_(settings.lr, settings.weight_decay) {
  settings_.validate();
  if (data_.samples.empty()) throw Error("training dataset is empty");
}

StepLoss Trainer::step(int iteration) {
  const TrainSettings& s = settings_;
  const bool warmup = iteration < s.effective_warmup();
  Rng rng(Rng::derive(s.seed, /*stream=*/0x57e9, static_cast<uint64_t>(iteration)));
  const ClassifierHead head = model_.head();

  LossComponents batch_parts;
  auto accumulate = [](Tensor& into, const Tensor& t) {
    into = into.defined() ? add(into, t) : t;
  };

  for (int b = 0; b < s.batch; ++b) {
    const Sample& base = data_.samples[static_cast<size_t>(rng.uniform_int(
        static_cast<int>(data_.samples.size())))];
    const Sample sample = augment(base, s.crop, rng);
    // Fixed draw order regardless of enabled components, so all ablation
    // variants see identical data under identical seeds.
    const AffineTransform t = draw_transform(rng);
    const uint64_t pos_seed = rng.next_u64();

    const Tensor img1 = sample.image;
    const Tensor img2 = detach(apply_transform(t, img1));

    const ForwardOut fo1 = model_.forward(img1);
    const ForwardOut fo2 = model_.forward(img2);

    Tensor cls = mul_scalar(add(classification_loss(fo1.cls_logits, sample.label),
                                classification_loss(fo2.cls_logits, sample.label)),
                            0.5);
    accumulate(batch_parts.cls, cls);
    if (warmup) continue;

    const std::vector<int> present = present_classes(sample.label);
    const PseudoLabel label1 = view_pseudo_label(fo1, head, img1, present, s);
    const PseudoLabel label2 = view_pseudo_label(fo2, head, img2, present, s);

    Tensor seg = mul_scalar(add(segmentation_loss(fo1.seg_logits, label1),
                                segmentation_loss(fo2.seg_logits, label2)),
                            0.5);
    accumulate(batch_parts.seg, seg);

    const Cam cam1 = compute_cam(fo1.features, head);
    const Cam cam2 = compute_cam(fo2.features, head);
    const Tensor norm1 = soft_normalize_cam(cam1, sample.label);
    const Tensor norm2 = soft_normalize_cam(cam2, sample.label);
    if (s.use_equ) {
      accumulate(batch_parts.equ,
                 equivariant_loss(Cam{norm1, true}, Cam{norm2, true}, t));
    }

    const std::vector<Position> pos1 =
        sample_positions(fo1.grid_h, fo1.grid_w,
                         std::min(s.scd_n, fo1.grid_h * fo1.grid_w), pos_seed);
    std::vector<Position> pos2(pos1.size());
    for (size_t i = 0; i < pos1.size(); ++i) {
      pos2[i] = map_position(t, pos1[i], fo1.grid_h, fo1.grid_w);
    }

    if (s.use_scd) {
      const int c = model_.config().num_classes;
      const CorrSample m = corr_volume(detach(norm1), detach(norm2), pos1, pos2);
      const int h1 = fo1.seg_logits.dim(0), w1 = fo1.seg_logits.dim(1);
      const int h2 = fo2.seg_logits.dim(0), w2 = fo2.seg_logits.dim(1);
      Tensor s1 = bilinear_resize(slice(fo1.seg_logits, {0, 0, 1}, {h1, w1, c}),
                                  fo1.grid_h, fo1.grid_w);
      Tensor s2 = bilinear_resize(slice(fo2.seg_logits, {0, 0, 1}, {h2, w2, c}),
                                  fo2.grid_h, fo2.grid_w);
      const CorrSample sc = corr_volume(s1, s2, pos1, pos2);
      accumulate(batch_parts.scd, scd_loss(m, sc));
    }

    if (s.use_aux) {
      const PseudoLabel grid_label = label_to_grid(label1, fo1.grid_h, fo1.grid_w);
      const AffinityLabels affinity = build_affinity_labels(grid_label, pos1);
      // Pair affinities are supervised on the logit-scale attention scores;
      // the row-softmax weights are bounded by 1 and could never reach the
      // loss's sigmoid targets.
      accumulate(batch_parts.aux, aux_affinity_loss(fo1.attn1_scores, fo1.attn2_scores,
                                                    affinity, fo1.grid_w));
    }

    const int cprime = model_.config().num_classes + 1;
    Tensor probs = reshape(softmax_rows(reshape(fo1.seg_logits,
                                                {img1.dim(0) * img1.dim(1), cprime})),
                           {img1.dim(0), img1.dim(1), cprime});
    accumulate(batch_parts.reg, reg_loss(probs, img1));
  }

  const double inv_batch = 1.0 / static_cast<double>(s.batch);
  LossComponents parts;
  auto average = [&](const Tensor& t) {
    return t.defined() ? mul_scalar(t, inv_batch) : Tensor();
  };
  parts.cls = average(batch_parts.cls);
  parts.seg = average(batch_parts.seg);
  parts.scd = average(batch_parts.scd);
  parts.equ = average(batch_parts.equ);
  parts.aux = average(batch_parts.aux);
  parts.reg = average(batch_parts.reg);

  Tensor total = total_loss(parts, s.weights, warmup);

  AdamW::zero_grad(model_);
  backward(total);
  optimizer_.step(model_);

  StepLoss out;
  out.iteration = iteration;
  auto value = [](const Tensor& t) { return t.defined() ? t.item() : 0.0; };
  out.total = total.item();
  out.cls = value(parts.cls);
  out.seg = value(parts.seg);
  out.scd = value(parts.scd);
  out.equ = value(parts.equ);
  out.aux = value(parts.aux);
  out.reg = value(parts.reg);
  return out;
}

Model train_model(const TrainSettings& settings, const Dataset& data,
                  std::vector<StepLoss>* log) {
  Trainer trainer(settings, data);
  for (int it = 0; it < settings.iterations; ++it) {
    StepLoss loss;
    try {
      loss = trainer.step(it);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (iteration " +
                         std::to_string(it) + ")");
    }
    if (log) log->push_back(loss);
  }
  return std::move(trainer.model());
}

std::string loss_log_csv(const std::vector<StepLoss>& log, int log_every) {
  std::string out = "iter,total,cls,seg,scd,equ,aux,reg\n";
  for (const auto& row : log) {
    if (row.iteration % log_every != 0) continue;
    out += std::to_string(row.iteration) + "," + fmt_g17(row.total) + "," +
           fmt_g17(row.cls) + "," + fmt_g17(row.seg) + "," + fmt_g17(row.scd) +
           "," + fmt_g17(row.equ) + "," + fmt_g17(row.aux) + "," +
           fmt_g17(row.reg) + "\n";
  }
  return out;
}

void train_run(const Config& cfg, const std::string& data_dir,
               const std::string& out_dir) {
  const TrainSettings settings = TrainSettings::from_config(cfg);
  const Dataset data = load_dataset(data_dir);
  std::vector<StepLoss> log;
  Model model = train_model(settings, data, &log);

  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "loss_log.csv", std::ios::binary);
    if (!f) throw IoError(out_dir + ": cannot write loss_log.csv");
    f << loss_log_csv(log, settings.log_every);
  }
  model.save((fs::path(out_dir) / "model.ckpt").string());
  bool has_masks = true;
  for (const auto& s : data.samples) has_masks = has_masks && !s.gt_mask.empty();
  if (has_masks) {
    const Metrics metrics = evaluate(model, data);
    std::ofstream f(fs::path(out_dir) / "metrics.csv", std::ios::binary);
    if (!f) throw IoError(out_dir + ": cannot write metrics.csv");
    f << metrics.to_csv();
  }
}

std::vector<uint8_t> predict_mask(const Model& model, const Tensor& image) {
  const ForwardOut fo = model.forward(image);
  const int h = fo.seg_logits.dim(0), w = fo.seg_logits.dim(1), c = fo.seg_logits.dim(2);
  std::vector<uint8_t> pred(static_cast<size_t>(h) * w);
  const auto v = fo.seg_logits.values();
  for (int i = 0; i < h * w; ++i) {
    int best = 0;
    double best_v = v[static_cast<size_t>(i) * c];
    for (int ch = 1; ch < c; ++ch) {
      if (v[static_cast<size_t>(i) * c + ch] > best_v) {
        best_v = v[static_cast<size_t>(i) * c + ch];
        best = ch;
      }
    }
    pred[static_cast<size_t>(i)] = static_cast<uint8_t>(best);
  }
  return pred;
}

Metrics evaluate(const Model& model, const Dataset& data) {
  if (data.samples.empty()) throw Error("evaluate: dataset is empty");
  Metrics metrics(model.config().num_classes + 1);
  for (const auto& sample : data.samples) {
    if (sample.gt_mask.empty()) {
      throw Error("evaluate: dataset sample has no ground-truth mask");
    }
    metrics.update(predict_mask(model, sample.image), sample.gt_mask);
  }
  return metrics;
}

std::vector<AblationRow> ablation_run(const TrainSettings& base,
                                      const Dataset& train_data,
                                      const Dataset& val_data,
                                      const std::vector<uint64_t>& seeds) {
  struct Variant {
    const char* name;
    bool varm, scd, aux, equ;
  };
  const Variant variants[] = {
      {"baseline", false, false, false, false},
      {"+varm", true, false, false, false},
      {"+varm+scd", true, true, false, false},
      {"+varm+scd+aux", true, true, true, false},
      {"+varm+scd+aux+equ", true, true, true, true},
  };
  std::vector<AblationRow> rows;
  for (const auto& variant : variants) {
    AblationRow row;
    row.name = variant.name;
    for (uint64_t seed : seeds) {
      TrainSettings s = base;
      s.seed = seed;
      s.use_varm = variant.varm;
      s.use_scd = variant.scd;
      s.use_aux = variant.aux;
      s.use_equ = variant.equ;
      Model model = train_model(s, train_data, nullptr);
      row.seed_mious.push_back(evaluate(model, val_data).miou());
    }
    std::vector<double> sorted = row.seed_mious;
    std::sort(sorted.begin(), sorted.end());
    row.median_miou = sorted[sorted.size() / 2];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "variant,median_miou,seed_mious\n";
  char buf[64];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", row.median_miou);
    out += row.name + "," + buf + ",";
    for (size_t i = 0; i < row.seed_mious.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.6f", row.seed_mious[i]);
      out += (i ? std::string(";") : std::string()) + buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace tscd
