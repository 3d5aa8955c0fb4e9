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

// Command-line front end. Links only the public C API; all heavy lifting
// lives behind libtscd. Exit codes: 0 success, 1 check failure, 2 usage or
// input error, 3 numeric failure.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tscd.h"

namespace {

int status_to_exit(tscd_status s) {
  if (s != TSCD_OK) std::cerr << "error: " << tscd_last_error() << "\n";
  return static_cast<int>(s);
}

std::vector<int> parse_dilations(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

struct ConfigHandle {
  tscd_config* ptr = tscd_config_new();
  ~ConfigHandle() { tscd_config_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tscd: weakly supervised segmentation via self correspondence "
               "distillation and variation-aware pseudo-label refinement"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "Generate a synthetic shapes dataset");
  uint64_t gen_seed = 0;
  int gen_n = 200, gen_size = 64, gen_shapes = 3;
  double gen_jitter = 0.05, gen_texture = 0.06;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "master random seed")->capture_default_str();
  gen->add_option("--n", gen_n, "number of images")->capture_default_str();
  gen->add_option("--size", gen_size, "image side length")->capture_default_str();
  gen->add_option("--max-shapes", gen_shapes, "max shapes per image")->capture_default_str();
  gen->add_option("--jitter", gen_jitter, "per-shape color jitter")->capture_default_str();
  gen->add_option("--texture", gen_texture, "background texture amplitude")->capture_default_str();
  gen->add_option("--out", gen_out, "output dataset directory")->required();

  // ---- train ----
  auto* train = app.add_subcommand("train", "Train the segmentation model");
  std::string train_cfg_file, train_data, train_out;
  std::vector<std::string> train_overrides;
  std::string train_iters, train_seed, train_lr, train_batch;
  std::string scd_n = "40", thr_hi = "0.55", thr_lo = "0.35";
  train->add_option("--config", train_cfg_file, "key = value config file");
  train->add_option("--data", train_data, "training dataset directory")->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--iterations", train_iters, "override train.iterations");
  train->add_option("--seed", train_seed, "override train.seed");
  train->add_option("--lr", train_lr, "override train.lr");
  train->add_option("--batch", train_batch, "override train.batch");
  train->add_option("--scd-n", scd_n, "sampled positions for the distillation loss")
      ->capture_default_str();
  train->add_option("--thr-hi", thr_hi, "upper background threshold")->capture_default_str();
  train->add_option("--thr-lo", thr_lo, "lower background threshold")->capture_default_str();
  train->add_option("--set", train_overrides, "extra key=value overrides")
      ->take_all();

  // ---- refine ----
  auto* refine = app.add_subcommand("refine", "Refine a label map against its image");
  std::string ref_image, ref_label, ref_out;
  double ref_alpha = 4.0, ref_beta = 0.01;
  int ref_iters = 10;
  std::string ref_dilations = "1,2,4,8,12,24";
  refine->add_option("--image", ref_image, "P6 image")->required();
  refine->add_option("--label", ref_label, "P5 label map (255 = ignore)")->required();
  refine->add_option("--out", ref_out, "output P5 path")->required();
  refine->add_option("--alpha", ref_alpha, "smoothing weight")->capture_default_str();
  refine->add_option("--beta", ref_beta, "variation correction weight")->capture_default_str();
  refine->add_option("--iters", ref_iters, "update iterations")->capture_default_str();
  refine->add_option("--dilations", ref_dilations, "neighborhood dilation rates")
      ->capture_default_str();

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint (mIoU)");
  std::string eval_data, eval_ckpt, eval_csv;
  eval->add_option("--data", eval_data, "dataset directory with masks")->required();
  eval->add_option("--ckpt", eval_ckpt, "model checkpoint")->required();
  eval->add_option("--csv", eval_csv, "also write the metrics CSV here");

  // ---- gradcheck ----
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference check of every loss gradient");
  uint64_t gc_seed = 0;
  gradcheck->add_option("--seed", gc_seed, "random seed")->capture_default_str();

  // ---- render ----
  auto* render = app.add_subcommand("render", "Write cam heatmaps and overlay");
  std::string ren_ckpt, ren_image, ren_out;
  render->add_option("--ckpt", ren_ckpt, "model checkpoint")->required();
  render->add_option("--image", ren_image, "P6 input image")->required();
  render->add_option("--out", ren_out, "output file prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (gen->parsed()) {
    return status_to_exit(tscd_generate(gen_seed, gen_n, gen_size, gen_shapes,
                                        gen_jitter, gen_texture, gen_out.c_str()));
  }

  if (train->parsed()) {
    ConfigHandle cfg;
    if (!train_cfg_file.empty()) {
      if (auto s = tscd_config_load(cfg.ptr, train_cfg_file.c_str())) {
        return status_to_exit(s);
      }
    }
    // Flags override file values; untouched flags leave the file alone.
    const std::pair<const char*, std::pair<const char*, std::string>> flag_keys[] = {
        {"--iterations", {"train.iterations", train_iters}},
        {"--seed", {"train.seed", train_seed}},
        {"--lr", {"train.lr", train_lr}},
        {"--batch", {"train.batch", train_batch}},
        {"--scd-n", {"scd.n", scd_n}},
        {"--thr-hi", {"cam.threshold_hi", thr_hi}},
        {"--thr-lo", {"cam.threshold_lo", thr_lo}},
    };
    for (const auto& [flag, kv] : flag_keys) {
      if (train->count(flag) == 0) continue;
      if (auto s = tscd_config_set(cfg.ptr, kv.first, kv.second.c_str())) {
        return status_to_exit(s);
      }
    }
    for (const auto& kv : train_overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
        return 2;
      }
      if (auto s = tscd_config_set(cfg.ptr, kv.substr(0, eq).c_str(),
                                   kv.substr(eq + 1).c_str())) {
        return status_to_exit(s);
      }
    }
    return status_to_exit(tscd_train(cfg.ptr, train_data.c_str(), train_out.c_str()));
  }

  if (refine->parsed()) {
    std::vector<int> dilations;
    try {
      dilations = parse_dilations(ref_dilations);
    } catch (...) {
      std::cerr << "error: --dilations expects a comma-separated integer list\n";
      return 2;
    }
    return status_to_exit(tscd_refine(ref_image.c_str(), ref_label.c_str(),
                                      ref_out.c_str(), ref_alpha, ref_beta,
                                      dilations.data(),
                                      static_cast<int>(dilations.size()), ref_iters));
  }

  if (eval->parsed()) {
    tscd_metrics* metrics = nullptr;
    if (auto s = tscd_evaluate(eval_data.c_str(), eval_ckpt.c_str(), &metrics)) {
      return status_to_exit(s);
    }
    std::vector<char> buf(1 << 16);
    tscd_metrics_csv(metrics, buf.data(), buf.size());
    std::cout << buf.data();
    if (!eval_csv.empty()) {
      std::ofstream f(eval_csv, std::ios::binary);
      if (!f) {
        std::cerr << "error: cannot write " << eval_csv << "\n";
        tscd_metrics_free(metrics);
        return 2;
      }
      f << buf.data();
    }
    tscd_metrics_free(metrics);
    return 0;
  }

  if (gradcheck->parsed()) {
    std::vector<char> report(1 << 14);
    const tscd_status s = tscd_gradcheck(gc_seed, report.data(), report.size());
    std::cout << report.data();
    if (s == TSCD_ERR_CHECK) {
      std::cerr << "gradient check FAILED\n";
      return 1;
    }
    return status_to_exit(s);
  }

  if (render->parsed()) {
    return status_to_exit(tscd_render(ren_ckpt.c_str(), ren_image.c_str(),
                                      ren_out.c_str()));
  }

  return 2;
}
