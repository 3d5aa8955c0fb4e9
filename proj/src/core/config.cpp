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

#include "core/config.hpp"

#include <fstream>
#include <sstream>

#include "core/common.hpp"

namespace tscd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<Config::KeySpec>& Config::key_specs() {
  static const std::vector<KeySpec> specs = {
      {"train.iterations", "3000", "total optimizer steps"},
      {"train.warmup_iterations", "-1", "classification-only steps; -1 = 10% of total"},
      {"train.batch", "4", "images per step"},
      {"train.lr", "6e-05", "AdamW learning rate"},
      {"train.weight_decay", "0.01", "AdamW decoupled weight decay"},
      {"train.crop", "64", "training crop size (must be divisible by 4)"},
      {"train.seed", "0", "master seed; all randomness derives from it"},
      {"train.log_every", "1", "loss-log row stride"},
      {"train.use_varm", "1", "refine pseudo-labels with the variation-aware module"},
      {"train.use_scd", "1", "enable the correspondence distillation loss"},
      {"train.use_aux", "1", "enable the attention affinity auxiliary loss"},
      {"train.use_equ", "1", "enable the equivariant regularization loss"},
      {"loss.lambda1", "0.1", "weight on distillation/segmentation/equivariant/aux losses"},
      {"loss.lambda2", "0.01", "weight on the smoothness regularization loss"},
      {"loss.lambda3", "1", "weight on the classification loss"},
      {"varm.alpha", "4", "smoothing weight in the local affinity term"},
      {"varm.beta", "0.01", "weight on the pixel-variation correction"},
      {"varm.dilations", "1,2,4,8,12,24", "dilation rates of the refinement neighborhood"},
      {"varm.iterations", "10", "refinement update iterations"},
      {"scd.n", "40", "sampled positions per view for the distillation loss"},
      {"cam.threshold_hi", "0.55", "score above which a pixel takes the argmax class"},
      {"cam.threshold_lo", "0.35", "score below which a pixel is background"},
      {"model.channels", "32", "encoder feature channels (multiple of 4)"},
  };
  return specs;
}

Config::Config() {
  for (const auto& spec : key_specs()) values_[spec.key] = spec.default_value;
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

int Config::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t used = 0;
    const int r = std::stoi(v, &used);
    if (used != v.size()) throw ConfigError("");
    return r;
  } catch (...) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
  }
}

uint64_t Config::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t used = 0;
    const uint64_t r = std::stoull(v, &used);
    if (used != v.size()) throw ConfigError("");
    return r;
  } catch (...) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not an unsigned integer");
  }
}

double Config::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    size_t used = 0;
    const double r = std::stod(v, &used);
    if (used != v.size()) throw ConfigError("");
    return r;
  } catch (...) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  }
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw ConfigError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<int> Config::get_int_list(const std::string& key) const {
  const std::string& v = get(key);
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw ConfigError("");
    } catch (...) {
      throw ConfigError("config key '" + key + "': '" + item + "' is not an integer");
    }
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

}  // namespace tscd
