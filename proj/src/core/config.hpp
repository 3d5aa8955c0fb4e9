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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tscd {

/// Flat `key = value` configuration with namespaced keys. Every key has a
/// registered default; setting or loading an unknown key is a hard error so
/// typos cannot silently fall back to defaults.
class Config {
 public:
  struct KeySpec {
    std::string key;
    std::string default_value;
    std::string doc;
  };

  Config();

  /// Parses a UTF-8 `key = value` file ('#' starts a comment).
  void load_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  int get_int(const std::string& key) const;
  uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  static const std::vector<KeySpec>& key_specs();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace tscd
