// Copyright 2026 The Neptune Select Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Flat key = value run configuration with typed keys and defaults.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "neptune/core_model.hpp"

namespace neptune::cli {

enum class KeyKind { kReal, kCount, kSeed, kFlag, kText };

struct KeyDef {
  std::string name;
  KeyKind kind;
  std::string default_value;
  std::string help;
};

/// Every recognised key, in echo order.
const std::vector<KeyDef>& known_keys();

class RunConfig {
 public:
  RunConfig();

  /// Throws ValidationError for an unknown key or a value of the wrong type.
  void set(const std::string& key, const std::string& value);
  /// Reads `key = value` lines; `#` starts a comment. IoError when unreadable,
  /// ValidationError with the line number on malformed or duplicate lines.
  void merge_file(const std::string& path);

  const std::string& text(const std::string& key) const;
  double real(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t seed() const;
  bool flag(const std::string& key) const;
  /// Text value, or ValidationError naming the key when it is empty.
  const std::string& required_path(const std::string& key) const;

  /// Engine parameters; validated.
  EngineConfig engine() const;

  /// All keys with typed effective values, in known_keys() order.
  nlohmann::ordered_json echo() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace neptune::cli
