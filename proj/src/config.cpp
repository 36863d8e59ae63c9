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

#include "neptune/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace neptune::cli {

namespace {

const KeyDef* find_key(const std::string& name) {
  for (const auto& k : known_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_unsigned(const std::string& s, std::uint64_t& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool parse_flag(const std::string& s, bool& out) {
  if (s == "true" || s == "1") return out = true, true;
  if (s == "false" || s == "0") return out = false, true;
  return false;
}

void check_value(const KeyDef& def, const std::string& value) {
  double d;
  std::uint64_t u;
  bool b;
  bool ok = true;
  switch (def.kind) {
    case KeyKind::kReal: ok = parse_real(value, d); break;
    case KeyKind::kCount:
    case KeyKind::kSeed: ok = parse_unsigned(value, u); break;
    case KeyKind::kFlag: ok = parse_flag(value, b); break;
    case KeyKind::kText: break;
  }
  if (!ok) {
    static const char* kinds[] = {"a finite real", "a non-negative integer",
                                  "a non-negative integer", "true or false", "text"};
    throw ValidationError("config: " + def.name + ": expected " +
                          kinds[static_cast<int>(def.kind)] + ", got '" + value + "'");
  }
}

}  // namespace

const std::vector<KeyDef>& known_keys() {
  static const std::vector<KeyDef> keys = {
      {"gamma", KeyKind::kReal, "0.5", "confidence/IoU trade-off in box accuracy"},
      {"delta", KeyKind::kReal, "1", "image difficulty scale"},
      {"m0", KeyKind::kReal, "0.99", "momentum decay for absent attributes"},
      {"initial_momentum", KeyKind::kReal, "0.99", "starting EMA momentum"},
      {"batch_size", KeyKind::kCount, "16", "images per ATDF iteration"},
      {"iou_assign_threshold", KeyKind::kReal, "0.5", "IoU needed to match a prediction"},
      {"tau_layout", KeyKind::kReal, "0.5", "layout score threshold (strict)"},
      {"tau_semantic", KeyKind::kReal, "0.25", "semantic score threshold (strict)"},
      {"top_k", KeyKind::kCount, "10000", "selection size"},
      {"include_missed_gt", KeyKind::kFlag, "false", "score unmatched ground truth as 0"},
      {"seed", KeyKind::kSeed, "42", "seed for synth and attn-check"},
      {"output_dir", KeyKind::kText, "out", "directory for reports"},
      {"manifest", KeyKind::kText, "", "ground-truth manifest (atdf, eval)"},
      {"predictions", KeyKind::kText, "", "detector predictions (atdf, eval)"},
      {"distribution", KeyKind::kText, "", "ATDF distribution (select)"},
      {"pool", KeyKind::kText, "", "candidate pool (select)"},
      {"features_a", KeyKind::kText, "", "first feature file (eval, FID)"},
      {"features_b", KeyKind::kText, "", "second feature file (eval, FID)"},
      {"labels_predicted", KeyKind::kText, "", "classifier labels (eval, CAS)"},
      {"labels_condition", KeyKind::kText, "", "conditioned labels (eval, CAS)"},
      {"profile", KeyKind::kText, "", "difficulty profile (synth)"},
      {"n_images", KeyKind::kCount, "200", "scenario images (synth)"},
      {"n_pool", KeyKind::kCount, "500", "candidate pool size (synth)"},
      {"objects_min", KeyKind::kCount, "4", "objects per image, lower bound (synth)"},
      {"objects_max", KeyKind::kCount, "12", "objects per image, upper bound (synth)"},
      {"box_min", KeyKind::kReal, "16", "box side, lower bound in pixels (synth)"},
      {"box_max", KeyKind::kReal, "160", "box side, upper bound in pixels (synth)"},
      {"grid_w", KeyKind::kCount, "4", "latent grid width (attn-check)"},
      {"grid_h", KeyKind::kCount, "4", "latent grid height (attn-check)"},
      {"objects", KeyKind::kCount, "2", "object conditions (attn-check)"},
      {"width", KeyKind::kCount, "8", "model width (attn-check)"},
      {"heads", KeyKind::kCount, "1", "attention heads (attn-check)"},
      {"sequence_length", KeyKind::kCount, "2", "tokens per condition (attn-check)"},
      {"frequencies", KeyKind::kCount, "4", "Fourier frequencies (attn-check)"},
      {"mask_scale", KeyKind::kCount, "2", "mask size over grid size (attn-check)"},
      {"init_sigma", KeyKind::kReal, "0.02", "weight init scale (attn-check)"},
      {"beta_o", KeyKind::kReal, "0", "object gate (attn-check)"},
      {"beta_w", KeyKind::kReal, "0", "water gate (attn-check)"},
      {"eps", KeyKind::kReal, "1e-05", "finite-difference step (attn-check)"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : known_keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeyDef* def = find_key(key);
  if (!def) throw ValidationError("config: unknown key '" + key + "'");
  check_value(*def, value);
  values_[key] = value;
}

void RunConfig::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot read " + path);
  std::set<std::string> seen;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path + ":" + std::to_string(number);
    if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ValidationError(where + ": duplicate key '" + key + "'");
    try {
      set(key, value);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  if (in.bad()) throw IoError("config: error reading " + path);
}

const std::string& RunConfig::text(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError("config: unknown key '" + key + "'");
  return it->second;
}

double RunConfig::real(const std::string& key) const {
  double d = 0.0;
  if (!parse_real(text(key), d)) throw ValidationError("config: " + key + " is not a real");
  return d;
}

std::size_t RunConfig::count(const std::string& key) const {
  std::uint64_t u = 0;
  if (!parse_unsigned(text(key), u)) throw ValidationError("config: " + key + " is not a count");
  return static_cast<std::size_t>(u);
}

std::uint64_t RunConfig::seed() const {
  std::uint64_t u = 0;
  if (!parse_unsigned(text("seed"), u)) throw ValidationError("config: seed is not an integer");
  return u;
}

bool RunConfig::flag(const std::string& key) const {
  bool b = false;
  if (!parse_flag(text(key), b)) throw ValidationError("config: " + key + " is not a flag");
  return b;
}

const std::string& RunConfig::required_path(const std::string& key) const {
  const std::string& v = text(key);
  if (v.empty()) throw ValidationError("config: '" + key + "' is required for this command");
  return v;
}

EngineConfig RunConfig::engine() const {
  EngineConfig c;
  c.gamma = real("gamma");
  c.delta = real("delta");
  c.m0 = real("m0");
  c.initial_momentum = real("initial_momentum");
  c.batch_size = count("batch_size");
  c.iou_assign_threshold = real("iou_assign_threshold");
  c.tau_layout = real("tau_layout");
  c.tau_semantic = real("tau_semantic");
  c.top_k = count("top_k");
  c.include_missed_gt = flag("include_missed_gt");
  c.seed = seed();
  c.validate();
  return c;
}

nlohmann::ordered_json RunConfig::echo() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& k : known_keys()) {
    switch (k.kind) {
      case KeyKind::kReal: j[k.name] = real(k.name); break;
      case KeyKind::kCount: j[k.name] = count(k.name); break;
      case KeyKind::kSeed: j[k.name] = seed(); break;
      case KeyKind::kFlag: j[k.name] = flag(k.name); break;
      case KeyKind::kText: j[k.name] = text(k.name); break;
    }
  }
  return j;
}

}  // namespace neptune::cli
