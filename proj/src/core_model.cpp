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

#include "neptune/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace neptune {

bool BBox::valid() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
         x1 < x2 && y1 < y2;
}

BinaryMask::BinaryMask(std::size_t width, std::size_t height)
    : width_(width), height_(height), data_(width * height, 0) {
  if (width == 0 || height == 0) {
    throw ValidationError("mask extents must be positive");
  }
}

BinaryMask::BinaryMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width == 0 || height == 0) {
    throw ValidationError("mask extents must be positive");
  }
  if (data_.size() != width * height) {
    throw ValidationError("mask data length " + std::to_string(data_.size()) + " != " +
                          std::to_string(width) + "x" + std::to_string(height));
  }
  if (std::any_of(data_.begin(), data_.end(), [](std::uint8_t v) { return v > 1; })) {
    throw ValidationError("mask values must be 0 or 1");
  }
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

BinaryMask BinaryMask::full(std::size_t width, std::size_t height) {
  return BinaryMask(width, height, std::vector<std::uint8_t>(width * height, 1));
}

std::string_view dimension_name(Dimension d) {
  switch (d) {
    case Dimension::kCategory:
      return "category";
    case Dimension::kViewpoint:
      return "viewpoint";
    case Dimension::kLocation:
      return "location";
    case Dimension::kEnvironment:
      return "environment";
  }
  return "unknown";
}

Dimension parse_dimension(std::string_view name) {
  for (Dimension d : kAllDimensions) {
    if (dimension_name(d) == name) return d;
  }
  throw ValidationError("unknown dimension '" + std::string(name) + "'");
}

AttributeTaxonomy::AttributeTaxonomy(std::array<std::vector<std::string>, 4> attributes)
    : attributes_(std::move(attributes)) {
  for (Dimension d : kAllDimensions) {
    const auto& names = attributes_[index_of(d)];
    if (names.empty()) {
      throw ValidationError("taxonomy dimension '" + std::string(dimension_name(d)) +
                            "' is empty");
    }
    std::set<std::string_view> seen;
    for (const auto& n : names) {
      if (n.empty()) {
        throw ValidationError("taxonomy dimension '" + std::string(dimension_name(d)) +
                              "' has an empty attribute name");
      }
      if (!seen.insert(n).second) {
        throw ValidationError("duplicate attribute '" + n + "' in dimension '" +
                              std::string(dimension_name(d)) + "'");
      }
    }
  }
}

bool AttributeTaxonomy::contains(Dimension d, std::string_view name) const {
  return position(d, name).has_value();
}

std::optional<std::size_t> AttributeTaxonomy::position(Dimension d, std::string_view name) const {
  const auto& names = attributes_[index_of(d)];
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

std::size_t AttributeTaxonomy::total_attributes() const {
  return std::accumulate(attributes_.begin(), attributes_.end(), std::size_t{0},
                         [](std::size_t acc, const auto& v) { return acc + v.size(); });
}

AttributeTaxonomy taxonomy_default() {
  return AttributeTaxonomy({{
      {"ship", "buoy", "person", "floating_object", "fixed_object"},
      {"shore", "ship", "aerial"},
      {"sea", "river", "harbor", "lake"},
      {"sunny", "cloudy", "foggy", "rainy", "dawn_dusk", "night"},
  }});
}

const std::string& ImageRecord::attribute(Dimension d) const {
  switch (d) {
    case Dimension::kViewpoint:
      return viewpoint;
    case Dimension::kLocation:
      return location;
    case Dimension::kEnvironment:
      return environment;
    case Dimension::kCategory:
      break;
  }
  throw std::invalid_argument("category is an object-level attribute");
}

namespace {

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

void require(bool cond, std::string_view field) {
  if (!cond) throw ValidationError("config: " + std::string(field) + " out of range");
}

}  // namespace

void EngineConfig::validate() const {
  require(in_unit(gamma), "gamma");
  require(std::isfinite(delta) && delta > 0.0, "delta");
  require(std::isfinite(m0) && m0 > 0.0 && m0 < 1.0, "m0");
  require(std::isfinite(initial_momentum) && initial_momentum > 0.0 && initial_momentum < 1.0,
          "initial_momentum");
  require(top_k >= 1, "top_k");
  require(in_unit(tau_layout), "tau_layout");
  require(in_unit(tau_semantic), "tau_semantic");
  require(in_unit(iou_assign_threshold), "iou_assign_threshold");
  require(batch_size >= 1, "batch_size");
}

std::string ValidationResult::describe(std::string_view context) const {
  std::string out(context);
  for (const auto& v : violations) {
    if (!out.empty()) out += out.back() == ':' ? " " : "; ";
    out += v.field + ": " + v.reason;
  }
  return out;
}

ValidationResult validate_record(const ImageRecord& record, const AttributeTaxonomy& taxonomy) {
  ValidationResult result;
  auto fail = [&](std::string field, std::string reason) {
    result.violations.push_back({std::move(field), std::move(reason)});
  };
  if (record.id.empty()) fail("id", "empty id");
  for (Dimension d : {Dimension::kViewpoint, Dimension::kLocation, Dimension::kEnvironment}) {
    const auto& value = record.attribute(d);
    if (!taxonomy.contains(d, value)) {
      fail(std::string(dimension_name(d)), "unknown attribute '" + value + "'");
    }
  }
  for (std::size_t i = 0; i < record.objects.size(); ++i) {
    const auto& obj = record.objects[i];
    const std::string prefix = "objects[" + std::to_string(i) + "].";
    if (!taxonomy.contains(Dimension::kCategory, obj.category)) {
      fail(prefix + "category", "unknown category '" + obj.category + "'");
    }
    if (!obj.bbox.valid()) fail(prefix + "bbox", "degenerate or non-finite box");
  }
  if (record.water_mask && record.water_mask->empty()) {
    fail("water_mask", "zero-sized mask");
  }
  return result;
}

ValidationResult validate_predictions(const std::vector<Prediction>& predictions,
                                      const AttributeTaxonomy& taxonomy) {
  ValidationResult result;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    const std::string prefix = "predictions[" + std::to_string(i) + "].";
    if (!taxonomy.contains(Dimension::kCategory, p.category)) {
      result.violations.push_back({prefix + "category", "unknown category '" + p.category + "'"});
    }
    if (!p.bbox.valid()) {
      result.violations.push_back({prefix + "bbox", "degenerate or non-finite box"});
    }
    if (!in_unit(p.confidence)) {
      result.violations.push_back({prefix + "confidence", "outside [0,1]"});
    }
  }
  return result;
}

}  // namespace neptune
