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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace neptune {

/// Raised for malformed input data. Maps to CLI exit status 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a numerical or structural invariant does not hold. Exit status 2.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for unreadable inputs or unwritable outputs. Exit status 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box in corner format, pixel coordinates.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  /// Finite with x1 < x2 and y1 < y2.
  bool valid() const;

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Row-major binary grid. Bits are stored one per byte.
class BinaryMask {
 public:
  BinaryMask() = default;
  /// All-zero mask. Throws ValidationError on zero extents.
  BinaryMask(std::size_t width, std::size_t height);
  /// Throws ValidationError when data.size() != width * height or a value is not 0/1.
  BinaryMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> data);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  bool at(std::size_t x, std::size_t y) const { return data_[y * width_ + x] != 0; }
  void set(std::size_t x, std::size_t y, bool value = true) {
    data_[y * width_ + x] = value ? 1 : 0;
  }
  std::size_t count() const;
  const std::vector<std::uint8_t>& data() const { return data_; }

  static BinaryMask full(std::size_t width, std::size_t height);

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// The four label axes, in their fixed iteration order.
enum class Dimension : std::uint8_t { kCategory = 0, kViewpoint = 1, kLocation = 2, kEnvironment = 3 };

inline constexpr std::array<Dimension, 4> kAllDimensions = {
    Dimension::kCategory, Dimension::kViewpoint, Dimension::kLocation, Dimension::kEnvironment};

inline constexpr std::size_t index_of(Dimension d) { return static_cast<std::size_t>(d); }
std::string_view dimension_name(Dimension d);
/// Throws ValidationError for unknown names.
Dimension parse_dimension(std::string_view name);

/// An attribute value on one dimension, e.g. (environment, "foggy").
struct AttributeKey {
  Dimension dimension = Dimension::kCategory;
  std::string name;

  friend bool operator==(const AttributeKey&, const AttributeKey&) = default;
  friend auto operator<=>(const AttributeKey&, const AttributeKey&) = default;
};

/// Ordered attribute lists for the four dimensions. Immutable after construction.
class AttributeTaxonomy {
 public:
  /// Throws ValidationError if a dimension is empty or holds duplicate names.
  explicit AttributeTaxonomy(std::array<std::vector<std::string>, 4> attributes);

  const std::vector<std::string>& attributes(Dimension d) const { return attributes_[index_of(d)]; }
  bool contains(Dimension d, std::string_view name) const;
  /// Position of `name` within its dimension, or nullopt.
  std::optional<std::size_t> position(Dimension d, std::string_view name) const;
  std::size_t total_attributes() const;

  friend bool operator==(const AttributeTaxonomy&, const AttributeTaxonomy&) = default;

 private:
  std::array<std::vector<std::string>, 4> attributes_;
};

/// Default maritime taxonomy: 5 categories, 3 viewpoints, 4 locations, 6 environments.
AttributeTaxonomy taxonomy_default();

struct GroundTruthObject {
  std::string category;
  BBox bbox;

  friend bool operator==(const GroundTruthObject&, const GroundTruthObject&) = default;
};

struct Prediction {
  std::string category;
  BBox bbox;
  double confidence = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct ImageRecord {
  std::string id;
  std::string viewpoint;
  std::string location;
  std::string environment;
  std::vector<GroundTruthObject> objects;
  std::optional<BinaryMask> water_mask;

  /// Image-level attribute for a non-category dimension.
  const std::string& attribute(Dimension d) const;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct EngineConfig {
  double gamma = 0.5;
  double delta = 1.0;
  double m0 = 0.99;
  double initial_momentum = 0.99;
  std::size_t top_k = 10000;
  double tau_layout = 0.5;
  double tau_semantic = 0.25;
  double iou_assign_threshold = 0.5;
  std::size_t batch_size = 16;
  bool include_missed_gt = false;
  std::uint64_t seed = 42;

  /// Throws ValidationError naming the first out-of-range field.
  void validate() const;

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

struct Violation {
  std::string field;
  std::string reason;
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  /// "id: field: reason; field: reason"
  std::string describe(std::string_view context = {}) const;
};

/// Collects every invariant violation of `record` against `taxonomy`.
ValidationResult validate_record(const ImageRecord& record, const AttributeTaxonomy& taxonomy);

/// Collects violations for a prediction list; fields are named predictions[i].*.
ValidationResult validate_predictions(const std::vector<Prediction>& predictions,
                                      const AttributeTaxonomy& taxonomy);

}  // namespace neptune
