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

// Seeded synthetic detection scenarios with attribute-conditioned error
// injection. Every random draw comes from a counter-based generator keyed by
// (seed, image, box, stream), so any image can be regenerated on its own.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "neptune/core_model.hpp"
#include "neptune/selection.hpp"

namespace neptune::synth {

inline constexpr double kFrameSize = 640.0;

/// splitmix64 over a key derived from four words. Cheap to construct.
class KeyedRng {
 public:
  KeyedRng(std::uint64_t seed, std::uint64_t image, std::uint64_t box, std::uint64_t stream);

  std::uint64_t next();
  /// 53-bit uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

 private:
  std::uint64_t state_;
};

std::uint64_t splitmix64(std::uint64_t x);

struct AttributeRates {
  double error_rate = 0.0;        ///< probability a box is degraded
  double miss_probability = 0.0;  ///< probability a box gets no prediction
};

struct DifficultyProfile {
  std::map<AttributeKey, AttributeRates> rates;
  double iou_noise = 0.3;         ///< corner jitter, fraction of box size
  double confidence_noise = 0.5;  ///< degraded confidence is 1 - noise * u

  /// Every attribute of `taxonomy` at the given rates.
  static DifficultyProfile uniform(const AttributeTaxonomy& taxonomy, double error_rate,
                                   double miss_probability = 0.0);

  const AttributeRates& at(const AttributeKey& key) const;
  void set(const AttributeKey& key, AttributeRates value) { rates[key] = value; }

  /// Rates in [0,1], noise scales >= 0, every taxonomy attribute covered.
  ValidationResult validate(const AttributeTaxonomy& taxonomy) const;
};

/// Moderate per-attribute rates over the default taxonomy.
DifficultyProfile default_profile();

struct ScenarioSpec {
  std::size_t n_images = 200;
  std::size_t objects_min = 4;
  std::size_t objects_max = 12;
  double box_min = 16.0;   ///< side length range in pixels
  double box_max = 160.0;
  double frame = kFrameSize;
};

struct Scenario {
  AttributeTaxonomy taxonomy;
  std::vector<ImageRecord> records;
  std::vector<std::vector<Prediction>> predictions;  ///< parallel to records
  DifficultyProfile profile;
  ScenarioSpec spec;
  std::uint64_t seed = 0;
};

/// 1 - prod(1 - rate) over the category and the three image attributes.
double composite_error_rate(const DifficultyProfile& profile, const ImageRecord& record,
                            const std::string& category);
double composite_miss_probability(const DifficultyProfile& profile, const ImageRecord& record,
                                  const std::string& category);

/// Throws ValidationError on an incomplete profile or impossible geometry
/// (box_max above the frame, empty or inverted ranges).
Scenario generate_scenario(const AttributeTaxonomy& taxonomy, const DifficultyProfile& profile,
                           const ScenarioSpec& spec, std::uint64_t seed);

/// Corners move by (2u - 1) * noise * side, drawn in the order x1, y1, x2, y2.
/// The result is clamped into [0, frame]; a side shorter than 10% of the
/// original is re-centred at that length. noise 0 returns the input unchanged.
BBox perturb_box(const BBox& box, double iou_noise, KeyedRng& rng, double frame = kFrameSize);
BBox perturb_box(const BBox& box, double iou_noise, std::uint64_t seed,
                 double frame = kFrameSize);

/// Candidate pool drawn from an independent stream of the same seed.
/// layout_score and semantic_score are uniform on [0, 1).
std::vector<CandidateSample> generate_pool(const AttributeTaxonomy& taxonomy,
                                           const DifficultyProfile& profile,
                                           const ScenarioSpec& spec, std::uint64_t seed);

/// Attributes of one dimension grouped in tiers of equal injected error rate,
/// highest rate first.
struct ExpectedOrdering {
  Dimension dimension = Dimension::kEnvironment;
  std::vector<std::vector<std::string>> tiers;
  std::vector<double> tier_rates;

  /// True when `ranking` (hardest first) visits the tiers in order.
  bool accepts(std::span<const std::string> ranking) const;
  /// Flattened tier order.
  std::vector<std::string> flatten() const;
};

ExpectedOrdering expected_ordering(const DifficultyProfile& profile,
                                   const AttributeTaxonomy& taxonomy, Dimension dimension);

/// Pearson correlation of average ranks. Throws std::invalid_argument on
/// length mismatch, fewer than two values or a constant input.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace neptune::synth
