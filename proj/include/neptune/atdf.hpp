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

// Attribute-correlated training difficulty factors.
//
// Every attribute s of every dimension carries a difficulty d_s in [0,1] and a
// momentum m_s. A batch of scored boxes yields the batch difficulty
//
//     d_batch = mean over boxes with attribute s of (1 - Acc)
//
// which is blended into the running value as d_s <- m_s d_s + (1 - m_s) d_batch.
// An attribute absent from a batch keeps d_s and decays its momentum,
// m_s <- m0 m_s, so rarely seen attributes move faster once they reappear.
// The first observation of an attribute seeds d_s directly.
//
// At the end of the stream each dimension is normalized with a softmax; a
// larger probability means a harder attribute.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "neptune/core_model.hpp"
#include "neptune/matching.hpp"

namespace neptune {

/// Lower bound on m_s so that (1 - m_s) stays strictly below 1.
inline constexpr double kMomentumFloor = 1e-3;
/// Difficulty assigned to never-observed attributes when normalizing.
inline constexpr double kUnseenDifficulty = 0.5;

struct AttributeState {
  double difficulty = 0.0;
  double momentum = 0.0;
  bool seen = false;
  std::uint64_t seen_count = 0;  ///< boxes credited to this attribute over all batches
};

class AtdfState {
 public:
  AtdfState(AttributeTaxonomy taxonomy, const EngineConfig& config);

  const AttributeTaxonomy& taxonomy() const { return taxonomy_; }
  const EngineConfig& config() const { return config_; }
  std::uint64_t iteration() const { return iteration_; }

  const AttributeState& at(Dimension d, std::size_t position) const {
    return stats_[index_of(d)][position];
  }
  /// Throws std::out_of_range for attributes outside the taxonomy.
  const AttributeState& at(const AttributeKey& key) const;

 private:
  friend AtdfState update(AtdfState state, std::span<const ScoredBox> batch);

  AttributeTaxonomy taxonomy_;
  EngineConfig config_;
  std::array<std::vector<AttributeState>, 4> stats_;
  std::uint64_t iteration_ = 0;
};

struct AttributeProbability {
  std::string name;
  double probability = 0.0;
  double difficulty = 0.0;  ///< value fed to the softmax
  bool seen = false;
};

/// Per-dimension softmax over attribute difficulties.
class AtdfDistribution {
 public:
  AtdfDistribution() = default;
  /// Throws ValidationError unless every dimension is non-empty with positive
  /// probabilities summing to 1 within 1e-9.
  explicit AtdfDistribution(std::array<std::vector<AttributeProbability>, 4> dims);

  const std::vector<AttributeProbability>& dimension(Dimension d) const {
    return dims_[index_of(d)];
  }
  /// Throws ValidationError when the attribute is unknown.
  double probability(Dimension d, std::string_view name) const;

 private:
  std::array<std::vector<AttributeProbability>, 4> dims_;
};

/// Mean of (1 - Acc) over boxes carrying `attribute`; nullopt when none do.
std::optional<double> batch_difficulty(std::span<const ScoredBox> boxes,
                                       const AttributeKey& attribute);

/// One evaluation iteration. Throws InvariantError for boxes whose attributes
/// are not in the state's taxonomy.
AtdfState update(AtdfState state, std::span<const ScoredBox> batch);

AtdfDistribution finalize(const AtdfState& state);

struct LabeledImage {
  ImageRecord record;
  std::vector<Prediction> predictions;
};

/// Scores images in consecutive batches of config.batch_size (input order) and
/// updates after each batch. Within a batch, boxes are reduced in ascending
/// image id, then box order. Throws ValidationError on invalid input.
std::pair<AtdfState, AtdfDistribution> run_stream(AtdfState state,
                                                  std::span<const LabeledImage> images,
                                                  const EngineConfig& config);

/// Throws ValidationError aggregating every record and prediction violation.
void validate_images(std::span<const LabeledImage> images, const AttributeTaxonomy& taxonomy);

}  // namespace neptune
