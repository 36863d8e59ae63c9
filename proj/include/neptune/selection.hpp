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

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "neptune/atdf.hpp"
#include "neptune/core_model.hpp"

namespace neptune {

/// A generated image with its layout (used as ground truth), detector
/// predictions, and externally computed quality scores.
struct CandidateSample {
  std::string id;
  ImageRecord record;
  std::vector<Prediction> predictions;
  double layout_score = 0.0;    ///< [0,1], classifier agreement with the layout
  double semantic_score = 0.0;  ///< [-1,1], image/text cosine similarity
};

struct ObjectAccuracy {
  std::string category;
  double accuracy = 0.0;
};

/// Composite difficulty with its factors. `value` = delta * ranking_score.
struct DifficultyBreakdown {
  double value = 0.0;
  double ranking_score = 0.0;  ///< d_view * d_loc * d_env * mean_class_term
  double d_view = 0.0;
  double d_loc = 0.0;
  double d_env = 0.0;
  double mean_class_term = 0.0;  ///< (1/N) sum d_cls(n) (1 - Acc_n)

  friend bool operator==(const DifficultyBreakdown&, const DifficultyBreakdown&) = default;
};

struct SelectionEntry {
  std::string id;
  DifficultyBreakdown difficulty;
  bool passed_filters = true;

  friend bool operator==(const SelectionEntry&, const SelectionEntry&) = default;
};

struct PoolStatistics {
  std::size_t total = 0;
  std::size_t filtered_layout = 0;    ///< layout_score <= tau_layout
  std::size_t filtered_semantic = 0;  ///< passed layout, semantic_score <= tau_semantic
  std::size_t filtered_degenerate = 0;  ///< passed both, layout has no objects
  std::size_t scored = 0;
  std::size_t selected = 0;

  std::size_t filtered_out() const {
    return filtered_layout + filtered_semantic + filtered_degenerate;
  }
  friend bool operator==(const PoolStatistics&, const PoolStatistics&) = default;
};

/// Entries sorted by difficulty descending, ties by ascending id; at most top_k.
struct SelectionManifest {
  std::vector<SelectionEntry> entries;
  EngineConfig config;
  PoolStatistics statistics;
};

/// delta * d_view * d_loc * d_env * (1/N) sum_n d_cls(n) (1 - Acc_n).
/// Throws ValidationError on an empty object list or attributes missing from `dist`.
DifficultyBreakdown image_difficulty(const AtdfDistribution& dist, const ImageRecord& record,
                                     std::span<const ObjectAccuracy> object_accuracies,
                                     double delta);

/// Strict: layout_score > tau_layout and semantic_score > tau_semantic.
bool filter_sample(const CandidateSample& sample, double tau_layout, double tau_semantic);

/// u.v / (|u||v|). Throws std::invalid_argument on length mismatch or a zero vector.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Accuracy of every layout object against the predictions (0 when unmatched).
std::vector<ObjectAccuracy> layout_accuracies(const CandidateSample& sample,
                                              const EngineConfig& config);

SelectionManifest run_selection(std::span<const CandidateSample> pool,
                                const AtdfDistribution& dist, const EngineConfig& config);

}  // namespace neptune
