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

#include "neptune/selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "neptune/matching.hpp"

namespace neptune {

DifficultyBreakdown image_difficulty(const AtdfDistribution& dist, const ImageRecord& record,
                                     std::span<const ObjectAccuracy> object_accuracies,
                                     double delta) {
  if (object_accuracies.empty()) {
    throw ValidationError("image '" + record.id + "' has no objects to score");
  }
  DifficultyBreakdown out;
  out.d_view = dist.probability(Dimension::kViewpoint, record.viewpoint);
  out.d_loc = dist.probability(Dimension::kLocation, record.location);
  out.d_env = dist.probability(Dimension::kEnvironment, record.environment);
  double sum = 0.0;
  for (const auto& obj : object_accuracies) {
    sum += dist.probability(Dimension::kCategory, obj.category) * (1.0 - obj.accuracy);
  }
  out.mean_class_term = sum / static_cast<double>(object_accuracies.size());
  out.ranking_score = out.d_view * out.d_loc * out.d_env * out.mean_class_term;
  out.value = delta * out.ranking_score;
  return out;
}

bool filter_sample(const CandidateSample& sample, double tau_layout, double tau_semantic) {
  return sample.layout_score > tau_layout && sample.semantic_score > tau_semantic;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw std::invalid_argument("cosine_similarity: zero vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

std::vector<ObjectAccuracy> layout_accuracies(const CandidateSample& sample,
                                              const EngineConfig& config) {
  const auto& objects = sample.record.objects;
  const MatchResult match =
      match_predictions(sample.predictions, objects, config.iou_assign_threshold);
  std::vector<ObjectAccuracy> out(objects.size());
  for (std::size_t i = 0; i < objects.size(); ++i) out[i] = {objects[i].category, 0.0};
  for (const auto& pair : match.pairs) {
    out[pair.gt].accuracy =
        box_accuracy(sample.predictions[pair.prediction].confidence, pair.iou, config.gamma);
  }
  return out;
}

SelectionManifest run_selection(std::span<const CandidateSample> pool,
                                const AtdfDistribution& dist, const EngineConfig& config) {
  config.validate();
  SelectionManifest manifest;
  manifest.config = config;
  manifest.statistics.total = pool.size();

  for (const auto& sample : pool) {
    if (!(sample.layout_score > config.tau_layout)) {
      ++manifest.statistics.filtered_layout;
      continue;
    }
    if (!(sample.semantic_score > config.tau_semantic)) {
      ++manifest.statistics.filtered_semantic;
      continue;
    }
    if (sample.record.objects.empty()) {
      ++manifest.statistics.filtered_degenerate;
      continue;
    }
    const auto accuracies = layout_accuracies(sample, config);
    manifest.entries.push_back(
        {sample.id, image_difficulty(dist, sample.record, accuracies, config.delta), true});
  }
  manifest.statistics.scored = manifest.entries.size();

  // Ranked on the delta-free score.
  std::stable_sort(manifest.entries.begin(), manifest.entries.end(),
                   [](const SelectionEntry& a, const SelectionEntry& b) {
                     if (a.difficulty.ranking_score != b.difficulty.ranking_score) {
                       return a.difficulty.ranking_score > b.difficulty.ranking_score;
                     }
                     return a.id < b.id;
                   });
  if (manifest.entries.size() > config.top_k) manifest.entries.resize(config.top_k);
  manifest.statistics.selected = manifest.entries.size();
  return manifest;
}

}  // namespace neptune
