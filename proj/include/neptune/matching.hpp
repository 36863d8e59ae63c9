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
#include <vector>

#include "neptune/core_model.hpp"

namespace neptune {

struct MatchedPair {
  std::size_t prediction = 0;
  std::size_t gt = 0;
  double iou = 0.0;

  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

/// Pairs are listed in the order they were claimed (descending confidence).
/// Unmatched index lists are ascending.
struct MatchResult {
  std::vector<MatchedPair> pairs;
  std::vector<std::size_t> unmatched_predictions;
  std::vector<std::size_t> unmatched_gts;
};

/// Per-box accuracy tagged with the attributes it is credited to.
struct ScoredBox {
  double accuracy = 0.0;
  std::string category;
  std::string viewpoint;
  std::string location;
  std::string environment;

  const std::string& attribute(Dimension d) const;
};

double iou(const BBox& a, const BBox& b);

/// confidence^gamma * iou^(1 - gamma), with 0^0 taken as 1.
double box_accuracy(double confidence, double iou_value, double gamma);

/// Greedy one-to-one, class-agnostic assignment. Predictions are visited by
/// descending confidence (ties by input index); each claims the unclaimed gt
/// of maximal IoU (ties by lowest gt index) when that IoU >= threshold.
MatchResult match_predictions(std::span<const Prediction> predictions,
                              std::span<const GroundTruthObject> gts, double iou_assign_threshold);

/// Scores every prediction of one image against its ground truth. Output order:
/// one box per prediction in input order, then (optionally) one per missed gt.
std::vector<ScoredBox> score_image(const ImageRecord& record,
                                   std::span<const Prediction> predictions,
                                   const EngineConfig& config);

}  // namespace neptune
