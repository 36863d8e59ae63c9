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

#include "neptune/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace neptune {

const std::string& ScoredBox::attribute(Dimension d) const {
  switch (d) {
    case Dimension::kCategory:
      return category;
    case Dimension::kViewpoint:
      return viewpoint;
    case Dimension::kLocation:
      return location;
    case Dimension::kEnvironment:
      return environment;
  }
  return category;
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double box_accuracy(double confidence, double iou_value, double gamma) {
  // std::pow(0, 0) == 1, so gamma = 0 and gamma = 1 reduce exactly to IoU and confidence.
  const double acc = std::pow(confidence, gamma) * std::pow(iou_value, 1.0 - gamma);
  return std::clamp(acc, 0.0, 1.0);
}

MatchResult match_predictions(std::span<const Prediction> predictions,
                              std::span<const GroundTruthObject> gts,
                              double iou_assign_threshold) {
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].confidence > predictions[b].confidence;
  });

  MatchResult result;
  std::vector<bool> gt_taken(gts.size(), false);
  std::vector<bool> pred_taken(predictions.size(), false);
  for (std::size_t p : order) {
    std::size_t best = gts.size();
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g]) continue;
      const double v = iou(predictions[p].bbox, gts[g].bbox);
      if (v > best_iou) {
        best_iou = v;
        best = g;
      }
    }
    if (best < gts.size() && best_iou >= iou_assign_threshold) {
      gt_taken[best] = true;
      pred_taken[p] = true;
      result.pairs.push_back({p, best, best_iou});
    }
  }
  for (std::size_t p = 0; p < predictions.size(); ++p) {
    if (!pred_taken[p]) result.unmatched_predictions.push_back(p);
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!gt_taken[g]) result.unmatched_gts.push_back(g);
  }
  return result;
}

std::vector<ScoredBox> score_image(const ImageRecord& record,
                                   std::span<const Prediction> predictions,
                                   const EngineConfig& config) {
  const MatchResult match =
      match_predictions(predictions, record.objects, config.iou_assign_threshold);

  auto tagged = [&](double acc, const std::string& category) {
    return ScoredBox{acc, category, record.viewpoint, record.location, record.environment};
  };

  std::vector<const MatchedPair*> by_prediction(predictions.size(), nullptr);
  for (const auto& pair : match.pairs) by_prediction[pair.prediction] = &pair;

  std::vector<ScoredBox> out;
  out.reserve(predictions.size() + (config.include_missed_gt ? match.unmatched_gts.size() : 0));
  for (std::size_t p = 0; p < predictions.size(); ++p) {
    if (const MatchedPair* pair = by_prediction[p]) {
      out.push_back(tagged(box_accuracy(predictions[p].confidence, pair->iou, config.gamma),
                           record.objects[pair->gt].category));
    } else {
      out.push_back(tagged(0.0, predictions[p].category));
    }
  }
  if (config.include_missed_gt) {
    for (std::size_t g : match.unmatched_gts) out.push_back(tagged(0.0, record.objects[g].category));
  }
  return out;
}

}  // namespace neptune
