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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "neptune/core_model.hpp"

namespace neptune::metrics {

struct EvalImage {
  std::string id;
  std::vector<GroundTruthObject> gts;
  std::vector<Prediction> predictions;
};

struct EvalDataset {
  std::vector<std::string> categories;  ///< averaging order for mean_ap
  std::vector<EvalImage> images;
};

/// n x dim feature matrix, one sample per row.
class FeatureSet {
 public:
  /// Throws ValidationError when n < 2 or a value is not finite.
  explicit FeatureSet(Eigen::MatrixXd samples);

  Eigen::Index n() const { return samples_.rows(); }
  Eigen::Index dim() const { return samples_.cols(); }
  const Eigen::MatrixXd& samples() const { return samples_; }
  Eigen::VectorXd mean() const;
  /// Unbiased (n - 1) sample covariance.
  Eigen::MatrixXd covariance() const;

 private:
  Eigen::MatrixXd samples_;
};

/// All-point interpolated area under the precision/recall curve.
///
/// Predictions of `category` are matched per image in descending confidence
/// (one-to-one, IoU >= threshold), then ranked globally by confidence with ties
/// broken by (image order, prediction order). Returns nullopt when the
/// category has neither ground truth nor predictions; 0 when it has
/// predictions but no ground truth.
std::optional<double> average_precision(const EvalDataset& dataset, const std::string& category,
                                        double iou_threshold);

struct MapSummary {
  double map = 0.0;
  double map50 = 0.0;
  double map75 = 0.0;
};

/// 0.50, 0.55, ..., 0.95.
std::vector<double> default_iou_thresholds();

/// Mean over included categories, then over thresholds. map50 and map75 use
/// their single thresholds regardless of `iou_thresholds`.
MapSummary mean_ap(const EvalDataset& dataset,
                   std::span<const double> iou_thresholds = default_iou_thresholds());

/// Mean AP over categories at one threshold; 0 when no category is included.
double mean_ap_at(const EvalDataset& dataset, double iou_threshold);

/// Fraction of agreeing positions. Throws std::invalid_argument on length
/// mismatch or empty input.
double cas_accuracy(std::span<const std::string> predicted_labels,
                    std::span<const std::string> condition_labels);

/// Symmetric PSD square root by eigendecomposition; negative eigenvalues are
/// clamped to zero. Throws std::invalid_argument for non-square or
/// non-symmetric input (tolerance 1e-8 scaled by max(1, max|m_ij|)).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

/// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2), clamped at 0.
/// Throws std::invalid_argument on dimension mismatch.
double frechet_distance(const FeatureSet& a, const FeatureSet& b);

}  // namespace neptune::metrics
