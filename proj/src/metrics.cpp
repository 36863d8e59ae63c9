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

#include "neptune/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "neptune/matching.hpp"

namespace neptune::metrics {

FeatureSet::FeatureSet(Eigen::MatrixXd samples) : samples_(std::move(samples)) {
  if (samples_.rows() < 2) throw ValidationError("feature set needs at least 2 samples");
  if (samples_.cols() < 1) throw ValidationError("feature set has zero dimension");
  if (!samples_.allFinite()) throw ValidationError("feature set contains non-finite values");
}

Eigen::VectorXd FeatureSet::mean() const { return samples_.colwise().mean().transpose(); }

Eigen::MatrixXd FeatureSet::covariance() const {
  const Eigen::RowVectorXd mu = samples_.colwise().mean();
  const Eigen::MatrixXd centered = samples_.rowwise() - mu;
  return (centered.transpose() * centered) / static_cast<double>(samples_.rows() - 1);
}

namespace {

struct RankedDetection {
  double confidence;
  bool true_positive;
};

}  // namespace

std::optional<double> average_precision(const EvalDataset& dataset, const std::string& category,
                                        double iou_threshold) {
  std::vector<RankedDetection> detections;
  std::size_t gt_count = 0;
  std::vector<Prediction> preds;
  std::vector<GroundTruthObject> gts;
  for (const auto& image : dataset.images) {
    preds.clear();
    gts.clear();
    for (const auto& p : image.predictions) {
      if (p.category == category) preds.push_back(p);
    }
    for (const auto& g : image.gts) {
      if (g.category == category) gts.push_back(g);
    }
    gt_count += gts.size();
    const MatchResult match = match_predictions(preds, gts, iou_threshold);
    std::vector<bool> tp(preds.size(), false);
    for (const auto& pair : match.pairs) tp[pair.prediction] = true;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      detections.push_back({preds[i].confidence, tp[i]});
    }
  }
  if (gt_count == 0) {
    if (detections.empty()) return std::nullopt;
    return 0.0;
  }
  std::stable_sort(detections.begin(), detections.end(),
                   [](const RankedDetection& a, const RankedDetection& b) {
                     return a.confidence > b.confidence;
                   });

  std::vector<double> precision(detections.size());
  std::size_t tp_cum = 0;
  for (std::size_t k = 0; k < detections.size(); ++k) {
    if (detections[k].true_positive) ++tp_cum;
    precision[k] = static_cast<double>(tp_cum) / static_cast<double>(k + 1);
  }
  // Monotone envelope, then sum it at every recall step (each TP adds 1/gt_count).
  for (std::size_t k = detections.size(); k-- > 1;) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  double area = 0.0;
  for (std::size_t k = 0; k < detections.size(); ++k) {
    if (detections[k].true_positive) area += precision[k];
  }
  return area / static_cast<double>(gt_count);
}

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(static_cast<double>(50 + 5 * i) / 100.0);
  return t;
}

double mean_ap_at(const EvalDataset& dataset, double iou_threshold) {
  double sum = 0.0;
  std::size_t included = 0;
  for (const auto& c : dataset.categories) {
    if (auto ap = average_precision(dataset, c, iou_threshold)) {
      sum += *ap;
      ++included;
    }
  }
  return included == 0 ? 0.0 : sum / static_cast<double>(included);
}

MapSummary mean_ap(const EvalDataset& dataset, std::span<const double> iou_thresholds) {
  MapSummary out;
  if (!iou_thresholds.empty()) {
    double sum = 0.0;
    for (double t : iou_thresholds) sum += mean_ap_at(dataset, t);
    out.map = sum / static_cast<double>(iou_thresholds.size());
  }
  out.map50 = mean_ap_at(dataset, 0.5);
  out.map75 = mean_ap_at(dataset, 0.75);
  return out;
}

double cas_accuracy(std::span<const std::string> predicted_labels,
                    std::span<const std::string> condition_labels) {
  if (predicted_labels.size() != condition_labels.size()) {
    throw std::invalid_argument("cas_accuracy: label lists differ in length");
  }
  if (predicted_labels.empty()) throw std::invalid_argument("cas_accuracy: empty label lists");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < predicted_labels.size(); ++i) {
    if (predicted_labels[i] == condition_labels[i]) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(predicted_labels.size());
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("psd_sqrt: matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw std::invalid_argument("psd_sqrt: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) throw std::runtime_error("psd_sqrt: eigensolver failed");
  const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd r = eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (r + r.transpose());
}

double frechet_distance(const FeatureSet& a, const FeatureSet& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("frechet_distance: dimension mismatch");
  const Eigen::VectorXd diff = a.mean() - b.mean();
  const Eigen::MatrixXd cov_a = a.covariance();
  const Eigen::MatrixXd cov_b = b.covariance();
  const Eigen::MatrixXd root_a = psd_sqrt(cov_a);
  Eigen::MatrixXd inner = root_a * cov_b * root_a;
  inner = 0.5 * (inner + inner.transpose());
  const double cross = psd_sqrt(inner).trace();
  const double d = diff.squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * cross;
  return std::max(d, 0.0);
}

}  // namespace neptune::metrics
