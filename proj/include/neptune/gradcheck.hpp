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
#include <string>
#include <vector>

#include "neptune/attention.hpp"
#include "neptune/biow.hpp"

namespace neptune::attn {

/// A scalar loss (sum of squared outputs) over named blocks of live values.
class DifferentiableOp {
 public:
  virtual ~DifferentiableOp() = default;
  /// Views into the inputs and parameters the loss depends on.
  virtual std::vector<ParameterBlock> blocks() = 0;
  virtual double loss() const = 0;
  /// Analytic gradient of loss(), one vector per block in blocks() order.
  virtual std::vector<std::vector<double>> analytic_gradient() const = 0;
};

struct BlockError {
  std::string name;
  std::size_t size = 0;
  double max_relative_error = 0.0;
};

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::string worst_block;
  std::vector<BlockError> blocks;
  std::size_t evaluations = 0;
};

/// Central differences on every entry of every block, compared against the
/// analytic gradient with |g_a - g_n| / max(|g_a|, |g_n|, 1e-8). Values are
/// restored after each probe. Throws std::invalid_argument when eps is outside
/// [1e-6, 1e-4] and InvariantError on non-finite gradients.
GradientCheckReport gradient_check(DifferentiableOp& op, double eps = 1e-5);

/// y = x W. Loss is quadratic, so central differences are exact up to rounding.
class LinearMapOp final : public DifferentiableOp {
 public:
  LinearMapOp(RowMatrix x, RowMatrix w) : x_(std::move(x)), w_(std::move(w)) {}
  std::vector<ParameterBlock> blocks() override;
  double loss() const override;
  std::vector<std::vector<double>> analytic_gradient() const override;

 private:
  RowMatrix x_, w_;
};

class CrossAttentionOp final : public DifferentiableOp {
 public:
  CrossAttentionOp(RowMatrix queries, RowMatrix context, AttentionParams params)
      : queries_(std::move(queries)), context_(std::move(context)), params_(std::move(params)) {}
  std::vector<ParameterBlock> blocks() override;
  double loss() const override;
  std::vector<std::vector<double>> analytic_gradient() const override;

 private:
  RowMatrix queries_, context_;
  AttentionParams params_;
};

class MaskedFusionOp final : public DifferentiableOp {
 public:
  MaskedFusionOp(std::vector<RowMatrix> features, std::vector<BinaryMask> masks,
                 RowVector null_vec, std::size_t grid_w, std::size_t grid_h)
      : features_(std::move(features)), masks_(std::move(masks)), null_(std::move(null_vec)),
        grid_w_(grid_w), grid_h_(grid_h) {}
  std::vector<ParameterBlock> blocks() override;
  double loss() const override;
  std::vector<std::vector<double>> analytic_gradient() const override;

 private:
  std::vector<RowMatrix> features_;
  std::vector<BinaryMask> masks_;
  RowVector null_;
  std::size_t grid_w_, grid_h_;
};

class EmbedderOp final : public DifferentiableOp {
 public:
  EmbedderOp(std::vector<double> label_tokens, const BBox& box, EmbedderParams params)
      : label_(std::move(label_tokens)), box_{box.x1, box.y1, box.x2, box.y2},
        params_(std::move(params)) {}
  std::vector<ParameterBlock> blocks() override;
  double loss() const override;
  std::vector<std::vector<double>> analytic_gradient() const override;

 private:
  BBox box() const { return {box_[0], box_[1], box_[2], box_[3]}; }

  std::vector<double> label_;
  std::array<double, 4> box_;
  EmbedderParams params_;
};

class BiowForwardOp final : public DifferentiableOp {
 public:
  BiowForwardOp(Tensor input, ConditionSet conditions, BiowParams params)
      : input_(std::move(input)), conditions_(std::move(conditions)), params_(std::move(params)) {}
  std::vector<ParameterBlock> blocks() override;
  double loss() const override;
  std::vector<std::vector<double>> analytic_gradient() const override;

 private:
  Tensor input_;
  ConditionSet conditions_;
  BiowParams params_;
};

}  // namespace neptune::attn
