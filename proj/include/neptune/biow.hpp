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

// Bidirectional object/water attention.
//
//   X    = tokens(F_in)
//   f_i  = CA_obj(X, C_o^i)                     one per object
//   F_o  = fuse({f_i}, {M_o^i}, null_obj)
//   F_w  = fuse({CA_wat(X, C_w)}, {M_w}, null_wat)
//   F'_o = CA_w2o(F_o, F_w)                     object queries, water keys
//   F'_w = CA_o2w(F_w, F_o)                     water queries, object keys
//   R    = X + tanh(beta_o) F'_o + tanh(beta_w) F'_w
//   out  = gelu(R W1 + b1) W2 + b2
//
// With beta_o = beta_w = 0 the conditions cannot influence the output.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "neptune/attention.hpp"

namespace neptune::attn {

/// Position-wise feed-forward block, hidden width 4x the model width.
struct FeedForwardParams {
  RowMatrix w1;  ///< width x hidden
  RowVector b1;
  RowMatrix w2;  ///< hidden x width
  RowVector b2;
};

struct GateAndNulls {
  double beta_o = 0.0;
  double beta_w = 0.0;
  RowVector null_obj;
  RowVector null_wat;
};

struct BiowParams {
  AttentionParams object_attn;
  AttentionParams water_attn;
  AttentionParams water_to_object;  ///< produces F'_o
  AttentionParams object_to_water;  ///< produces F'_w
  GateAndNulls gates;
  FeedForwardParams ffn;

  std::size_t width() const { return object_attn.query_width(); }
  /// Throws std::invalid_argument on inconsistent shapes.
  void validate() const;

  /// Gaussian(0, sigma) weights and null embeddings, zero biases, zero gates.
  static BiowParams init(std::size_t width, std::size_t heads, std::uint64_t seed,
                         double sigma = 0.02);
};

/// Named view of a contiguous block of doubles.
struct ParameterBlock {
  std::string name;
  std::span<double> values;
};

/// Every learnable block in a fixed order. Works on gradient holders too.
std::vector<ParameterBlock> parameter_blocks(BiowParams& params);

struct ConditionSet {
  std::vector<RowMatrix> object_embeddings;  ///< each L x width
  std::vector<BinaryMask> object_masks;
  RowMatrix water_embedding;  ///< L x width
  BinaryMask water_mask;
};

/// F'_o = CA(F_o, F_w; water_to_object), F'_w = CA(F_w, F_o; object_to_water),
/// both from the same inputs.
std::pair<RowMatrix, RowMatrix> bidirectional_attention(const RowMatrix& fused_objects,
                                                        const RowMatrix& fused_water,
                                                        const AttentionParams& water_to_object,
                                                        const AttentionParams& object_to_water);

struct BiowCache {
  std::size_t grid_h = 0, grid_w = 0;
  RowMatrix x;
  std::vector<BinaryMask> object_masks;  ///< on the feature grid
  std::vector<BinaryMask> water_masks;   ///< single entry, on the feature grid
  std::vector<AttentionCache> object_attn;
  AttentionCache water_attn;
  RowMatrix fused_objects;  ///< F_o
  RowMatrix fused_water;    ///< F_w
  AttentionCache water_to_object;
  AttentionCache object_to_water;
  double gate_o = 0.0, gate_w = 0.0;  ///< tanh(beta)
  RowMatrix residual;                 ///< R
  RowMatrix hidden_pre;               ///< R W1 + b1
  RowMatrix hidden;                   ///< gelu(hidden_pre)
  RowMatrix out;
};

/// `input` has shape (H, W, width). Condition masks larger than the grid are
/// downsampled with downsample_mask. Throws std::invalid_argument on shape errors.
BiowCache biow_forward_cached(const Tensor& input, const ConditionSet& conditions,
                              const BiowParams& params);
Tensor biow_forward(const Tensor& input, const ConditionSet& conditions, const BiowParams& params);

struct BiowGrads {
  RowMatrix d_input;  ///< token layout of the input
  std::vector<RowMatrix> d_object_embeddings;
  RowMatrix d_water_embedding;
  BiowParams d_params;
};

BiowGrads biow_backward(const BiowCache& cache, const BiowParams& params,
                        const RowMatrix& d_out);

double gelu(double x);
double gelu_derivative(double x);

}  // namespace neptune::attn
