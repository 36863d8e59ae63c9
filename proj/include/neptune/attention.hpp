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

// Building blocks of the object/water attention module: dense tensors,
// scaled dot-product cross-attention, masked fusion with null embeddings and
// the layout condition embedders. Every differentiable block has a forward
// pass that records a cache and a backward pass that consumes it.
//
// Token matrices are row-major, one token per row. A feature grid of extent
// (H, W, C) maps to an (H*W) x C token matrix with token index y * W + x,
// matching BinaryMask's row-major layout.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "neptune/core_model.hpp"

namespace neptune::attn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

/// Dense row-major array with explicit shape.
class Tensor {
 public:
  Tensor() = default;
  /// Throws std::invalid_argument when an extent is zero, data.size() does not
  /// match the shape, or a value is not finite.
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::vector<std::size_t> shape);
  /// Wraps a token matrix into `shape`; the last extent must equal tokens.cols().
  static Tensor from_tokens(const RowMatrix& tokens, std::vector<std::size_t> shape);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  /// Leading extents flattened into rows, last extent as columns.
  RowMatrix tokens() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Projections of one cross-attention block. Queries come from a
/// query_width-wide stream, keys and values from a context_width-wide one.
struct AttentionParams {
  RowMatrix w_q;    ///< query_width x inner_width
  RowMatrix w_k;    ///< context_width x inner_width
  RowMatrix w_v;    ///< context_width x inner_width
  RowMatrix w_out;  ///< inner_width x query_width
  std::size_t heads = 1;
  double lambda = 1.0;  ///< logits are divided by lambda

  std::size_t query_width() const { return static_cast<std::size_t>(w_q.rows()); }
  std::size_t context_width() const { return static_cast<std::size_t>(w_k.rows()); }
  std::size_t inner_width() const { return static_cast<std::size_t>(w_q.cols()); }

  /// Throws std::invalid_argument on inconsistent shapes, lambda <= 0 or a
  /// head count that does not divide inner_width.
  void validate() const;

  /// Gaussian(0, sigma) weights; lambda = sqrt(inner_width / heads).
  static AttentionParams init(std::size_t query_width, std::size_t context_width,
                              std::size_t inner_width, std::size_t heads, std::mt19937_64& rng,
                              double sigma);
};

struct AttentionCache {
  RowMatrix queries;
  RowMatrix context;
  RowMatrix q, k, v;
  std::vector<RowMatrix> weights;  ///< per head, n_queries x n_keys, rows sum to 1
  RowMatrix attended;              ///< softmax(q k^T / lambda) v, heads concatenated
  RowMatrix out;                   ///< attended * w_out
};

struct AttentionGrads {
  RowMatrix d_queries;
  RowMatrix d_context;
  RowMatrix d_w_q, d_w_k, d_w_v, d_w_out;
};

/// softmax(Q K^T / lambda) V W_out with Q = queries W_q, K = context W_k,
/// V = context W_v. Softmax runs over the key axis. Throws
/// std::invalid_argument on width mismatch.
AttentionCache cross_attention_forward(const RowMatrix& queries, const RowMatrix& context,
                                       const AttentionParams& params);
RowMatrix cross_attention(const RowMatrix& queries, const RowMatrix& context,
                          const AttentionParams& params);
/// Tensor overload: leading extents of `queries` are flattened.
Tensor cross_attention(const Tensor& queries, const RowMatrix& context,
                       const AttentionParams& params);
AttentionGrads cross_attention_backward(const AttentionCache& cache, const AttentionParams& params,
                                        const RowMatrix& d_out);

/// Elementwise OR of masks that share the (grid_w, grid_h) extent.
/// Throws std::invalid_argument on extent mismatch.
std::vector<std::uint8_t> union_mask(std::span<const BinaryMask> masks, std::size_t grid_w,
                                     std::size_t grid_h);

/// F = (sum_i f_i) * M + null * (1 - M), M = union of masks, applied per token.
/// Features are (grid_w * grid_h) x C. Per-token sums are accumulated in
/// ascending value order, so the result does not depend on the order of the
/// conditions. With no features the output is `null` everywhere. Throws
/// std::invalid_argument when feature and mask counts differ.
RowMatrix masked_fusion(std::span<const RowMatrix> features, std::span<const BinaryMask> masks,
                        const RowVector& null_vec, std::size_t grid_w, std::size_t grid_h);

struct FusionGrads {
  std::vector<RowMatrix> d_features;
  RowVector d_null;
};

FusionGrads masked_fusion_backward(std::size_t feature_count, std::span<const BinaryMask> masks,
                                   std::size_t grid_w, std::size_t grid_h,
                                   const RowMatrix& d_out);

/// Nearest neighbour: target (x, y) samples source (x * W / grid_w, y * H / grid_h).
/// Throws std::invalid_argument when the grid is larger than the mask.
BinaryMask downsample_mask(const BinaryMask& mask, std::size_t grid_w, std::size_t grid_h);

/// Tight box around set pixels, half-open: x2 = max_col + 1.
/// Throws std::invalid_argument on an empty mask.
BBox min_enclosing_rect(const BinaryMask& mask);

/// Divides x by `width` and y by `height`.
BBox normalize_box(const BBox& box, double width, double height);

/// For each coordinate of the (normalized) box in x1, y1, x2, y2 order and each
/// frequency 2^k, k < frequencies: sin(2 pi 2^k c), cos(2 pi 2^k c).
/// Length 8 * frequencies.
std::vector<double> fourier_embed(const BBox& box, std::size_t frequencies);

/// Source of label embeddings for the condition embedders.
class LabelEmbedder {
 public:
  virtual ~LabelEmbedder() = default;
  virtual std::size_t width() const = 0;
  virtual std::vector<double> embed(std::string_view label) const = 0;
};

/// Deterministic stand-in for a text encoder: Gaussian(0, 1) values drawn from
/// a generator keyed by (seed, FNV-1a hash of the label).
class PseudoLabelEmbedder final : public LabelEmbedder {
 public:
  PseudoLabelEmbedder(std::size_t width, std::uint64_t seed) : width_(width), seed_(seed) {}
  std::size_t width() const override { return width_; }
  std::vector<double> embed(std::string_view label) const override;

 private:
  std::size_t width_;
  std::uint64_t seed_;
};

/// Two-layer MLP over [fourier(box); label] producing sequence_length tokens of
/// model_width: out = silu(z W1 + b1) W2 + b2, reshaped row-major.
struct EmbedderParams {
  std::size_t frequencies = 8;
  std::size_t label_width = 0;
  std::size_t model_width = 0;
  std::size_t sequence_length = 1;
  RowMatrix w1;  ///< (8 * frequencies + label_width) x hidden
  RowVector b1;
  RowMatrix w2;  ///< hidden x (sequence_length * model_width)
  RowVector b2;
  std::shared_ptr<const LabelEmbedder> labels;

  std::size_t input_width() const { return 8 * frequencies + label_width; }
  void validate() const;

  static EmbedderParams init(std::size_t frequencies, std::size_t label_width,
                             std::size_t hidden, std::size_t model_width,
                             std::size_t sequence_length, std::mt19937_64& rng, double sigma);
};

struct EmbedderGrads {
  std::vector<double> d_label_tokens;
  std::array<double, 4> d_box{};  ///< x1, y1, x2, y2 of the normalized box
  RowMatrix d_w1;
  RowVector d_b1;
  RowMatrix d_w2;
  RowVector d_b2;
};

/// Condition tokens for one (label, box) pair; `box` is normalized to [0,1].
/// Throws std::invalid_argument when label_tokens.size() != label_width.
RowMatrix object_embedding(std::span<const double> label_tokens, const BBox& box,
                           const EmbedderParams& params);
/// Looks the label up through params.labels. Throws std::invalid_argument when unset.
RowMatrix object_embedding(std::string_view label, const BBox& box, const EmbedderParams& params);
EmbedderGrads object_embedding_backward(std::span<const double> label_tokens, const BBox& box,
                                        const EmbedderParams& params, const RowMatrix& d_out);

}  // namespace neptune::attn
