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

#include "neptune/attention.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace neptune::attn {

namespace {

RowMatrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> dist(0.0, sigma);
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void softmax_rows(RowMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double peak = row.maxCoeff();
    row = (row.array() - peak).exp().matrix();
    row /= row.sum();
  }
}

}  // namespace

// --- Tensor -----------------------------------------------------------------

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty()) throw std::invalid_argument("tensor shape is empty");
  std::size_t n = 1;
  for (std::size_t e : shape_) {
    if (e == 0) throw std::invalid_argument("tensor extent is zero");
    n *= e;
  }
  if (n != data_.size()) {
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape (" + std::to_string(n) + ")");
  }
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
    throw std::invalid_argument("tensor contains non-finite values");
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                  std::multiplies<>());
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::from_tokens(const RowMatrix& tokens, std::vector<std::size_t> shape) {
  if (shape.empty() || shape.back() != static_cast<std::size_t>(tokens.cols())) {
    throw std::invalid_argument("from_tokens: last extent must equal the token width");
  }
  return Tensor(std::move(shape), std::vector<double>(tokens.data(), tokens.data() + tokens.size()));
}

RowMatrix Tensor::tokens() const {
  const auto cols = static_cast<Eigen::Index>(shape_.back());
  const auto rows = static_cast<Eigen::Index>(data_.size()) / cols;
  return Eigen::Map<const RowMatrix>(data_.data(), rows, cols);
}

// --- cross-attention --------------------------------------------------------

void AttentionParams::validate() const {
  if (w_q.cols() == 0 || w_q.rows() == 0) throw std::invalid_argument("attention: empty w_q");
  if (w_k.cols() != w_q.cols() || w_v.cols() != w_q.cols()) {
    throw std::invalid_argument("attention: q/k/v inner widths differ");
  }
  if (w_k.rows() != w_v.rows()) throw std::invalid_argument("attention: k/v context widths differ");
  if (w_out.rows() != w_q.cols() || w_out.cols() != w_q.rows()) {
    throw std::invalid_argument("attention: w_out must be inner_width x query_width");
  }
  if (heads == 0 || inner_width() % heads != 0) {
    throw std::invalid_argument("attention: heads must divide inner_width");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("attention: lambda must be positive");
  }
}

AttentionParams AttentionParams::init(std::size_t query_width, std::size_t context_width,
                                      std::size_t inner_width, std::size_t heads,
                                      std::mt19937_64& rng, double sigma) {
  AttentionParams p;
  const auto qw = static_cast<Eigen::Index>(query_width);
  const auto cw = static_cast<Eigen::Index>(context_width);
  const auto iw = static_cast<Eigen::Index>(inner_width);
  p.w_q = gaussian(qw, iw, rng, sigma);
  p.w_k = gaussian(cw, iw, rng, sigma);
  p.w_v = gaussian(cw, iw, rng, sigma);
  p.w_out = gaussian(iw, qw, rng, sigma);
  p.heads = heads;
  p.lambda = heads == 0 ? 1.0 : std::sqrt(static_cast<double>(inner_width / heads));
  p.validate();
  return p;
}

AttentionCache cross_attention_forward(const RowMatrix& queries, const RowMatrix& context,
                                       const AttentionParams& params) {
  params.validate();
  if (static_cast<std::size_t>(queries.cols()) != params.query_width()) {
    throw std::invalid_argument("cross_attention: query width " + std::to_string(queries.cols()) +
                                " != " + std::to_string(params.query_width()));
  }
  if (static_cast<std::size_t>(context.cols()) != params.context_width()) {
    throw std::invalid_argument("cross_attention: context width " +
                                std::to_string(context.cols()) + " != " +
                                std::to_string(params.context_width()));
  }
  if (queries.rows() == 0 || context.rows() == 0) {
    throw std::invalid_argument("cross_attention: empty token sequence");
  }

  AttentionCache c;
  c.queries = queries;
  c.context = context;
  c.q = queries * params.w_q;
  c.k = context * params.w_k;
  c.v = context * params.w_v;
  const auto head_width = static_cast<Eigen::Index>(params.inner_width() / params.heads);
  c.attended.resize(queries.rows(), c.q.cols());
  c.weights.resize(params.heads);
  for (std::size_t h = 0; h < params.heads; ++h) {
    const Eigen::Index off = static_cast<Eigen::Index>(h) * head_width;
    RowMatrix logits = c.q.middleCols(off, head_width) * c.k.middleCols(off, head_width).transpose();
    logits /= params.lambda;
    softmax_rows(logits);
    c.attended.middleCols(off, head_width) = logits * c.v.middleCols(off, head_width);
    c.weights[h] = std::move(logits);
  }
  c.out = c.attended * params.w_out;
  return c;
}

RowMatrix cross_attention(const RowMatrix& queries, const RowMatrix& context,
                          const AttentionParams& params) {
  return cross_attention_forward(queries, context, params).out;
}

Tensor cross_attention(const Tensor& queries, const RowMatrix& context,
                       const AttentionParams& params) {
  return Tensor::from_tokens(cross_attention(queries.tokens(), context, params), queries.shape());
}

AttentionGrads cross_attention_backward(const AttentionCache& c, const AttentionParams& params,
                                        const RowMatrix& d_out) {
  if (d_out.rows() != c.out.rows() || d_out.cols() != c.out.cols()) {
    throw std::invalid_argument("cross_attention_backward: gradient shape mismatch");
  }
  AttentionGrads g;
  g.d_w_out = c.attended.transpose() * d_out;
  const RowMatrix d_attended = d_out * params.w_out.transpose();

  RowMatrix dq(c.q.rows(), c.q.cols());
  RowMatrix dk(c.k.rows(), c.k.cols());
  RowMatrix dv(c.v.rows(), c.v.cols());
  const auto head_width = static_cast<Eigen::Index>(params.inner_width() / params.heads);
  for (std::size_t h = 0; h < params.heads; ++h) {
    const Eigen::Index off = static_cast<Eigen::Index>(h) * head_width;
    const RowMatrix& a = c.weights[h];
    const auto d_att = d_attended.middleCols(off, head_width);
    dv.middleCols(off, head_width) = a.transpose() * d_att;
    const RowMatrix d_a = d_att * c.v.middleCols(off, head_width).transpose();
    // Softmax Jacobian per row: a * (d_a - <d_a, a>).
    const Eigen::VectorXd inner = (d_a.array() * a.array()).rowwise().sum();
    RowMatrix d_logits = a.array() * (d_a.colwise() - inner).array();
    d_logits /= params.lambda;
    dq.middleCols(off, head_width) = d_logits * c.k.middleCols(off, head_width);
    dk.middleCols(off, head_width) = d_logits.transpose() * c.q.middleCols(off, head_width);
  }
  g.d_w_q = c.queries.transpose() * dq;
  g.d_w_k = c.context.transpose() * dk;
  g.d_w_v = c.context.transpose() * dv;
  g.d_queries = dq * params.w_q.transpose();
  g.d_context = dk * params.w_k.transpose() + dv * params.w_v.transpose();
  return g;
}

// --- masked fusion -----------------------------------------------------------

std::vector<std::uint8_t> union_mask(std::span<const BinaryMask> masks, std::size_t grid_w,
                                     std::size_t grid_h) {
  std::vector<std::uint8_t> out(grid_w * grid_h, 0);
  for (const auto& m : masks) {
    if (m.width() != grid_w || m.height() != grid_h) {
      throw std::invalid_argument("mask extent " + std::to_string(m.width()) + "x" +
                                  std::to_string(m.height()) + " does not match grid " +
                                  std::to_string(grid_w) + "x" + std::to_string(grid_h));
    }
    const auto& bits = m.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] |= bits[i];
  }
  return out;
}

RowMatrix masked_fusion(std::span<const RowMatrix> features, std::span<const BinaryMask> masks,
                        const RowVector& null_vec, std::size_t grid_w, std::size_t grid_h) {
  const auto tokens = static_cast<Eigen::Index>(grid_w * grid_h);
  const Eigen::Index width = null_vec.size();
  if (features.size() != masks.size()) {
    throw std::invalid_argument("masked_fusion: feature and mask counts differ");
  }
  for (const auto& f : features) {
    if (f.rows() != tokens || f.cols() != width) {
      throw std::invalid_argument("masked_fusion: feature shape does not match the grid");
    }
  }
  const auto region = union_mask(masks, grid_w, grid_h);

  RowMatrix out(tokens, width);
  std::vector<double> terms(features.size());
  for (Eigen::Index t = 0; t < tokens; ++t) {
    if (!region[t]) {
      out.row(t) = null_vec;
      continue;
    }
    for (Eigen::Index ch = 0; ch < width; ++ch) {
      for (std::size_t i = 0; i < features.size(); ++i) terms[i] = features[i](t, ch);
      std::sort(terms.begin(), terms.end());
      double sum = 0.0;
      for (double v : terms) sum += v;
      out(t, ch) = sum;
    }
  }
  return out;
}

FusionGrads masked_fusion_backward(std::size_t feature_count, std::span<const BinaryMask> masks,
                                   std::size_t grid_w, std::size_t grid_h,
                                   const RowMatrix& d_out) {
  const auto tokens = static_cast<Eigen::Index>(grid_w * grid_h);
  if (d_out.rows() != tokens) throw std::invalid_argument("masked_fusion_backward: bad gradient");
  const auto region = union_mask(masks, grid_w, grid_h);
  FusionGrads g;
  RowMatrix passed = d_out;
  g.d_null = RowVector::Zero(d_out.cols());
  for (Eigen::Index t = 0; t < tokens; ++t) {
    if (region[t]) continue;
    g.d_null += d_out.row(t);
    passed.row(t).setZero();
  }
  g.d_features.assign(feature_count, passed);
  return g;
}

// --- geometry ---------------------------------------------------------------

BinaryMask downsample_mask(const BinaryMask& mask, std::size_t grid_w, std::size_t grid_h) {
  if (grid_w == 0 || grid_h == 0 || grid_w > mask.width() || grid_h > mask.height()) {
    throw std::invalid_argument("downsample_mask: grid must fit inside the mask");
  }
  BinaryMask out(grid_w, grid_h);
  for (std::size_t y = 0; y < grid_h; ++y) {
    const std::size_t sy = y * mask.height() / grid_h;
    for (std::size_t x = 0; x < grid_w; ++x) {
      out.set(x, y, mask.at(x * mask.width() / grid_w, sy));
    }
  }
  return out;
}

BBox min_enclosing_rect(const BinaryMask& mask) {
  std::size_t min_x = mask.width(), min_y = mask.height(), max_x = 0, max_y = 0;
  bool any = false;
  for (std::size_t y = 0; y < mask.height(); ++y) {
    for (std::size_t x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      any = true;
      min_x = std::min(min_x, x);
      min_y = std::min(min_y, y);
      max_x = std::max(max_x, x);
      max_y = std::max(max_y, y);
    }
  }
  if (!any) throw std::invalid_argument("min_enclosing_rect: empty mask");
  return {static_cast<double>(min_x), static_cast<double>(min_y), static_cast<double>(max_x + 1),
          static_cast<double>(max_y + 1)};
}

BBox normalize_box(const BBox& box, double width, double height) {
  return {box.x1 / width, box.y1 / height, box.x2 / width, box.y2 / height};
}

// --- embedders --------------------------------------------------------------

std::vector<double> fourier_embed(const BBox& box, std::size_t frequencies) {
  const std::array<double, 4> coords = {box.x1, box.y1, box.x2, box.y2};
  std::vector<double> out;
  out.reserve(8 * frequencies);
  for (double c : coords) {
    double freq = 1.0;
    for (std::size_t k = 0; k < frequencies; ++k, freq *= 2.0) {
      const double phase = 2.0 * std::numbers::pi * freq * c;
      out.push_back(std::sin(phase));
      out.push_back(std::cos(phase));
    }
  }
  return out;
}

std::vector<double> PseudoLabelEmbedder::embed(std::string_view label) const {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : label) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::mt19937_64 rng(seed_ ^ (h + 0x9e3779b97f4a7c15ULL + (seed_ << 6) + (seed_ >> 2)));
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(width_);
  for (double& v : out) v = dist(rng);
  return out;
}

void EmbedderParams::validate() const {
  if (frequencies < 1) throw std::invalid_argument("embedder: need at least one frequency");
  if (sequence_length < 1) throw std::invalid_argument("embedder: sequence_length must be >= 1");
  if (static_cast<std::size_t>(w1.rows()) != input_width() || b1.size() != w1.cols() ||
      w2.rows() != w1.cols() ||
      static_cast<std::size_t>(w2.cols()) != sequence_length * model_width ||
      b2.size() != w2.cols()) {
    throw std::invalid_argument("embedder: inconsistent MLP shapes");
  }
}

EmbedderParams EmbedderParams::init(std::size_t frequencies, std::size_t label_width,
                                    std::size_t hidden, std::size_t model_width,
                                    std::size_t sequence_length, std::mt19937_64& rng,
                                    double sigma) {
  EmbedderParams p;
  p.frequencies = frequencies;
  p.label_width = label_width;
  p.model_width = model_width;
  p.sequence_length = sequence_length;
  const auto h = static_cast<Eigen::Index>(hidden);
  const auto out = static_cast<Eigen::Index>(sequence_length * model_width);
  p.w1 = gaussian(static_cast<Eigen::Index>(p.input_width()), h, rng, sigma);
  p.b1 = RowVector::Zero(h);
  p.w2 = gaussian(h, out, rng, sigma);
  p.b2 = RowVector::Zero(out);
  p.validate();
  return p;
}

namespace {

RowVector embedder_input(std::span<const double> label_tokens, const BBox& box,
                         const EmbedderParams& params) {
  if (label_tokens.size() != params.label_width) {
    throw std::invalid_argument("object_embedding: label width " +
                                std::to_string(label_tokens.size()) + " != " +
                                std::to_string(params.label_width));
  }
  const auto pos = fourier_embed(box, params.frequencies);
  RowVector z(static_cast<Eigen::Index>(params.input_width()));
  for (std::size_t i = 0; i < pos.size(); ++i) z[static_cast<Eigen::Index>(i)] = pos[i];
  for (std::size_t i = 0; i < label_tokens.size(); ++i) {
    z[static_cast<Eigen::Index>(pos.size() + i)] = label_tokens[i];
  }
  return z;
}

}  // namespace

RowMatrix object_embedding(std::span<const double> label_tokens, const BBox& box,
                           const EmbedderParams& params) {
  params.validate();
  const RowVector z = embedder_input(label_tokens, box, params);
  const RowVector pre = z * params.w1 + params.b1;
  const RowVector hidden = pre.unaryExpr([](double x) { return x * sigmoid(x); });
  const RowVector flat = hidden * params.w2 + params.b2;
  return Eigen::Map<const RowMatrix>(flat.data(), static_cast<Eigen::Index>(params.sequence_length),
                                     static_cast<Eigen::Index>(params.model_width));
}

RowMatrix object_embedding(std::string_view label, const BBox& box, const EmbedderParams& params) {
  if (!params.labels) throw std::invalid_argument("object_embedding: no label embedder set");
  const auto tokens = params.labels->embed(label);
  return object_embedding(tokens, box, params);
}

EmbedderGrads object_embedding_backward(std::span<const double> label_tokens, const BBox& box,
                                        const EmbedderParams& params, const RowMatrix& d_out) {
  params.validate();
  if (static_cast<std::size_t>(d_out.rows()) != params.sequence_length ||
      static_cast<std::size_t>(d_out.cols()) != params.model_width) {
    throw std::invalid_argument("object_embedding_backward: gradient shape mismatch");
  }
  const RowVector z = embedder_input(label_tokens, box, params);
  const RowVector pre = z * params.w1 + params.b1;
  const RowVector hidden = pre.unaryExpr([](double x) { return x * sigmoid(x); });
  const RowVector d_flat = Eigen::Map<const RowVector>(d_out.data(), d_out.size());

  EmbedderGrads g;
  g.d_w2 = hidden.transpose() * d_flat;
  g.d_b2 = d_flat;
  const RowVector d_hidden = d_flat * params.w2.transpose();
  const RowVector d_pre = d_hidden.array() * pre.unaryExpr([](double x) {
                                               const double s = sigmoid(x);
                                               return s * (1.0 + x * (1.0 - s));
                                             }).array();
  g.d_w1 = z.transpose() * d_pre;
  g.d_b1 = d_pre;
  const RowVector d_z = d_pre * params.w1.transpose();

  const std::array<double, 4> coords = {box.x1, box.y1, box.x2, box.y2};
  std::size_t idx = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    double freq = 1.0;
    for (std::size_t k = 0; k < params.frequencies; ++k, freq *= 2.0) {
      const double omega = 2.0 * std::numbers::pi * freq;
      const double phase = omega * coords[c];
      g.d_box[c] += d_z[static_cast<Eigen::Index>(idx)] * omega * std::cos(phase);
      g.d_box[c] -= d_z[static_cast<Eigen::Index>(idx + 1)] * omega * std::sin(phase);
      idx += 2;
    }
  }
  g.d_label_tokens.resize(params.label_width);
  for (std::size_t i = 0; i < params.label_width; ++i) {
    g.d_label_tokens[i] = d_z[static_cast<Eigen::Index>(8 * params.frequencies + i)];
  }
  return g;
}

}  // namespace neptune::attn
