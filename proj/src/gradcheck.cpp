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

#include "neptune/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace neptune::attn {

namespace {

std::span<double> view(RowMatrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> view(RowVector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

template <class M>
std::vector<double> flat(const M& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

double squared_sum(const RowMatrix& m) { return m.squaredNorm(); }

}  // namespace

GradientCheckReport gradient_check(DifferentiableOp& op, double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-4)) {
    throw std::invalid_argument("gradient_check: eps must lie in [1e-6, 1e-4]");
  }
  auto blocks = op.blocks();
  const auto analytic = op.analytic_gradient();
  if (analytic.size() != blocks.size()) {
    throw InvariantError("gradient_check: analytic gradient has the wrong block count");
  }

  GradientCheckReport report;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto values = blocks[b].values;
    if (analytic[b].size() != values.size()) {
      throw InvariantError("gradient_check: block '" + blocks[b].name + "' size mismatch");
    }
    BlockError be{blocks[b].name, values.size(), 0.0};
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = op.loss();
      values[i] = saved - eps;
      const double down = op.loss();
      values[i] = saved;
      report.evaluations += 2;

      const double numeric = (up - down) / (2.0 * eps);
      const double exact = analytic[b][i];
      if (!std::isfinite(numeric) || !std::isfinite(exact)) {
        throw InvariantError("gradient_check: non-finite gradient in '" + blocks[b].name + "'");
      }
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
      be.max_relative_error = std::max(be.max_relative_error, std::abs(exact - numeric) / denom);
    }
    if (report.worst_block.empty() || be.max_relative_error > report.max_relative_error) {
      report.max_relative_error = be.max_relative_error;
      report.worst_block = be.name;
    }
    report.blocks.push_back(std::move(be));
  }
  return report;
}

// --- LinearMapOp ------------------------------------------------------------

std::vector<ParameterBlock> LinearMapOp::blocks() { return {{"x", view(x_)}, {"w", view(w_)}}; }

double LinearMapOp::loss() const { return squared_sum(x_ * w_); }

std::vector<std::vector<double>> LinearMapOp::analytic_gradient() const {
  const RowMatrix d_out = 2.0 * (x_ * w_);
  return {flat(RowMatrix(d_out * w_.transpose())), flat(RowMatrix(x_.transpose() * d_out))};
}

// --- CrossAttentionOp -------------------------------------------------------

std::vector<ParameterBlock> CrossAttentionOp::blocks() {
  return {{"queries", view(queries_)}, {"context", view(context_)}, {"w_q", view(params_.w_q)},
          {"w_k", view(params_.w_k)},  {"w_v", view(params_.w_v)},  {"w_out", view(params_.w_out)}};
}

double CrossAttentionOp::loss() const {
  return squared_sum(cross_attention(queries_, context_, params_));
}

std::vector<std::vector<double>> CrossAttentionOp::analytic_gradient() const {
  const auto cache = cross_attention_forward(queries_, context_, params_);
  const auto g = cross_attention_backward(cache, params_, 2.0 * cache.out);
  return {flat(g.d_queries), flat(g.d_context), flat(g.d_w_q),
          flat(g.d_w_k),     flat(g.d_w_v),     flat(g.d_w_out)};
}

// --- MaskedFusionOp ---------------------------------------------------------

std::vector<ParameterBlock> MaskedFusionOp::blocks() {
  std::vector<ParameterBlock> out;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    out.push_back({"features[" + std::to_string(i) + "]", view(features_[i])});
  }
  out.push_back({"null", view(null_)});
  return out;
}

double MaskedFusionOp::loss() const {
  return squared_sum(masked_fusion(features_, masks_, null_, grid_w_, grid_h_));
}

std::vector<std::vector<double>> MaskedFusionOp::analytic_gradient() const {
  const RowMatrix out = masked_fusion(features_, masks_, null_, grid_w_, grid_h_);
  const auto g = masked_fusion_backward(features_.size(), masks_, grid_w_, grid_h_, 2.0 * out);
  std::vector<std::vector<double>> result;
  for (const auto& d : g.d_features) result.push_back(flat(d));
  result.push_back(flat(g.d_null));
  return result;
}

// --- EmbedderOp -------------------------------------------------------------

std::vector<ParameterBlock> EmbedderOp::blocks() {
  return {{"label_tokens", {label_.data(), label_.size()}},
          {"box", {box_.data(), box_.size()}},
          {"w1", view(params_.w1)},
          {"b1", view(params_.b1)},
          {"w2", view(params_.w2)},
          {"b2", view(params_.b2)}};
}

double EmbedderOp::loss() const { return squared_sum(object_embedding(label_, box(), params_)); }

std::vector<std::vector<double>> EmbedderOp::analytic_gradient() const {
  const RowMatrix out = object_embedding(label_, box(), params_);
  const auto g = object_embedding_backward(label_, box(), params_, 2.0 * out);
  return {g.d_label_tokens, std::vector<double>(g.d_box.begin(), g.d_box.end()),
          flat(g.d_w1),     flat(g.d_b1),
          flat(g.d_w2),     flat(g.d_b2)};
}

// --- BiowForwardOp ----------------------------------------------------------

std::vector<ParameterBlock> BiowForwardOp::blocks() {
  std::vector<ParameterBlock> out;
  auto data = input_.data();
  out.push_back({"input", data});
  for (std::size_t i = 0; i < conditions_.object_embeddings.size(); ++i) {
    out.push_back({"object_embedding[" + std::to_string(i) + "]",
                   view(conditions_.object_embeddings[i])});
  }
  out.push_back({"water_embedding", view(conditions_.water_embedding)});
  auto params = parameter_blocks(params_);
  out.insert(out.end(), params.begin(), params.end());
  return out;
}

double BiowForwardOp::loss() const {
  return squared_sum(biow_forward_cached(input_, conditions_, params_).out);
}

std::vector<std::vector<double>> BiowForwardOp::analytic_gradient() const {
  const auto cache = biow_forward_cached(input_, conditions_, params_);
  auto g = biow_backward(cache, params_, 2.0 * cache.out);
  std::vector<std::vector<double>> result;
  result.push_back(flat(g.d_input));
  for (const auto& d : g.d_object_embeddings) result.push_back(flat(d));
  result.push_back(flat(g.d_water_embedding));
  for (const auto& block : parameter_blocks(g.d_params)) {
    result.emplace_back(block.values.begin(), block.values.end());
  }
  return result;
}

}  // namespace neptune::attn
