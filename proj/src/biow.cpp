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

#include "neptune/biow.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace neptune::attn {

namespace {

constexpr double kGeluCubic = 0.044715;

RowMatrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> dist(0.0, sigma);
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

std::span<double> view(RowMatrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> view(RowVector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void append_attention(std::vector<ParameterBlock>& out, const std::string& prefix,
                      AttentionParams& p) {
  out.push_back({prefix + ".w_q", view(p.w_q)});
  out.push_back({prefix + ".w_k", view(p.w_k)});
  out.push_back({prefix + ".w_v", view(p.w_v)});
  out.push_back({prefix + ".w_out", view(p.w_out)});
}

BinaryMask to_grid(const BinaryMask& mask, std::size_t grid_w, std::size_t grid_h) {
  if (mask.width() == grid_w && mask.height() == grid_h) return mask;
  return downsample_mask(mask, grid_w, grid_h);
}

void accumulate(AttentionParams& into, const AttentionGrads& g) {
  into.w_q += g.d_w_q;
  into.w_k += g.d_w_k;
  into.w_v += g.d_w_v;
  into.w_out += g.d_w_out;
}

AttentionParams zeros_like(const AttentionParams& p) {
  AttentionParams z = p;
  z.w_q.setZero();
  z.w_k.setZero();
  z.w_v.setZero();
  z.w_out.setZero();
  return z;
}

}  // namespace

double gelu(double x) {
  const double c = std::sqrt(2.0 / std::numbers::pi);
  return 0.5 * x * (1.0 + std::tanh(c * (x + kGeluCubic * x * x * x)));
}

double gelu_derivative(double x) {
  const double c = std::sqrt(2.0 / std::numbers::pi);
  const double t = std::tanh(c * (x + kGeluCubic * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * kGeluCubic * x * x);
}

void BiowParams::validate() const {
  const std::size_t w = width();
  for (const AttentionParams* p : {&object_attn, &water_attn, &water_to_object, &object_to_water}) {
    p->validate();
    if (p->query_width() != w || p->context_width() != w) {
      throw std::invalid_argument("biow: attention blocks must be width x width");
    }
  }
  if (static_cast<std::size_t>(gates.null_obj.size()) != w ||
      static_cast<std::size_t>(gates.null_wat.size()) != w) {
    throw std::invalid_argument("biow: null embeddings must have the model width");
  }
  if (!std::isfinite(gates.beta_o) || !std::isfinite(gates.beta_w)) {
    throw std::invalid_argument("biow: gates must be finite");
  }
  if (static_cast<std::size_t>(ffn.w1.rows()) != w || ffn.b1.size() != ffn.w1.cols() ||
      ffn.w2.rows() != ffn.w1.cols() || static_cast<std::size_t>(ffn.w2.cols()) != w ||
      ffn.b2.size() != ffn.w2.cols()) {
    throw std::invalid_argument("biow: inconsistent feed-forward shapes");
  }
}

BiowParams BiowParams::init(std::size_t width, std::size_t heads, std::uint64_t seed,
                            double sigma) {
  std::mt19937_64 rng(seed);
  BiowParams p;
  p.object_attn = AttentionParams::init(width, width, width, heads, rng, sigma);
  p.water_attn = AttentionParams::init(width, width, width, heads, rng, sigma);
  p.water_to_object = AttentionParams::init(width, width, width, heads, rng, sigma);
  p.object_to_water = AttentionParams::init(width, width, width, heads, rng, sigma);
  const auto w = static_cast<Eigen::Index>(width);
  p.gates.beta_o = 0.0;
  p.gates.beta_w = 0.0;
  p.gates.null_obj = gaussian(1, w, rng, sigma);
  p.gates.null_wat = gaussian(1, w, rng, sigma);
  p.ffn.w1 = gaussian(w, 4 * w, rng, sigma);
  p.ffn.b1 = RowVector::Zero(4 * w);
  p.ffn.w2 = gaussian(4 * w, w, rng, sigma);
  p.ffn.b2 = RowVector::Zero(w);
  p.validate();
  return p;
}

std::vector<ParameterBlock> parameter_blocks(BiowParams& params) {
  std::vector<ParameterBlock> out;
  append_attention(out, "object_attn", params.object_attn);
  append_attention(out, "water_attn", params.water_attn);
  append_attention(out, "water_to_object", params.water_to_object);
  append_attention(out, "object_to_water", params.object_to_water);
  out.push_back({"beta_o", {&params.gates.beta_o, 1}});
  out.push_back({"beta_w", {&params.gates.beta_w, 1}});
  out.push_back({"null_obj", view(params.gates.null_obj)});
  out.push_back({"null_wat", view(params.gates.null_wat)});
  out.push_back({"ffn.w1", view(params.ffn.w1)});
  out.push_back({"ffn.b1", view(params.ffn.b1)});
  out.push_back({"ffn.w2", view(params.ffn.w2)});
  out.push_back({"ffn.b2", view(params.ffn.b2)});
  return out;
}

std::pair<RowMatrix, RowMatrix> bidirectional_attention(const RowMatrix& fused_objects,
                                                        const RowMatrix& fused_water,
                                                        const AttentionParams& water_to_object,
                                                        const AttentionParams& object_to_water) {
  if (fused_objects.rows() != fused_water.rows() || fused_objects.cols() != fused_water.cols()) {
    throw std::invalid_argument("bidirectional_attention: object and water grids differ");
  }
  return {cross_attention(fused_objects, fused_water, water_to_object),
          cross_attention(fused_water, fused_objects, object_to_water)};
}

BiowCache biow_forward_cached(const Tensor& input, const ConditionSet& conditions,
                              const BiowParams& params) {
  params.validate();
  const auto& shape = input.shape();
  if (shape.size() != 3 || shape[2] != params.width()) {
    throw std::invalid_argument("biow_forward: input must be (H, W, width)");
  }
  if (conditions.object_embeddings.size() != conditions.object_masks.size()) {
    throw std::invalid_argument("biow_forward: object embeddings and masks differ in count");
  }
  BiowCache c;
  c.grid_h = shape[0];
  c.grid_w = shape[1];
  c.x = input.tokens();

  c.object_masks.reserve(conditions.object_masks.size());
  for (const auto& m : conditions.object_masks) c.object_masks.push_back(to_grid(m, c.grid_w, c.grid_h));
  c.water_masks = {to_grid(conditions.water_mask, c.grid_w, c.grid_h)};

  std::vector<RowMatrix> guided;
  guided.reserve(conditions.object_embeddings.size());
  for (const auto& emb : conditions.object_embeddings) {
    c.object_attn.push_back(cross_attention_forward(c.x, emb, params.object_attn));
    guided.push_back(c.object_attn.back().out);
  }
  c.fused_objects =
      masked_fusion(guided, c.object_masks, params.gates.null_obj, c.grid_w, c.grid_h);

  c.water_attn = cross_attention_forward(c.x, conditions.water_embedding, params.water_attn);
  const std::vector<RowMatrix> water_guided = {c.water_attn.out};
  c.fused_water =
      masked_fusion(water_guided, c.water_masks, params.gates.null_wat, c.grid_w, c.grid_h);

  c.water_to_object = cross_attention_forward(c.fused_objects, c.fused_water, params.water_to_object);
  c.object_to_water = cross_attention_forward(c.fused_water, c.fused_objects, params.object_to_water);

  c.gate_o = std::tanh(params.gates.beta_o);
  c.gate_w = std::tanh(params.gates.beta_w);
  c.residual = c.x + c.gate_o * c.water_to_object.out + c.gate_w * c.object_to_water.out;

  c.hidden_pre = (c.residual * params.ffn.w1).rowwise() + params.ffn.b1;
  c.hidden = c.hidden_pre.unaryExpr(&gelu);
  c.out = (c.hidden * params.ffn.w2).rowwise() + params.ffn.b2;
  return c;
}

Tensor biow_forward(const Tensor& input, const ConditionSet& conditions, const BiowParams& params) {
  return Tensor::from_tokens(biow_forward_cached(input, conditions, params).out, input.shape());
}

BiowGrads biow_backward(const BiowCache& c, const BiowParams& params, const RowMatrix& d_out) {
  if (d_out.rows() != c.out.rows() || d_out.cols() != c.out.cols()) {
    throw std::invalid_argument("biow_backward: gradient shape mismatch");
  }
  BiowGrads g;
  BiowParams& dp = g.d_params;
  dp.object_attn = zeros_like(params.object_attn);
  dp.water_attn = zeros_like(params.water_attn);
  dp.water_to_object = zeros_like(params.water_to_object);
  dp.object_to_water = zeros_like(params.object_to_water);

  // Feed-forward.
  dp.ffn.w2 = c.hidden.transpose() * d_out;
  dp.ffn.b2 = d_out.colwise().sum();
  const RowMatrix d_hidden = d_out * params.ffn.w2.transpose();
  const RowMatrix d_pre =
      d_hidden.array() * c.hidden_pre.unaryExpr(&gelu_derivative).array();
  dp.ffn.w1 = c.residual.transpose() * d_pre;
  dp.ffn.b1 = d_pre.colwise().sum();
  const RowMatrix d_res = d_pre * params.ffn.w1.transpose();

  // Gated residual.
  g.d_input = d_res;
  dp.gates.beta_o = (1.0 - c.gate_o * c.gate_o) * (d_res.array() * c.water_to_object.out.array()).sum();
  dp.gates.beta_w = (1.0 - c.gate_w * c.gate_w) * (d_res.array() * c.object_to_water.out.array()).sum();

  // Bidirectional stage.
  const AttentionGrads g_w2o =
      cross_attention_backward(c.water_to_object, params.water_to_object, c.gate_o * d_res);
  const AttentionGrads g_o2w =
      cross_attention_backward(c.object_to_water, params.object_to_water, c.gate_w * d_res);
  accumulate(dp.water_to_object, g_w2o);
  accumulate(dp.object_to_water, g_o2w);
  const RowMatrix d_fused_objects = g_w2o.d_queries + g_o2w.d_context;
  const RowMatrix d_fused_water = g_o2w.d_queries + g_w2o.d_context;

  // Object branch.
  const FusionGrads fo = masked_fusion_backward(c.object_attn.size(), c.object_masks, c.grid_w,
                                                c.grid_h, d_fused_objects);
  dp.gates.null_obj = fo.d_null;
  g.d_object_embeddings.reserve(c.object_attn.size());
  for (std::size_t i = 0; i < c.object_attn.size(); ++i) {
    const AttentionGrads gi =
        cross_attention_backward(c.object_attn[i], params.object_attn, fo.d_features[i]);
    accumulate(dp.object_attn, gi);
    g.d_input += gi.d_queries;
    g.d_object_embeddings.push_back(gi.d_context);
  }

  // Water branch.
  const FusionGrads fw = masked_fusion_backward(1, c.water_masks, c.grid_w, c.grid_h, d_fused_water);
  dp.gates.null_wat = fw.d_null;
  const AttentionGrads gw = cross_attention_backward(c.water_attn, params.water_attn, fw.d_features[0]);
  accumulate(dp.water_attn, gw);
  g.d_input += gw.d_queries;
  g.d_water_embedding = gw.d_context;

  return g;
}

}  // namespace neptune::attn
