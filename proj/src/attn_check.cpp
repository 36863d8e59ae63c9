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

#include "neptune/attn_check.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <memory>
#include <random>
#include <stdexcept>

#include "neptune/gradcheck.hpp"
#include "neptune/synth.hpp"

namespace neptune::attn {

namespace {

constexpr std::array<const char*, 5> kDeskLabels = {"ship", "buoy", "person", "floating_object",
                                                    "fixed_object"};

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs_diff(const RowMatrix& a, const RowMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

double softmax_deviation(const AttentionCache& c) {
  double m = 0.0;
  for (const auto& w : c.weights) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) m = std::max(m, std::abs(w.row(r).sum() - 1.0));
  }
  return m;
}

CheckOutcome make(const std::string& name, double value, double tolerance, bool ok,
                  std::string detail = {}) {
  return {name, ok ? CheckStatus::kPass : CheckStatus::kFail, value, tolerance,
          std::move(detail)};
}

template <class Fn>
CheckOutcome guarded(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {name, CheckStatus::kFail, INFINITY, 0.0, e.what()};
  }
}

CheckOutcome from_gradient(const std::string& name, const GradientCheckReport& r,
                           double tolerance, const std::string& note = {}) {
  std::string detail = "worst block " + r.worst_block;
  if (!note.empty()) detail += "; " + note;
  return make(name, r.max_relative_error, tolerance, r.max_relative_error <= tolerance, detail);
}

}  // namespace

void DeskSpec::validate() const {
  if (grid_w == 0 || grid_h == 0) throw std::invalid_argument("desk: grid extents must be positive");
  if (width == 0 || heads == 0 || width % heads != 0) {
    throw std::invalid_argument("desk: heads must divide a positive width");
  }
  if (sequence_length == 0) throw std::invalid_argument("desk: sequence_length must be >= 1");
  if (frequencies == 0) throw std::invalid_argument("desk: frequencies must be >= 1");
  if (mask_scale == 0) throw std::invalid_argument("desk: mask_scale must be >= 1");
  if (!(init_sigma > 0.0) || !std::isfinite(init_sigma)) {
    throw std::invalid_argument("desk: init_sigma must be positive");
  }
  if (!std::isfinite(beta_o) || !std::isfinite(beta_w)) {
    throw std::invalid_argument("desk: gates must be finite");
  }
}

ConditionSet draw_conditions(const DeskSpec& spec, const EmbedderParams& embedder,
                             std::size_t objects, std::uint64_t seed,
                             std::vector<std::string>* labels, std::vector<BBox>* boxes,
                             BBox* water_box) {
  const std::size_t mw = spec.grid_w * spec.mask_scale;
  const std::size_t mh = spec.grid_h * spec.mask_scale;
  std::mt19937_64 rng(seed);
  auto in = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };

  ConditionSet c;
  if (labels) labels->clear();
  if (boxes) boxes->clear();
  for (std::size_t i = 0; i < objects; ++i) {
    const std::string label = kDeskLabels[in(0, kDeskLabels.size() - 1)];
    const std::size_t x1 = in(0, mw - 1), x2 = in(x1 + 1, mw);
    const std::size_t y1 = in(0, mh - 1), y2 = in(y1 + 1, mh);
    BinaryMask mask(mw, mh);
    for (std::size_t y = y1; y < y2; ++y) {
      for (std::size_t x = x1; x < x2; ++x) mask.set(x, y, true);
    }
    const BBox box = normalize_box({double(x1), double(y1), double(x2), double(y2)},
                                   double(mw), double(mh));
    c.object_embeddings.push_back(object_embedding(label, box, embedder));
    c.object_masks.push_back(std::move(mask));
    if (labels) labels->push_back(label);
    if (boxes) boxes->push_back(box);
  }

  BinaryMask water(mw, mh);
  const std::size_t shore = in(mh / 2, mh - 1);
  std::bernoulli_distribution speckle(0.1);
  for (std::size_t y = 0; y < mh; ++y) {
    for (std::size_t x = 0; x < mw; ++x) water.set(x, y, y >= shore || speckle(rng));
  }
  const BBox wbox = normalize_box(min_enclosing_rect(water), double(mw), double(mh));
  c.water_embedding = object_embedding(kWaterLabel, wbox, embedder);
  c.water_mask = std::move(water);
  if (water_box) *water_box = wbox;
  return c;
}

DeskInstance make_desk_instance(const DeskSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> data(spec.grid_h * spec.grid_w * spec.width);
  for (auto& v : data) v = unit(rng);

  EmbedderParams embedder = EmbedderParams::init(spec.frequencies, spec.width, 2 * spec.width,
                                                 spec.width, spec.sequence_length, rng,
                                                 spec.init_sigma);
  embedder.labels = std::make_shared<PseudoLabelEmbedder>(spec.width, spec.seed);

  BiowParams params = BiowParams::init(spec.width, spec.heads, synth::splitmix64(spec.seed),
                                       spec.init_sigma);
  params.gates.beta_o = spec.beta_o;
  params.gates.beta_w = spec.beta_w;

  DeskInstance inst{spec,
                    Tensor({spec.grid_h, spec.grid_w, spec.width}, std::move(data)),
                    {},
                    std::move(params),
                    std::move(embedder),
                    {},
                    {},
                    kWaterLabel,
                    {}};
  inst.conditions = draw_conditions(spec, inst.embedder, spec.objects, spec.seed + 1,
                                    &inst.labels, &inst.boxes, &inst.water_box);
  return inst;
}

const char* status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::kPass: return "pass";
    case CheckStatus::kFail: return "fail";
    case CheckStatus::kNotApplicable: return "not applicable";
  }
  return "unknown";
}

bool AttnCheckReport::passed() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const auto& c) { return c.status == CheckStatus::kFail; });
}

double AttnCheckReport::max_gradient_error() const {
  double m = 0.0;
  for (const auto& c : checks) {
    if (c.name.rfind("gradient_", 0) == 0 && c.status != CheckStatus::kNotApplicable) {
      m = std::max(m, c.value);
    }
  }
  return m;
}

const CheckOutcome* AttnCheckReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

AttnCheckReport run_attention_checks(const DeskSpec& spec, const AttnCheckOptions& options) {
  const DeskInstance inst = make_desk_instance(spec);
  const std::size_t gw = spec.grid_w, gh = spec.grid_h;
  const BiowCache cache = biow_forward_cached(inst.input, inst.conditions, inst.params);

  AttnCheckReport report;
  report.spec = spec;

  report.checks.push_back(guarded("softmax_normalization", [&] {
    double dev = std::max({softmax_deviation(cache.water_attn),
                           softmax_deviation(cache.water_to_object),
                           softmax_deviation(cache.object_to_water)});
    for (const auto& c : cache.object_attn) dev = std::max(dev, softmax_deviation(c));
    return make("softmax_normalization", dev, options.softmax_tolerance,
                dev <= options.softmax_tolerance);
  }));

  report.checks.push_back(guarded("mask_locality", [&] {
    const auto uo = union_mask(cache.object_masks, gw, gh);
    const auto uw = union_mask(cache.water_masks, gw, gh);
    BiowParams shifted = inst.params;
    shifted.gates.null_obj.array() += 1.0;
    shifted.gates.null_wat.array() -= 0.75;
    const BiowCache moved = biow_forward_cached(inst.input, inst.conditions, shifted);

    std::size_t violations = 0;
    auto scan = [&](const std::vector<std::uint8_t>& u, const RowMatrix& before,
                    const RowMatrix& after, const RowVector& null_before,
                    const RowVector& null_after) {
      for (std::size_t t = 0; t < u.size(); ++t) {
        const auto i = static_cast<Eigen::Index>(t);
        if (u[t] == 0) {
          violations += !(before.row(i) == null_before) + !(after.row(i) == null_after);
        } else {
          violations += !(before.row(i) == after.row(i));
        }
      }
    };
    scan(uo, cache.fused_objects, moved.fused_objects, inst.params.gates.null_obj,
         shifted.gates.null_obj);
    scan(uw, cache.fused_water, moved.fused_water, inst.params.gates.null_wat,
         shifted.gates.null_wat);
    return make("mask_locality", double(violations), 0.0, violations == 0,
                std::to_string(violations) + " mismatched locations");
  }));

  report.checks.push_back(guarded("zero_gate_identity", [&] {
    if (inst.params.gates.beta_o != 0.0 || inst.params.gates.beta_w != 0.0) {
      return CheckOutcome{"zero_gate_identity", CheckStatus::kNotApplicable, 0.0, 0.0,
                          "gates are non-zero"};
    }
    const Tensor base = biow_forward(inst.input, inst.conditions, inst.params);
    double worst = 0.0;
    bool same = true;
    const std::array<std::size_t, 2> counts = {0, spec.objects + 1};
    for (std::size_t k = 0; k < counts.size(); ++k) {
      const ConditionSet other =
          draw_conditions(spec, inst.embedder, counts[k], spec.seed + 1000 + k);
      const Tensor out = biow_forward(inst.input, other, inst.params);
      same = same && bitwise_equal(base.data(), out.data());
      worst = std::max(worst, max_abs_diff(base.data(), out.data()));
    }
    return make("zero_gate_identity", worst, 0.0, same, "conditions redrawn with 0 and " +
                                                            std::to_string(spec.objects + 1) +
                                                            " objects");
  }));

  report.checks.push_back(guarded("permutation_equivariance", [&] {
    if (spec.objects < 2) {
      return make("permutation_equivariance", 0.0, 0.0, true, "fewer than two objects");
    }
    double worst = 0.0;
    bool same = true;
    for (int variant = 0; variant < 2; ++variant) {
      ConditionSet perm = inst.conditions;
      if (variant == 0) {
        std::reverse(perm.object_embeddings.begin(), perm.object_embeddings.end());
        std::reverse(perm.object_masks.begin(), perm.object_masks.end());
      } else {
        std::rotate(perm.object_embeddings.begin(), perm.object_embeddings.begin() + 1,
                    perm.object_embeddings.end());
        std::rotate(perm.object_masks.begin(), perm.object_masks.begin() + 1,
                    perm.object_masks.end());
      }
      const BiowCache pc = biow_forward_cached(inst.input, perm, inst.params);
      same = same && pc.fused_objects == cache.fused_objects && pc.out == cache.out;
      worst = std::max(worst, max_abs_diff(pc.fused_objects, cache.fused_objects));
    }
    return make("permutation_equivariance", worst, 0.0, same, "reversed and rotated object lists");
  }));

  if (!options.gradients) return report;

  BiowParams grad_params = inst.params;
  std::string gate_note;
  if (grad_params.gates.beta_o == 0.0 && grad_params.gates.beta_w == 0.0) {
    grad_params.gates.beta_o = options.gradient_beta_o;
    grad_params.gates.beta_w = options.gradient_beta_w;
    gate_note = "gates set to " + std::to_string(options.gradient_beta_o) + ", " +
                std::to_string(options.gradient_beta_w);
  }
  const BiowCache gcache = biow_forward_cached(inst.input, inst.conditions, grad_params);

  report.checks.push_back(guarded("gradient_cross_attention", [&] {
    const RowMatrix& ctx = inst.conditions.object_embeddings.empty()
                               ? inst.conditions.water_embedding
                               : inst.conditions.object_embeddings.front();
    CrossAttentionOp cond(gcache.x, ctx, grad_params.object_attn);
    CrossAttentionOp exchange(gcache.fused_objects, gcache.fused_water,
                              grad_params.water_to_object);
    auto a = gradient_check(cond, options.eps);
    auto b = gradient_check(exchange, options.eps);
    if (b.max_relative_error > a.max_relative_error) {
      b.worst_block = "exchange." + b.worst_block;
      return from_gradient("gradient_cross_attention", b, options.gradient_tolerance);
    }
    a.worst_block = "condition." + a.worst_block;
    return from_gradient("gradient_cross_attention", a, options.gradient_tolerance);
  }));

  report.checks.push_back(guarded("gradient_masked_fusion", [&] {
    std::vector<RowMatrix> features;
    for (const auto& c : gcache.object_attn) features.push_back(c.out);
    std::vector<BinaryMask> masks = gcache.object_masks;
    RowVector null_vec = grad_params.gates.null_obj;
    if (features.empty()) {
      features.push_back(gcache.water_attn.out);
      masks = gcache.water_masks;
      null_vec = grad_params.gates.null_wat;
    }
    MaskedFusionOp op(std::move(features), std::move(masks), std::move(null_vec), gw, gh);
    return from_gradient("gradient_masked_fusion", gradient_check(op, options.eps),
                         options.gradient_tolerance);
  }));

  report.checks.push_back(guarded("gradient_embedder", [&] {
    const std::string& label = inst.labels.empty() ? inst.water_label : inst.labels.front();
    const BBox& box = inst.boxes.empty() ? inst.water_box : inst.boxes.front();
    EmbedderOp op(inst.embedder.labels->embed(label), box, inst.embedder);
    return from_gradient("gradient_embedder", gradient_check(op, options.eps),
                         options.gradient_tolerance);
  }));

  report.checks.push_back(guarded("gradient_biow_forward", [&] {
    BiowForwardOp op(inst.input, inst.conditions, grad_params);
    return from_gradient("gradient_biow_forward", gradient_check(op, options.eps),
                         options.gradient_tolerance, gate_note);
  }));

  return report;
}

}  // namespace neptune::attn
