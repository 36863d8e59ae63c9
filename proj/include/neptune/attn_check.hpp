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

// Seeded desk-scale BiOW instances and the invariant suite run by attn-check.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "neptune/attention.hpp"
#include "neptune/biow.hpp"

namespace neptune::attn {

struct DeskSpec {
  std::size_t grid_w = 4;
  std::size_t grid_h = 4;
  std::size_t objects = 2;
  std::size_t width = 8;
  std::size_t heads = 1;
  std::size_t sequence_length = 2;
  std::size_t frequencies = 4;
  std::size_t mask_scale = 2;  ///< condition masks are drawn at mask_scale x the grid
  std::uint64_t seed = 42;
  double init_sigma = 0.02;
  double beta_o = 0.0;
  double beta_w = 0.0;

  /// Throws std::invalid_argument on zero extents or a head count that does
  /// not divide the width.
  void validate() const;
};

struct DeskInstance {
  DeskSpec spec;
  Tensor input;  ///< (grid_h, grid_w, width), standard normal
  ConditionSet conditions;
  BiowParams params;
  EmbedderParams embedder;
  std::vector<std::string> labels;  ///< one per object
  std::vector<BBox> boxes;          ///< normalized, one per object
  std::string water_label;
  BBox water_box;  ///< normalized enclosing rectangle of the water mask
};

DeskInstance make_desk_instance(const DeskSpec& spec);

/// Fresh object and water conditions drawn from `seed`, embedded with `embedder`.
ConditionSet draw_conditions(const DeskSpec& spec, const EmbedderParams& embedder,
                             std::size_t objects, std::uint64_t seed,
                             std::vector<std::string>* labels = nullptr,
                             std::vector<BBox>* boxes = nullptr, BBox* water_box = nullptr);

inline constexpr const char* kWaterLabel = "water surface";

enum class CheckStatus { kPass, kFail, kNotApplicable };

const char* status_name(CheckStatus s);

struct CheckOutcome {
  std::string name;
  CheckStatus status = CheckStatus::kPass;
  double value = 0.0;      ///< measured quantity (max deviation, max relative error)
  double tolerance = 0.0;  ///< pass bound for value; 0 means exact
  std::string detail;
};

struct AttnCheckOptions {
  double eps = 1e-5;
  double gradient_tolerance = 1e-4;
  double softmax_tolerance = 1e-6;
  /// Gates used for the gradient checks when the instance has both gates at
  /// zero, so the condition paths carry gradient.
  double gradient_beta_o = 0.5;
  double gradient_beta_w = -0.35;
  bool gradients = true;
};

struct AttnCheckReport {
  DeskSpec spec;
  std::vector<CheckOutcome> checks;

  bool passed() const;
  /// Largest value among the gradient checks (0 when none ran).
  double max_gradient_error() const;
  const CheckOutcome* find(const std::string& name) const;
};

/// softmax_normalization, mask_locality, zero_gate_identity,
/// permutation_equivariance and the gradient checks, in that order.
AttnCheckReport run_attention_checks(const DeskSpec& spec, const AttnCheckOptions& options = {});

}  // namespace neptune::attn
