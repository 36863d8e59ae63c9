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

#include "neptune/atdf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace neptune {

AtdfState::AtdfState(AttributeTaxonomy taxonomy, const EngineConfig& config)
    : taxonomy_(std::move(taxonomy)), config_(config) {
  config_.validate();
  for (Dimension d : kAllDimensions) {
    stats_[index_of(d)].assign(taxonomy_.attributes(d).size(),
                               AttributeState{0.0, config_.initial_momentum, false, 0});
  }
}

const AttributeState& AtdfState::at(const AttributeKey& key) const {
  auto pos = taxonomy_.position(key.dimension, key.name);
  if (!pos) {
    throw std::out_of_range("attribute '" + key.name + "' not in dimension '" +
                            std::string(dimension_name(key.dimension)) + "'");
  }
  return stats_[index_of(key.dimension)][*pos];
}

AtdfDistribution::AtdfDistribution(std::array<std::vector<AttributeProbability>, 4> dims)
    : dims_(std::move(dims)) {
  for (Dimension d : kAllDimensions) {
    const auto& entries = dims_[index_of(d)];
    if (entries.empty()) {
      throw ValidationError("distribution has no attributes for '" +
                            std::string(dimension_name(d)) + "'");
    }
    double total = 0.0;
    for (const auto& e : entries) {
      if (!(e.probability > 0.0) || !std::isfinite(e.probability)) {
        throw ValidationError("non-positive probability for '" + e.name + "'");
      }
      total += e.probability;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ValidationError("probabilities of '" + std::string(dimension_name(d)) +
                            "' do not sum to 1");
    }
  }
}

double AtdfDistribution::probability(Dimension d, std::string_view name) const {
  for (const auto& e : dims_[index_of(d)]) {
    if (e.name == name) return e.probability;
  }
  throw ValidationError("attribute '" + std::string(name) + "' missing from distribution '" +
                        std::string(dimension_name(d)) + "'");
}

std::optional<double> batch_difficulty(std::span<const ScoredBox> boxes,
                                       const AttributeKey& attribute) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& box : boxes) {
    if (box.attribute(attribute.dimension) != attribute.name) continue;
    sum += 1.0 - box.accuracy;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

AtdfState update(AtdfState state, std::span<const ScoredBox> batch) {
  struct Accum {
    double sum = 0.0;
    std::uint64_t count = 0;
  };
  std::array<std::vector<Accum>, 4> acc;
  for (Dimension d : kAllDimensions) acc[index_of(d)].resize(state.stats_[index_of(d)].size());

  // Same summation order as batch_difficulty: box order, one pass.
  for (const auto& box : batch) {
    for (Dimension d : kAllDimensions) {
      auto pos = state.taxonomy_.position(d, box.attribute(d));
      if (!pos) {
        throw InvariantError("scored box carries unknown " + std::string(dimension_name(d)) +
                             " '" + box.attribute(d) + "'");
      }
      auto& a = acc[index_of(d)][*pos];
      a.sum += 1.0 - box.accuracy;
      ++a.count;
    }
  }

  const double m0 = state.config_.m0;
  for (Dimension d : kAllDimensions) {
    auto& stats = state.stats_[index_of(d)];
    for (std::size_t i = 0; i < stats.size(); ++i) {
      auto& s = stats[i];
      const Accum& a = acc[index_of(d)][i];
      if (a.count > 0) {
        const double observed = a.sum / static_cast<double>(a.count);
        if (!s.seen) {
          s.difficulty = observed;
          s.seen = true;
        } else {
          s.difficulty = s.momentum * s.difficulty + (1.0 - s.momentum) * observed;
        }
        s.difficulty = std::clamp(s.difficulty, 0.0, 1.0);
        s.seen_count += a.count;
      } else {
        s.momentum = std::max(m0 * s.momentum, kMomentumFloor);
      }
    }
  }
  ++state.iteration_;
  return state;
}

AtdfDistribution finalize(const AtdfState& state) {
  std::array<std::vector<AttributeProbability>, 4> dims;
  for (Dimension d : kAllDimensions) {
    const auto& names = state.taxonomy().attributes(d);
    std::vector<double> values(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto& s = state.at(d, i);
      values[i] = s.seen ? s.difficulty : kUnseenDifficulty;
    }
    const double peak = *std::max_element(values.begin(), values.end());
    std::vector<double> weights(values.size());
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      weights[i] = std::exp(values[i] - peak);
      total += weights[i];
    }
    auto& out = dims[index_of(d)];
    out.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
      out.push_back({names[i], weights[i] / total, values[i], state.at(d, i).seen});
    }
  }
  return AtdfDistribution(std::move(dims));
}

void validate_images(std::span<const LabeledImage> images, const AttributeTaxonomy& taxonomy) {
  std::string message;
  std::size_t failures = 0;
  std::set<std::string_view> ids;
  for (const auto& img : images) {
    ValidationResult r = validate_record(img.record, taxonomy);
    ValidationResult p = validate_predictions(img.predictions, taxonomy);
    r.violations.insert(r.violations.end(), p.violations.begin(), p.violations.end());
    if (!ids.insert(img.record.id).second) r.violations.push_back({"id", "duplicate id"});
    if (r.ok()) continue;
    if (++failures <= 20) {
      if (!message.empty()) message += "\n";
      message += r.describe("image '" + img.record.id + "':");
    }
  }
  if (failures > 20) message += "\n... " + std::to_string(failures - 20) + " more invalid images";
  if (failures > 0) throw ValidationError(message);
}

std::pair<AtdfState, AtdfDistribution> run_stream(AtdfState state,
                                                  std::span<const LabeledImage> images,
                                                  const EngineConfig& config) {
  config.validate();
  validate_images(images, state.taxonomy());

  std::vector<ScoredBox> batch;
  std::vector<std::size_t> order;
  for (std::size_t begin = 0; begin < images.size(); begin += config.batch_size) {
    const std::size_t end = std::min(images.size(), begin + config.batch_size);
    order.resize(end - begin);
    std::iota(order.begin(), order.end(), begin);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return images[a].record.id < images[b].record.id;
    });
    batch.clear();
    for (std::size_t i : order) {
      auto boxes = score_image(images[i].record, images[i].predictions, config);
      batch.insert(batch.end(), std::make_move_iterator(boxes.begin()),
                   std::make_move_iterator(boxes.end()));
    }
    state = update(std::move(state), batch);
  }
  AtdfDistribution dist = finalize(state);
  return {std::move(state), std::move(dist)};
}

}  // namespace neptune
