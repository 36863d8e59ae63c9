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

// File formats: JSON manifests, predictions, candidate pools, distributions
// and selection manifests; CSV reports; plain-text feature and label files.

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "neptune/atdf.hpp"
#include "neptune/core_model.hpp"
#include "neptune/metrics.hpp"
#include "neptune/selection.hpp"
#include "neptune/synth.hpp"

namespace neptune::io {

using Json = nlohmann::ordered_json;

/// Whole file as bytes. Throws IoError.
std::string read_text(const std::string& path);
/// Writes to a sibling temporary file and renames it over `path`. Throws IoError.
void write_atomic(const std::string& path, const std::string& content);

/// Shortest decimal form that reads back to the same double.
std::string format_real(double v);

struct Manifest {
  AttributeTaxonomy taxonomy = taxonomy_default();
  std::vector<ImageRecord> records;
};

/// Parses and validates a manifest. Errors name the source, the record index
/// and id, and the offending field. Empty input or no images -> "empty manifest".
Manifest parse_manifest(const std::string& text, const std::string& source);
Manifest load_manifest(const std::string& path);
std::string dump_manifest(const AttributeTaxonomy& taxonomy, std::span<const ImageRecord> records);

using PredictionTable = std::vector<std::pair<std::string, std::vector<Prediction>>>;

PredictionTable parse_predictions(const std::string& text, const std::string& source,
                                  const AttributeTaxonomy& taxonomy);
PredictionTable load_predictions(const std::string& path, const AttributeTaxonomy& taxonomy);
std::string dump_predictions(const PredictionTable& table);

/// Pairs every record with its predictions; an image absent from the table has
/// none. Ids in the table that are not in the manifest, or listed twice, are
/// validation errors.
std::vector<LabeledImage> join(std::span<const ImageRecord> records, const PredictionTable& table);

struct Pool {
  AttributeTaxonomy taxonomy = taxonomy_default();
  std::vector<CandidateSample> samples;
};

/// Manifest format plus layout_score and either semantic_score or the pair
/// image_embedding/text_embedding (scored by cosine similarity), with optional
/// inline predictions.
Pool parse_pool(const std::string& text, const std::string& source);
Pool load_pool(const std::string& path);
std::string dump_pool(const AttributeTaxonomy& taxonomy, std::span<const CandidateSample> pool);

/// dimension,attribute,raw_d,momentum,softmax_probability,seen_count
std::string atdf_csv(const AtdfState& state, const AtdfDistribution& dist);

struct DistributionFile {
  AttributeTaxonomy taxonomy = taxonomy_default();
  AtdfDistribution distribution;
};

std::string dump_distribution(const AttributeTaxonomy& taxonomy, const AtdfDistribution& dist);
DistributionFile parse_distribution(const std::string& text, const std::string& source);
DistributionFile load_distribution(const std::string& path);

Json engine_json(const EngineConfig& config);
Json statistics_json(const PoolStatistics& stats);
/// {config, statistics, selected: [{id, difficulty, d_view, d_loc, d_env,
/// mean_class_term, passed_filters}]}
std::string dump_selection(const SelectionManifest& manifest);

/// Header "n dim", then n rows of dim whitespace-separated reals.
metrics::FeatureSet parse_features(const std::string& text, const std::string& source);
metrics::FeatureSet load_features(const std::string& path);

/// One label per non-blank line, surrounding whitespace removed.
std::vector<std::string> load_labels(const std::string& path);

/// {iou_noise, confidence_noise, taxonomy?, attributes: {dimension: {name:
/// {error_rate, miss_probability}}}}. Attributes not listed get rate 0.
std::pair<AttributeTaxonomy, synth::DifficultyProfile> parse_profile(const std::string& text,
                                                                     const std::string& source);

std::string dump_expected_ordering(const synth::DifficultyProfile& profile,
                                   const AttributeTaxonomy& taxonomy);

Json taxonomy_json(const AttributeTaxonomy& taxonomy);
AttributeTaxonomy taxonomy_from_json(const Json& j, const std::string& context);

}  // namespace neptune::io
