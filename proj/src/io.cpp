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

#include "neptune/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace neptune::io {

namespace {

constexpr std::size_t kMaxReportedRecords = 20;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

bool blank(const std::string& text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); });
}

Json parse_json(const std::string& text, const std::string& source, const char* what) {
  if (blank(text)) throw ValidationError(source + ": empty " + what);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ValidationError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": parse error: " + e.what());
  }
}

const Json& member(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing '") + key + "'");
  return *it;
}

const Json* optional_member(const Json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "not finite");
  return v;
}

std::string string_of(const Json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

const Json& array_of(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array");
  return j;
}

std::size_t extent(const Json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    fail(where, "expected a non-negative integer");
  }
  return j.get<std::size_t>();
}

BBox bbox_of(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) fail(where, "expected [x1, y1, x2, y2]");
  return {number(j[0], where + "[0]"), number(j[1], where + "[1]"), number(j[2], where + "[2]"),
          number(j[3], where + "[3]")};
}

std::vector<double> reals_of(const Json& j, const std::string& where) {
  array_of(j, where);
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Json bbox_json(const BBox& b) { return Json::array({b.x1, b.y1, b.x2, b.y2}); }

BinaryMask mask_of(const Json& j, const std::string& where) {
  const std::size_t w = extent(member(j, "width", where), where + ".width");
  const std::size_t h = extent(member(j, "height", where), where + ".height");
  const std::string bits = string_of(member(j, "data", where), where + ".data");
  if (bits.size() != w * h) {
    fail(where + ".data", "expected " + std::to_string(w * h) + " characters, got " +
                              std::to_string(bits.size()));
  }
  std::vector<std::uint8_t> data(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') fail(where + ".data", "characters must be 0 or 1");
    data[i] = bits[i] == '1';
  }
  try {
    return BinaryMask(w, h, std::move(data));
  } catch (const ValidationError& e) {
    fail(where, e.what());
  }
}

Json mask_json(const BinaryMask& m) {
  std::string bits(m.data().size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = m.data()[i] ? '1' : '0';
  Json j = Json::object();
  j["width"] = m.width();
  j["height"] = m.height();
  j["data"] = bits;
  return j;
}

Prediction prediction_of(const Json& j, const std::string& where) {
  Prediction p;
  p.category = string_of(member(j, "category", where), where + ".category");
  p.bbox = bbox_of(member(j, "bbox", where), where + ".bbox");
  p.confidence = number(member(j, "confidence", where), where + ".confidence");
  return p;
}

Json prediction_json(const Prediction& p) {
  Json j = Json::object();
  j["category"] = p.category;
  j["bbox"] = bbox_json(p.bbox);
  j["confidence"] = p.confidence;
  return j;
}

std::vector<Prediction> predictions_of(const Json& j, const std::string& where) {
  array_of(j, where);
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(prediction_of(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::string record_where(const std::string& source, std::size_t i, const Json& j) {
  std::string where = source + ": images[" + std::to_string(i) + "]";
  if (j.is_object()) {
    auto it = j.find("id");
    if (it != j.end() && it->is_string()) where += " (id '" + it->get<std::string>() + "')";
  }
  return where;
}

ImageRecord record_of(const Json& j, const std::string& where) {
  ImageRecord r;
  r.id = string_of(member(j, "id", where), where + ".id");
  r.viewpoint = string_of(member(j, "viewpoint", where), where + ".viewpoint");
  r.location = string_of(member(j, "location", where), where + ".location");
  r.environment = string_of(member(j, "environment", where), where + ".environment");
  const Json& objs = array_of(member(j, "objects", where), where + ".objects");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const std::string w = where + ".objects[" + std::to_string(i) + "]";
    GroundTruthObject o;
    o.category = string_of(member(objs[i], "category", w), w + ".category");
    o.bbox = bbox_of(member(objs[i], "bbox", w), w + ".bbox");
    r.objects.push_back(std::move(o));
  }
  if (const Json* m = optional_member(j, "water_mask")) r.water_mask = mask_of(*m, where + ".water_mask");
  return r;
}

Json record_json(const ImageRecord& r) {
  Json j = Json::object();
  j["id"] = r.id;
  j["viewpoint"] = r.viewpoint;
  j["location"] = r.location;
  j["environment"] = r.environment;
  Json objs = Json::array();
  for (const auto& o : r.objects) {
    Json oj = Json::object();
    oj["category"] = o.category;
    oj["bbox"] = bbox_json(o.bbox);
    objs.push_back(std::move(oj));
  }
  j["objects"] = std::move(objs);
  if (r.water_mask) j["water_mask"] = mask_json(*r.water_mask);
  return j;
}

/// Collects per-record failures and raises them together.
class Aggregate {
 public:
  explicit Aggregate(std::string source) : source_(std::move(source)) {}
  void add(std::string message) {
    ++count_;
    if (messages_.size() < kMaxReportedRecords) messages_.push_back(std::move(message));
  }
  void raise_if_any() const {
    if (count_ == 0) return;
    std::string out = source_ + ": " + std::to_string(count_) + " invalid record(s)";
    for (const auto& m : messages_) out += "\n  " + m;
    if (count_ > messages_.size()) out += "\n  ...";
    throw ValidationError(out);
  }

 private:
  std::string source_;
  std::vector<std::string> messages_;
  std::size_t count_ = 0;
};

AttributeTaxonomy document_taxonomy(const Json& doc, const std::string& source) {
  if (const Json* t = optional_member(doc, "taxonomy")) {
    return taxonomy_from_json(*t, source + ": taxonomy");
  }
  return taxonomy_default();
}

std::string dumps(const Json& j) { return j.dump(2) + "\n"; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path);
  return ss.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("error writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw IoError("cannot replace " + path + ": " + ec.message());
  }
}

std::string format_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, p);
}

Json taxonomy_json(const AttributeTaxonomy& taxonomy) {
  Json j = Json::object();
  for (Dimension d : kAllDimensions) j[std::string(dimension_name(d))] = taxonomy.attributes(d);
  return j;
}

AttributeTaxonomy taxonomy_from_json(const Json& j, const std::string& context) {
  if (!j.is_object()) fail(context, "expected an object");
  std::array<std::vector<std::string>, 4> lists;
  for (Dimension d : kAllDimensions) {
    const std::string name(dimension_name(d));
    const Json& arr = array_of(member(j, name.c_str(), context), context + "." + name);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      lists[index_of(d)].push_back(
          string_of(arr[i], context + "." + name + "[" + std::to_string(i) + "]"));
    }
  }
  for (const auto& [key, value] : j.items()) {
    try {
      parse_dimension(key);
    } catch (const std::exception&) {
      fail(context, "unknown dimension '" + key + "'");
    }
  }
  try {
    return AttributeTaxonomy(std::move(lists));
  } catch (const ValidationError& e) {
    fail(context, e.what());
  }
}

Manifest parse_manifest(const std::string& text, const std::string& source) {
  const Json doc = parse_json(text, source, "manifest");
  Manifest m;
  m.taxonomy = document_taxonomy(doc, source);
  const Json& images = array_of(member(doc, "images", source), source + ": images");
  if (images.empty()) throw ValidationError(source + ": empty manifest");

  Aggregate errors(source);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = record_where(source, i, images[i]);
    try {
      ImageRecord r = record_of(images[i], where);
      ValidationResult v = validate_record(r, m.taxonomy);
      if (!ids.insert(r.id).second) v.violations.push_back({"id", "duplicate id"});
      if (!v.ok()) {
        errors.add(where + ": " + v.describe());
        continue;
      }
      m.records.push_back(std::move(r));
    } catch (const ValidationError& e) {
      errors.add(e.what());
    }
  }
  errors.raise_if_any();
  return m;
}

Manifest load_manifest(const std::string& path) { return parse_manifest(read_text(path), path); }

std::string dump_manifest(const AttributeTaxonomy& taxonomy, std::span<const ImageRecord> records) {
  Json doc = Json::object();
  doc["taxonomy"] = taxonomy_json(taxonomy);
  Json images = Json::array();
  for (const auto& r : records) images.push_back(record_json(r));
  doc["images"] = std::move(images);
  return dumps(doc);
}

PredictionTable parse_predictions(const std::string& text, const std::string& source,
                                  const AttributeTaxonomy& taxonomy) {
  const Json doc = parse_json(text, source, "predictions file");
  const Json& images = array_of(member(doc, "images", source), source + ": images");
  PredictionTable table;
  Aggregate errors(source);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = record_where(source, i, images[i]);
    try {
      std::string id = string_of(member(images[i], "id", where), where + ".id");
      auto preds = predictions_of(member(images[i], "predictions", where), where + ".predictions");
      if (auto v = validate_predictions(preds, taxonomy); !v.ok()) {
        errors.add(where + ": " + v.describe());
        continue;
      }
      table.emplace_back(std::move(id), std::move(preds));
    } catch (const ValidationError& e) {
      errors.add(e.what());
    }
  }
  errors.raise_if_any();
  return table;
}

PredictionTable load_predictions(const std::string& path, const AttributeTaxonomy& taxonomy) {
  return parse_predictions(read_text(path), path, taxonomy);
}

std::string dump_predictions(const PredictionTable& table) {
  Json images = Json::array();
  for (const auto& [id, preds] : table) {
    Json j = Json::object();
    j["id"] = id;
    Json arr = Json::array();
    for (const auto& p : preds) arr.push_back(prediction_json(p));
    j["predictions"] = std::move(arr);
    images.push_back(std::move(j));
  }
  Json doc = Json::object();
  doc["images"] = std::move(images);
  return dumps(doc);
}

std::vector<LabeledImage> join(std::span<const ImageRecord> records, const PredictionTable& table) {
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!by_id.emplace(table[i].first, i).second) {
      throw ValidationError("predictions: id '" + table[i].first + "' listed twice");
    }
  }
  std::vector<LabeledImage> out;
  out.reserve(records.size());
  std::size_t used = 0;
  for (const auto& r : records) {
    LabeledImage li{r, {}};
    if (auto it = by_id.find(r.id); it != by_id.end()) {
      li.predictions = table[it->second].second;
      ++used;
    }
    out.push_back(std::move(li));
  }
  if (used != table.size()) {
    std::set<std::string> known;
    for (const auto& r : records) known.insert(r.id);
    for (const auto& [id, preds] : table) {
      if (!known.count(id)) {
        throw ValidationError("predictions: id '" + id + "' is not in the manifest");
      }
    }
  }
  return out;
}

Pool parse_pool(const std::string& text, const std::string& source) {
  const Json doc = parse_json(text, source, "pool");
  Pool pool;
  pool.taxonomy = document_taxonomy(doc, source);
  const Json& images = array_of(member(doc, "images", source), source + ": images");
  Aggregate errors(source);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = record_where(source, i, images[i]);
    try {
      const Json& j = images[i];
      CandidateSample c;
      c.record = record_of(j, where);
      c.id = c.record.id;
      c.layout_score = number(member(j, "layout_score", where), where + ".layout_score");
      if (const Json* s = optional_member(j, "semantic_score")) {
        c.semantic_score = number(*s, where + ".semantic_score");
      } else {
        const auto img = reals_of(member(j, "image_embedding", where), where + ".image_embedding");
        const auto txt = reals_of(member(j, "text_embedding", where), where + ".text_embedding");
        try {
          c.semantic_score = cosine_similarity(img, txt);
        } catch (const std::invalid_argument& e) {
          fail(where + ".image_embedding", e.what());
        }
      }
      if (const Json* p = optional_member(j, "predictions")) {
        c.predictions = predictions_of(*p, where + ".predictions");
      }
      ValidationResult v = validate_record(c.record, pool.taxonomy);
      for (auto& pv : validate_predictions(c.predictions, pool.taxonomy).violations) {
        v.violations.push_back(std::move(pv));
      }
      if (!std::isfinite(c.layout_score) || c.layout_score < 0.0 || c.layout_score > 1.0) {
        v.violations.push_back({"layout_score", "outside [0,1]"});
      }
      if (c.semantic_score < -1.0 || c.semantic_score > 1.0) {
        v.violations.push_back({"semantic_score", "outside [-1,1]"});
      }
      if (!ids.insert(c.id).second) v.violations.push_back({"id", "duplicate id"});
      if (!v.ok()) {
        errors.add(where + ": " + v.describe());
        continue;
      }
      pool.samples.push_back(std::move(c));
    } catch (const ValidationError& e) {
      errors.add(e.what());
    }
  }
  errors.raise_if_any();
  return pool;
}

Pool load_pool(const std::string& path) { return parse_pool(read_text(path), path); }

std::string dump_pool(const AttributeTaxonomy& taxonomy, std::span<const CandidateSample> pool) {
  Json doc = Json::object();
  doc["taxonomy"] = taxonomy_json(taxonomy);
  Json images = Json::array();
  for (const auto& c : pool) {
    Json j = record_json(c.record);
    j["layout_score"] = c.layout_score;
    j["semantic_score"] = c.semantic_score;
    Json preds = Json::array();
    for (const auto& p : c.predictions) preds.push_back(prediction_json(p));
    j["predictions"] = std::move(preds);
    images.push_back(std::move(j));
  }
  doc["images"] = std::move(images);
  return dumps(doc);
}

std::string atdf_csv(const AtdfState& state, const AtdfDistribution& dist) {
  std::string out = "dimension,attribute,raw_d,momentum,softmax_probability,seen_count\n";
  for (Dimension d : kAllDimensions) {
    const auto& names = state.taxonomy().attributes(d);
    for (std::size_t i = 0; i < names.size(); ++i) {
      const AttributeState& s = state.at(d, i);
      out += std::string(dimension_name(d)) + "," + csv_field(names[i]) + "," +
             format_real(s.difficulty) + "," + format_real(s.momentum) + "," +
             format_real(dist.probability(d, names[i])) + "," + std::to_string(s.seen_count) +
             "\n";
    }
  }
  return out;
}

std::string dump_distribution(const AttributeTaxonomy& taxonomy, const AtdfDistribution& dist) {
  Json doc = Json::object();
  doc["taxonomy"] = taxonomy_json(taxonomy);
  Json dims = Json::object();
  for (Dimension d : kAllDimensions) {
    Json arr = Json::array();
    for (const auto& a : dist.dimension(d)) {
      Json j = Json::object();
      j["attribute"] = a.name;
      j["probability"] = a.probability;
      j["raw_d"] = a.difficulty;
      j["seen"] = a.seen;
      arr.push_back(std::move(j));
    }
    dims[std::string(dimension_name(d))] = std::move(arr);
  }
  doc["dimensions"] = std::move(dims);
  return dumps(doc);
}

DistributionFile parse_distribution(const std::string& text, const std::string& source) {
  const Json doc = parse_json(text, source, "distribution");
  DistributionFile out;
  out.taxonomy = document_taxonomy(doc, source);
  const Json& dims = member(doc, "dimensions", source);
  std::array<std::vector<AttributeProbability>, 4> lists;
  for (Dimension d : kAllDimensions) {
    const std::string dn(dimension_name(d));
    const std::string where = source + ": dimensions." + dn;
    const Json& arr = array_of(member(dims, dn.c_str(), where), where);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string w = where + "[" + std::to_string(i) + "]";
      AttributeProbability a;
      a.name = string_of(member(arr[i], "attribute", w), w + ".attribute");
      a.probability = number(member(arr[i], "probability", w), w + ".probability");
      a.difficulty = number(member(arr[i], "raw_d", w), w + ".raw_d");
      const Json& seen = member(arr[i], "seen", w);
      if (!seen.is_boolean()) fail(w + ".seen", "expected true or false");
      a.seen = seen.get<bool>();
      lists[index_of(d)].push_back(std::move(a));
    }
    std::vector<std::string> names;
    for (const auto& a : lists[index_of(d)]) names.push_back(a.name);
    if (names != out.taxonomy.attributes(d)) {
      fail(where, "attributes do not match the taxonomy");
    }
  }
  try {
    out.distribution = AtdfDistribution(std::move(lists));
  } catch (const ValidationError& e) {
    fail(source, e.what());
  }
  return out;
}

DistributionFile load_distribution(const std::string& path) {
  return parse_distribution(read_text(path), path);
}

Json engine_json(const EngineConfig& c) {
  Json j = Json::object();
  j["gamma"] = c.gamma;
  j["delta"] = c.delta;
  j["m0"] = c.m0;
  j["initial_momentum"] = c.initial_momentum;
  j["batch_size"] = c.batch_size;
  j["iou_assign_threshold"] = c.iou_assign_threshold;
  j["tau_layout"] = c.tau_layout;
  j["tau_semantic"] = c.tau_semantic;
  j["top_k"] = c.top_k;
  j["include_missed_gt"] = c.include_missed_gt;
  j["seed"] = c.seed;
  return j;
}

Json statistics_json(const PoolStatistics& s) {
  Json j = Json::object();
  j["pool_size"] = s.total;
  j["filtered_layout"] = s.filtered_layout;
  j["filtered_semantic"] = s.filtered_semantic;
  j["filtered_degenerate"] = s.filtered_degenerate;
  j["filtered_total"] = s.filtered_out();
  j["scored"] = s.scored;
  j["selected"] = s.selected;
  return j;
}

std::string dump_selection(const SelectionManifest& manifest) {
  Json doc = Json::object();
  doc["config"] = engine_json(manifest.config);
  doc["statistics"] = statistics_json(manifest.statistics);
  Json sel = Json::array();
  for (const auto& e : manifest.entries) {
    Json j = Json::object();
    j["id"] = e.id;
    j["difficulty"] = e.difficulty.value;
    j["d_view"] = e.difficulty.d_view;
    j["d_loc"] = e.difficulty.d_loc;
    j["d_env"] = e.difficulty.d_env;
    j["mean_class_term"] = e.difficulty.mean_class_term;
    j["passed_filters"] = e.passed_filters;
    sel.push_back(std::move(j));
  }
  doc["selected"] = std::move(sel);
  return dumps(doc);
}

metrics::FeatureSet parse_features(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t number_line = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++number_line;
      if (!blank(line)) return true;
    }
    return false;
  };
  if (!next_line()) throw ValidationError(source + ": empty feature file");
  std::istringstream header(line);
  long long n = -1, dim = -1;
  std::string extra;
  if (!(header >> n >> dim) || (header >> extra) || n < 0 || dim <= 0) {
    throw ValidationError(source + ":" + std::to_string(number_line) +
                          ": header must be 'n dim' with dim > 0");
  }
  Eigen::MatrixXd m(n, dim);
  for (long long r = 0; r < n; ++r) {
    if (!next_line()) {
      throw ValidationError(source + ": expected " + std::to_string(n) + " rows, found " +
                            std::to_string(r));
    }
    std::istringstream row(line);
    std::string tok;
    long long c = 0;
    while (row >> tok) {
      if (c >= dim) break;
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size() || !std::isfinite(v)) {
        throw ValidationError(source + ":" + std::to_string(number_line) + ": bad value '" + tok +
                              "'");
      }
      m(r, c++) = v;
    }
    if (c != dim || (row >> tok)) {
      throw ValidationError(source + ":" + std::to_string(number_line) + ": expected " +
                            std::to_string(dim) + " values");
    }
  }
  if (next_line()) {
    throw ValidationError(source + ":" + std::to_string(number_line) + ": unexpected extra row");
  }
  try {
    return metrics::FeatureSet(std::move(m));
  } catch (const ValidationError& e) {
    fail(source, e.what());
  }
}

metrics::FeatureSet load_features(const std::string& path) {
  return parse_features(read_text(path), path);
}

std::vector<std::string> load_labels(const std::string& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

std::pair<AttributeTaxonomy, synth::DifficultyProfile> parse_profile(const std::string& text,
                                                                     const std::string& source) {
  const Json doc = parse_json(text, source, "profile");
  AttributeTaxonomy taxonomy = document_taxonomy(doc, source);
  synth::DifficultyProfile p = synth::DifficultyProfile::uniform(taxonomy, 0.0);
  if (const Json* v = optional_member(doc, "iou_noise")) p.iou_noise = number(*v, source + ": iou_noise");
  if (const Json* v = optional_member(doc, "confidence_noise")) {
    p.confidence_noise = number(*v, source + ": confidence_noise");
  }
  if (const Json* attrs = optional_member(doc, "attributes")) {
    if (!attrs->is_object()) fail(source + ": attributes", "expected an object");
    for (const auto& [dn, entries] : attrs->items()) {
      Dimension d;
      try {
        d = parse_dimension(dn);
      } catch (const std::exception&) {
        fail(source + ": attributes", "unknown dimension '" + dn + "'");
      }
      if (!entries.is_object()) fail(source + ": attributes." + dn, "expected an object");
      for (const auto& [name, rates] : entries.items()) {
        const std::string w = source + ": attributes." + dn + "." + name;
        if (!taxonomy.contains(d, name)) fail(w, "not in the taxonomy");
        synth::AttributeRates r;
        if (const Json* e = optional_member(rates, "error_rate")) r.error_rate = number(*e, w + ".error_rate");
        if (const Json* m = optional_member(rates, "miss_probability")) {
          r.miss_probability = number(*m, w + ".miss_probability");
        }
        p.set({d, name}, r);
      }
    }
  }
  if (auto v = p.validate(taxonomy); !v.ok()) throw ValidationError(v.describe(source));
  return {std::move(taxonomy), std::move(p)};
}

std::string dump_expected_ordering(const synth::DifficultyProfile& profile,
                                   const AttributeTaxonomy& taxonomy) {
  Json doc = Json::object();
  for (Dimension d : kAllDimensions) {
    const auto order = synth::expected_ordering(profile, taxonomy, d);
    Json tiers = Json::array();
    for (std::size_t t = 0; t < order.tiers.size(); ++t) {
      Json j = Json::object();
      j["error_rate"] = order.tier_rates[t];
      j["attributes"] = order.tiers[t];
      tiers.push_back(std::move(j));
    }
    doc[std::string(dimension_name(d))] = std::move(tiers);
  }
  return dumps(doc);
}

}  // namespace neptune::io
