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

#include "neptune/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace neptune::synth {

namespace {

constexpr std::uint64_t kImageSlot = ~std::uint64_t{0};
constexpr std::uint64_t kPoolSalt = 0x5eed'9001'c0ff'ee00ull;

enum Stream : std::uint64_t { kGeometry = 0, kDecision = 1, kJitter = 2, kScores = 3 };

std::string make_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05zu", prefix, i);
  return buf;
}

void fit_axis(double& lo, double& hi, double min_side, double frame) {
  if (hi - lo >= min_side) return;
  const double c = 0.5 * (lo + hi);
  lo = c - 0.5 * min_side;
  hi = c + 0.5 * min_side;
  if (lo < 0.0) {
    hi -= lo;
    lo = 0.0;
  }
  if (hi > frame) {
    lo -= hi - frame;
    hi = frame;
  }
}

double survive_product(const DifficultyProfile& profile, const ImageRecord& record,
                       const std::string& category, bool miss) {
  double keep = 1.0;
  auto fold = [&](Dimension d, const std::string& name) {
    const auto& r = profile.at({d, name});
    keep *= 1.0 - (miss ? r.miss_probability : r.error_rate);
  };
  fold(Dimension::kCategory, category);
  fold(Dimension::kViewpoint, record.viewpoint);
  fold(Dimension::kLocation, record.location);
  fold(Dimension::kEnvironment, record.environment);
  return keep;
}

void check_spec(const ScenarioSpec& spec) {
  ValidationResult r;
  if (spec.n_images == 0) r.violations.push_back({"n_images", "must be positive"});
  if (spec.objects_min > spec.objects_max) {
    r.violations.push_back({"objects_min", "exceeds objects_max"});
  }
  if (!(spec.frame > 0.0) || !std::isfinite(spec.frame)) {
    r.violations.push_back({"frame", "must be positive"});
  }
  if (!(spec.box_min > 0.0)) r.violations.push_back({"box_min", "must be positive"});
  if (!(spec.box_min <= spec.box_max)) r.violations.push_back({"box_max", "below box_min"});
  if (!(spec.box_max <= spec.frame)) r.violations.push_back({"box_max", "exceeds the frame"});
  if (!r.ok()) throw ValidationError(r.describe("scenario"));
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

KeyedRng::KeyedRng(std::uint64_t seed, std::uint64_t image, std::uint64_t box,
                   std::uint64_t stream)
    : state_(splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ image) ^ box) ^ stream)) {}

std::uint64_t KeyedRng::next() {
  state_ += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double KeyedRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::size_t KeyedRng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("KeyedRng::index: n must be positive");
  const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return std::min(i, n - 1);
}

DifficultyProfile DifficultyProfile::uniform(const AttributeTaxonomy& taxonomy, double error_rate,
                                             double miss_probability) {
  DifficultyProfile p;
  for (Dimension d : kAllDimensions) {
    for (const auto& name : taxonomy.attributes(d)) {
      p.rates[{d, name}] = {error_rate, miss_probability};
    }
  }
  return p;
}

const AttributeRates& DifficultyProfile::at(const AttributeKey& key) const {
  auto it = rates.find(key);
  if (it == rates.end()) {
    throw ValidationError("profile: no rates for " + std::string(dimension_name(key.dimension)) +
                          "/" + key.name);
  }
  return it->second;
}

ValidationResult DifficultyProfile::validate(const AttributeTaxonomy& taxonomy) const {
  ValidationResult r;
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  for (Dimension d : kAllDimensions) {
    for (const auto& name : taxonomy.attributes(d)) {
      const std::string field = std::string(dimension_name(d)) + "/" + name;
      auto it = rates.find({d, name});
      if (it == rates.end()) {
        r.violations.push_back({field, "missing from profile"});
        continue;
      }
      if (!in_unit(it->second.error_rate)) {
        r.violations.push_back({field + ".error_rate", "outside [0,1]"});
      }
      if (!in_unit(it->second.miss_probability)) {
        r.violations.push_back({field + ".miss_probability", "outside [0,1]"});
      }
    }
  }
  if (!(iou_noise >= 0.0) || !std::isfinite(iou_noise)) {
    r.violations.push_back({"iou_noise", "must be >= 0"});
  }
  if (!(confidence_noise >= 0.0 && confidence_noise <= 1.0)) {
    r.violations.push_back({"confidence_noise", "outside [0,1]"});
  }
  return r;
}

DifficultyProfile default_profile() {
  DifficultyProfile p;
  auto put = [&](Dimension d, const char* name, double rate) { p.rates[{d, name}] = {rate, 0.0}; };
  put(Dimension::kCategory, "ship", 0.10);
  put(Dimension::kCategory, "buoy", 0.30);
  put(Dimension::kCategory, "person", 0.40);
  put(Dimension::kCategory, "floating_object", 0.50);
  put(Dimension::kCategory, "fixed_object", 0.20);
  put(Dimension::kViewpoint, "shore", 0.10);
  put(Dimension::kViewpoint, "ship", 0.15);
  put(Dimension::kViewpoint, "aerial", 0.30);
  put(Dimension::kLocation, "sea", 0.10);
  put(Dimension::kLocation, "river", 0.20);
  put(Dimension::kLocation, "harbor", 0.25);
  put(Dimension::kLocation, "lake", 0.15);
  put(Dimension::kEnvironment, "sunny", 0.05);
  put(Dimension::kEnvironment, "cloudy", 0.15);
  put(Dimension::kEnvironment, "foggy", 0.35);
  put(Dimension::kEnvironment, "rainy", 0.45);
  put(Dimension::kEnvironment, "dawn_dusk", 0.25);
  put(Dimension::kEnvironment, "night", 0.60);
  return p;
}

double composite_error_rate(const DifficultyProfile& profile, const ImageRecord& record,
                            const std::string& category) {
  return 1.0 - survive_product(profile, record, category, false);
}

double composite_miss_probability(const DifficultyProfile& profile, const ImageRecord& record,
                                  const std::string& category) {
  return 1.0 - survive_product(profile, record, category, true);
}

BBox perturb_box(const BBox& box, double iou_noise, KeyedRng& rng, double frame) {
  if (iou_noise == 0.0) return box;
  const double w = box.width();
  const double h = box.height();
  auto jitter = [&](double v, double side) {
    const double moved = v + (2.0 * rng.uniform() - 1.0) * iou_noise * side;
    return std::clamp(moved, 0.0, frame);
  };
  BBox out;
  out.x1 = jitter(box.x1, w);
  out.y1 = jitter(box.y1, h);
  out.x2 = jitter(box.x2, w);
  out.y2 = jitter(box.y2, h);
  fit_axis(out.x1, out.x2, 0.1 * w, frame);
  fit_axis(out.y1, out.y2, 0.1 * h, frame);
  return out;
}

BBox perturb_box(const BBox& box, double iou_noise, std::uint64_t seed, double frame) {
  KeyedRng rng(seed, 0, 0, kJitter);
  return perturb_box(box, iou_noise, rng, frame);
}

Scenario generate_scenario(const AttributeTaxonomy& taxonomy, const DifficultyProfile& profile,
                           const ScenarioSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  if (auto r = profile.validate(taxonomy); !r.ok()) throw ValidationError(r.describe("profile"));

  Scenario s{taxonomy, {}, {}, profile, spec, seed};
  s.records.reserve(spec.n_images);
  s.predictions.reserve(spec.n_images);
  const auto& cats = taxonomy.attributes(Dimension::kCategory);

  for (std::size_t i = 0; i < spec.n_images; ++i) {
    KeyedRng img(seed, i, kImageSlot, kGeometry);
    ImageRecord rec;
    rec.id = make_id("img", i);
    auto pick = [&](Dimension d) {
      const auto& names = taxonomy.attributes(d);
      return names[img.index(names.size())];
    };
    rec.viewpoint = pick(Dimension::kViewpoint);
    rec.location = pick(Dimension::kLocation);
    rec.environment = pick(Dimension::kEnvironment);
    const std::size_t n_obj = spec.objects_min + img.index(spec.objects_max - spec.objects_min + 1);

    std::vector<Prediction> preds;
    for (std::size_t j = 0; j < n_obj; ++j) {
      KeyedRng geo(seed, i, j, kGeometry);
      GroundTruthObject obj;
      obj.category = cats[geo.index(cats.size())];
      const double w = spec.box_min + geo.uniform() * (spec.box_max - spec.box_min);
      const double h = spec.box_min + geo.uniform() * (spec.box_max - spec.box_min);
      const double x1 = geo.uniform() * (spec.frame - w);
      const double y1 = geo.uniform() * (spec.frame - h);
      obj.bbox = {x1, y1, x1 + w, y1 + h};
      rec.objects.push_back(obj);

      KeyedRng decide(seed, i, j, kDecision);
      const double u_miss = decide.uniform();
      const double u_err = decide.uniform();
      const double u_conf = decide.uniform();
      if (u_miss < composite_miss_probability(profile, rec, obj.category)) continue;
      Prediction p{obj.category, obj.bbox, 1.0};
      if (u_err < composite_error_rate(profile, rec, obj.category)) {
        KeyedRng jit(seed, i, j, kJitter);
        p.bbox = perturb_box(obj.bbox, profile.iou_noise, jit, spec.frame);
        p.confidence = 1.0 - profile.confidence_noise * u_conf;
      }
      preds.push_back(p);
    }
    s.records.push_back(std::move(rec));
    s.predictions.push_back(std::move(preds));
  }
  return s;
}

std::vector<CandidateSample> generate_pool(const AttributeTaxonomy& taxonomy,
                                           const DifficultyProfile& profile,
                                           const ScenarioSpec& spec, std::uint64_t seed) {
  const std::uint64_t pool_seed = splitmix64(seed ^ kPoolSalt);
  Scenario s = generate_scenario(taxonomy, profile, spec, pool_seed);
  std::vector<CandidateSample> pool;
  pool.reserve(s.records.size());
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    KeyedRng rng(pool_seed, i, kImageSlot, kScores);
    CandidateSample c;
    c.record = std::move(s.records[i]);
    c.record.id = make_id("cand", i);
    c.id = c.record.id;
    c.predictions = std::move(s.predictions[i]);
    c.layout_score = rng.uniform();
    c.semantic_score = rng.uniform();
    pool.push_back(std::move(c));
  }
  return pool;
}

bool ExpectedOrdering::accepts(std::span<const std::string> ranking) const {
  std::size_t pos = 0;
  for (const auto& tier : tiers) {
    if (pos + tier.size() > ranking.size()) return false;
    std::vector<std::string> got(ranking.begin() + static_cast<std::ptrdiff_t>(pos),
                                 ranking.begin() + static_cast<std::ptrdiff_t>(pos + tier.size()));
    std::vector<std::string> want = tier;
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    if (got != want) return false;
    pos += tier.size();
  }
  return pos == ranking.size();
}

std::vector<std::string> ExpectedOrdering::flatten() const {
  std::vector<std::string> out;
  for (const auto& t : tiers) out.insert(out.end(), t.begin(), t.end());
  return out;
}

ExpectedOrdering expected_ordering(const DifficultyProfile& profile,
                                   const AttributeTaxonomy& taxonomy, Dimension dimension) {
  std::vector<std::pair<double, std::string>> items;
  for (const auto& name : taxonomy.attributes(dimension)) {
    items.emplace_back(profile.at({dimension, name}).error_rate, name);
  }
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  ExpectedOrdering out;
  out.dimension = dimension;
  for (const auto& [rate, name] : items) {
    if (out.tiers.empty() || out.tier_rates.back() != rate) {
      out.tiers.emplace_back();
      out.tier_rates.push_back(rate);
    }
    out.tiers.back().push_back(name);
  }
  return out;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("spearman: need at least two values");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw std::invalid_argument("spearman: constant input");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace neptune::synth
