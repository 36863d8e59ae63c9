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

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ap_oracle.hpp"
#include "neptune/atdf.hpp"
#include "neptune/attn_check.hpp"
#include "neptune/io.hpp"
#include "neptune/matching.hpp"
#include "neptune/metrics.hpp"
#include "neptune/pipeline.hpp"
#include "neptune/selection.hpp"
#include "neptune/synth.hpp"

namespace {

using namespace neptune;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Equal up to 4 units in the last place.
bool ulp_equal(double a, double b) {
  if (a == b) return true;
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= 4.0 * std::numeric_limits<double>::epsilon() * scale;
}

// ---------------------------------------------------------------------------

Outcome a1_accuracy_endpoints() {
  Outcome o;
  int grid_failures = 0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double p = i / 9.0, u = j / 9.0;
      if (box_accuracy(p, u, 0.0) != u) ++grid_failures;
      if (box_accuracy(p, u, 1.0) != p) ++grid_failures;
    }
  }
  o.require(grid_failures == 0, std::to_string(grid_failures) + " endpoint mismatches");
  const double mid = box_accuracy(0.81, 0.49, 0.5);
  o.require(std::abs(mid - 0.63) <= 1e-12, "mid case " + fmt("%.17g", mid));
  if (o.pass) o.detail = "100-point grid exact, mid " + fmt("%.15g", mid);
  return o;
}

AttributeTaxonomy two_env() {
  return AttributeTaxonomy({std::vector<std::string>{"ship"}, {"shore"}, {"sea"}, {"sunny", "night"}});
}

Outcome a2_atdf_dynamics() {
  Outcome o;
  const AttributeKey sunny{Dimension::kEnvironment, "sunny"};
  const AttributeKey night{Dimension::kEnvironment, "night"};
  double worst_gap = 0.0;
  // Default momentum 0.99 leaves 0.99^200 = 0.13 of the start after 200 batches.
  for (double m : {0.5, 0.8, 0.9}) {
    for (double c : {0.05, 0.4, 0.9}) {
      EngineConfig cfg;
      cfg.initial_momentum = m;
      AtdfState s(two_env(), cfg);
      std::vector<ScoredBox> start = {{c > 0.5 ? 1.0 : 0.0, "ship", "shore", "sea", "sunny"}};
      s = update(s, start);
      std::vector<ScoredBox> b = {{1.0 - c, "ship", "shore", "sea", "sunny"}};
      for (int i = 0; i < 200; ++i) s = update(s, b);
      worst_gap = std::max(worst_gap, std::abs(s.at(sunny).difficulty - c));
    }
  }
  o.require(worst_gap <= 1e-6, "convergence gap " + fmt("%.3g", worst_gap));

  int momentum_mismatch = 0;
  for (double m0 : {0.99, 0.9, 0.7}) {
    for (double m_init : {0.99, 0.9, 0.5}) {
      EngineConfig cfg;
      cfg.m0 = m0;
      cfg.initial_momentum = m_init;
      AtdfState s(two_env(), cfg);
      double expected = m_init;
      std::vector<ScoredBox> b = {{0.5, "ship", "shore", "sea", "sunny"}};
      for (int j = 1; j <= 20; ++j) {
        s = update(s, b);
        // The momentum floor binds once m0^j m_init drops below it.
        expected = std::max(m0 * expected, kMomentumFloor);
        if (s.at(night).momentum != expected) ++momentum_mismatch;
      }
    }
  }
  o.require(momentum_mismatch == 0, std::to_string(momentum_mismatch) + " momentum mismatches");

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto t = taxonomy_default();
  double worst_sum = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    AtdfState s(t, EngineConfig{});
    for (int it = 0; it < 5; ++it) {
      std::vector<ScoredBox> b;
      for (int k = 0; k < 20; ++k) {
        auto pick = [&](Dimension d) { return t.attributes(d)[rng() % t.attributes(d).size()]; };
        b.push_back({u(rng), pick(Dimension::kCategory), pick(Dimension::kViewpoint),
                     pick(Dimension::kLocation), pick(Dimension::kEnvironment)});
      }
      s = update(s, b);
    }
    const auto dist = finalize(s);
    for (Dimension d : kAllDimensions) {
      double sum = 0.0;
      for (const auto& a : dist.dimension(d)) sum += a.probability;
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
  }
  o.require(worst_sum <= 1e-9, "probability sum off by " + fmt("%.3g", worst_sum));
  if (o.pass) {
    o.detail = "gap " + fmt("%.2g", worst_gap) + ", momentum exact, sum dev " + fmt("%.2g", worst_sum);
  }
  return o;
}

Outcome a3_ranking_fidelity() {
  Outcome o;
  auto levels = std::array<std::vector<std::string>, 4>{};
  const auto base = taxonomy_default();
  for (Dimension d : kAllDimensions) levels[index_of(d)] = base.attributes(d);
  levels[index_of(Dimension::kEnvironment)] = {"sunny", "foggy", "rainy", "night"};
  const AttributeTaxonomy tax(levels);
  const double rates[4] = {0.1, 0.3, 0.5, 0.7};
  auto profile = synth::DifficultyProfile::uniform(tax, 0.0);
  for (int i = 0; i < 4; ++i) {
    profile.set({Dimension::kEnvironment, levels[3][i]}, {rates[i], 0.0});
  }
  synth::ScenarioSpec spec;
  spec.n_images = 200;
  const auto expected = synth::expected_ordering(profile, tax, Dimension::kEnvironment);
  const EngineConfig cfg;

  double rho_sum = 0.0;
  int exact = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sc = synth::generate_scenario(tax, profile, spec, seed);
    std::vector<LabeledImage> images;
    for (std::size_t i = 0; i < sc.records.size(); ++i) images.push_back({sc.records[i], sc.predictions[i]});
    const auto [state, dist] = run_stream(AtdfState(tax, cfg), images, cfg);
    std::vector<double> probs, injected;
    std::vector<std::string> ranking = levels[3];
    for (int i = 0; i < 4; ++i) {
      probs.push_back(dist.probability(Dimension::kEnvironment, levels[3][i]));
      injected.push_back(rates[i]);
    }
    std::stable_sort(ranking.begin(), ranking.end(), [&](const auto& a, const auto& b) {
      return dist.probability(Dimension::kEnvironment, a) > dist.probability(Dimension::kEnvironment, b);
    });
    rho_sum += synth::spearman(probs, injected);
    exact += expected.accepts(ranking);
  }
  const double mean_rho = rho_sum / 20.0;
  o.require(mean_rho >= 0.9, "mean rho " + fmt("%.3f", mean_rho));
  o.require(exact >= 16, "exact " + std::to_string(exact) + "/20");
  o.detail = (o.pass ? "" : o.detail + "; ") + "mean rho " + fmt("%.3f", mean_rho) + ", exact " +
             std::to_string(exact) + "/20";
  return o;
}

std::vector<std::string> ids_of(const SelectionManifest& m) {
  std::vector<std::string> ids;
  for (const auto& e : m.entries) ids.push_back(e.id);
  return ids;
}

Outcome a4_selection_invariances() {
  Outcome o;
  const auto t = taxonomy_default();
  const auto profile = synth::default_profile();
  synth::ScenarioSpec spec;
  const auto sc = synth::generate_scenario(t, profile, spec, 42);
  std::vector<LabeledImage> images;
  for (std::size_t i = 0; i < sc.records.size(); ++i) images.push_back({sc.records[i], sc.predictions[i]});
  EngineConfig cfg;
  const auto dist = run_stream(AtdfState(t, cfg), images, cfg).second;

  spec.n_images = 500;
  const auto pool = synth::generate_pool(t, profile, spec, 42);
  cfg.top_k = 50;

  const auto ref = run_selection(pool, dist, cfg);
  for (double delta : {0.1, 1.0, 10.0}) {
    auto c = cfg;
    c.delta = delta;
    o.require(ids_of(run_selection(pool, dist, c)) == ids_of(ref),
              "delta " + fmt("%g", delta) + " changed the manifest");
  }

  const auto again = run_selection(pool, dist, cfg);
  o.require(again.entries == ref.entries && io::dump_selection(again) == io::dump_selection(ref),
            "rerun not bitwise identical");

  std::map<std::string, const CandidateSample*> by_id;
  for (const auto& s : pool) by_id[s.id] = &s;
  std::size_t violations = 0;
  auto all = cfg;
  all.top_k = 10000;
  for (const auto& e : run_selection(pool, dist, all).entries) {
    const auto* s = by_id.at(e.id);
    if (!(s->layout_score > cfg.tau_layout && s->semantic_score > cfg.tau_semantic)) ++violations;
  }
  o.require(violations == 0, std::to_string(violations) + " filter violations");

  const auto chosen = ids_of(ref);
  std::size_t subset_failures = 0, removals = 0;
  for (std::size_t i = 0; i < pool.size(); i += 5) {
    if (std::find(chosen.begin(), chosen.end(), pool[i].id) != chosen.end()) continue;
    auto reduced = pool;
    reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(i));
    ++removals;
    if (ids_of(run_selection(reduced, dist, cfg)) != chosen) ++subset_failures;
  }
  std::vector<CandidateSample> chosen_only;
  for (const auto& s : pool) {
    if (std::find(chosen.begin(), chosen.end(), s.id) != chosen.end()) chosen_only.push_back(s);
  }
  if (ids_of(run_selection(chosen_only, dist, cfg)) != chosen) ++subset_failures;
  o.require(subset_failures == 0, std::to_string(subset_failures) + " subset-consistency failures");
  if (o.pass) {
    o.detail = "pool 500, selected " + std::to_string(ref.entries.size()) + ", scored " +
               std::to_string(ref.statistics.scored) + ", " + std::to_string(removals + 1) +
               " subset checks";
  }
  return o;
}

Outcome a5_map_oracle() {
  Outcome o;
  std::mt19937_64 rng(515);
  const std::vector<std::string> cats = {"ship", "buoy", "person"};
  std::size_t compared = 0, mismatches = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 3000; ++trial) {
    const auto ds = metrics::oracle::random_fixture(rng, cats);
    for (double thr : {0.5, 0.75}) {
      double sum = 0.0;
      std::size_t included = 0;
      for (const auto& c : cats) {
        const auto got = metrics::average_precision(ds, c, thr);
        const auto want = metrics::oracle::oracle_ap(ds, c, thr);
        if (got.has_value() != want.has_value()) {
          ++mismatches;
          continue;
        }
        if (!want) continue;
        ++compared;
        worst = std::max(worst, std::abs(*got - *want));
        if (!ulp_equal(*got, *want)) ++mismatches;
        sum += *want;
        ++included;
      }
      const double want_map = included ? sum / static_cast<double>(included) : 0.0;
      const double got_map = metrics::mean_ap_at(ds, thr);
      worst = std::max(worst, std::abs(got_map - want_map));
      if (!ulp_equal(got_map, want_map)) ++mismatches;
    }
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " mismatches, max deviation " +
                                 fmt("%.3g", worst));
  if (o.pass) {
    o.detail = std::to_string(compared) + " AP values match the oracle, max deviation " + fmt("%.2g", worst);
  }
  return o;
}

Eigen::MatrixXd gaussian(std::mt19937_64& rng, int n, const Eigen::Vector2d& mu, const Eigen::Matrix2d& cov) {
  const Eigen::Matrix2d l = cov.llt().matrixL();
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd out(n, 2);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d v(z(rng), z(rng));
    out.row(i) = (mu + l * v).transpose();
  }
  return out;
}

Outcome a6_frechet() {
  Outcome o;
  std::mt19937_64 rng(6);
  Eigen::Matrix2d ca, cb;
  ca << 1.0, 0.4, 0.4, 0.8;
  cb << 2.5, -0.6, -0.6, 1.5;
  const metrics::FeatureSet same(gaussian(rng, 1000, {0.5, -1.0}, ca));
  const double d_same = metrics::frechet_distance(same, same);
  o.require(d_same <= 1e-6, "identical sets " + fmt("%.3g", d_same));

  Eigen::MatrixXd base(4, 2);
  base << 1, 1, 1, -1, -1, 1, -1, -1;
  base *= std::sqrt(0.75);  // sample covariance exactly I
  const Eigen::RowVector2d v(1.5, -2.0);
  const double d_shift = metrics::frechet_distance(metrics::FeatureSet(base),
                                                   metrics::FeatureSet(Eigen::MatrixXd(base.rowwise() + v)));
  o.require(std::abs(d_shift - v.squaredNorm()) <= 1e-6, "shifted mean " + fmt("%.10g", d_shift));

  const Eigen::Vector2d ma(0.0, 0.0), mb(1.0, 0.5);
  const Eigen::Matrix2d ab = ca * cb;
  const double population = (ma - mb).squaredNorm() + ca.trace() + cb.trace() -
                            2.0 * std::sqrt(ab.trace() + 2.0 * std::sqrt(ab.determinant()));
  const double sampled = metrics::frechet_distance(metrics::FeatureSet(gaussian(rng, 5000, ma, ca)),
                                                   metrics::FeatureSet(gaussian(rng, 5000, mb, cb)));
  const double rel = std::abs(sampled - population) / population;
  o.require(rel <= 0.05, "gaussian relative error " + fmt("%.3f", rel));
  if (o.pass) {
    o.detail = "same " + fmt("%.2g", d_same) + ", shift " + fmt("%.12g", d_shift) + ", gaussian " +
               fmt("%.4f", sampled) + " vs " + fmt("%.4f", population);
  }
  return o;
}

Outcome a7_attention_invariants() {
  Outcome o;
  attn::AttnCheckOptions opts;
  opts.gradients = false;
  std::size_t runs = 0;
  for (std::size_t grid = 2; grid <= 8; ++grid) {
    for (std::size_t objects = 0; objects <= 3; ++objects) {
      for (double beta : {0.0, 0.7}) {
        attn::DeskSpec s;
        s.grid_w = s.grid_h = grid;
        s.objects = objects;
        s.beta_o = beta;
        s.beta_w = -beta;
        s.seed = 100 * grid + 10 * objects + (beta != 0.0);
        const auto r = attn::run_attention_checks(s, opts);
        ++runs;
        for (const auto& c : r.checks) {
          const bool applicable = !(c.name == "zero_gate_identity" && beta != 0.0);
          if (applicable && c.status != attn::CheckStatus::kPass) {
            o.require(false, c.name + " at " + std::to_string(grid) + "x" + std::to_string(grid) +
                                 " O=" + std::to_string(objects) + ": " + c.detail);
          }
        }
      }
    }
  }
  if (o.pass) o.detail = std::to_string(runs) + " instances, grids 2..8, O 0..3";
  return o;
}

Outcome a8_gradients() {
  Outcome o;
  attn::AttnCheckOptions opts;
  opts.eps = 1e-5;
  const auto r = attn::run_attention_checks(attn::DeskSpec{}, opts);
  double worst = 0.0;
  for (const char* name : {"gradient_cross_attention", "gradient_masked_fusion", "gradient_biow_forward"}) {
    const auto* c = r.find(name);
    if (!c) {
      o.require(false, std::string(name) + " missing");
      continue;
    }
    worst = std::max(worst, c->value);
    o.require(c->status == attn::CheckStatus::kPass && c->value <= 1e-4,
              std::string(name) + " " + fmt("%.3g", c->value));
  }
  if (o.pass) o.detail = "max relative error " + fmt("%.3g", worst);
  return o;
}

Outcome a9_determinism() {
  Outcome o;
  const fs::path root = (fs::current_path() / "test_scratch") / "neptune_acceptance_a9";
  fs::remove_all(root);
  auto run = [&](const std::string& cmd, const std::vector<std::pair<std::string, std::string>>& kv) {
    cli::RunConfig c;
    for (const auto& [k, v] : kv) c.set(k, v);
    std::ostringstream out, err;
    const int code = cli::execute(cmd, c, out, err);
    if (code != 0) o.require(false, cmd + " exited " + std::to_string(code) + ": " + err.str());
  };
  for (const char* rep : {"r1", "r2"}) {
    const std::string d = (root / rep).string();
    run("synth", {{"output_dir", d + "/synth"}, {"n_images", "200"}, {"seed", "42"}});
    run("atdf", {{"output_dir", d + "/atdf"},
                 {"manifest", d + "/synth/manifest.json"},
                 {"predictions", d + "/synth/predictions.json"}});
    run("select", {{"output_dir", d + "/select"},
                   {"distribution", d + "/atdf/distribution.json"},
                   {"pool", d + "/synth/pool.json"}});
  }
  if (o.pass) {
    for (const char* f : {"atdf/atdf.csv", "select/selection.json"}) {
      const auto a = io::read_text((root / "r1" / f).string());
      const auto b = io::read_text((root / "r2" / f).string());
      o.require(a == b, std::string(f) + " differs");
      if (o.pass) o.detail += (o.detail.empty() ? "" : ", ") + std::string(f) + " " + std::to_string(a.size()) + " bytes identical";
    }
  }
  fs::remove_all(root);
  return o;
}

struct Criterion {
  const char* id;
  const char* title;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"A1", "box accuracy endpoints", 1.0, a1_accuracy_endpoints},
      {"A2", "ATDF dynamics", 5.0, a2_atdf_dynamics},
      {"A3", "difficulty ranking fidelity", 30.0, a3_ranking_fidelity},
      {"A4", "selection invariances", 10.0, a4_selection_invariances},
      {"A5", "mAP oracle equivalence", 1.0, a5_map_oracle},
      {"A6", "Frechet distance", 10.0, a6_frechet},
      {"A7", "attention invariants", 5.0, a7_attention_invariants},
      {"A8", "gradient check", 60.0, a8_gradients},
      {"A9", "end-to-end determinism", 60.0, a9_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) o.require(false, "over time budget " + fmt("%.0f s", c.budget_seconds));
    failures += !o.pass;
    std::printf("%s %s  %s (%.3f s): %s\n", c.id, o.pass ? "PASS" : "FAIL", c.title, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
