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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "neptune/matching.hpp"
#include "neptune/synth.hpp"
#include "test_support.hpp"

namespace neptune::synth {
namespace {

using testing::box;

// Reference SplitMix64 output for state 0.
TEST(KeyedRngTest, SplitmixReference) {
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafull);
  std::uint64_t state = 0;
  auto next = [&] {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  EXPECT_EQ(next(), 0xe220a8397b1dcdafull);
  EXPECT_EQ(next(), 0x6e789e6aa1b965f4ull);
  EXPECT_EQ(next(), 0x06c45d188009454full);
}

TEST(KeyedRngTest, KeysSeparateStreams) {
  KeyedRng a(7, 1, 2, 0), b(7, 1, 2, 0), c(7, 1, 2, 1), d(7, 2, 1, 0);
  const auto first = a.next();
  EXPECT_EQ(first, b.next());
  EXPECT_NE(first, c.next());
  EXPECT_NE(first, d.next());
  KeyedRng u(1, 2, 3, 4);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
    EXPECT_LT(u.index(5), 5u);
  }
  EXPECT_THROW(u.index(0), std::invalid_argument);
}

AttributeTaxonomy env_taxonomy() {
  return AttributeTaxonomy({std::vector<std::string>{"ship", "buoy", "person"}, {"shore", "aerial"},
                            {"sea", "harbor"}, {"sunny", "foggy", "rainy", "night"}});
}

DifficultyProfile env_profile(const AttributeTaxonomy& t) {
  auto p = DifficultyProfile::uniform(t, 0.0);
  p.set({Dimension::kEnvironment, "sunny"}, {0.1, 0.0});
  p.set({Dimension::kEnvironment, "foggy"}, {0.3, 0.0});
  p.set({Dimension::kEnvironment, "rainy"}, {0.5, 0.0});
  p.set({Dimension::kEnvironment, "night"}, {0.7, 0.0});
  return p;
}

TEST(GenerateScenario, ZeroRatesGiveExactPredictions) {
  const auto t = taxonomy_default();
  const auto s = generate_scenario(t, DifficultyProfile::uniform(t, 0.0), ScenarioSpec{}, 3);
  ASSERT_EQ(s.records.size(), 200u);
  ASSERT_EQ(s.predictions.size(), 200u);
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    const auto& r = s.records[i];
    EXPECT_TRUE(validate_record(r, t).ok());
    ASSERT_EQ(s.predictions[i].size(), r.objects.size());
    EXPECT_GE(r.objects.size(), 4u);
    EXPECT_LE(r.objects.size(), 12u);
    for (std::size_t j = 0; j < r.objects.size(); ++j) {
      EXPECT_EQ(s.predictions[i][j].bbox, r.objects[j].bbox);
      EXPECT_EQ(s.predictions[i][j].category, r.objects[j].category);
      EXPECT_EQ(s.predictions[i][j].confidence, 1.0);
      const auto& b = r.objects[j].bbox;
      EXPECT_GE(b.width(), 16.0);
      EXPECT_LE(b.width(), 160.0);
      EXPECT_GE(b.x1, 0.0);
      EXPECT_LE(b.x2, 640.0);
    }
  }
  EXPECT_EQ(s.records[7].id, "img_00007");
}

TEST(GenerateScenario, FullMissRemovesCategory) {
  const auto t = taxonomy_default();
  auto p = DifficultyProfile::uniform(t, 0.2);
  p.set({Dimension::kCategory, "buoy"}, {0.2, 1.0});
  const auto s = generate_scenario(t, p, ScenarioSpec{}, 11);
  std::size_t buoys = 0, others = 0;
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    for (const auto& o : s.records[i].objects) buoys += o.category == "buoy";
    for (const auto& pr : s.predictions[i]) {
      EXPECT_NE(pr.category, "buoy");
      ++others;
    }
  }
  EXPECT_GT(buoys, 0u);
  EXPECT_GT(others, 0u);
}

TEST(GenerateScenario, Deterministic) {
  const auto t = taxonomy_default();
  const auto a = generate_scenario(t, default_profile(), ScenarioSpec{}, 5);
  const auto b = generate_scenario(t, default_profile(), ScenarioSpec{}, 5);
  const auto c = generate_scenario(t, default_profile(), ScenarioSpec{}, 6);
  ASSERT_EQ(a.records.size(), b.records.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i], b.records[i]);
    EXPECT_EQ(a.predictions[i], b.predictions[i]);
    differs |= !(a.records[i] == c.records[i]);
  }
  EXPECT_TRUE(differs);
}

TEST(GenerateScenario, ImagesIndependentOfCount) {
  const auto t = taxonomy_default();
  ScenarioSpec small;
  small.n_images = 20;
  const auto a = generate_scenario(t, default_profile(), small, 9);
  const auto b = generate_scenario(t, default_profile(), ScenarioSpec{}, 9);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(a.records[i], b.records[i]);
    EXPECT_EQ(a.predictions[i], b.predictions[i]);
  }
}

TEST(GenerateScenario, DegradedPredictionsFollowContract) {
  const auto t = taxonomy_default();
  const auto p = DifficultyProfile::uniform(t, 0.3);
  const auto s = generate_scenario(t, p, ScenarioSpec{}, 21);
  std::size_t degraded = 0, total = 0;
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    ASSERT_EQ(s.predictions[i].size(), s.records[i].objects.size());
    for (std::size_t j = 0; j < s.predictions[i].size(); ++j) {
      const auto& pr = s.predictions[i][j];
      ++total;
      EXPECT_TRUE(pr.bbox.valid());
      if (pr.confidence == 1.0) {
        EXPECT_EQ(pr.bbox, s.records[i].objects[j].bbox);
        continue;
      }
      ++degraded;
      EXPECT_GT(pr.confidence, 0.5);
      EXPECT_LT(pr.confidence, 1.0);
    }
  }
  // Composite rate 1 - 0.7^4 = 0.7599.
  const double frac = static_cast<double>(degraded) / static_cast<double>(total);
  EXPECT_NEAR(frac, 1.0 - std::pow(0.7, 4), 0.03);
  EXPECT_NEAR(composite_error_rate(p, s.records[0], "ship"), 1.0 - std::pow(0.7, 4), 1e-15);
  EXPECT_EQ(composite_miss_probability(p, s.records[0], "ship"), 0.0);
}

TEST(GenerateScenario, ValidatesInputs) {
  const auto t = taxonomy_default();
  const auto p = default_profile();
  ScenarioSpec bad;
  bad.n_images = 0;
  EXPECT_THROW(generate_scenario(t, p, bad, 1), ValidationError);
  bad = ScenarioSpec{};
  bad.objects_min = 5, bad.objects_max = 4;
  EXPECT_THROW(generate_scenario(t, p, bad, 1), ValidationError);
  bad = ScenarioSpec{};
  bad.box_max = 700;
  EXPECT_THROW(generate_scenario(t, p, bad, 1), ValidationError);
  bad = ScenarioSpec{};
  bad.box_min = 0;
  EXPECT_THROW(generate_scenario(t, p, bad, 1), ValidationError);
  bad = ScenarioSpec{};
  bad.box_min = 50, bad.box_max = 40;
  EXPECT_THROW(generate_scenario(t, p, bad, 1), ValidationError);
  auto incomplete = p;
  incomplete.rates.erase({Dimension::kEnvironment, "night"});
  EXPECT_THROW(generate_scenario(t, incomplete, ScenarioSpec{}, 1), ValidationError);
  auto out_of_range = p;
  out_of_range.set({Dimension::kCategory, "ship"}, {1.2, 0.0});
  EXPECT_FALSE(out_of_range.validate(t).ok());
  EXPECT_THROW(p.at({Dimension::kEnvironment, "hail"}), ValidationError);
}

TEST(PerturbBox, NoiseZeroIsIdentity) {
  const BBox b = box(10.5, 20.25, 30, 90);
  EXPECT_EQ(perturb_box(b, 0.0, 123), b);
}

TEST(PerturbBox, UnitBoxMatchesRecordedDraws) {
  const BBox unit = box(0, 0, 1, 1);
  const std::uint64_t seed = 2026;
  KeyedRng draws(seed, 0, 0, 2);
  double u[4];
  for (double& v : u) v = draws.uniform();
  auto jitter = [](double v, double uu) { return std::clamp(v + (2 * uu - 1) * 0.3, 0.0, 640.0); };
  BBox want{jitter(0, u[0]), jitter(0, u[1]), jitter(1, u[2]), jitter(1, u[3])};
  // Sides stay above 0.1 here, so no re-centring happens.
  ASSERT_GE(want.x2 - want.x1, 0.1);
  ASSERT_GE(want.y2 - want.y1, 0.1);
  EXPECT_EQ(perturb_box(unit, 0.3, seed), want);
}

TEST(PerturbBox, AlwaysValidAndInFrame) {
  for (std::uint64_t seed = 0; seed < 3000; ++seed) {
    KeyedRng g(seed, 1, 1, 0);
    const double w = 1 + g.uniform() * 200, h = 1 + g.uniform() * 200;
    const double x = g.uniform() * (640 - w), y = g.uniform() * (640 - h);
    const BBox b = box(x, y, x + w, y + h);
    const double noise = g.uniform() * 2.0;
    const BBox out = perturb_box(b, noise, seed);
    ASSERT_TRUE(out.x1 < out.x2 && out.y1 < out.y2) << seed;
    EXPECT_GE(out.x1, 0.0);
    EXPECT_GE(out.y1, 0.0);
    EXPECT_LE(out.x2, 640.0);
    EXPECT_LE(out.y2, 640.0);
    EXPECT_GE(out.x2 - out.x1, 0.1 * w - 1e-9);
    EXPECT_GE(out.y2 - out.y1, 0.1 * h - 1e-9);
  }
}

TEST(PerturbBox, CornerBoxStaysInFrame) {
  const BBox corner = box(0, 0, 10, 10);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const BBox out = perturb_box(corner, 1.5, seed);
    EXPECT_GE(out.x1, 0.0);
    EXPECT_GE(out.x2 - out.x1, 1.0 - 1e-12);
  }
}

TEST(ExpectedOrderingTest, Examples) {
  const auto t = AttributeTaxonomy(
      {std::vector<std::string>{"ship"}, {"shore"}, {"sea"}, {"sunny", "night"}});
  auto p = DifficultyProfile::uniform(t, 0.0);
  p.set({Dimension::kEnvironment, "sunny"}, {0.1, 0.0});
  p.set({Dimension::kEnvironment, "night"}, {0.7, 0.0});
  const auto e = expected_ordering(p, t, Dimension::kEnvironment);
  EXPECT_EQ(e.flatten(), (std::vector<std::string>{"night", "sunny"}));
  ASSERT_EQ(e.tier_rates.size(), 2u);
  EXPECT_EQ(e.tier_rates[0], 0.7);
  std::vector<std::string> good = {"night", "sunny"}, bad = {"sunny", "night"};
  EXPECT_TRUE(e.accepts(good));
  EXPECT_FALSE(e.accepts(bad));

  const auto tied = expected_ordering(DifficultyProfile::uniform(t, 0.2), t, Dimension::kEnvironment);
  ASSERT_EQ(tied.tiers.size(), 1u);
  EXPECT_TRUE(tied.accepts(good));
  EXPECT_TRUE(tied.accepts(bad));
  std::vector<std::string> partial = {"night"};
  EXPECT_FALSE(tied.accepts(partial));

  const auto t4 = env_taxonomy();
  const auto four = expected_ordering(env_profile(t4), t4, Dimension::kEnvironment);
  EXPECT_EQ(four.tiers.size(), 4u);
  EXPECT_EQ(four.flatten(), (std::vector<std::string>{"night", "rainy", "foggy", "sunny"}));
}

TEST(Spearman, Examples) {
  std::vector<double> a = {1, 2, 3, 4}, b = {10, 20, 30, 40}, c = {4, 3, 2, 1};
  EXPECT_NEAR(spearman(a, b), 1.0, 1e-15);
  EXPECT_NEAR(spearman(a, c), -1.0, 1e-15);
  std::vector<double> d = {1, 3, 2, 4};
  // d^2 sum = 2 -> 1 - 6*2/(4*15) = 0.8.
  EXPECT_NEAR(spearman(a, d), 0.8, 1e-15);
  std::vector<double> ties = {1, 1, 2, 3};
  // Ranks 1.5, 1.5, 3, 4 vs 1, 2, 3, 4.
  EXPECT_NEAR(spearman(a, ties), 0.9486832980505138, 1e-12);
  std::vector<double> flat = {2, 2, 2, 2}, shorter = {1, 2, 3};
  EXPECT_THROW(spearman(a, flat), std::invalid_argument);
  EXPECT_THROW(spearman(a, shorter), std::invalid_argument);
  std::vector<double> one = {1};
  EXPECT_THROW(spearman(one, one), std::invalid_argument);
}

// Empirical mean (1 - Acc) per environment must order like the injected rates.
TEST(Calibration, EmpiricalDifficultyOrdersLikeRates) {
  const auto t = env_taxonomy();
  const auto p = env_profile(t);
  const auto expected = expected_ordering(p, t, Dimension::kEnvironment);
  EngineConfig config;
  int agree = 0;
  const int seeds = 40;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto s = generate_scenario(t, p, ScenarioSpec{}, static_cast<std::uint64_t>(seed));
    std::map<std::string, std::pair<double, int>> sums;
    for (std::size_t i = 0; i < s.records.size(); ++i) {
      for (const auto& sb : score_image(s.records[i], s.predictions[i], config)) {
        auto& [sum, n] = sums[sb.environment];
        sum += 1.0 - sb.accuracy;
        ++n;
      }
    }
    std::vector<std::string> ranking;
    for (const auto& [name, v] : sums) ranking.push_back(name);
    std::sort(ranking.begin(), ranking.end(), [&](const auto& a, const auto& b) {
      return sums[a].first / sums[a].second > sums[b].first / sums[b].second;
    });
    agree += ranking.size() == 4 && expected.accepts(ranking);
  }
  EXPECT_GE(agree, static_cast<int>(std::ceil(0.95 * seeds)));
}

TEST(GeneratePool, ScoresAndIds) {
  const auto t = taxonomy_default();
  ScenarioSpec spec;
  spec.n_images = 100;
  const auto a = generate_pool(t, default_profile(), spec, 3);
  const auto b = generate_pool(t, default_profile(), spec, 3);
  ASSERT_EQ(a.size(), 100u);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, a[i].record.id);
    ids.insert(a[i].id);
    EXPECT_GE(a[i].layout_score, 0.0);
    EXPECT_LT(a[i].layout_score, 1.0);
    EXPECT_GE(a[i].semantic_score, 0.0);
    EXPECT_LT(a[i].semantic_score, 1.0);
    EXPECT_EQ(a[i].layout_score, b[i].layout_score);
    EXPECT_EQ(a[i].predictions, b[i].predictions);
  }
  EXPECT_EQ(ids.size(), 100u);
  EXPECT_EQ(a[0].id, "cand_00000");
  // The pool does not reuse the evaluation scenario's geometry.
  const auto scen = generate_scenario(t, default_profile(), spec, 3);
  EXPECT_NE(scen.records[0].objects, a[0].record.objects);
}

}  // namespace
}  // namespace neptune::synth
