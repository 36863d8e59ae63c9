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

#include <random>

#include "neptune/core_model.hpp"
#include "test_support.hpp"

namespace neptune {
namespace {

using testing::box;
using testing::record;

TEST(Taxonomy, DefaultCounts) {
  const auto t = taxonomy_default();
  EXPECT_EQ(t.attributes(Dimension::kCategory).size(), 5u);
  EXPECT_EQ(t.attributes(Dimension::kViewpoint).size(), 3u);
  EXPECT_EQ(t.attributes(Dimension::kLocation).size(), 4u);
  EXPECT_EQ(t.attributes(Dimension::kEnvironment).size(), 6u);
  EXPECT_EQ(t.total_attributes(), 18u);
}

TEST(Taxonomy, FixedDimensionOrder) {
  ASSERT_EQ(kAllDimensions.size(), 4u);
  EXPECT_EQ(dimension_name(kAllDimensions[0]), "category");
  EXPECT_EQ(dimension_name(kAllDimensions[1]), "viewpoint");
  EXPECT_EQ(dimension_name(kAllDimensions[2]), "location");
  EXPECT_EQ(dimension_name(kAllDimensions[3]), "environment");
  for (Dimension d : kAllDimensions) EXPECT_EQ(parse_dimension(dimension_name(d)), d);
  EXPECT_THROW(parse_dimension("weather"), ValidationError);
}

TEST(Taxonomy, LookupAndPosition) {
  const auto t = taxonomy_default();
  EXPECT_TRUE(t.contains(Dimension::kViewpoint, "aerial"));
  EXPECT_FALSE(t.contains(Dimension::kLocation, "mountain"));
  EXPECT_EQ(t.position(Dimension::kEnvironment, "night"), 5u);
  EXPECT_FALSE(t.position(Dimension::kEnvironment, "snow").has_value());
}

TEST(Taxonomy, RejectsEmptyAndDuplicates) {
  std::array<std::vector<std::string>, 4> lists = {
      std::vector<std::string>{"ship"}, {"shore"}, {"sea"}, {}};
  EXPECT_THROW(AttributeTaxonomy{lists}, ValidationError);
  lists[3] = {"sunny", "sunny"};
  EXPECT_THROW(AttributeTaxonomy{lists}, ValidationError);
  lists[3] = {"sunny"};
  EXPECT_NO_THROW(AttributeTaxonomy{lists});
}

TEST(BBox, Validity) {
  EXPECT_TRUE(box(0, 0, 1, 1).valid());
  EXPECT_FALSE(box(1, 0, 1, 1).valid());
  EXPECT_FALSE(box(0, 2, 1, 1).valid());
  EXPECT_FALSE(box(0, 0, std::numeric_limits<double>::infinity(), 1).valid());
  EXPECT_FALSE(box(0, 0, std::nan(""), 1).valid());
  EXPECT_DOUBLE_EQ(box(1, 2, 4, 6).area(), 12.0);
}

TEST(BinaryMask, ConstructionContract) {
  EXPECT_THROW(BinaryMask(0, 3), ValidationError);
  EXPECT_THROW(BinaryMask(2, 2, {1, 0, 1}), ValidationError);
  EXPECT_THROW(BinaryMask(2, 1, {1, 2}), ValidationError);
  BinaryMask m(3, 2);
  EXPECT_EQ(m.count(), 0u);
  m.set(2, 1);
  EXPECT_TRUE(m.at(2, 1));
  EXPECT_EQ(m.data()[5], 1);
  EXPECT_EQ(BinaryMask::full(3, 2).count(), 6u);
}

TEST(ValidateRecord, AcceptsValid) {
  const auto t = taxonomy_default();
  auto r = record("a", {{"ship", box(0, 0, 10, 10)}}, "aerial");
  EXPECT_TRUE(validate_record(r, t).ok());
}

TEST(ValidateRecord, UnknownLocation) {
  const auto t = taxonomy_default();
  auto r = record("a", {{"ship", box(0, 0, 10, 10)}}, "shore", "mountain");
  const auto v = validate_record(r, t);
  ASSERT_EQ(v.violations.size(), 1u);
  EXPECT_EQ(v.violations[0].field, "location");
}

TEST(ValidateRecord, DegenerateBox) {
  const auto t = taxonomy_default();
  auto r = record("a", {{"ship", box(5, 0, 5, 10)}});
  const auto v = validate_record(r, t);
  ASSERT_EQ(v.violations.size(), 1u);
  EXPECT_EQ(v.violations[0].field, "objects[0].bbox");
}

TEST(ValidateRecord, CollectsEveryViolation) {
  const auto t = taxonomy_default();
  auto r = record("", {{"whale", box(0, 0, -1, 1)}}, "space", "mountain", "snow");
  const auto v = validate_record(r, t);
  EXPECT_EQ(v.violations.size(), 6u);
  EXPECT_NE(v.describe().find("objects[0].category"), std::string::npos);
}

// Mutating one field of a valid record yields violations of exactly one field.
TEST(ValidateRecord, SingleMutationProperty) {
  const auto t = taxonomy_default();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<GroundTruthObject> objs;
    for (int i = 0; i < 3; ++i) objs.push_back({"buoy", testing::random_box(rng)});
    auto r = record("img", objs, "ship", "harbor", "foggy");
    ASSERT_TRUE(validate_record(r, t).ok());
    std::string expected;
    switch (trial % 7) {
      case 0: r.id.clear(); expected = "id"; break;
      case 1: r.viewpoint = "orbit"; expected = "viewpoint"; break;
      case 2: r.location = "desert"; expected = "location"; break;
      case 3: r.environment = "hail"; expected = "environment"; break;
      case 4: r.objects[1].category = "kraken"; expected = "objects[1].category"; break;
      case 5: std::swap(r.objects[2].bbox.x1, r.objects[2].bbox.x2); expected = "objects[2].bbox"; break;
      case 6: r.objects[0].bbox.y2 = r.objects[0].bbox.y1; expected = "objects[0].bbox"; break;
    }
    const auto v = validate_record(r, t);
    ASSERT_EQ(v.violations.size(), 1u) << trial;
    EXPECT_EQ(v.violations[0].field, expected);
  }
}

TEST(ValidatePredictions, Fields) {
  const auto t = taxonomy_default();
  std::vector<Prediction> p = {{"ship", box(0, 0, 1, 1), 0.5},
                               {"ship", box(0, 0, 1, 1), 1.5},
                               {"kelp", box(0, 0, 0, 1), -0.1}};
  const auto v = validate_predictions(p, t);
  ASSERT_EQ(v.violations.size(), 4u);
  EXPECT_EQ(v.violations[0].field, "predictions[1].confidence");
  EXPECT_EQ(v.violations[1].field, "predictions[2].category");
}

TEST(EngineConfig, DefaultsAndRanges) {
  EngineConfig c;
  EXPECT_DOUBLE_EQ(c.gamma, 0.5);
  EXPECT_DOUBLE_EQ(c.delta, 1.0);
  EXPECT_DOUBLE_EQ(c.m0, 0.99);
  EXPECT_DOUBLE_EQ(c.initial_momentum, 0.99);
  EXPECT_EQ(c.batch_size, 16u);
  EXPECT_DOUBLE_EQ(c.iou_assign_threshold, 0.5);
  EXPECT_DOUBLE_EQ(c.tau_layout, 0.5);
  EXPECT_DOUBLE_EQ(c.tau_semantic, 0.25);
  EXPECT_EQ(c.top_k, 10000u);
  EXPECT_FALSE(c.include_missed_gt);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_NO_THROW(c.validate());

  auto bad = c;
  bad.gamma = 1.5;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = c;
  bad.delta = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = c;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = c;
  bad.m0 = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

}  // namespace
}  // namespace neptune
