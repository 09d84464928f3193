// Copyright 2026 The shapeprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "shapeprobe/metrics.hpp"
#include "shapeprobe/oracles.hpp"
#include "shapeprobe/probing.hpp"
#include "test_support.hpp"

namespace shapeprobe {
namespace {

const TexturePool& seen_pool() {
  static const TexturePool pool = procedural_pool(7, 112);
  return pool;
}

const TexturePool& unseen_pool() {
  static const TexturePool pool = procedural_pool(99, 61);
  return pool;
}

struct Split {
  Dataset train, val;
};

Split make_split(const FeatureConfig& c, std::uint64_t seed) {
  return {generate_scenes(c, 30, seed, seen_pool(), "train"),
          generate_scenes(c, 20, seed, seen_pool(), "val")};
}

const Split& shape_only() {
  static const Split s = make_split(FeatureConfig{}, 31);
  return s;
}

const Split& textured() {
  static const Split s = [] {
    FeatureConfig c;
    c.texture_feature = true;
    return make_split(c, 32);
  }();
  return s;
}

std::vector<double> ious(const Oracle& o, const Dataset& ds) {
  std::vector<double> v;
  for (const auto& s : ds.scenes) v.push_back(iou(predict(o, s), s.target_mask));
  return v;
}

TEST(Oracle, NamesRoundTrip) {
  for (auto k : {OracleKind::kShapeTemplate, OracleKind::kTextureLookup, OracleKind::kAnyForeground})
    EXPECT_EQ(parse_oracle_kind(to_string(k)), k);
  EXPECT_THROW(parse_oracle_kind("cnn"), ConfigError);
}

TEST(Oracle, EmptyTrainingSetIsAFitError) {
  EXPECT_THROW(fit_oracle(OracleKind::kShapeTemplate, Dataset{}), ValidationError);
  Dataset no_targets = shape_only().train;
  for (auto& s : no_targets.scenes) s.objects.clear();
  EXPECT_THROW(fit_oracle(OracleKind::kShapeTemplate, no_targets), ValidationError);
  EXPECT_THROW(fit_oracle(OracleKind::kTextureLookup, no_targets), ValidationError);
}

TEST(ShapeTemplate, TemplateAlignsWithEveryTarget) {
  const Oracle o = fit_oracle(OracleKind::kShapeTemplate, shape_only().train);
  for (const auto& s : shape_only().val.scenes)
    EXPECT_GE(alignment_iou(o.shape_template, ShapeSignature(s.target_mask)), 0.95);
}

TEST(ShapeTemplate, SurvivesTextureRemovalButNotShapeProbes) {
  const Split& d = shape_only();
  const Oracle o = fit_oracle(OracleKind::kShapeTemplate, d.train);
  for (double v : ious(o, d.val)) EXPECT_GE(v, 0.9);
  for (double v : ious(o, make_rm(d.val, unseen_pool(), 1).data)) EXPECT_GE(v, 0.9);
  EXPECT_LE(stable_mean(ious(o, make_aff(d.val, 1).data)), 0.2);
  EXPECT_LE(stable_mean(ious(o, make_shuf(d.val, 1).data)), 0.2);
}

TEST(TextureLookup, LearnsExactlyTheTargetTextures) {
  const Split& d = textured();
  const Oracle o = fit_oracle(OracleKind::kTextureLookup, d.train);
  const auto& target = d.train.manifest.partition.target;
  EXPECT_EQ(o.texture_ids, std::set<std::string>(target.begin(), target.end()));
  EXPECT_EQ(to_json(o).at("texture_ids").size(), 5u);
}

TEST(TextureLookup, SurvivesShapeProbesButNotTextureRemoval) {
  const Split& d = textured();
  const Oracle o = fit_oracle(OracleKind::kTextureLookup, d.train);
  for (double v : ious(o, d.val)) EXPECT_GE(v, 0.9);
  for (double v : ious(o, make_aff(d.val, 2).data)) EXPECT_GE(v, 0.9);
  EXPECT_LE(stable_mean(ious(o, make_rm(d.val, unseen_pool(), 2).data)), 0.2);
}

TEST(TextureLookup, ImageModeMatchesTextureIds) {
  const Split& d = textured();
  OracleOptions opts;
  opts.image_mode = true;
  const Oracle o = fit_oracle(OracleKind::kTextureLookup, d.train, opts);
  EXPECT_TRUE(o.texture_ids.empty());
  EXPECT_GE(stable_mean(ious(o, d.val)), 0.9);
  EXPECT_LE(stable_mean(ious(o, make_rm(d.val, unseen_pool(), 3).data)), 0.2);
}

TEST(AnyForeground, PredictsEveryInstance) {
  const Oracle o = fit_oracle(OracleKind::kAnyForeground, shape_only().train);
  for (const auto& s : shape_only().val.scenes) {
    EXPECT_EQ(predict(o, s), s.occupied());
    EXPECT_LT(iou(predict(o, s), s.target_mask), 1.0);
  }
  FeatureConfig c;
  c.singular = true;
  const Dataset single = generate_scenes(c, 5, 33, seen_pool());
  for (double v : ious(o, single)) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Oracle, PredictionsAreDeterministic) {
  const Oracle a = fit_oracle(OracleKind::kShapeTemplate, shape_only().train);
  const Oracle b = fit_oracle(OracleKind::kShapeTemplate, shape_only().train);
  for (const auto& s : shape_only().val.scenes) EXPECT_EQ(predict(a, s), predict(b, s));
}

TEST(ColorSignature, FlatRegion) {
  RasterImage img(6, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) {
      img.at(x, y, 0) = 10;
      img.at(x, y, 1) = 20;
      img.at(x, y, 2) = 30;
    }
  LabelMask m(6, 6);
  for (auto& v : m.bytes()) v = 1;
  const ColorSignature s = color_signature(img, m);
  EXPECT_DOUBLE_EQ(s.r, 10);
  EXPECT_DOUBLE_EQ(s.g, 20);
  EXPECT_DOUBLE_EQ(s.b, 30);
  EXPECT_NEAR(s.local_std, 0, 1e-9);
  EXPECT_DOUBLE_EQ(s.distance(s), 0);
}

}  // namespace
}  // namespace shapeprobe
