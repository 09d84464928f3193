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

#include <map>
#include <set>

#include <gtest/gtest.h>

#include "shapeprobe/alignment.hpp"
#include "shapeprobe/dataset.hpp"
#include "shapeprobe/hashing.hpp"
#include "test_support.hpp"

namespace shapeprobe {
namespace {

using testing::small_config;
using testing::TempDir;

const TexturePool& seen_pool() {
  static const TexturePool pool = procedural_pool(7, 112);
  return pool;
}

void expect_scene_invariants(const SceneInstance& s, const FeatureConfig& cfg) {
  // Target mask is the union of target instances.
  ASSERT_EQ(s.target_mask, s.union_of_targets());
  // Instances are pairwise disjoint; parts tile their object.
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    for (std::size_t j = i + 1; j < s.objects.size(); ++j)
      ASSERT_FALSE(intersects(s.objects[i].mask, s.objects[j].mask));
    LabelMask parts(cfg.width, cfg.height);
    for (const auto& p : s.objects[i].parts) {
      ASSERT_FALSE(intersects(parts, p.mask));
      parts = mask_or(parts, p.mask);
      ASSERT_FALSE(p.texture.empty());
    }
    ASSERT_EQ(parts, s.objects[i].mask);
  }
  ASSERT_EQ(std::count_if(s.objects.begin(), s.objects.end(), [](const SceneObject& o) { return o.is_target; }), 1);
}

TEST(FeatureConfig, MutuallyExclusiveFlagsAreRejected) {
  FeatureConfig c;
  c.complex_objects = true;
  c.singular = true;
  c.semi_singular = true;
  EXPECT_THROW(c.validate(), ConfigError);
  FeatureConfig d;
  d.semi_singular = true;
  EXPECT_THROW(d.validate(), ConfigError);
  FeatureConfig e;
  e.structure_feature = true;
  EXPECT_THROW(e.validate(), ConfigError);
  FeatureConfig f;
  f.max_object_size = 300;
  EXPECT_THROW(f.validate(), ConfigError);
}

TEST(FeatureConfig, JsonRoundTripAndUnknownKeys) {
  FeatureConfig c = small_config();
  c.complex_objects = true;
  c.structure_feature = true;
  c.sub_object_count = 4;
  const FeatureConfig d = feature_config_from_json(to_json(c));
  EXPECT_EQ(to_json(d), to_json(c));
  EXPECT_THROW(feature_config_from_json({{"colour", true}}), ConfigError);
  EXPECT_THROW(feature_config_from_json({{"canvas", "big"}}), ConfigError);
}

TEST(Generate, SingularScenesHaveOneInstance) {
  FeatureConfig c = small_config();
  c.singular = true;
  const Dataset ds = generate_scenes(c, 20, 1, seen_pool());
  for (const auto& s : ds.scenes) {
    ASSERT_EQ(s.objects.size(), 1u);
    expect_scene_invariants(s, c);
  }
}

TEST(Generate, TextureFeatureUsesThePartition) {
  FeatureConfig c = small_config();
  c.texture_feature = true;
  const Dataset ds = generate_scenes(c, 30, 2, seen_pool());
  const auto& part = ds.manifest.partition;
  ASSERT_EQ(part.target.size(), 5u);
  const std::set<std::string> tgt(part.target.begin(), part.target.end());
  const std::set<std::string> non(part.non_target.begin(), part.non_target.end());
  const std::set<std::string> bg(part.background.begin(), part.background.end());
  for (const auto& s : ds.scenes) {
    expect_scene_invariants(s, c);
    ASSERT_TRUE(bg.count(s.background_texture));
    for (const auto& o : s.objects)
      for (const auto& id : o.texture_ids()) ASSERT_TRUE((o.is_target ? tgt : non).count(id)) << id;
  }
}

TEST(Generate, ComplexAndSemiSingularScenes) {
  FeatureConfig c = small_config();
  c.complex_objects = true;
  c.semi_singular = true;
  c.structure_feature = true;
  const Dataset ds = generate_scenes(c, 20, 3, seen_pool());
  for (const auto& s : ds.scenes) {
    expect_scene_invariants(s, c);
    ASSERT_EQ(s.objects.size(), 2u);
    for (const auto& o : s.objects) {
      ASSERT_EQ(o.complex, o.is_target);
      ASSERT_EQ(o.parts.size() > 1, o.is_target);
    }
  }
}

TEST(Generate, TargetsShareOneShape) {
  const FeatureConfig c;  // 256 x 256, objects 100-150 px
  const Dataset ds = generate_scenes(c, 40, 4, seen_pool());
  std::vector<ShapeSignature> sigs;
  for (const auto& s : ds.scenes) {
    expect_scene_invariants(s, c);
    sigs.emplace_back(s.target_mask);
  }
  for (std::size_t i = 0; i < sigs.size(); ++i)
    for (std::size_t j = i + 1; j < sigs.size(); ++j) ASSERT_GE(alignment_iou(sigs[i], sigs[j]), 0.95);
}

TEST(Generate, DistractorsDoNotLookLikeTheTarget) {
  const FeatureConfig c;
  const Dataset ds = generate_scenes(c, 30, 5, seen_pool());
  for (const auto& s : ds.scenes) {
    ASSERT_EQ(s.objects.size(), 2u);
    EXPECT_LT(alignment_iou(s.objects[0].mask, s.objects[1].mask), 0.8);
  }
}

TEST(Generate, ShapeOnlyDistractorsCoverTheSeenPool) {
  // With a 40-texture pool, 200 scenes reach every texture with probability
  // above 0.99 under uniform draws.
  const TexturePool pool = procedural_pool(8, 40);
  const Dataset ds = generate_scenes(small_config(), 200, 6, pool);
  std::set<std::string> hit;
  for (const auto& s : ds.scenes)
    for (const auto& o : s.objects)
      if (!o.is_target) hit.insert(o.dominant_texture());
  EXPECT_GE(hit.size(), 36u);
}

TEST(Generate, ShapeOnlyTargetAndDistractorTexturesAreExchangeable) {
  // Chi-square test of homogeneity between target and distractor texture
  // frequencies; 19 degrees of freedom, critical value 43.82 at 0.001.
  const TexturePool pool = procedural_pool(9, 20);
  const Dataset ds = generate_scenes(small_config(), 400, 7, pool);
  std::map<std::string, std::array<double, 2>> freq;
  double n[2] = {0, 0};
  for (const auto& s : ds.scenes)
    for (const auto& o : s.objects) {
      const int k = o.is_target ? 0 : 1;
      freq[o.dominant_texture()][k] += 1;
      n[k] += 1;
    }
  double chi2 = 0;
  for (const auto& [id, f] : freq) {
    const double row = f[0] + f[1];
    for (int k = 0; k < 2; ++k) {
      const double expected = row * n[k] / (n[0] + n[1]);
      chi2 += (f[k] - expected) * (f[k] - expected) / expected;
    }
  }
  EXPECT_LT(chi2, 43.82);
}

TEST(Generate, SplitsShareShapeButNotScenes) {
  FeatureConfig c = small_config();
  c.texture_feature = true;
  const Dataset train = generate_scenes(c, 5, 8, seen_pool(), "train");
  const Dataset val = generate_scenes(c, 5, 8, seen_pool(), "val");
  EXPECT_EQ(train.manifest.partition.target, val.manifest.partition.target);
  EXPECT_NE(train.manifest.scenes[0].seed, val.manifest.scenes[0].seed);
  EXPECT_GE(alignment_iou(train.scenes[0].target_mask, val.scenes[0].target_mask), 0.9);
  EXPECT_THROW(generate_scenes(c, 5, 8, seen_pool(), "test"), ConfigError);
}

TEST(Generate, ZeroScenesIsAnError) {
  EXPECT_THROW(generate_scenes(small_config(), 0, 1, seen_pool()), ValidationError);
}

TEST(Persist, SameSeedGivesIdenticalDirectories) {
  TempDir a, b;
  generate_dataset(small_config(), 10, 42, seen_pool(), a / "d");
  generate_dataset(small_config(), 10, 42, seen_pool(), b / "d");
  EXPECT_EQ(directory_hash(a / "d"), directory_hash(b / "d"));
  TempDir c;
  generate_dataset(small_config(), 10, 43, seen_pool(), c / "d");
  EXPECT_NE(directory_hash(a / "d"), directory_hash(c / "d"));
}

TEST(Persist, RegenerateFromManifestReproducesFiles) {
  TempDir a, b;
  FeatureConfig c = small_config();
  c.complex_objects = true;
  generate_dataset(c, 6, 5, seen_pool(), a / "d", false, "val");
  const DatasetManifest m = read_manifest(a / "d");
  EXPECT_EQ(m.split, "val");
  write_dataset(regenerate(m), b / "d");
  EXPECT_EQ(directory_hash(a / "d"), directory_hash(b / "d"));
}

TEST(Persist, ReadBackMatchesMemory) {
  TempDir dir;
  FeatureConfig c = small_config();
  c.complex_objects = true;
  const Dataset ds = generate_scenes(c, 4, 9, seen_pool());
  write_dataset(ds, dir / "d");
  const Dataset back = read_dataset(dir / "d");
  ASSERT_EQ(back.scenes.size(), 4u);
  EXPECT_EQ(manifest_hash(back.manifest), manifest_hash(ds.manifest));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(back.scenes[i].image, ds.scenes[i].image);
    EXPECT_EQ(back.scenes[i].target_mask, ds.scenes[i].target_mask);
    EXPECT_EQ(instance_json(back.scenes[i]), instance_json(ds.scenes[i]));
  }
}

TEST(Persist, RefusesNonEmptyOutputWithoutForce) {
  TempDir dir;
  generate_dataset(small_config(), 2, 1, seen_pool(), dir / "d");
  EXPECT_THROW(generate_dataset(small_config(), 2, 1, seen_pool(), dir / "d"), IoError);
  EXPECT_NO_THROW(generate_dataset(small_config(), 2, 1, seen_pool(), dir / "d", true));
}

TEST(Persist, MissingInstancesAreReported) {
  TempDir dir;
  generate_dataset(small_config(), 2, 1, seen_pool(), dir / "d");
  std::filesystem::remove(dir / "d" / "instances" / "00001.json");
  EXPECT_THROW(read_dataset(dir / "d"), ProbeError);
  EXPECT_NO_THROW(read_dataset(dir / "d", false));
}

TEST(SizeSweep, ElevenSizesInStepsOf32) {
  const auto sizes = sweep_sizes();
  ASSERT_EQ(sizes.size(), 11u);
  EXPECT_EQ(sizes.front(), 160);
  EXPECT_EQ(sizes.back(), 480);
  for (std::size_t i = 1; i < sizes.size(); ++i) EXPECT_EQ(sizes[i] - sizes[i - 1], 32);
}

TEST(SizeSweep, WritesOneDatasetPerSize) {
  TempDir dir;
  const auto manifests = generate_size_sweep(small_config(), 2, 3, seen_pool(), dir / "sweep");
  ASSERT_EQ(manifests.size(), 11u);
  for (int s : sweep_sizes()) {
    const auto m = read_manifest(dir / "sweep" / ("size_" + std::to_string(s)));
    EXPECT_EQ(m.width, s);
    EXPECT_EQ(read_dataset(dir / "sweep" / ("size_" + std::to_string(s))).scenes[0].image.width(), s);
  }
  FeatureConfig textured = small_config();
  textured.texture_feature = true;
  EXPECT_THROW(generate_size_sweep(textured, 2, 3, seen_pool(), dir / "t"), ValidationError);
}

TEST(SizeSweep, ResizingIsConsistentAcrossScales) {
  const Dataset base = generate_scenes(FeatureConfig{}, 10, 4, seen_pool());
  const Dataset big = resize_dataset(base, 480, 480), small = resize_dataset(base, 160, 160);
  for (std::size_t i = 0; i < base.scenes.size(); ++i) {
    const LabelMask down = resize_nearest(big.scenes[i].target_mask, 160, 160);
    const LabelMask& direct = small.scenes[i].target_mask;
    std::size_t inter = 0, uni = 0;
    for (int y = 0; y < 160; ++y)
      for (int x = 0; x < 160; ++x) {
        inter += down.at(x, y) && direct.at(x, y);
        uni += down.at(x, y) || direct.at(x, y);
      }
    EXPECT_GE(static_cast<double>(inter) / uni, 0.9);
  }
}

}  // namespace
}  // namespace shapeprobe
