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

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "shapeprobe/metrics.hpp"
#include "shapeprobe/png_io.hpp"
#include "shapeprobe/probing.hpp"
#include "test_support.hpp"

namespace shapeprobe {
namespace {

using testing::small_config;
using testing::TempDir;

constexpr double kE = std::numbers::e;

// Softmax over the three drops written out directly, without max shifting.
double sbi_oracle(double val, double rm, double aff, double shuf) {
  const double a = std::exp(1 - rm / val), b = std::exp(1 - aff / val), c = std::exp(1 - shuf / val);
  const double z = a + b + c;
  return (b / z + c / z) / (a / z);
}

ProbeScores random_scores(Rng& rng) {
  return {rng.uniform(0.05, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
}

TEST(Iou, CountsIntersectionOverUnion) {
  LabelMask a(4, 4), b(4, 4);
  for (int x = 0; x < 3; ++x) a.at(x, 0) = 1;
  for (int x = 1; x < 4; ++x) b.at(x, 0) = 1;
  EXPECT_DOUBLE_EQ(iou(a, b), 2.0 / 4.0);
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou(LabelMask(4, 4), LabelMask(4, 4)), 1.0);
  EXPECT_DOUBLE_EQ(iou(LabelMask(4, 4), a), 0.0);
  EXPECT_THROW(iou(a, LabelMask(3, 4)), MetricError);
}

TEST(PerformanceDrop, Definition) {
  EXPECT_NEAR(performance_drop(0.288, 0.990), 1 - 0.288 / 0.990, 1e-15);
  EXPECT_NEAR(performance_drop(0.288, 0.990), 0.70909090909, 1e-10);
  EXPECT_DOUBLE_EQ(performance_drop(0.5, 0.5), 0.0);
  EXPECT_LT(performance_drop(0.9, 0.5), 0.0);
  EXPECT_THROW(performance_drop(0.5, 0.0), MetricError);
}

TEST(Sbi, ReportedRowsReproduce) {
  EXPECT_NEAR(sbi({0.990, 0.288, 0.900, 0.641}).sbi, 1.238, 0.002);
  EXPECT_NEAR(sbi({0.993, 0.589, 0.897, 0.434}).sbi, 1.902, 0.001);
  EXPECT_NEAR(sbi({0.983, 0.637, 0.758, 0.572}).sbi, 1.952, 0.001);
}

TEST(Sbi, MatchesDirectSoftmaxAndClosedForm) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const ProbeScores s = random_scores(rng);
    const double v = sbi(s).sbi;
    ASSERT_NEAR(v, sbi_oracle(s.val, s.rm, s.aff, s.shuf), 1e-12 * std::max(1.0, v));
    ASSERT_NEAR(v, sbi_closed_form(s), 1e-12 * std::max(1.0, v));
  }
}

TEST(Sbi, WeightsSumToOneAndRespectBounds) {
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const ProbeScores s = random_scores(rng);
    if (s.rm > s.val || s.aff > s.val || s.shuf > s.val) continue;
    const SbiReport r = sbi(s);
    ASSERT_NEAR(r.delta_rm + r.delta_aff + r.delta_shuf, 1.0, 1e-12);
    // Drops in [0, 1] put every exponent difference in [-1, 1].
    ASSERT_GE(r.sbi, 2 / kE - 1e-12);
    ASSERT_LE(r.sbi, 2 * kE + 1e-12);
  }
}

TEST(Sbi, EqualDropsGiveTwo) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double val = rng.uniform(0.1, 1.0), p = rng.uniform(0.0, 1.0);
    ASSERT_NEAR(sbi({val, p, p, p}).sbi, 2.0, 1e-12);
  }
}

TEST(Sbi, MonotoneInEachProbe) {
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    ProbeScores s = random_scores(rng);
    const double base = sbi(s).sbi;
    ProbeScores worse_rm = s, worse_aff = s;
    worse_rm.rm *= 0.9;
    worse_aff.aff *= 0.9;
    // Losing more on rm lowers the index; losing more on aff raises it.
    ASSERT_LE(sbi(worse_rm).sbi, base);
    ASSERT_GE(sbi(worse_aff).sbi, base);
  }
}

TEST(Sbi, ExtremeShapeModel) {
  const SbiReport r = sbi({1.0, 1.0, 0.0, 0.0});
  EXPECT_NEAR(r.sbi, 2 * kE, 1e-12);
  EXPECT_NEAR(r.pd_aff, 1.0, 1e-15);
  EXPECT_THROW(sbi({0.0, 0.5, 0.5, 0.5}), MetricError);
}

// Forward receptive-field recursion: every conv widens the field by
// (k - 1) * dilation input strides; a k x k pool with stride k widens it by
// (k - 1) strides and multiplies the stride.
long long rf_oracle(const LayerSpec& spec) {
  long long rf = 1, jump = 1;
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    for (const auto& c : spec.stages[i].convs) rf += (c.kernel - 1) * c.dilation * jump;
    if (i + 1 < spec.stages.size()) {
      rf += (spec.stages[i].downsample - 1) * jump;
      jump *= spec.stages[i].downsample;
    }
  }
  return rf;
}

TEST(ReceptiveField, BundledSpecs) {
  const std::filesystem::path dir = SHAPEPROBE_DATA_DIR;
  EXPECT_EQ(receptive_field(read_layer_spec(dir / "layers" / "unet140.json")), 140);
  EXPECT_EQ(receptive_field(read_layer_spec(dir / "layers" / "unet210.json")), 210);
  EXPECT_EQ(rf_oracle(read_layer_spec(dir / "layers" / "unet140.json")), 140);
}

TEST(ReceptiveField, ReportedArithmetic) {
  EXPECT_EQ(((((1 + 4) * 2 + 4) * 2 + 4) * 2 + 4) * 2 + 4, 140);
  EXPECT_EQ(((((1 + 4) * 2 + 9) * 2 + 9) * 2 + 9) * 2 + 4, 210);
}

TEST(ReceptiveField, TwoDilatedConvsPerBlockGive196) {
  LayerSpec spec;
  spec.stages.push_back({{{3, 1}, {3, 1}}, 2});
  for (int i = 0; i < 3; ++i) spec.stages.push_back({{{3, 2}, {3, 2}}, 2});
  spec.stages.push_back({{{3, 1}, {3, 1}}, 1});
  EXPECT_EQ(receptive_field(spec), 196);
  EXPECT_EQ(rf_oracle(spec), 196);
}

TEST(ReceptiveField, AgreesWithForwardRecursion) {
  Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    LayerSpec spec;
    const int stages = static_cast<int>(rng.uniform_int(1, 6));
    for (int s = 0; s < stages; ++s) {
      Stage st;
      st.downsample = static_cast<int>(rng.uniform_int(1, 3));
      const int convs = static_cast<int>(rng.uniform_int(0, 3));
      for (int c = 0; c < convs; ++c)
        st.convs.push_back({static_cast<int>(rng.uniform_int(1, 7)), static_cast<int>(rng.uniform_int(1, 4))});
      spec.stages.push_back(st);
    }
    ASSERT_EQ(receptive_field(spec), rf_oracle(spec));
  }
}

TEST(ReceptiveField, InvalidSpecs) {
  EXPECT_EQ(receptive_field(LayerSpec{"one", {Stage{}}}), 1);
  EXPECT_THROW(receptive_field(LayerSpec{}), ConfigError);
  EXPECT_THROW(receptive_field(LayerSpec{"x", {Stage{{{0, 1}}, 1}}}), ConfigError);
  EXPECT_THROW(receptive_field(LayerSpec{"x", {Stage{{{3, 1}}, 0}}}), ConfigError);
  EXPECT_THROW(layer_spec_from_json({{"name", "x"}}), ConfigError);
}

TEST(StableMean, CompensatesRounding) {
  std::vector<double> v(1000001, 0.1);
  v[0] = 1e8;
  EXPECT_NEAR(stable_mean(v) * v.size(), 1e8 + 100000.0, 1e-6);
  EXPECT_EQ(stable_mean({}), 0.0);
}

class RunFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    const TexturePool seen = procedural_pool(7, 112), unseen = procedural_pool(99, 61);
    const Dataset val = generate_scenes(small_config(), 6, 12, seen, "val");
    write_dataset(val, dir_ / "val");
    write_probe(make_rm(val, unseen, 1), dir_ / "rm");
    write_probe(make_aff(val, 1), dir_ / "aff");
    write_probe(make_shuf(val, 1), dir_ / "shuf");
  }

  // Writes ground truth (or empty masks) for `set` as predictions.
  std::filesystem::path predict(const std::string& set, bool truth) {
    const auto out = dir_ / ("pred_" + set);
    std::filesystem::create_directories(out);
    for (const auto& e : read_manifest(dir_ / set).scenes) {
      const LabelMask gt = read_png_mask(dir_ / set / "masks" / (e.name + ".png"));
      write_png(out / (e.name + ".png"), truth ? gt : LabelMask(gt.width(), gt.height()));
    }
    return out;
  }

  RunLayout layout(bool aff_truth, bool shuf_truth) {
    return {{dir_ / "val", predict("val", true)},
            {dir_ / "rm", predict("rm", true)},
            {dir_ / "aff", predict("aff", aff_truth)},
            {dir_ / "shuf", predict("shuf", shuf_truth)}};
  }

  TempDir dir_;
};

TEST_F(RunFixture, GroundTruthEverywhereGivesTwo) {
  const auto j = evaluate_run(layout(true, true));
  EXPECT_DOUBLE_EQ(j.at("sbi").get<double>(), 2.0);
  EXPECT_EQ(j.at("n_images").at("shuf"), 6);
  EXPECT_EQ(j.at("source_manifests").at("val"), manifest_hash(read_manifest(dir_ / "val")));
}

TEST_F(RunFixture, PerfectShapeModelGivesTwoE) {
  const auto j = evaluate_run(layout(false, false));
  EXPECT_NEAR(j.at("sbi").get<double>(), 2 * kE, 1e-12);
  EXPECT_DOUBLE_EQ(j.at("pd").at("aff").get<double>(), 1.0);
}

TEST_F(RunFixture, MissingPredictionsAreListed) {
  RunLayout run = layout(true, true);
  std::filesystem::remove(run.shuf.predictions / "00003.png");
  try {
    evaluate_run(run);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("00003"), std::string::npos);
  }
}

TEST_F(RunFixture, WrongSizePredictionIsRejected) {
  RunLayout run = layout(true, true);
  write_png(run.aff.predictions / "00000.png", LabelMask(5, 5));
  EXPECT_THROW(evaluate_run(run), ValidationError);
}

TEST_F(RunFixture, ProbeFromAnotherValIsRejected) {
  const Dataset other = generate_scenes(small_config(), 6, 13, procedural_pool(7, 112), "val");
  write_probe(make_aff(other, 1), dir_ / "aff", true);
  EXPECT_THROW(evaluate_run(layout(true, true)), ValidationError);
}

}  // namespace
}  // namespace shapeprobe
