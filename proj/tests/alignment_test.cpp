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

#include <algorithm>
#include <vector>

#include <gtest/gtest.h>

#include "shapeprobe/alignment.hpp"
#include "shapeprobe/geometry.hpp"

namespace shapeprobe {
namespace {

LabelMask draw(const Polygon& shape, double size, Point at, int canvas) {
  return rasterize(fit_polygon_to_box(shape, size, at, canvas, canvas), canvas, canvas);
}

Polygon shape(std::uint64_t seed) {
  Rng rng(seed);
  return sample_polygon(rng, PolygonSampler{5, 12, 0.9, 64});
}

TEST(Alignment, IdenticalMasksAlignPerfectly) {
  const LabelMask m = draw(shape(1), 80, {10, 10}, 128);
  EXPECT_NEAR(alignment_iou(m, m), 1.0, 1e-12);
}

TEST(Alignment, IntegerTranslationIsInvisible) {
  const Polygon p = shape(2);
  const LabelMask a = draw(p, 80, {10, 10}, 160), b = draw(p, 80, {47, 63}, 160);
  EXPECT_NEAR(alignment_iou(a, b), 1.0, 1e-9);
}

TEST(Alignment, ScaleChangeKeepsHighAlignment) {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const Polygon p = shape(s);
    const LabelMask small = draw(p, 100, {5, 5}, 256), large = draw(p, 150, {90, 90}, 256);
    EXPECT_GE(alignment_iou(small, large), 0.95) << s;
  }
}

TEST(Alignment, IsSymmetric) {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const LabelMask a = draw(shape(s), 90, {3, 3}, 128), b = draw(shape(s + 100), 70, {20, 9}, 128);
    EXPECT_DOUBLE_EQ(alignment_iou(a, b), alignment_iou(b, a));
  }
}

TEST(Alignment, EmptyAlignsWithNothing) {
  const LabelMask m = draw(shape(3), 50, {0, 0}, 64);
  EXPECT_EQ(alignment_iou(m, LabelMask(64, 64)), 0.0);
  EXPECT_EQ(alignment_iou(LabelMask(64, 64), LabelMask(64, 64)), 0.0);
}

TEST(Alignment, SoftIouMatchesDirectSum) {
  const ShapeSignature a(draw(shape(4), 60, {2, 2}, 96)), b(draw(shape(5), 60, {30, 30}, 96));
  double lo = 0, hi = 0;
  for (std::size_t i = 0; i < a.cells().size(); ++i) {
    lo += std::min(a.cells()[i], b.cells()[i]);
    hi += std::max(a.cells()[i], b.cells()[i]);
  }
  EXPECT_NEAR(alignment_iou(a, b), lo / hi, 1e-12);
}

TEST(Alignment, MeanOfCopiesIsTheCopy) {
  const ShapeSignature a(draw(shape(6), 60, {2, 2}, 96));
  const ShapeSignature m = ShapeSignature::mean({a, a, a});
  EXPECT_NEAR(alignment_iou(a, m), 1.0, 1e-12);
}

TEST(Alignment, SignatureMassIsOne) {
  const ShapeSignature a(draw(shape(7), 60, {2, 2}, 96));
  double total = 0;
  for (double c : a.cells()) total += c;
  EXPECT_NEAR(total, 1.0, 1e-9);
}

}  // namespace
}  // namespace shapeprobe
