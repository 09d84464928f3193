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
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "shapeprobe/random.hpp"

namespace shapeprobe {
namespace {

TEST(Rng, SameSeedSameStream) {
  Rng a(17), b(17);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, ChildSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t stream = 0; stream < 4; ++stream)
    for (std::uint64_t i = 0; i < 2500; ++i) seen.insert(child_seed(42, i, stream));
  EXPECT_EQ(seen.size(), 10000u);
  EXPECT_NE(child_seed(1, 0), child_seed(2, 0));
}

TEST(Rng, UniformIntStaysInRangeAndHitsEnds) {
  Rng rng(3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.uniform_int(-3, 3);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 3);
    ++hits[static_cast<std::size_t>(v + 3)];
  }
  for (int h : hits) EXPECT_GT(h, 800);
}

TEST(Rng, UniformIsHalfOpen) {
  Rng rng(5);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, NormalMoments) {
  Rng rng(11);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(Rng, PoissonMeanEqualsVariance) {
  for (double lambda : {0.5, 3.0, 12.0, 60.0}) {
    Rng rng(static_cast<std::uint64_t>(lambda * 10));
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(rng.poisson(lambda));
      ASSERT_GE(k, 0);
      s += k;
      s2 += k * k;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, lambda, 5 * std::sqrt(lambda / n)) << lambda;
    EXPECT_NEAR(var / lambda, 1.0, 0.05) << lambda;
  }
  Rng rng(1);
  EXPECT_EQ(rng.poisson(0.0), 0);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> v(static_cast<std::size_t>(1 + trial % 17));
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    rng.shuffle(w);
    std::sort(w.begin(), w.end());
    ASSERT_EQ(v, w);
  }
}

TEST(Rng, ShuffleFirstPositionIsUniform) {
  Rng rng(21);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 40000; ++i) {
    std::vector<int> v{0, 1, 2, 3};
    rng.shuffle(v);
    ++counts[static_cast<std::size_t>(v[0])];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

}  // namespace
}  // namespace shapeprobe
