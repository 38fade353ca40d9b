/*
 * Copyright 2026 The msa-lab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "msa/rng.h"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

namespace msa {
namespace {

TEST(Rng, SameSeedSameSequence) {
  Rng a(17), b(17), c(18);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const uint64_t x = a.NextU64();
    EXPECT_EQ(x, b.NextU64());
    differs |= x != c.NextU64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, StreamsAreIndependentOfEachOther) {
  std::set<uint64_t> seeds;
  for (const char* name : {"data", "init", "pairing", "probe"}) {
    for (uint64_t idx = 0; idx < 50; ++idx) {
      seeds.insert(Rng::StreamSeed(1, name, idx));
    }
  }
  EXPECT_EQ(seeds.size(), 200u);
  EXPECT_EQ(Rng::StreamSeed(1, "pairing", 3), Rng::StreamSeed(1, "pairing", 3));
  EXPECT_NE(Rng::StreamSeed(1, "pairing", 3), Rng::StreamSeed(2, "pairing", 3));
  Rng s = Rng::Stream(1, "pairing", 3);
  Rng t(Rng::StreamSeed(1, "pairing", 3));
  EXPECT_EQ(s.NextU64(), t.NextU64());
}

TEST(Rng, UniformIntCoversRangeEvenly) {
  Rng r(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.UniformInt(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, UniformAndNormalMoments) {
  Rng r(4);
  double su = 0, sn = 0, sn2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.Uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = r.Normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}

TEST(Rng, BernoulliRate) {
  Rng r(5);
  int hits = 0;
  for (int i = 0; i < 100000; ++i) hits += r.Bernoulli(0.3);
  EXPECT_NEAR(hits / 100000.0, 0.3, 0.01);
  EXPECT_FALSE(r.Bernoulli(0.0));
  EXPECT_TRUE(r.Bernoulli(1.0));
}

TEST(HashString, StableAndSpread) {
  EXPECT_EQ(HashString("clip_00001"), HashString("clip_00001"));
  EXPECT_NE(HashString("clip_00001"), HashString("clip_00002"));
  EXPECT_NE(SplitMix64(0), SplitMix64(1));
}

}  // namespace
}  // namespace msa
