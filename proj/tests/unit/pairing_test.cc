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


#include "msa/pairing.h"

#include <gtest/gtest.h>

#include <set>

#include "msa/error.h"
#include "test_util.h"

namespace msa {
namespace {

using testing_util::ToyDataset;
using testing_util::ToyValue;

constexpr int kChunks = 3;

// Where a crop came from, recovered from the toy encoding.
struct Origin {
  size_t clip;
  int signal;
  int start;
};

Origin Decode(const MelSpectrogram& m) {
  const double v = m.at(0, 0);
  const auto clip = static_cast<size_t>(v / 100000);
  const int signal = static_cast<int>((v - clip * 100000.0) / 10000);
  const int start = static_cast<int>(v - clip * 100000.0 - signal * 10000.0);
  return {clip, signal, start};
}

int ChunkOf(int start) { return start / 400; }

std::string CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

// About half of the (clip, source, chunk) cells are active.
bool HalfActive(size_t clip, Source s, int chunk) {
  return SplitMix64(clip * 131 + static_cast<int>(s) * 17 + chunk) % 2 == 0;
}

TEST(DecodeHelper, RecoversToyOrigins) {
  const Dataset d = ToyDataset(3, kChunks, HalfActive);
  const Origin o = Decode(d.ReadSource(2, Source::kDrums, {417, kCropFrames}));
  EXPECT_EQ(o.clip, 2u);
  EXPECT_EQ(o.signal, 1);
  EXPECT_EQ(o.start, 417);
  EXPECT_EQ(d.ReadMixture(1, {5, kCropFrames}).at(3, 2), ToyValue(1, 4, 3, 7));
}

class VariantContract : public ::testing::TestWithParam<VariantKind> {};

TEST_P(VariantContract, WindowsStayInsideOneFullChunk) {
  const Dataset d = ToyDataset(20, kChunks, HalfActive);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const PairBatch b = DrawBatch(d, {GetParam(), {}}, 8, rng);
    ASSERT_EQ(b.size(), 8u);
    std::set<size_t> distinct(b.clip_indices.begin(), b.clip_indices.end());
    EXPECT_EQ(distinct.size(), 8u);
    for (size_t i = 0; i < b.size(); ++i) {
      const Origin a = Decode(b.anchors[i]);
      EXPECT_EQ(a.signal, kMixtureSignal);
      EXPECT_EQ(a.clip, b.clip_indices[i]);
      EXPECT_EQ(a.start, b.anchor_windows[i].start_frame);
      EXPECT_EQ(b.anchors[i].n_frames, kCropFrames);
      EXPECT_EQ(b.positives[i].n_frames, kCropFrames);
      const int chunk = ChunkOf(a.start);
      EXPECT_LE(a.start + kCropFrames, chunk * 400 + 398);
      EXPECT_EQ(ChunkOf(b.positive_windows[i].start_frame), chunk);
      EXPECT_LE(b.positive_windows[i].start_frame + kCropFrames,
                chunk * 400 + 398);
      EXPECT_EQ(b.clip_ids[i], ClipIdForIndex(static_cast<int>(a.clip)));
    }
  }
}

TEST_P(VariantContract, SameSeedSameBatch) {
  const Dataset d = ToyDataset(
      20, kChunks, HalfActive, [](size_t) { return Split::kTrain; }, 1e-6f,
      -8.0f);
  Rng r1(77), r2(77);
  const PairBatch a = MineBatch(d, {GetParam(), {}}, 6, r1);
  const PairBatch b = MineBatch(d, {GetParam(), {}}, 6, r2);
  EXPECT_EQ(a.clip_indices, b.clip_indices);
  EXPECT_EQ(a.silent_mask, b.silent_mask);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.anchors[i].data, b.anchors[i].data);
    EXPECT_EQ(a.positives[i].data, b.positives[i].data);
  }
}

INSTANTIATE_TEST_SUITE_P(
    AllVariants, VariantContract,
    ::testing::Values(VariantKind::kMsa, VariantKind::kNsv1, VariantKind::kNsv2,
                      VariantKind::kA1, VariantKind::kA2, VariantKind::kA3,
                      VariantKind::kCola, VariantKind::kRandMask),
    [](const auto& info) { return std::string(VariantName(info.param)); });

TEST(Msa, PositiveIsTheBatchSourceWithSilenceFlags) {
  const Dataset d = ToyDataset(20, kChunks, HalfActive);
  Rng rng(1);
  size_t silent = 0, total = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const PairBatch b = DrawBatch(d, {VariantKind::kMsa, {}}, 8, rng);
    for (size_t i = 0; i < b.size(); ++i) {
      EXPECT_EQ(b.source_ids[i], b.source_ids[0]);
      const Origin p = Decode(b.positives[i]);
      EXPECT_EQ(p.clip, b.clip_indices[i]);
      EXPECT_EQ(p.signal, static_cast<int>(b.source_ids[i]));
      EXPECT_EQ(p.start, b.positive_windows[i].start_frame);
      EXPECT_EQ(b.silent_mask[i],
                !d.Active(p.clip, b.source_ids[i], ChunkOf(p.start)));
      silent += b.silent_mask[i];
      ++total;
    }
  }
  // Silent positives are kept, at the rate the activity pattern implies.
  EXPECT_NEAR(static_cast<double>(silent) / total, 0.5, 0.08);
}

TEST(Msa, FixedSourceIsUsedForEveryBatch) {
  const Dataset d = ToyDataset(20, kChunks, HalfActive);
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const PairBatch b =
        DrawBatch(d, {VariantKind::kMsa, Source::kVocals}, 8, rng);
    for (size_t i = 0; i < b.size(); ++i) {
      EXPECT_EQ(b.source_ids[i], Source::kVocals);
      EXPECT_EQ(Decode(b.positives[i]).signal,
                static_cast<int>(Source::kVocals));
    }
  }
}

TEST(Msa, AnchorAndPositiveStartsAreShifted) {
  const Dataset d = ToyDataset(20, kChunks, HalfActive);
  Rng rng(3);
  int same = 0, total = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const PairBatch b = DrawBatch(d, {VariantKind::kMsa, {}}, 8, rng);
    for (size_t i = 0; i < b.size(); ++i) {
      same += b.anchor_windows[i].start_frame ==
              b.positive_windows[i].start_frame;
      ++total;
    }
  }
  // Equal starts happen with probability 1/301 per pair.
  EXPECT_LT(static_cast<double>(same) / total, 0.05);
}

TEST(Msa, SourcesVaryAcrossBatches) {
  const Dataset d = ToyDataset(20, kChunks, HalfActive);
  Rng rng(4);
  std::set<Source> seen;
  for (int trial = 0; trial < 40; ++trial) {
    seen.insert(DrawBatch(d, {VariantKind::kMsa, {}}, 4, rng).source_ids[0]);
  }
  EXPECT_EQ(seen.size(), 4u);
}

TEST(A3, StartsAreAligned) {
  const Dataset d = ToyDataset(20, kChunks, HalfActive);
  Rng rng(6);
  const PairBatch b = DrawBatch(d, {VariantKind::kA3, {}}, 8, rng);
  for (size_t i = 0; i < b.size(); ++i) {
    EXPECT_EQ(b.anchor_windows[i].start_frame,
              b.positive_windows[i].start_frame);
    EXPECT_EQ(Decode(b.positives[i]).start, Decode(b.anchors[i]).start);
  }
}

TEST(Nsv1, OneSourceAndNoSilentPositives) {
  const Dataset d = ToyDataset(20, kChunks, HalfActive);
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const PairBatch b = DrawBatch(d, {VariantKind::kNsv1, {}}, 8, rng);
    EXPECT_EQ(b.NumSilent(), 0u);
    for (size_t i = 0; i < b.size(); ++i) {
      EXPECT_EQ(b.source_ids[i], b.source_ids[0]);
      EXPECT_TRUE(d.Active(b.clip_indices[i], b.source_ids[i],
                           ChunkOf(b.positive_windows[i].start_frame)));
    }
  }
}

TEST(Nsv2, PerItemSourcesAndNoSilentPositives) {
  const Dataset d = ToyDataset(20, kChunks, HalfActive);
  Rng rng(8);
  bool mixed = false;
  for (int trial = 0; trial < 30; ++trial) {
    const PairBatch b = DrawBatch(d, {VariantKind::kNsv2, {}}, 8, rng);
    EXPECT_EQ(b.NumSilent(), 0u);
    for (size_t i = 0; i < b.size(); ++i) {
      EXPECT_EQ(Decode(b.positives[i]).signal,
                static_cast<int>(b.source_ids[i]));
      EXPECT_TRUE(d.Active(b.clip_indices[i], b.source_ids[i],
                           ChunkOf(b.positive_windows[i].start_frame)));
      mixed |= b.source_ids[i] != b.source_ids[0];
    }
  }
  EXPECT_TRUE(mixed);
}

TEST(A1, PerItemSourcesKeepSilence) {
  const Dataset d = ToyDataset(20, kChunks, HalfActive);
  Rng rng(9);
  bool mixed = false;
  size_t silent = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const PairBatch b = DrawBatch(d, {VariantKind::kA1, {}}, 8, rng);
    silent += b.NumSilent();
    for (size_t i = 0; i < b.size(); ++i) {
      mixed |= b.source_ids[i] != b.source_ids[0];
    }
  }
  EXPECT_TRUE(mixed);
  EXPECT_GT(silent, 0u);
}

TEST(Cola, BothViewsAreMixtureCropsOfOneChunk) {
  const Dataset d = ToyDataset(20, kChunks, HalfActive);
  Rng rng(10);
  const PairBatch b = DrawBatch(d, {VariantKind::kCola, {}}, 8, rng);
  EXPECT_EQ(b.NumSilent(), 0u);
  for (size_t i = 0; i < b.size(); ++i) {
    const Origin p = Decode(b.positives[i]);
    EXPECT_EQ(p.signal, kMixtureSignal);
    EXPECT_EQ(p.clip, b.clip_indices[i]);
  }
}

TEST(RandMask, PositiveIsAMaskedMixtureCrop) {
  // Log-mel sized values so the mask works in a sane energy range.
  const Dataset d = ToyDataset(
      20, kChunks, HalfActive, [](size_t) { return Split::kTrain; }, 1e-6f,
      -8.0f);
  Rng rng(11);
  const PairBatch b = DrawBatch(d, {VariantKind::kRandMask, {}}, 8, rng);
  EXPECT_EQ(b.NumSilent(), 0u);
  for (size_t i = 0; i < b.size(); ++i) {
    const MelSpectrogram mix =
        d.ReadMixture(b.clip_indices[i], b.positive_windows[i]);
    ASSERT_EQ(mix.data.size(), b.positives[i].data.size());
    bool changed = false;
    for (size_t k = 0; k < mix.data.size(); ++k) {
      ASSERT_LE(b.positives[i].data[k], mix.data[k] + 1e-5f);
      changed |= b.positives[i].data[k] != mix.data[k];
    }
    EXPECT_TRUE(changed);
  }
}

TEST(PairVariant, RejectsContradictoryCombinations) {
  for (VariantKind k : {VariantKind::kNsv2, VariantKind::kA1,
                        VariantKind::kCola, VariantKind::kRandMask}) {
    EXPECT_EQ(CodeOf([&] { PairVariant{k, Source::kBass}.Validate(); }),
              "invalid_variant");
  }
  for (VariantKind k : {VariantKind::kMsa, VariantKind::kNsv1,
                        VariantKind::kA2, VariantKind::kA3}) {
    EXPECT_NO_THROW((PairVariant{k, Source::kBass}.Validate()));
  }
  EXPECT_FALSE((PairVariant{VariantKind::kA2, {}}.aggregate_silent()));
  EXPECT_TRUE((PairVariant{VariantKind::kMsa, {}}.aggregate_silent()));
}

TEST(VariantNames, RoundTrip) {
  for (int k = 0; k < 8; ++k) {
    const auto kind = static_cast<VariantKind>(k);
    EXPECT_EQ(ParseVariant(VariantName(kind)), kind);
  }
  EXPECT_EQ(CodeOf([] { ParseVariant("msa2"); }), "unknown_variant");
}

TEST(DrawBatch, TooFewClipsInSplit) {
  const Dataset d = ToyDataset(10, kChunks, HalfActive, [](size_t c) {
    return c < 3 ? Split::kValid : Split::kTrain;
  });
  Rng rng(12);
  EXPECT_EQ(CodeOf([&] { DrawBatch(d, {VariantKind::kMsa, {}}, 4, rng, Split::kValid); }),
            "dataset_exhausted");
  EXPECT_NO_THROW(DrawBatch(d, {VariantKind::kMsa, {}}, 7, rng));
  for (size_t i : DrawBatch(d, {VariantKind::kMsa, {}}, 3, rng, Split::kValid)
                      .clip_indices) {
    EXPECT_LT(i, 3u);
  }
}

TEST(DrawBatch, NonSilentVariantsNeedEnoughActiveClips) {
  const Dataset d = ToyDataset(10, kChunks, [](size_t clip, Source, int) {
    return clip < 2;
  });
  Rng rng(13);
  EXPECT_EQ(CodeOf([&] { DrawBatch(d, {VariantKind::kNsv1, {}}, 4, rng); }),
            "dataset_exhausted");
  EXPECT_EQ(CodeOf([&] { DrawBatch(d, {VariantKind::kNsv2, {}}, 4, rng); }),
            "dataset_exhausted");
}

TEST(MineBatch, AllSilentDatasetIsDegenerate) {
  const Dataset d = ToyDataset(10, kChunks, [](size_t, Source, int) {
    return false;
  });
  Rng rng(14);
  EXPECT_EQ(CodeOf([&] { MineBatch(d, {VariantKind::kMsa, {}}, 4, rng); }),
            "degenerate_dataset");
}

TEST(ResampleIfDegenerate, RedrawsUntilAPositiveIsAudible) {
  int calls = 0;
  const PairBatch out = ResampleIfDegenerate(
      testing_util::RandomBatch({true, true}, 1), [&] {
        ++calls;
        return testing_util::RandomBatch({true, calls < 3}, 1);
      });
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(out.NumSilent(), 1u);

  calls = 0;
  ResampleIfDegenerate(testing_util::RandomBatch({false, true}, 1), [&] {
    ++calls;
    return PairBatch{};
  });
  EXPECT_EQ(calls, 0);
}

}  // namespace
}  // namespace msa
