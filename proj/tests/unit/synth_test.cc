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


#include "msa/synth.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "msa/error.h"

namespace msa {
namespace {

GeneratorConfig ShortConfig(double seconds = 8.0) {
  GeneratorConfig cfg;
  cfg.n_clips = 16;
  cfg.clip_seconds = seconds;
  cfg.seed = 42;
  return cfg;
}

bool HasTag(const ClipRecord& r, const std::string& tag) {
  return std::find(r.tags.begin(), r.tags.end(), tag) != r.tags.end();
}

TEST(GenerateClip, ZeroVocalProbabilityNeverTagsVocals) {
  GeneratorConfig cfg = ShortConfig();
  cfg.activity_prob[static_cast<int>(Source::kVocals)] = 0.0;
  for (int i = 0; i < 12; ++i) {
    const GeneratedClip g = GenerateClip(cfg, i);
    EXPECT_FALSE(HasTag(g.record, "vocal-present"));
    for (bool a : g.stems.activity[static_cast<int>(Source::kVocals)]) {
      EXPECT_FALSE(a);
    }
  }
}

TEST(GenerateClip, MixtureIsTheSumOfStems) {
  GeneratorConfig cfg = ShortConfig();
  cfg.activity_prob.fill(1.0);
  for (int i = 0; i < 4; ++i) {
    const GeneratedClip g = GenerateClip(cfg, i);
    double worst = 0;
    for (size_t k = 0; k < g.stems.mixture.samples.size(); ++k) {
      double sum = 0;
      for (const auto& s : g.stems.stems) sum += s.samples[k];
      worst = std::max(worst, std::fabs(sum - g.stems.mixture.samples[k]));
    }
    EXPECT_LT(worst, 1e-6);
  }
}

TEST(GenerateClip, ShapesAndRange) {
  const GeneratorConfig cfg = ShortConfig(10.0);
  const GeneratedClip g = GenerateClip(cfg, 3);
  EXPECT_EQ(g.stems.mixture.samples.size(), 160000u);
  EXPECT_EQ(cfg.NumChunks(), 3u);  // 4 s + 4 s + a 2 s tail
  for (const auto& s : g.stems.stems) {
    EXPECT_EQ(s.samples.size(), 160000u);
    for (float v : s.samples) ASSERT_LE(std::fabs(v), 1.0f);
  }
  for (float v : g.stems.mixture.samples) ASSERT_LE(std::fabs(v), 1.0f);
}

TEST(GenerateClip, ActivityAgreesWithSilenceGate) {
  const GeneratorConfig cfg = ShortConfig(12.0);
  const size_t chunk = cfg.ChunkSamples();
  for (int i = 0; i < 6; ++i) {
    const GeneratedClip g = GenerateClip(cfg, i);
    for (int s = 0; s < kNumSources; ++s) {
      const auto& x = g.stems.stems[s].samples;
      for (size_t c = 0; c < cfg.NumChunks(); ++c) {
        const size_t lo = c * chunk, hi = std::min(x.size(), lo + chunk);
        const std::span<const float> seg(x.data() + lo, hi - lo);
        EXPECT_EQ(g.stems.activity[s][c], !IsSilent(seg));
      }
    }
  }
}

TEST(GenerateClip, TagsFollowRealisedParameters) {
  const GeneratorConfig cfg = ShortConfig();
  std::set<std::string> pitch_tags;
  for (int i = 0; i < 16; ++i) {
    const GeneratedClip g = GenerateClip(cfg, i);
    EXPECT_FALSE(g.record.tags.empty());
    EXPECT_TRUE(std::is_sorted(g.record.tags.begin(), g.record.tags.end()));
    EXPECT_EQ(HasTag(g.record, "fast"), g.params.tempo_bpm > 120.0);
    EXPECT_TRUE(HasTag(g.record, PitchTag(g.params.root_pitch_class)));
    for (Source s : kAllSources) {
      const auto& act = g.clean_activity[static_cast<int>(s)];
      const bool any = std::find(act.begin(), act.end(), true) != act.end();
      EXPECT_EQ(HasTag(g.record, PresenceTag(s)), any);
    }
    for (const auto& t : g.record.tags) {
      if (t.rfind("pitch-", 0) == 0) pitch_tags.insert(t);
    }
  }
  EXPECT_GT(pitch_tags.size(), 2u);
}

TEST(GenerateClip, SameSeedSameBits) {
  const GeneratorConfig cfg = ShortConfig();
  const GeneratedClip a = GenerateClip(cfg, 7);
  const GeneratedClip b = GenerateClip(cfg, 7);
  EXPECT_EQ(a.stems.mixture.samples, b.stems.mixture.samples);
  for (int s = 0; s < kNumSources; ++s) {
    EXPECT_EQ(a.stems.stems[s].samples, b.stems.stems[s].samples);
  }
  EXPECT_EQ(a.record.tags, b.record.tags);
  GeneratorConfig other = cfg;
  other.seed = 43;
  EXPECT_NE(GenerateClip(other, 7).stems.mixture.samples,
            a.stems.mixture.samples);
}

TEST(GenerateClip, BassStaysBelow250Hz) {
  GeneratorConfig cfg = ShortConfig(4.0);
  cfg.activity_prob.fill(1.0);
  const GeneratedClip g = GenerateClip(cfg, 0);
  const auto& x = g.stems.stems[static_cast<int>(Source::kBass)].samples;
  // Energy above 250 Hz from a direct DFT on a 4096-sample window.
  const size_t n = 4096, off = 8000;
  double low = 0, high = 0;
  for (size_t k = 1; k < n / 2; ++k) {
    double re = 0, im = 0;
    for (size_t i = 0; i < n; ++i) {
      const double ang = -2 * M_PI * k * i / n;
      re += x[off + i] * std::cos(ang);
      im += x[off + i] * std::sin(ang);
    }
    const double hz = k * 16000.0 / n;
    (hz < 250 ? low : high) += re * re + im * im;
  }
  EXPECT_GT(low, 20 * high);
}

TEST(DegradeStem, EndpointsAndMidpoint) {
  Waveform stem, mix;
  stem.samples = {1.0f, 1.0f, -1.0f, 0.5f};
  mix.samples = {0.0f, 1.0f, 1.0f, -0.5f};
  EXPECT_EQ(DegradeStem(stem, mix, 0.0).samples, stem.samples);
  EXPECT_EQ(DegradeStem(stem, mix, 1.0).samples, mix.samples);
  const Waveform half = DegradeStem(stem, mix, 0.5);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_FLOAT_EQ(half.samples[i], 0.5f * stem.samples[i] + 0.5f * mix.samples[i]);
  }
  Waveform short_mix;
  short_mix.samples = {0.0f};
  try {
    DegradeStem(stem, short_mix, 0.5);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "length_mismatch");
  }
}

double Correlation(const std::vector<float>& a, const std::vector<float>& b) {
  double ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

TEST(DegradeStem, CorrelationWithMixtureGrowsWithLeakage) {
  GeneratorConfig cfg = ShortConfig(4.0);
  cfg.activity_prob.fill(1.0);
  for (int clip = 0; clip < 3; ++clip) {
    const GeneratedClip g = GenerateClip(cfg, clip);
    for (const auto& stem : g.stems.stems) {
      double prev = -2;
      for (double leak : {0.0, 0.1, 0.25, 0.5, 0.75, 1.0}) {
        const double r = Correlation(
            DegradeStem(stem, g.stems.mixture, leak).samples,
            g.stems.mixture.samples);
        EXPECT_GE(r, prev - 1e-9);
        prev = r;
      }
    }
  }
}

TEST(Leakage, StoredStemsDegradeButTagsStayClean) {
  GeneratorConfig clean = ShortConfig();
  GeneratorConfig leaky = clean;
  leaky.leakage = 0.5;
  for (int i = 0; i < 4; ++i) {
    const GeneratedClip a = GenerateClip(clean, i);
    const GeneratedClip b = GenerateClip(leaky, i);
    EXPECT_EQ(a.record.tags, b.record.tags);
    EXPECT_EQ(a.stems.mixture.samples, b.stems.mixture.samples);
    const Waveform expected = DegradeStem(
        a.stems.stems[static_cast<int>(Source::kVocals)], a.stems.mixture, 0.5);
    EXPECT_EQ(b.stems.stems[static_cast<int>(Source::kVocals)].samples,
              expected.samples);
  }
}

MelSpectrogram SmallSpec() {
  MelSpectrogram m;
  m.n_mels = 4;
  m.n_frames = 5;
  for (int i = 0; i < 20; ++i) m.data.push_back(std::log(1e-6f + 0.1f * (i + 1)));
  return m;
}

TEST(SoftMask, OnesLeaveTheSpectrogramAndZerosHitTheFloor) {
  const MelSpectrogram m = SmallSpec();
  const MelSpectrogram same = ApplySoftMask(m, std::vector<float>(20, 1.0f), 1e-6);
  for (size_t i = 0; i < 20; ++i) EXPECT_NEAR(same.data[i], m.data[i], 1e-6);
  const MelSpectrogram off = ApplySoftMask(m, std::vector<float>(20, 0.0f), 1e-6);
  for (float v : off.data) EXPECT_FLOAT_EQ(v, std::log(1e-6f));
}

TEST(SoftMask, FixedSeedIsBitIdentical) {
  const MelSpectrogram m = SmallSpec();
  Rng a(9), b(9);
  EXPECT_EQ(RandomSoftMask(m, a).data, RandomSoftMask(m, b).data);
}

TEST(SoftMask, NeverRaisesEnergy) {
  const MelSpectrogram m = SmallSpec();
  Rng rng(1);
  const MelSpectrogram masked = RandomSoftMask(m, rng);
  for (size_t i = 0; i < 20; ++i) EXPECT_LE(masked.data[i], m.data[i] + 1e-6f);
}

TEST(Split, DeterministicAndNearRatio) {
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 4000; ++i) {
    const std::string id = ClipIdForIndex(i);
    const Split s = SplitForClip(id, {12, 1, 3});
    EXPECT_EQ(s, SplitForClip(id, {12, 1, 3}));
    ++counts[static_cast<int>(s)];
  }
  EXPECT_NEAR(counts[0] / 4000.0, 12.0 / 16, 0.03);
  EXPECT_NEAR(counts[1] / 4000.0, 1.0 / 16, 0.02);
  EXPECT_NEAR(counts[2] / 4000.0, 3.0 / 16, 0.03);
}

TEST(GeneratorConfig, RejectsInvalidValues) {
  GeneratorConfig c;
  c.activity_prob[0] = 1.5;
  EXPECT_THROW(c.Validate(), Error);
  c = GeneratorConfig{};
  c.clip_seconds = 3.0;
  EXPECT_THROW(c.Validate(), Error);
  c = GeneratorConfig{};
  c.pitch_set.clear();
  EXPECT_THROW(c.Validate(), Error);
}

TEST(Source, NamesRoundTrip) {
  for (Source s : kAllSources) EXPECT_EQ(ParseSource(SourceName(s)), s);
  EXPECT_EQ(PresenceTag(Source::kVocals), "vocal-present");
  EXPECT_EQ(PresenceTag(Source::kDrums), "drums-present");
  EXPECT_THROW(ParseSource("piano"), Error);
}

}  // namespace
}  // namespace msa
