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

#ifndef MSA_SYNTH_H_
#define MSA_SYNTH_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msa/dsp.h"
#include "msa/rng.h"

namespace msa {

enum class Source { kBass = 0, kDrums = 1, kOther = 2, kVocals = 3 };
inline constexpr int kNumSources = 4;
inline constexpr std::array<Source, kNumSources> kAllSources = {
    Source::kBass, Source::kDrums, Source::kOther, Source::kVocals};

std::string_view SourceName(Source s);
// Throws Error("unknown_source").
Source ParseSource(std::string_view name);
// "bass-present", "drums-present", "other-present", "vocal-present".
std::string PresenceTag(Source s);

enum class Split { kTrain, kValid, kTest };
std::string_view SplitName(Split s);
Split ParseSplit(std::string_view name);

struct GeneratorConfig {
  int n_clips = 2000;
  double clip_seconds = 30.0;
  double chunk_seconds = 4.0;
  int sample_rate = kDefaultSampleRate;
  // Per-chunk activity probability, indexed by Source.
  std::array<double, kNumSources> activity_prob = {0.45, 0.42, 0.88, 0.32};
  double tempo_min = 70.0;
  double tempo_max = 170.0;
  std::vector<int> pitch_set = {0, 2, 4, 5, 7, 9, 11};
  // Fraction of the mixture blended into every stored stem.
  double leakage = 0.0;
  std::array<int, 3> split_ratio = {12, 1, 3};
  uint64_t seed = 0;

  // Throws Error("invalid_generator_config").
  void Validate() const;
  double TempoMedian() const { return 0.5 * (tempo_min + tempo_max); }
  size_t ClipSamples() const;
  size_t ChunkSamples() const;
  // ceil(clip / chunk); the last chunk may be partial.
  size_t NumChunks() const;
};

struct StemSet {
  Waveform mixture;
  std::array<Waveform, kNumSources> stems;
  // activity[source][chunk], consistent with IsSilent on the stored stems.
  std::array<std::vector<bool>, kNumSources> activity;
};

struct ClipRecord {
  std::string clip_id;
  Split split = Split::kTrain;
  std::vector<std::string> tags;  // sorted, unique
  std::map<std::string, std::string> stem_paths;
};

// Realized musical parameters of a generated clip.
struct ClipParams {
  double tempo_bpm = 0;
  int root_pitch_class = 0;
  std::array<bool, kNumSources> present{};
};

struct GeneratedClip {
  StemSet stems;
  ClipRecord record;
  ClipParams params;
  // Activity of the clean stems; tags are derived from these.
  std::array<std::vector<bool>, kNumSources> clean_activity;
};

std::string ClipIdForIndex(int clip_index);
Split SplitForClip(std::string_view clip_id, const std::array<int, 3>& ratio);
std::string PitchTag(int pitch_class);

// Deterministic in (cfg, clip_index); each clip draws from its own stream.
GeneratedClip GenerateClip(const GeneratorConfig& cfg, int clip_index);

// (1 - leakage) * stem + leakage * mixture. Throws Error("length_mismatch").
Waveform DegradeStem(const Waveform& stem, const Waveform& mixture,
                     double leakage);

// Multiplies linear-domain mel energies by `mask` (one value per bin, same
// layout as spec.data) and re-applies log compression.
MelSpectrogram ApplySoftMask(const MelSpectrogram& spec,
                             std::span<const float> mask, double log_floor);
// Mask drawn i.i.d. uniform in [0, 1) per time-frequency bin.
MelSpectrogram RandomSoftMask(const MelSpectrogram& spec, Rng& rng,
                              double log_floor = 1e-6);

}  // namespace msa

#endif  // MSA_SYNTH_H_
