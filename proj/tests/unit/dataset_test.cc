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


#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "msa/dataset.h"
#include "msa/error.h"
#include "msa/wav.h"
#include "test_util.h"

namespace msa {
namespace {

using testing_util::TempDir;

GeneratorConfig Tiny() {
  GeneratorConfig g;
  g.n_clips = 6;
  g.clip_seconds = 9.0;  // two full chunks and a partial one
  g.seed = 4;
  return g;
}

TEST(MakeGeometry, FourSecondChunks) {
  const DatasetGeometry g = MakeGeometry(MelConfig{}, 16000, 64000);
  EXPECT_EQ(g.frames_per_chunk, 398);
  EXPECT_EQ(g.chunk_frame_stride, 400);
  EXPECT_EQ(g.n_mels, 64);
}

TEST(BuildSyntheticDataset, ShardsMatchInMemorySpectrograms) {
  TempDir dir("ds");
  const GeneratorConfig cfg = Tiny();
  BuildSyntheticDataset(cfg, MelConfig{}, dir.path(), {.num_threads = 2});
  for (const char* f : {"manifest.jsonl", "dataset.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / f));
  }
  const Dataset d = Dataset::Open(dir.path());
  ASSERT_EQ(d.size(), 6u);
  for (size_t c = 0; c < d.size(); ++c) {
    const GeneratedClip g = GenerateClip(cfg, static_cast<int>(c));
    EXPECT_EQ(d.clip(c).record.clip_id, g.record.clip_id);
    EXPECT_EQ(d.clip(c).record.tags, g.record.tags);
    EXPECT_EQ(d.clip(c).activity, g.stems.activity);
    EXPECT_EQ(d.NumFullChunks(c), 2);
    const auto specs = ClipSpectrograms(g.stems, MelConfig{});
    EXPECT_EQ(d.clip(c).n_frames, specs[kMixtureSignal].n_frames);
    const CropWindow win{401, kCropFrames};
    EXPECT_EQ(d.ReadMixture(c, win).data, Crop(specs[kMixtureSignal], win).data);
    for (Source s : kAllSources) {
      EXPECT_EQ(d.ReadSource(c, s, win).data,
                Crop(specs[static_cast<int>(s)], win).data);
    }
  }
}

TEST(BuildSyntheticDataset, OutputDependsOnlyOnConfig) {
  TempDir a("ds_a"), b("ds_b");
  BuildSyntheticDataset(Tiny(), MelConfig{}, a.path(), {.num_threads = 1});
  BuildSyntheticDataset(Tiny(), MelConfig{}, b.path(), {.num_threads = 3});
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(slurp(a.path() / "manifest.jsonl"), slurp(b.path() / "manifest.jsonl"));
  EXPECT_EQ(slurp(a.path() / "shards/clip_00003.msat"),
            slurp(b.path() / "shards/clip_00003.msat"));
}

TEST(ClipSpectrograms, SilentChunksSitAtTheFloor) {
  GeneratorConfig cfg = Tiny();
  cfg.activity_prob = {0.5, 0.5, 0.5, 0.5};
  const MelConfig mel;
  const float floor_value = static_cast<float>(std::log(mel.log_floor));
  int checked = 0;
  for (int clip = 0; clip < 6; ++clip) {
    const GeneratedClip g = GenerateClip(cfg, clip);
    const auto specs = ClipSpectrograms(g.stems, mel);
    for (int s = 0; s < kNumSources; ++s) {
      for (int chunk = 0; chunk < 2; ++chunk) {
        if (g.stems.activity[s][chunk]) continue;
        const MelSpectrogram c = Crop(specs[s], {chunk * 400, 398});
        for (float v : c.data) ASSERT_EQ(v, floor_value);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(ManifestLine, RoundTrip) {
  ClipEntry e;
  e.record.clip_id = "clip_00042";
  e.record.split = Split::kValid;
  e.record.tags = {"fast", "pitch-D"};
  e.shard = "shards/clip_00042.msat";
  e.n_frames = 2998;
  for (auto& a : e.activity) a = {true, false, true};
  e.activity[3] = {false, false, false};
  const ClipEntry back = ParseManifestLine(ManifestLine(e));
  EXPECT_EQ(back.record.clip_id, e.record.clip_id);
  EXPECT_EQ(back.record.split, e.record.split);
  EXPECT_EQ(back.record.tags, e.record.tags);
  EXPECT_EQ(back.shard, e.shard);
  EXPECT_EQ(back.n_frames, e.n_frames);
  EXPECT_EQ(back.activity, e.activity);
}

TEST(Dataset, CropsOutsideTheClipAreRejected) {
  TempDir dir("ds");
  BuildSyntheticDataset(Tiny(), MelConfig{}, dir.path());
  const Dataset d = Dataset::Open(dir.path());
  try {
    d.ReadMixture(0, {d.clip(0).n_frames - 50, kCropFrames});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "crop_out_of_range");
  }
}

TEST(IngestStems, ImportsSeparatedWavs) {
  TempDir in("ingest_in"), out("ingest_out");
  GeneratorConfig cfg = Tiny();
  const GeneratedClip g = GenerateClip(cfg, 0);
  WriteWav(in.path() / "mix.wav", g.stems.mixture);
  for (Source s : kAllSources) {
    WriteWav(in.path() / (std::string(SourceName(s)) + ".wav"),
             g.stems.stems[static_cast<int>(s)]);
  }
  {
    std::ofstream m(in.path() / "manifest.jsonl");
    m << R"({"clip_id": "song1", "split": "test", "tags": ["rock", "fast"],)"
      << R"( "stem_paths": {"mixture": "mix.wav", "bass": "bass.wav",)"
      << R"( "drums": "drums.wav", "other": "other.wav", "vocals": "vocals.wav"}})"
      << "\n";
  }
  IngestStems(in.path(), in.path() / "manifest.jsonl", MelConfig{}, out.path());
  const Dataset d = Dataset::Open(out.path());
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.clip(0).record.split, Split::kTest);
  EXPECT_EQ(d.clip(0).record.tags, (std::vector<std::string>{"fast", "rock"}));
  EXPECT_EQ(d.clip(0).activity, g.stems.activity);
  const auto specs = ClipSpectrograms(g.stems, MelConfig{});
  EXPECT_EQ(d.ReadFullMixture(0).data, specs[kMixtureSignal].data);
}

TEST(IngestStems, MissingStemIsNamed) {
  TempDir in("ingest_in"), out("ingest_out");
  const GeneratedClip g = GenerateClip(Tiny(), 1);
  WriteWav(in.path() / "mix.wav", g.stems.mixture);
  {
    std::ofstream m(in.path() / "manifest.jsonl");
    m << R"({"clip_id": "a", "tags": ["x"], "stem_paths": {"mixture": "mix.wav"}})"
      << "\n";
  }
  try {
    IngestStems(in.path(), in.path() / "manifest.jsonl", MelConfig{}, out.path());
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "missing_stem");
  }
}

}  // namespace
}  // namespace msa
