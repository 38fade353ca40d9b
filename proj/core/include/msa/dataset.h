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

#ifndef MSA_DATASET_H_
#define MSA_DATASET_H_

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "msa/dsp.h"
#include "msa/synth.h"

namespace msa {

// Frame geometry shared by every clip of a dataset.
struct DatasetGeometry {
  int sample_rate = kDefaultSampleRate;
  int n_mels = 64;
  // Frames computed from one chunk of audio (398 for 4 s at 25/10 ms).
  int frames_per_chunk = 0;
  // Frame offset between consecutive chunks (chunk_samples / hop).
  int chunk_frame_stride = 0;
  double log_floor = 1e-6;
};

DatasetGeometry MakeGeometry(const MelConfig& mel, int sample_rate,
                             size_t chunk_samples);

struct ClipEntry {
  ClipRecord record;
  std::string shard;  // relative to the dataset directory
  int n_frames = 0;
  // Activity of the stored stems, activity[source][chunk].
  std::array<std::vector<bool>, kNumSources> activity;
};

std::string ManifestLine(const ClipEntry& entry);
ClipEntry ParseManifestLine(const std::string& line);

// Source of spectrogram frames. Implementations copy `count` frames starting
// at `start` into `out` frame-major (out[frame * n_mels + mel]).
// signal: 0..3 are the sources in Source order, 4 is the mixture.
class SpectrogramStore {
 public:
  virtual ~SpectrogramStore() = default;
  virtual void ReadFrames(size_t clip, int signal, int start, int count,
                          float* out) const = 0;
};

inline constexpr int kMixtureSignal = kNumSources;

// Read-only handle over a manifest and its spectrogram shards. Safe to share
// across threads.
class Dataset {
 public:
  // Opens a directory written by BuildSyntheticDataset or IngestStems.
  static Dataset Open(const std::filesystem::path& dir);
  // In-memory dataset; spectrograms[clip][signal] follows the signal order
  // of SpectrogramStore.
  static Dataset FromMemory(
      std::vector<ClipEntry> clips,
      std::vector<std::array<MelSpectrogram, kNumSources + 1>> spectrograms,
      DatasetGeometry geometry);

  size_t size() const { return clips_.size(); }
  const ClipEntry& clip(size_t i) const { return clips_[i]; }
  const DatasetGeometry& geometry() const { return geometry_; }
  std::vector<size_t> SplitIndices(Split split) const;

  // Chunks that fit completely inside the clip.
  int NumFullChunks(size_t clip) const;
  int ChunkStartFrame(int chunk) const {
    return chunk * geometry_.chunk_frame_stride;
  }
  bool Active(size_t clip, Source s, int chunk) const {
    return clips_[clip].activity[static_cast<int>(s)][chunk];
  }

  MelSpectrogram ReadMixture(size_t clip, const CropWindow& win) const;
  MelSpectrogram ReadSource(size_t clip, Source s, const CropWindow& win) const;
  MelSpectrogram ReadFullMixture(size_t clip) const;

 private:
  MelSpectrogram Read(size_t clip, int signal, const CropWindow& win) const;

  std::vector<ClipEntry> clips_;
  DatasetGeometry geometry_;
  std::shared_ptr<const SpectrogramStore> store_;
};

struct BuildOptions {
  // 0 picks std::thread::hardware_concurrency().
  int num_threads = 0;
};

// Generates cfg.n_clips clips and writes manifest.jsonl, dataset.json and
// shards/<clip_id>.msat under `dir`. Output bytes depend only on the configs.
void BuildSyntheticDataset(const GeneratorConfig& cfg, const MelConfig& mel,
                           const std::filesystem::path& dir,
                           const BuildOptions& options = {});

// Imports externally separated stems. `manifest_path` is JSON Lines with
// clip_id, optional split, tags and stem_paths {mixture, bass, drums, other,
// vocals} relative to `input_dir`. Writes the same layout as
// BuildSyntheticDataset under `out_dir`.
void IngestStems(const std::filesystem::path& input_dir,
                 const std::filesystem::path& manifest_path,
                 const MelConfig& mel, const std::filesystem::path& out_dir,
                 double chunk_seconds = 4.0,
                 const std::array<int, 3>& split_ratio = {12, 1, 3});

// Spectrograms of one clip in signal order, silent chunks already zeroed.
std::array<MelSpectrogram, kNumSources + 1> ClipSpectrograms(
    const StemSet& stems, const MelConfig& mel);

}  // namespace msa

#endif  // MSA_DATASET_H_
