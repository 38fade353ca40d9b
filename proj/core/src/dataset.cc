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

#include "msa/dataset.h"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "msa/config.h"
#include "msa/error.h"
#include "msa/tensor_file.h"
#include "msa/wav.h"

namespace msa {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::array<std::string_view, kNumSources + 1> kSignalNames = {
    "bass", "drums", "other", "vocals", "mixture"};

json GeometryToJson(const DatasetGeometry& g) {
  return {{"sample_rate", g.sample_rate},
          {"n_mels", g.n_mels},
          {"frames_per_chunk", g.frames_per_chunk},
          {"chunk_frame_stride", g.chunk_frame_stride},
          {"log_floor", g.log_floor},
          {"shard_layout", "frame-major [n_frames, n_mels] f32"}};
}

DatasetGeometry GeometryFromJson(const json& j) {
  DatasetGeometry g;
  g.sample_rate = j.at("sample_rate").get<int>();
  g.n_mels = j.at("n_mels").get<int>();
  g.frames_per_chunk = j.at("frames_per_chunk").get<int>();
  g.chunk_frame_stride = j.at("chunk_frame_stride").get<int>();
  g.log_floor = j.at("log_floor").get<double>();
  return g;
}

class ShardStore : public SpectrogramStore {
 public:
  ShardStore(fs::path dir, const std::vector<ClipEntry>& clips, int n_mels)
      : dir_(std::move(dir)), n_mels_(n_mels) {
    for (const ClipEntry& c : clips) {
      const fs::path path = dir_ / c.shard;
      std::vector<TensorIndexEntry> index = ReadTensorIndex(path);
      std::array<TensorIndexEntry, kNumSources + 1> entries;
      for (int s = 0; s <= kNumSources; ++s) {
        auto it = std::find_if(index.begin(), index.end(), [&](const auto& e) {
          return e.name == kSignalNames[s];
        });
        if (it == index.end()) {
          throw Error("missing_tensor", c.record.clip_id + ": no '" +
                                            std::string(kSignalNames[s]) +
                                            "' in " + path.string());
        }
        if (it->dims.size() != 2 || it->dims[1] != static_cast<uint32_t>(n_mels) ||
            it->dims[0] != static_cast<uint32_t>(c.n_frames)) {
          throw Error("shape_mismatch",
                      c.record.clip_id + ": unexpected dims for " + it->name);
        }
        entries[s] = *it;
      }
      paths_.push_back(path);
      entries_.push_back(std::move(entries));
    }
  }

  void ReadFrames(size_t clip, int signal, int start, int count,
                  float* out) const override {
    ReadF32Range(paths_[clip], entries_[clip][signal],
                 static_cast<size_t>(start) * n_mels_,
                 static_cast<size_t>(count) * n_mels_, out);
  }

 private:
  fs::path dir_;
  int n_mels_;
  std::vector<fs::path> paths_;
  std::vector<std::array<TensorIndexEntry, kNumSources + 1>> entries_;
};

class MemoryStore : public SpectrogramStore {
 public:
  explicit MemoryStore(
      std::vector<std::array<MelSpectrogram, kNumSources + 1>> specs)
      : specs_(std::move(specs)) {}

  void ReadFrames(size_t clip, int signal, int start, int count,
                  float* out) const override {
    const MelSpectrogram& s = specs_[clip][signal];
    for (int f = 0; f < count; ++f) {
      for (int m = 0; m < s.n_mels; ++m) {
        out[static_cast<size_t>(f) * s.n_mels + m] = s.at(m, start + f);
      }
    }
  }

 private:
  std::vector<std::array<MelSpectrogram, kNumSources + 1>> specs_;
};

std::vector<float> FrameMajor(const MelSpectrogram& s) {
  std::vector<float> out(s.data.size());
  for (int m = 0; m < s.n_mels; ++m) {
    for (int t = 0; t < s.n_frames; ++t) {
      out[static_cast<size_t>(t) * s.n_mels + m] = s.at(m, t);
    }
  }
  return out;
}

void WriteShard(const fs::path& path,
                const std::array<MelSpectrogram, kNumSources + 1>& specs) {
  std::vector<NamedTensor> tensors;
  for (int s = 0; s <= kNumSources; ++s) {
    NamedTensor t;
    t.name = std::string(kSignalNames[s]);
    t.dims = {static_cast<uint32_t>(specs[s].n_frames),
              static_cast<uint32_t>(specs[s].n_mels)};
    t.data = FrameMajor(specs[s]);
    tensors.push_back(std::move(t));
  }
  WriteTensorFile(path, tensors);
}

void WriteJson(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void WriteManifest(const fs::path& path, const std::vector<ClipEntry>& clips) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  for (const ClipEntry& c : clips) out << ManifestLine(c) << "\n";
}

std::vector<bool> ChunkActivity(std::vector<float>& samples,
                                size_t chunk_samples) {
  std::vector<bool> active;
  for (size_t start = 0; start < samples.size(); start += chunk_samples) {
    const size_t len = std::min(chunk_samples, samples.size() - start);
    std::span<float> chunk(samples.data() + start, len);
    const bool silent = IsSilent(chunk);
    if (silent) std::fill(chunk.begin(), chunk.end(), 0.0f);
    active.push_back(!silent);
  }
  return active;
}

}  // namespace

DatasetGeometry MakeGeometry(const MelConfig& mel, int sample_rate,
                             size_t chunk_samples) {
  DatasetGeometry g;
  g.sample_rate = sample_rate;
  g.n_mels = mel.n_mels;
  g.frames_per_chunk = static_cast<int>(mel.NumFrames(chunk_samples, sample_rate));
  const int hop = mel.HopSamples(sample_rate);
  if (chunk_samples % hop != 0) {
    throw Error("invalid_mel_config",
                "chunk length must be a whole number of hops");
  }
  g.chunk_frame_stride = static_cast<int>(chunk_samples / hop);
  g.log_floor = mel.log_floor;
  return g;
}

std::string ManifestLine(const ClipEntry& e) {
  json j;
  j["clip_id"] = e.record.clip_id;
  j["split"] = std::string(SplitName(e.record.split));
  j["tags"] = e.record.tags;
  j["stem_paths"] = e.record.stem_paths;
  j["shard"] = e.shard;
  j["n_frames"] = e.n_frames;
  json act = json::object();
  for (Source s : kAllSources) {
    act[std::string(SourceName(s))] = e.activity[static_cast<int>(s)];
  }
  j["activity"] = act;
  return j.dump();
}

ClipEntry ParseManifestLine(const std::string& line) {
  const json j = json::parse(line);
  ClipEntry e;
  e.record.clip_id = j.at("clip_id").get<std::string>();
  e.record.split = ParseSplit(j.at("split").get<std::string>());
  e.record.tags = j.at("tags").get<std::vector<std::string>>();
  e.record.stem_paths =
      j.at("stem_paths").get<std::map<std::string, std::string>>();
  e.shard = j.at("shard").get<std::string>();
  e.n_frames = j.at("n_frames").get<int>();
  for (Source s : kAllSources) {
    e.activity[static_cast<int>(s)] =
        j.at("activity").at(std::string(SourceName(s))).get<std::vector<bool>>();
  }
  return e;
}

Dataset Dataset::Open(const fs::path& dir) {
  std::ifstream meta(dir / "dataset.json");
  if (!meta) {
    throw Error("missing_input", "no dataset.json in " + dir.string());
  }
  Dataset d;
  d.geometry_ = GeometryFromJson(json::parse(meta).at("geometry"));
  std::ifstream manifest(dir / "manifest.jsonl");
  if (!manifest) {
    throw Error("missing_input", "no manifest.jsonl in " + dir.string());
  }
  std::string line;
  while (std::getline(manifest, line)) {
    if (!line.empty()) d.clips_.push_back(ParseManifestLine(line));
  }
  d.store_ = std::make_shared<ShardStore>(dir, d.clips_, d.geometry_.n_mels);
  return d;
}

Dataset Dataset::FromMemory(
    std::vector<ClipEntry> clips,
    std::vector<std::array<MelSpectrogram, kNumSources + 1>> spectrograms,
    DatasetGeometry geometry) {
  if (clips.size() != spectrograms.size()) {
    throw Error("shape_mismatch", "one spectrogram set per clip required");
  }
  Dataset d;
  d.clips_ = std::move(clips);
  d.geometry_ = geometry;
  d.store_ = std::make_shared<MemoryStore>(std::move(spectrograms));
  return d;
}

std::vector<size_t> Dataset::SplitIndices(Split split) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < clips_.size(); ++i) {
    if (clips_[i].record.split == split) out.push_back(i);
  }
  return out;
}

int Dataset::NumFullChunks(size_t clip) const {
  const int n_frames = clips_[clip].n_frames;
  if (n_frames < geometry_.frames_per_chunk) return 0;
  return (n_frames - geometry_.frames_per_chunk) /
             geometry_.chunk_frame_stride +
         1;
}

MelSpectrogram Dataset::Read(size_t clip, int signal,
                             const CropWindow& win) const {
  const ClipEntry& c = clips_[clip];
  if (win.start_frame < 0 || win.length_frames < 0 ||
      win.start_frame + win.length_frames > c.n_frames) {
    throw Error("crop_out_of_range", c.record.clip_id);
  }
  const int n_mels = geometry_.n_mels;
  std::vector<float> frames(static_cast<size_t>(win.length_frames) * n_mels);
  store_->ReadFrames(clip, signal, win.start_frame, win.length_frames,
                     frames.data());
  MelSpectrogram out;
  out.n_mels = n_mels;
  out.n_frames = win.length_frames;
  out.clip_id = c.record.clip_id;
  if (signal != kMixtureSignal) out.source_id = std::string(kSignalNames[signal]);
  out.data.resize(frames.size());
  for (int t = 0; t < win.length_frames; ++t) {
    for (int m = 0; m < n_mels; ++m) {
      out.at(m, t) = frames[static_cast<size_t>(t) * n_mels + m];
    }
  }
  return out;
}

MelSpectrogram Dataset::ReadMixture(size_t clip, const CropWindow& win) const {
  return Read(clip, kMixtureSignal, win);
}

MelSpectrogram Dataset::ReadSource(size_t clip, Source s,
                                   const CropWindow& win) const {
  return Read(clip, static_cast<int>(s), win);
}

MelSpectrogram Dataset::ReadFullMixture(size_t clip) const {
  return Read(clip, kMixtureSignal, CropWindow{0, clips_[clip].n_frames});
}

std::array<MelSpectrogram, kNumSources + 1> ClipSpectrograms(
    const StemSet& stems, const MelConfig& mel) {
  std::array<MelSpectrogram, kNumSources + 1> out;
  for (int s = 0; s < kNumSources; ++s) {
    out[s] = ComputeMel(stems.stems[s], mel);
  }
  out[kMixtureSignal] = ComputeMel(stems.mixture, mel);
  return out;
}

void BuildSyntheticDataset(const GeneratorConfig& cfg, const MelConfig& mel,
                           const fs::path& dir, const BuildOptions& options) {
  cfg.Validate();
  mel.Validate(cfg.sample_rate);
  fs::create_directories(dir / "shards");
  const DatasetGeometry geometry =
      MakeGeometry(mel, cfg.sample_rate, cfg.ChunkSamples());

  std::vector<ClipEntry> entries(cfg.n_clips);
  std::atomic<int> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  auto worker = [&] {
    for (int i = next++; i < cfg.n_clips; i = next++) {
      try {
        GeneratedClip g = GenerateClip(cfg, i);
        auto specs = ClipSpectrograms(g.stems, mel);
        for (auto& s : specs) s.clip_id = g.record.clip_id;
        ClipEntry& e = entries[i];
        e.record = g.record;
        e.shard = "shards/" + g.record.clip_id + ".msat";
        e.n_frames = specs[kMixtureSignal].n_frames;
        e.activity = g.stems.activity;
        WriteShard(dir / e.shard, specs);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next = cfg.n_clips;
      }
    }
  };
  int n_threads = options.num_threads > 0
                      ? options.num_threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::clamp(n_threads, 1, cfg.n_clips);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  WriteManifest(dir / "manifest.jsonl", entries);
  WriteJson(dir / "dataset.json", {{"geometry", GeometryToJson(geometry)},
                                   {"generator", json::parse(GeneratorToJson(cfg))},
                                   {"mel", json::parse(MelToJson(mel))}});
}

void IngestStems(const fs::path& input_dir, const fs::path& manifest_path,
                 const MelConfig& mel, const fs::path& out_dir,
                 double chunk_seconds, const std::array<int, 3>& split_ratio) {
  mel.Validate(kDefaultSampleRate);
  std::ifstream manifest(manifest_path);
  if (!manifest) {
    throw Error("missing_input", "cannot open " + manifest_path.string());
  }
  const size_t chunk_samples =
      static_cast<size_t>(std::llround(chunk_seconds * kDefaultSampleRate));
  const DatasetGeometry geometry =
      MakeGeometry(mel, kDefaultSampleRate, chunk_samples);
  fs::create_directories(out_dir / "shards");

  std::vector<ClipEntry> entries;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    ClipEntry e;
    e.record.clip_id = j.at("clip_id").get<std::string>();
    const std::string& id = e.record.clip_id;
    e.record.split = j.contains("split")
                         ? ParseSplit(j["split"].get<std::string>())
                         : SplitForClip(id, split_ratio);
    e.record.tags = j.at("tags").get<std::vector<std::string>>();
    std::sort(e.record.tags.begin(), e.record.tags.end());
    if (e.record.tags.empty()) throw Error("invalid_manifest", id + ": no tags");
    e.record.stem_paths =
        j.at("stem_paths").get<std::map<std::string, std::string>>();

    auto load = [&](std::string_view name) {
      auto it = e.record.stem_paths.find(std::string(name));
      if (it == e.record.stem_paths.end()) {
        throw Error("missing_stem", id + ": manifest lacks '" +
                                        std::string(name) + "'");
      }
      const fs::path path = input_dir / it->second;
      if (!fs::exists(path)) {
        throw Error("missing_stem", id + ": " + path.string());
      }
      try {
        return ResampleLinear(ReadWav(path), kDefaultSampleRate);
      } catch (const Error& err) {
        throw Error(err.code(), id + ": " + err.what());
      }
    };

    StemSet set;
    set.mixture = load("mixture");
    for (Source s : kAllSources) {
      Waveform w = load(SourceName(s));
      if (w.samples.size() != set.mixture.samples.size()) {
        throw Error("length_mismatch",
                    id + ": " + std::string(SourceName(s)) + " has " +
                        std::to_string(w.samples.size()) +
                        " samples, mixture " +
                        std::to_string(set.mixture.samples.size()));
      }
      set.activity[static_cast<int>(s)] =
          ChunkActivity(w.samples, chunk_samples);
      set.stems[static_cast<int>(s)] = std::move(w);
    }
    if (set.mixture.samples.size() < chunk_samples) {
      throw Error("clip_too_short", id + ": shorter than one chunk");
    }
    auto specs = ClipSpectrograms(set, mel);
    e.shard = "shards/" + id + ".msat";
    e.n_frames = specs[kMixtureSignal].n_frames;
    e.activity = set.activity;
    WriteShard(out_dir / e.shard, specs);
    entries.push_back(std::move(e));
  }
  WriteManifest(out_dir / "manifest.jsonl", entries);
  WriteJson(out_dir / "dataset.json",
            {{"geometry", GeometryToJson(geometry)}, {"mel", json::parse(MelToJson(mel))}});
}

}  // namespace msa
