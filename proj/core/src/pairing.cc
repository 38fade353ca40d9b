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

#include <algorithm>
#include <array>

#include "msa/error.h"

namespace msa {
namespace {

constexpr std::array<std::string_view, 8> kVariantNames = {
    "MSA", "NSV1", "NSV2", "A1", "A2", "A3", "COLA", "RANDMASK"};
constexpr int kMaxDegenerateDraws = 100;

bool PerItemSource(VariantKind k) {
  return k == VariantKind::kNsv2 || k == VariantKind::kA1;
}

bool NonSilentOnly(VariantKind k) {
  return k == VariantKind::kNsv1 || k == VariantKind::kNsv2;
}

// Full chunks of `clip` in which `s` is active.
std::vector<int> ActiveChunks(const Dataset& d, size_t clip, Source s) {
  std::vector<int> out;
  for (int c = 0; c < d.NumFullChunks(clip); ++c) {
    if (d.Active(clip, s, c)) out.push_back(c);
  }
  return out;
}

// k distinct elements of `pool`, uniformly, via a partial Fisher-Yates pass.
std::vector<size_t> SampleDistinct(std::vector<size_t> pool, size_t k,
                                   Rng& rng) {
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + rng.UniformInt(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

Source RandomSource(Rng& rng) {
  return kAllSources[rng.UniformInt(kNumSources)];
}

int RandomStart(const Dataset& d, int chunk, Rng& rng) {
  const int span = d.geometry().frames_per_chunk - kCropFrames + 1;
  return d.ChunkStartFrame(chunk) + static_cast<int>(rng.UniformInt(span));
}

}  // namespace

std::string_view VariantName(VariantKind kind) {
  return kVariantNames[static_cast<int>(kind)];
}

VariantKind ParseVariant(std::string_view name) {
  for (size_t i = 0; i < kVariantNames.size(); ++i) {
    if (kVariantNames[i] == name) return static_cast<VariantKind>(i);
  }
  throw Error("unknown_variant", std::string(name));
}

void PairVariant::Validate() const {
  if (!fixed_source) return;
  if (PerItemSource(kind)) {
    throw Error("invalid_variant",
                std::string(VariantName(kind)) +
                    " draws a source per item; a fixed source contradicts it");
  }
  if (kind == VariantKind::kCola || kind == VariantKind::kRandMask) {
    throw Error("invalid_variant", std::string(VariantName(kind)) +
                                       " does not use separated sources");
  }
}

size_t PairBatch::NumSilent() const {
  return static_cast<size_t>(
      std::count(silent_mask.begin(), silent_mask.end(), true));
}

PairBatch DrawBatch(const Dataset& dataset, const PairVariant& variant,
                    int batch_size, Rng& rng, Split split) {
  variant.Validate();
  if (batch_size < 1) throw Error("invalid_batch_size", "batch_size < 1");
  if (dataset.geometry().frames_per_chunk < kCropFrames) {
    throw Error("dataset_exhausted", "chunks shorter than one crop");
  }
  const size_t b = static_cast<size_t>(batch_size);
  const VariantKind kind = variant.kind;

  std::vector<size_t> pool;
  for (size_t i : dataset.SplitIndices(split)) {
    if (dataset.NumFullChunks(i) > 0) pool.push_back(i);
  }

  // Per-item (clip, chunk, source) choices.
  std::vector<size_t> clips;
  std::vector<int> chunks;
  std::vector<Source> sources;
  const Source batch_source =
      variant.fixed_source ? *variant.fixed_source : RandomSource(rng);

  if (kind == VariantKind::kNsv2) {
    std::array<std::vector<size_t>, kNumSources> eligible;
    std::vector<bool> any(dataset.size(), false);
    for (size_t i : pool) {
      for (Source s : kAllSources) {
        if (!ActiveChunks(dataset, i, s).empty()) {
          eligible[static_cast<int>(s)].push_back(i);
          any[i] = true;
        }
      }
    }
    if (static_cast<size_t>(std::count(any.begin(), any.end(), true)) < b) {
      throw Error("dataset_exhausted",
                  "fewer than " + std::to_string(b) +
                      " clips with an active source");
    }
    std::vector<bool> used(dataset.size(), false);
    const size_t max_attempts = 1000 * b;
    size_t attempts = 0;
    while (clips.size() < b) {
      if (++attempts > max_attempts) {
        throw Error("dataset_exhausted", "could not fill an NSV2 batch");
      }
      const Source s = RandomSource(rng);
      const auto& el = eligible[static_cast<int>(s)];
      if (el.empty()) continue;
      const size_t clip = el[rng.UniformInt(el.size())];
      if (used[clip]) continue;
      used[clip] = true;
      const auto active = ActiveChunks(dataset, clip, s);
      clips.push_back(clip);
      chunks.push_back(active[rng.UniformInt(active.size())]);
      sources.push_back(s);
    }
  } else if (kind == VariantKind::kNsv1) {
    std::vector<size_t> eligible;
    for (size_t i : pool) {
      if (!ActiveChunks(dataset, i, batch_source).empty()) eligible.push_back(i);
    }
    if (eligible.size() < b) {
      throw Error("dataset_exhausted",
                  "fewer than " + std::to_string(b) + " clips with active " +
                      std::string(SourceName(batch_source)));
    }
    clips = SampleDistinct(std::move(eligible), b, rng);
    for (size_t clip : clips) {
      const auto active = ActiveChunks(dataset, clip, batch_source);
      chunks.push_back(active[rng.UniformInt(active.size())]);
      sources.push_back(batch_source);
    }
  } else {
    if (pool.size() < b) {
      throw Error("dataset_exhausted",
                  std::to_string(pool.size()) + " clips in split, need " +
                      std::to_string(b));
    }
    clips = SampleDistinct(std::move(pool), b, rng);
    for (size_t clip : clips) {
      chunks.push_back(
          static_cast<int>(rng.UniformInt(dataset.NumFullChunks(clip))));
      sources.push_back(PerItemSource(kind) ? RandomSource(rng) : batch_source);
    }
  }

  PairBatch batch;
  for (size_t i = 0; i < b; ++i) {
    const size_t clip = clips[i];
    const int chunk = chunks[i];
    const Source s = sources[i];
    const CropWindow anchor_win{RandomStart(dataset, chunk, rng), kCropFrames};
    CropWindow pos_win = anchor_win;
    if (kind != VariantKind::kA3) {
      pos_win.start_frame = RandomStart(dataset, chunk, rng);
    }
    batch.anchors.push_back(dataset.ReadMixture(clip, anchor_win));
    switch (kind) {
      case VariantKind::kCola:
        batch.positives.push_back(dataset.ReadMixture(clip, pos_win));
        batch.silent_mask.push_back(false);
        break;
      case VariantKind::kRandMask:
        batch.positives.push_back(
            RandomSoftMask(dataset.ReadMixture(clip, pos_win), rng,
                           dataset.geometry().log_floor));
        batch.silent_mask.push_back(false);
        break;
      default:
        batch.positives.push_back(dataset.ReadSource(clip, s, pos_win));
        batch.silent_mask.push_back(!dataset.Active(clip, s, chunk));
        break;
    }
    batch.source_ids.push_back(s);
    batch.clip_ids.push_back(dataset.clip(clip).record.clip_id);
    batch.clip_indices.push_back(clip);
    batch.anchor_windows.push_back(anchor_win);
    batch.positive_windows.push_back(pos_win);
  }
  if (NonSilentOnly(kind) && batch.NumSilent() != 0) {
    throw Error("internal_error", "non-silent variant produced a silent item");
  }
  return batch;
}

PairBatch ResampleIfDegenerate(PairBatch batch,
                               const std::function<PairBatch()>& redraw) {
  int draws = 1;
  while (batch.size() > 0 && batch.NumSilent() == batch.size()) {
    if (draws >= kMaxDegenerateDraws) {
      throw Error("degenerate_dataset",
                  std::to_string(kMaxDegenerateDraws) +
                      " consecutive batches without a non-silent positive");
    }
    batch = redraw();
    ++draws;
  }
  return batch;
}

PairBatch MineBatch(const Dataset& dataset, const PairVariant& variant,
                    int batch_size, Rng& rng, Split split) {
  auto draw = [&] { return DrawBatch(dataset, variant, batch_size, rng, split); };
  return ResampleIfDegenerate(draw(), draw);
}

}  // namespace msa
