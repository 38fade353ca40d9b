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

#ifndef MSA_PAIRING_H_
#define MSA_PAIRING_H_

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msa/dataset.h"
#include "msa/dsp.h"
#include "msa/rng.h"
#include "msa/synth.h"

namespace msa {

enum class VariantKind { kMsa, kNsv1, kNsv2, kA1, kA2, kA3, kCola, kRandMask };

std::string_view VariantName(VariantKind kind);
// Accepts MSA|NSV1|NSV2|A1|A2|A3|COLA|RANDMASK. Throws Error("unknown_variant").
VariantKind ParseVariant(std::string_view name);

struct PairVariant {
  VariantKind kind = VariantKind::kMsa;
  // Source-targeted training: every batch uses this source.
  std::optional<Source> fixed_source;

  // Throws Error("invalid_variant") for combinations without a meaning, e.g. a
  // fixed source with per-item source selection.
  void Validate() const;
  // Only A2 trains without the silent-centroid aggregation.
  bool aggregate_silent() const { return kind != VariantKind::kA2; }
};

// B aligned (anchor, positive) crops. Immutable once mined.
struct PairBatch {
  std::vector<MelSpectrogram> anchors;
  std::vector<MelSpectrogram> positives;
  std::vector<bool> silent_mask;
  std::vector<Source> source_ids;
  std::vector<std::string> clip_ids;
  std::vector<size_t> clip_indices;
  // Frame windows within each clip's spectrogram.
  std::vector<CropWindow> anchor_windows;
  std::vector<CropWindow> positive_windows;

  size_t size() const { return anchors.size(); }
  size_t NumSilent() const;
};

// One draw of a batch under `variant` from `split`. May be degenerate (every
// positive silent). Throws Error("dataset_exhausted").
PairBatch DrawBatch(const Dataset& dataset, const PairVariant& variant,
                    int batch_size, Rng& rng, Split split = Split::kTrain);

// Returns `batch` unless every positive is silent, in which case `redraw` is
// called until a batch with a non-silent positive appears. Throws
// Error("degenerate_dataset") after 100 consecutive degenerate draws.
PairBatch ResampleIfDegenerate(PairBatch batch,
                               const std::function<PairBatch()>& redraw);

// DrawBatch followed by ResampleIfDegenerate.
PairBatch MineBatch(const Dataset& dataset, const PairVariant& variant,
                    int batch_size, Rng& rng, Split split = Split::kTrain);

}  // namespace msa

#endif  // MSA_PAIRING_H_
