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


#include "msa/metrics.h"

#include <algorithm>
#include <numeric>

#include "msa/error.h"

namespace msa {
namespace {

void CheckAligned(size_t a, size_t b) {
  if (a != b) throw Error("length_mismatch", "scores and labels differ");
}

// Indices sorted by descending score.
std::vector<size_t> DescendingOrder(std::span<const double> scores) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

std::optional<double> RocAuc(std::span<const double> scores,
                             std::span<const int> labels) {
  CheckAligned(scores.size(), labels.size());
  const auto order = DescendingOrder(scores);
  // Walk tie blocks from the top, counting (positive, negative) pairs the
  // negative wins outright plus half of the tied ones.
  double pos = 0, neg = 0, losses = 0;
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    double bp = 0, bn = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? bp : bn) += 1;
      ++j;
    }
    losses += bp * neg + 0.5 * bp * bn;
    pos += bp;
    neg += bn;
    i = j;
  }
  if (pos == 0 || neg == 0) return std::nullopt;
  return 1.0 - losses / (pos * neg);
}

std::optional<double> PrAuc(std::span<const double> scores,
                            std::span<const int> labels) {
  CheckAligned(scores.size(), labels.size());
  const double total_pos =
      static_cast<double>(std::count_if(labels.begin(), labels.end(),
                                        [](int l) { return l != 0; }));
  if (total_pos == 0) return std::nullopt;
  const auto order = DescendingOrder(scores);
  double tp = 0, seen = 0, ap = 0;
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    double bp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]]) bp += 1;
      ++j;
    }
    tp += bp;
    seen += static_cast<double>(j - i);
    ap += (bp / total_pos) * (tp / seen);
    i = j;
  }
  return ap;
}

double WeightedAccuracy(std::span<const int> predicted,
                        std::span<const int> truth) {
  CheckAligned(predicted.size(), truth.size());
  if (predicted.empty()) return 0.0;
  size_t hits = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == truth[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace msa
