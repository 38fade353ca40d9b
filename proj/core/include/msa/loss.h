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

#ifndef MSA_LOSS_H_
#define MSA_LOSS_H_

#include <string>
#include <utility>
#include <vector>

#include "msa/autodiff.h"
#include "msa/model.h"
#include "msa/tensor.h"

namespace msa {

struct PairBatch;

struct LossSpec {
  double temperature = 0.2;
  // false reproduces plain NT-Xent (every positive is its own column).
  bool aggregate_silent = true;

  void Validate() const;
};

// Column layout of the distractor set: the non-silent positives in batch
// order, then one centroid column shared by all silent positives.
struct DistractorLayout {
  std::vector<std::vector<size_t>> groups;  // batch rows averaged per column
  std::vector<size_t> target_index;         // column of each anchor's positive

  size_t num_columns() const { return groups.size(); }
};

DistractorLayout MakeDistractorLayout(const std::vector<bool>& silent_mask,
                                      bool aggregate);

struct DistractorSet {
  Tensor<double> columns;  // [K, d_e]
  std::vector<size_t> target_index;
};

DistractorSet BuildDistractors(const Tensor<double>& pos_embeddings,
                               const std::vector<bool>& silent_mask,
                               bool aggregate);

// -(1/B) sum_i log softmax(S[i, :] / T)[target_i] with
// S = BilinearSimilarity(w, anchors, dset.columns).
double MsaLoss(const Tensor<double>& anchor_embeddings,
               const DistractorSet& dset, const Tensor<double>& w,
               const LossSpec& spec);

// Same objective recorded on a tape, from per-item positive embeddings.
template <typename T>
typename Tape<T>::Var MsaLossOnTape(Tape<T>& tape,
                                    typename Tape<T>::Var anchors,
                                    typename Tape<T>::Var positives,
                                    typename Tape<T>::Var w,
                                    const std::vector<bool>& silent_mask,
                                    const LossSpec& spec);

enum class FdMode { kExhaustive, kSampled };

struct GradCheckOptions {
  double h = 1e-5;
  FdMode mode = FdMode::kExhaustive;
  // Scalars checked per tensor in kSampled mode.
  int samples_per_tensor = 32;
  uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  size_t num_checked = 0;
  std::vector<std::pair<std::string, double>> per_tensor;
};

// Central differences on every (or a sample of every) parameter scalar,
// compared with ForwardBackward; the error of one scalar is
// |g_a - g_fd| / max(|g_a|, |g_fd|, 1e-8).
GradCheckReport FiniteDifferenceCheck(const ModelParams<double>& params,
                                      const PairBatch& batch,
                                      const LossSpec& spec,
                                      const GradCheckOptions& options = {});

}  // namespace msa

#endif  // MSA_LOSS_H_
