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

#include "msa/loss.h"

#include <algorithm>
#include <cmath>

#include "msa/error.h"
#include "msa/pairing.h"

namespace msa {

void LossSpec::Validate() const {
  if (!(temperature > 0.0)) {
    throw Error("invalid_loss_spec", "temperature must be positive");
  }
}

DistractorLayout MakeDistractorLayout(const std::vector<bool>& silent_mask,
                                      bool aggregate) {
  DistractorLayout layout;
  const size_t b = silent_mask.size();
  layout.target_index.resize(b);
  if (!aggregate) {
    for (size_t i = 0; i < b; ++i) {
      layout.groups.push_back({i});
      layout.target_index[i] = i;
    }
    return layout;
  }
  std::vector<size_t> silent;
  for (size_t i = 0; i < b; ++i) {
    if (silent_mask[i]) {
      silent.push_back(i);
    } else {
      layout.target_index[i] = layout.groups.size();
      layout.groups.push_back({i});
    }
  }
  if (!silent.empty()) {
    for (size_t i : silent) layout.target_index[i] = layout.groups.size();
    layout.groups.push_back(std::move(silent));
  }
  return layout;
}

DistractorSet BuildDistractors(const Tensor<double>& pos_embeddings,
                               const std::vector<bool>& silent_mask,
                               bool aggregate) {
  if (pos_embeddings.rank() != 2 || pos_embeddings.dim(0) != silent_mask.size()) {
    throw Error("shape_mismatch", "one silent flag per positive embedding");
  }
  const DistractorLayout layout = MakeDistractorLayout(silent_mask, aggregate);
  Tape<double> tape;
  const auto cols =
      tape.GroupMean(tape.Constant(pos_embeddings), layout.groups);
  return {tape.value(cols), layout.target_index};
}

double MsaLoss(const Tensor<double>& anchor_embeddings,
               const DistractorSet& dset, const Tensor<double>& w,
               const LossSpec& spec) {
  spec.Validate();
  const Tensor<double> s = BilinearSimilarity(w, anchor_embeddings, dset.columns);
  for (double v : s.data) {
    if (!std::isfinite(v)) throw Error("numerical_blowup", "similarity");
  }
  Tape<double> tape;
  const auto loss = tape.SoftmaxCrossEntropy(tape.Constant(s), dset.target_index,
                                             1.0 / spec.temperature);
  return tape.value(loss).data[0];
}

template <typename T>
typename Tape<T>::Var MsaLossOnTape(Tape<T>& tape,
                                    typename Tape<T>::Var anchors,
                                    typename Tape<T>::Var positives,
                                    typename Tape<T>::Var w,
                                    const std::vector<bool>& silent_mask,
                                    const LossSpec& spec) {
  spec.Validate();
  if (tape.value(anchors).dim(0) != silent_mask.size() ||
      tape.value(positives).dim(0) != silent_mask.size()) {
    throw Error("shape_mismatch", "one silent flag per pair");
  }
  const DistractorLayout layout =
      MakeDistractorLayout(silent_mask, spec.aggregate_silent);
  const auto columns = tape.GroupMean(positives, layout.groups);
  // W applied to the candidate side: z_k = W c_k, then S = A Z^T.
  const auto wc = tape.MatMulTransB(columns, w);
  const auto sim = tape.MatMulTransB(anchors, wc);
  for (T v : tape.value(sim).data) {
    if (!std::isfinite(v)) throw Error("numerical_blowup", "similarity");
  }
  return tape.SoftmaxCrossEntropy(sim, layout.target_index,
                                  static_cast<T>(1.0 / spec.temperature));
}

template Tape<float>::Var MsaLossOnTape<float>(Tape<float>&, Tape<float>::Var,
                                               Tape<float>::Var,
                                               Tape<float>::Var,
                                               const std::vector<bool>&,
                                               const LossSpec&);
template Tape<double>::Var MsaLossOnTape<double>(
    Tape<double>&, Tape<double>::Var, Tape<double>::Var, Tape<double>::Var,
    const std::vector<bool>&, const LossSpec&);

GradCheckReport FiniteDifferenceCheck(const ModelParams<double>& params,
                                      const PairBatch& batch,
                                      const LossSpec& spec,
                                      const GradCheckOptions& options) {
  if (!(options.h >= 1e-5 && options.h <= 1e-2)) {
    throw Error("invalid_gradcheck", "h must lie in [1e-5, 1e-2]");
  }
  const LossAndGrads<double> analytic = ForwardBackward(params, batch, spec);
  ModelParams<double> probe = params;
  Rng rng = Rng::Stream(options.seed, "gradcheck");

  GradCheckReport report;
  for (size_t t = 0; t < params.tensors.size(); ++t) {
    const size_t n = params.tensors[t].size();
    std::vector<size_t> indices;
    if (options.mode == FdMode::kSampled &&
        n > static_cast<size_t>(options.samples_per_tensor)) {
      for (int k = 0; k < options.samples_per_tensor; ++k) {
        indices.push_back(rng.UniformInt(n));
      }
    } else {
      for (size_t i = 0; i < n; ++i) indices.push_back(i);
    }
    double tensor_max = 0.0;
    for (size_t i : indices) {
      double& theta = probe.tensors[t].data[i];
      const double saved = theta;
      theta = saved + options.h;
      const double up = EvaluateLoss(probe, batch, spec);
      theta = saved - options.h;
      const double down = EvaluateLoss(probe, batch, spec);
      theta = saved;
      const double numeric = (up - down) / (2.0 * options.h);
      const double exact = analytic.grads.tensors[t].data[i];
      const double denom =
          std::max({std::fabs(exact), std::fabs(numeric), 1e-8});
      const double err = std::fabs(exact - numeric) / denom;
      ++report.num_checked;
      tensor_max = std::max(tensor_max, err);
      if (err > report.max_rel_error || report.worst_param.empty()) {
        report.max_rel_error = std::max(report.max_rel_error, err);
        if (err >= report.max_rel_error) {
          report.worst_param = params.names[t];
          report.worst_index = i;
          report.worst_analytic = exact;
          report.worst_numeric = numeric;
        }
      }
    }
    report.per_tensor.emplace_back(params.names[t], tensor_max);
  }
  return report;
}

}  // namespace msa
