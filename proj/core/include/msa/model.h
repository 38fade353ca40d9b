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

#ifndef MSA_MODEL_H_
#define MSA_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "msa/autodiff.h"
#include "msa/dsp.h"
#include "msa/tensor.h"
#include "msa/tensor_file.h"

namespace msa {

struct PairBatch;
struct LossSpec;

// One strided convolution + ReLU stage of the reference encoder.
struct ConvStage {
  int channels = 8;
  int kernel_h = 3;
  int kernel_w = 3;
  int stride_h = 2;
  int stride_w = 2;
};

struct ModelConfig {
  int feature_dim = 64;
  int embed_dim = 32;
  std::vector<ConvStage> encoder = {{8, 3, 3, 2, 2}, {16, 3, 3, 2, 2}};
  uint64_t init_seed = 0;
  int input_mels = 64;
  int input_frames = kCropFrames;

  // Throws Error("invalid_model_config"), including when the stages shrink
  // the input below one output position.
  void Validate() const;
};

inline constexpr double kLayerNormEps = 1e-5;

// Trainable state in a fixed order:
//   encoder.conv<i>.weight [Co, Ci, KH, KW], encoder.conv<i>.bias [Co]
//   encoder.dense.weight [d_f, C_last], encoder.dense.bias [d_f]
//   projection.weight [d_e, d_f], projection.bias [d_e]
//   projection.ln_gain [d_e], projection.ln_offset [d_e]
//   similarity.weight [d_e, d_e]
template <typename T>
struct ModelParams {
  ModelConfig config;
  std::vector<std::string> names;
  std::vector<Tensor<T>> tensors;

  size_t NumScalars() const;
  // Throws Error("unknown_parameter").
  size_t Index(const std::string& name) const;
  Tensor<T>& Get(const std::string& name) { return tensors[Index(name)]; }
  const Tensor<T>& Get(const std::string& name) const {
    return tensors[Index(name)];
  }
  bool AllFinite() const;

  template <typename U>
  ModelParams<U> Cast() const {
    ModelParams<U> out;
    out.config = config;
    out.names = names;
    for (const auto& t : tensors) out.tensors.push_back(t.template Cast<U>());
    return out;
  }
};

// Zero-valued parameters with the layout implied by cfg.
template <typename T>
ModelParams<T> ZeroParams(const ModelConfig& cfg);

// He-uniform conv/dense/projection weights, zero biases, unit layernorm gain,
// zero offset, similarity matrix ~ N(0, 1/d_e) (sigma = 1/sqrt(d_e)).
template <typename T>
ModelParams<T> InitParams(const ModelConfig& cfg);

// Parameter leaves bound onto a tape, in ModelParams order.
template <typename T>
std::vector<typename Tape<T>::Var> BindParams(Tape<T>& tape,
                                              const ModelParams<T>& params,
                                              bool requires_grad);

// Stacks n_mels x n_frames crops into [N, 1, n_mels, n_frames].
template <typename T>
Tensor<T> StackCrops(std::span<const MelSpectrogram> crops,
                     const ModelConfig& cfg);

template <typename T>
typename Tape<T>::Var EncoderOnTape(
    Tape<T>& tape, const ModelConfig& cfg,
    const std::vector<typename Tape<T>::Var>& params,
    typename Tape<T>::Var input);

template <typename T>
typename Tape<T>::Var ProjectionOnTape(
    Tape<T>& tape, const ModelConfig& cfg,
    const std::vector<typename Tape<T>::Var>& params,
    typename Tape<T>::Var features);

// Features of a single 64x98 crop. Throws Error("shape_mismatch").
template <typename T>
std::vector<T> Encode(const ModelParams<T>& params,
                      const MelSpectrogram& segment);
// Features [N, d_f] of several crops in one pass.
template <typename T>
Tensor<T> EncodeBatch(const ModelParams<T>& params,
                      std::span<const MelSpectrogram> segments);

// tanh(layernorm(P f + b)).
template <typename T>
std::vector<T> Project(const ModelParams<T>& params,
                       std::span<const T> feature);

// S[i, k] = anchors_i^T W candidates_k, evaluated as anchors (W c^T).
template <typename T>
Tensor<T> BilinearSimilarity(const Tensor<T>& w, const Tensor<T>& anchors,
                             const Tensor<T>& candidates);

template <typename T>
struct LossAndGrads {
  T loss = 0;
  ModelParams<T> grads;
};

// Loss of the batch under `spec` and gradients for every parameter tensor.
// Throws Error("numerical_blowup") on a non-finite loss.
template <typename T>
LossAndGrads<T> ForwardBackward(const ModelParams<T>& params,
                                const PairBatch& batch, const LossSpec& spec);

// Loss only, no gradient bookkeeping.
template <typename T>
T EvaluateLoss(const ModelParams<T>& params, const PairBatch& batch,
               const LossSpec& spec);

// Checkpoints: one f32 tensor per parameter, named as above.
std::vector<NamedTensor> ParamsToTensors(const ModelParams<float>& params);
ModelParams<float> ParamsFromTensors(const ModelConfig& cfg,
                                     const std::vector<NamedTensor>& tensors);

}  // namespace msa

#endif  // MSA_MODEL_H_
