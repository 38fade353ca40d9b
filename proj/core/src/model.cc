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

#include "msa/model.h"

#include <cmath>

#include "msa/error.h"
#include "msa/loss.h"
#include "msa/pairing.h"
#include "msa/rng.h"

namespace msa {
namespace {

struct Layout {
  std::vector<std::string> names;
  std::vector<Shape> shapes;
};

Layout MakeLayout(const ModelConfig& cfg) {
  Layout l;
  size_t in_channels = 1;
  for (size_t i = 0; i < cfg.encoder.size(); ++i) {
    const ConvStage& s = cfg.encoder[i];
    const std::string p = "encoder.conv" + std::to_string(i);
    l.names.push_back(p + ".weight");
    l.shapes.push_back({static_cast<size_t>(s.channels), in_channels,
                        static_cast<size_t>(s.kernel_h),
                        static_cast<size_t>(s.kernel_w)});
    l.names.push_back(p + ".bias");
    l.shapes.push_back({static_cast<size_t>(s.channels)});
    in_channels = s.channels;
  }
  const size_t df = cfg.feature_dim, de = cfg.embed_dim;
  l.names.insert(l.names.end(),
                 {"encoder.dense.weight", "encoder.dense.bias",
                  "projection.weight", "projection.bias", "projection.ln_gain",
                  "projection.ln_offset", "similarity.weight"});
  l.shapes.insert(l.shapes.end(),
                  {{df, in_channels}, {df}, {de, df}, {de}, {de}, {de}, {de, de}});
  return l;
}

// Indices of the non-encoder parameters, counted from the end.
size_t DenseW(size_t n) { return n - 7; }
size_t DenseB(size_t n) { return n - 6; }
size_t ProjW(size_t n) { return n - 5; }
size_t ProjB(size_t n) { return n - 4; }
size_t LnGain(size_t n) { return n - 3; }
size_t LnOffset(size_t n) { return n - 2; }
size_t SimW(size_t n) { return n - 1; }

void CheckCrop(const MelSpectrogram& s, const ModelConfig& cfg) {
  if (s.n_mels != cfg.input_mels || s.n_frames != cfg.input_frames) {
    throw Error("shape_mismatch",
                "encoder expects " + std::to_string(cfg.input_mels) + "x" +
                    std::to_string(cfg.input_frames) + " crops, got " +
                    std::to_string(s.n_mels) + "x" + std::to_string(s.n_frames));
  }
}

}  // namespace

void ModelConfig::Validate() const {
  auto fail = [](const std::string& why) {
    return Error("invalid_model_config", why);
  };
  if (feature_dim < 1 || embed_dim < 1) throw fail("dimensions must be >= 1");
  if (encoder.empty()) throw fail("encoder needs at least one stage");
  int h = input_mels, w = input_frames;
  for (const ConvStage& s : encoder) {
    if (s.channels < 1 || s.kernel_h < 1 || s.kernel_w < 1 || s.stride_h < 1 ||
        s.stride_w < 1) {
      throw fail("conv stage fields must be >= 1");
    }
    if (h < s.kernel_h || w < s.kernel_w) {
      throw fail("conv stages shrink the input below the kernel size");
    }
    h = (h - s.kernel_h) / s.stride_h + 1;
    w = (w - s.kernel_w) / s.stride_w + 1;
  }
}

template <typename T>
size_t ModelParams<T>::NumScalars() const {
  size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

template <typename T>
size_t ModelParams<T>::Index(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw Error("unknown_parameter", name);
}

template <typename T>
bool ModelParams<T>::AllFinite() const {
  for (const auto& t : tensors) {
    for (T v : t.data) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

template <typename T>
ModelParams<T> ZeroParams(const ModelConfig& cfg) {
  cfg.Validate();
  const Layout l = MakeLayout(cfg);
  ModelParams<T> p;
  p.config = cfg;
  p.names = l.names;
  for (const Shape& s : l.shapes) p.tensors.emplace_back(s);
  return p;
}

template <typename T>
ModelParams<T> InitParams(const ModelConfig& cfg) {
  ModelParams<T> p = ZeroParams<T>(cfg);
  Rng rng = Rng::Stream(cfg.init_seed, "init");
  const size_t n = p.tensors.size();
  auto he_uniform = [&](Tensor<T>& t, size_t fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (T& v : t.data) v = static_cast<T>(rng.Uniform(-limit, limit));
  };
  for (size_t i = 0; i + 1 < 2 * cfg.encoder.size(); i += 2) {
    const Tensor<T>& w = p.tensors[i];
    he_uniform(p.tensors[i], w.dim(1) * w.dim(2) * w.dim(3));
  }
  he_uniform(p.tensors[DenseW(n)], p.tensors[DenseW(n)].dim(1));
  he_uniform(p.tensors[ProjW(n)], p.tensors[ProjW(n)].dim(1));
  for (T& v : p.tensors[LnGain(n)].data) v = T{1};
  const double sigma = 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim));
  for (T& v : p.tensors[SimW(n)].data) v = static_cast<T>(sigma * rng.Normal());
  return p;
}

template <typename T>
std::vector<typename Tape<T>::Var> BindParams(Tape<T>& tape,
                                              const ModelParams<T>& params,
                                              bool requires_grad) {
  std::vector<typename Tape<T>::Var> vars;
  for (const auto& t : params.tensors) vars.push_back(tape.Leaf(t, requires_grad));
  return vars;
}

template <typename T>
Tensor<T> StackCrops(std::span<const MelSpectrogram> crops,
                     const ModelConfig& cfg) {
  const size_t h = cfg.input_mels, w = cfg.input_frames;
  Tensor<T> out({crops.size(), 1, h, w});
  for (size_t i = 0; i < crops.size(); ++i) {
    CheckCrop(crops[i], cfg);
    std::copy(crops[i].data.begin(), crops[i].data.end(),
              out.data.begin() + i * h * w);
  }
  return out;
}

template <typename T>
typename Tape<T>::Var EncoderOnTape(
    Tape<T>& tape, const ModelConfig& cfg,
    const std::vector<typename Tape<T>::Var>& params,
    typename Tape<T>::Var input) {
  auto x = input;
  for (size_t i = 0; i < cfg.encoder.size(); ++i) {
    const ConvStage& s = cfg.encoder[i];
    x = tape.Relu(tape.Conv2d(x, params[2 * i], params[2 * i + 1], s.stride_h,
                              s.stride_w));
  }
  x = tape.GlobalMaxPool(x);
  const size_t n = params.size();
  return tape.AddRowBias(tape.MatMulTransB(x, params[DenseW(n)]),
                         params[DenseB(n)]);
}

template <typename T>
typename Tape<T>::Var ProjectionOnTape(
    Tape<T>& tape, const ModelConfig&,
    const std::vector<typename Tape<T>::Var>& params,
    typename Tape<T>::Var features) {
  const size_t n = params.size();
  auto z = tape.AddRowBias(tape.MatMulTransB(features, params[ProjW(n)]),
                           params[ProjB(n)]);
  z = tape.LayerNorm(z, params[LnGain(n)], params[LnOffset(n)],
                     static_cast<T>(kLayerNormEps));
  return tape.Tanh(z);
}

template <typename T>
Tensor<T> EncodeBatch(const ModelParams<T>& params,
                      std::span<const MelSpectrogram> segments) {
  Tape<T> tape;
  const auto vars = BindParams(tape, params, false);
  const auto input = tape.Constant(StackCrops<T>(segments, params.config));
  return tape.value(EncoderOnTape(tape, params.config, vars, input));
}

template <typename T>
std::vector<T> Encode(const ModelParams<T>& params,
                      const MelSpectrogram& segment) {
  return EncodeBatch(params, std::span<const MelSpectrogram>(&segment, 1)).data;
}

template <typename T>
std::vector<T> Project(const ModelParams<T>& params,
                       std::span<const T> feature) {
  if (feature.size() != static_cast<size_t>(params.config.feature_dim)) {
    throw Error("shape_mismatch", "feature length differs from feature_dim");
  }
  Tape<T> tape;
  const auto vars = BindParams(tape, params, false);
  const auto f = tape.Constant(Tensor<T>(
      {1, feature.size()}, std::vector<T>(feature.begin(), feature.end())));
  return tape.value(ProjectionOnTape(tape, params.config, vars, f)).data;
}

template <typename T>
Tensor<T> BilinearSimilarity(const Tensor<T>& w, const Tensor<T>& anchors,
                             const Tensor<T>& candidates) {
  if (w.rank() != 2 || anchors.rank() != 2 || candidates.rank() != 2 ||
      w.dim(0) != w.dim(1) || anchors.dim(1) != w.dim(0) ||
      candidates.dim(1) != w.dim(0)) {
    throw Error("shape_mismatch", "bilinear similarity operand shapes");
  }
  Tape<T> tape;
  const auto wv = tape.Constant(w);
  const auto wc = tape.MatMulTransB(tape.Constant(candidates), wv);
  return tape.value(tape.MatMulTransB(tape.Constant(anchors), wc));
}

namespace {

template <typename T>
struct BatchGraph {
  std::vector<typename Tape<T>::Var> params;
  typename Tape<T>::Var loss;
};

template <typename T>
BatchGraph<T> BuildBatchGraph(Tape<T>& tape, const ModelParams<T>& params,
                              const PairBatch& batch, const LossSpec& spec,
                              bool requires_grad) {
  const ModelConfig& cfg = params.config;
  BatchGraph<T> g;
  g.params = BindParams(tape, params, requires_grad);
  // Anchors and positives share one encoder pass.
  std::vector<MelSpectrogram> crops = batch.anchors;
  crops.insert(crops.end(), batch.positives.begin(), batch.positives.end());
  const auto input = tape.Constant(StackCrops<T>(crops, cfg));
  const auto emb = ProjectionOnTape(
      tape, cfg, g.params, EncoderOnTape(tape, cfg, g.params, input));
  const size_t b = batch.size();
  // Row selection via single-row groups.
  std::vector<std::vector<size_t>> anchor_rows, positive_rows;
  for (size_t i = 0; i < b; ++i) {
    anchor_rows.push_back({i});
    positive_rows.push_back({b + i});
  }
  const auto anchors = tape.GroupMean(emb, anchor_rows);
  const auto positives = tape.GroupMean(emb, positive_rows);
  g.loss = MsaLossOnTape(tape, anchors, positives, g.params.back(),
                         batch.silent_mask, spec);
  return g;
}

}  // namespace

template <typename T>
LossAndGrads<T> ForwardBackward(const ModelParams<T>& params,
                                const PairBatch& batch, const LossSpec& spec) {
  Tape<T> tape;
  const BatchGraph<T> g = BuildBatchGraph(tape, params, batch, spec, true);
  LossAndGrads<T> out;
  out.loss = tape.value(g.loss).data[0];
  if (!std::isfinite(out.loss)) {
    throw Error("numerical_blowup", "non-finite loss");
  }
  tape.Backward(g.loss);
  out.grads.config = params.config;
  out.grads.names = params.names;
  for (auto v : g.params) out.grads.tensors.push_back(tape.grad(v));
  return out;
}

template <typename T>
T EvaluateLoss(const ModelParams<T>& params, const PairBatch& batch,
               const LossSpec& spec) {
  Tape<T> tape;
  const BatchGraph<T> g = BuildBatchGraph(tape, params, batch, spec, false);
  const T loss = tape.value(g.loss).data[0];
  if (!std::isfinite(loss)) throw Error("numerical_blowup", "non-finite loss");
  return loss;
}

std::vector<NamedTensor> ParamsToTensors(const ModelParams<float>& params) {
  std::vector<NamedTensor> out;
  for (size_t i = 0; i < params.tensors.size(); ++i) {
    NamedTensor t;
    t.name = params.names[i];
    for (size_t d : params.tensors[i].shape) {
      t.dims.push_back(static_cast<uint32_t>(d));
    }
    t.data = params.tensors[i].data;
    out.push_back(std::move(t));
  }
  return out;
}

ModelParams<float> ParamsFromTensors(const ModelConfig& cfg,
                                     const std::vector<NamedTensor>& tensors) {
  ModelParams<float> p = ZeroParams<float>(cfg);
  if (tensors.size() != p.tensors.size()) {
    throw Error("checkpoint_mismatch",
                "expected " + std::to_string(p.tensors.size()) +
                    " tensors, found " + std::to_string(tensors.size()));
  }
  for (const NamedTensor& t : tensors) {
    Tensor<float>& dst = p.Get(t.name);
    Shape shape(t.dims.begin(), t.dims.end());
    if (shape != dst.shape || t.dtype() != DType::kF32) {
      throw Error("checkpoint_mismatch",
                  t.name + " has shape " + ShapeString(shape) + ", expected " +
                      ShapeString(dst.shape));
    }
    dst.data = t.f32();
  }
  return p;
}

#define MSA_INSTANTIATE_MODEL(T)                                              \
  template struct ModelParams<T>;                                             \
  template ModelParams<T> ZeroParams<T>(const ModelConfig&);                  \
  template ModelParams<T> InitParams<T>(const ModelConfig&);                  \
  template std::vector<Tape<T>::Var> BindParams<T>(Tape<T>&,                  \
                                                   const ModelParams<T>&,     \
                                                   bool);                     \
  template Tensor<T> StackCrops<T>(std::span<const MelSpectrogram>,           \
                                   const ModelConfig&);                       \
  template Tape<T>::Var EncoderOnTape<T>(Tape<T>&, const ModelConfig&,        \
                                         const std::vector<Tape<T>::Var>&,    \
                                         Tape<T>::Var);                       \
  template Tape<T>::Var ProjectionOnTape<T>(                                  \
      Tape<T>&, const ModelConfig&, const std::vector<Tape<T>::Var>&,         \
      Tape<T>::Var);                                                          \
  template std::vector<T> Encode<T>(const ModelParams<T>&,                    \
                                    const MelSpectrogram&);                   \
  template Tensor<T> EncodeBatch<T>(const ModelParams<T>&,                    \
                                    std::span<const MelSpectrogram>);         \
  template std::vector<T> Project<T>(const ModelParams<T>&,                   \
                                     std::span<const T>);                     \
  template Tensor<T> BilinearSimilarity<T>(const Tensor<T>&, const Tensor<T>&, \
                                           const Tensor<T>&);                 \
  template LossAndGrads<T> ForwardBackward<T>(                                \
      const ModelParams<T>&, const PairBatch&, const LossSpec&);              \
  template T EvaluateLoss<T>(const ModelParams<T>&, const PairBatch&,         \
                             const LossSpec&);

MSA_INSTANTIATE_MODEL(float)
MSA_INSTANTIATE_MODEL(double)

#undef MSA_INSTANTIATE_MODEL

}  // namespace msa
