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


#include "msa/trainer.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

#include "msa/error.h"
#include "msa/loss.h"
#include "msa/tensor_file.h"

namespace msa {
namespace fs = std::filesystem;

void TrainConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error("invalid_train_config", what);
  };
  if (total_steps < 1) fail("total_steps must be >= 1");
  if (batches_per_step < 1) fail("batches_per_step must be >= 1");
  if (batch_size < 2) fail("batch_size must be >= 2");
  if (!(lr0 > 0)) fail("lr0 must be > 0");
  if (HalveAt() < 0 || HalveAt() > total_steps) {
    fail("halve_at must lie in [0, total_steps]");
  }
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) {
    fail("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0)) fail("epsilon must be > 0");
  if (early_stop_window < 1) fail("early_stop_window must be >= 1");
  if (validation_batches < 1) fail("validation_batches must be >= 1");
  if (checkpoint_every < 1) fail("checkpoint_every must be >= 1");
  if (!(temperature > 0)) fail("temperature must be > 0");
  variant.Validate();
}

double LearningRate(const TrainConfig& cfg, int64_t update) {
  const int64_t step = update / cfg.batches_per_step;
  return step >= cfg.HalveAt() ? cfg.lr0 / 2 : cfg.lr0;
}

AdamState MakeAdamState(const ModelParams<float>& params) {
  AdamState s;
  for (const auto& t : params.tensors) {
    s.m.emplace_back(t.data.size(), 0.0f);
    s.v.emplace_back(t.data.size(), 0.0f);
  }
  return s;
}

void AdamUpdate(ModelParams<float>& params, AdamState& state,
                const ModelParams<float>& grads, double lr, double beta1,
                double beta2, double epsilon) {
  if (grads.tensors.size() != params.tensors.size() ||
      state.m.size() != params.tensors.size()) {
    throw Error("shape_mismatch", "gradient / optimizer layout differs");
  }
  for (size_t i = 0; i < grads.tensors.size(); ++i) {
    if (grads.tensors[i].data.size() != params.tensors[i].data.size()) {
      throw Error("shape_mismatch", "gradient for " + params.names[i]);
    }
    for (float g : grads.tensors[i].data) {
      if (!std::isfinite(g)) {
        throw Error("numerical_blowup",
                    "non-finite gradient in " + params.names[i] +
                        " at update " + std::to_string(state.t));
      }
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.tensors.size(); ++i) {
    auto& p = params.tensors[i].data;
    const auto& g = grads.tensors[i].data;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k];
      m[k] = static_cast<float>(beta1 * m[k] + (1 - beta1) * gk);
      v[k] = static_cast<float>(beta2 * v[k] + (1 - beta2) * gk * gk);
      const double mh = m[k] / c1;
      const double vh = v[k] / c2;
      p[k] = static_cast<float>(p[k] - lr * mh / (std::sqrt(vh) + epsilon));
    }
  }
}

EarlyStopper::EarlyStopper(int window) : window_(window) {
  if (window < 1) throw Error("invalid_train_config", "window must be >= 1");
}

bool EarlyStopper::Push(double val_loss) {
  history_.push_back(val_loss);
  const size_t w = static_cast<size_t>(window_);
  const size_t n = history_.size();
  if (n < 2 * w) return false;
  double recent = 0, before = 0;
  for (size_t i = 0; i < w; ++i) {
    recent += history_[n - 1 - i];
    before += history_[n - 1 - w - i];
  }
  return recent / w >= before / w;
}

std::string CurveCsv(const std::vector<CurveRow>& rows) {
  std::ostringstream out;
  out << "step,update,lr,train_loss,val_loss\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%lld,%.9g,%.9g,%.9g\n", r.step,
                  static_cast<long long>(r.update), r.lr, r.train_loss,
                  r.val_loss);
    out << buf;
  }
  return out.str();
}

void SaveCheckpoint(const fs::path& path, const ModelParams<float>& params) {
  WriteTensorFile(path, ParamsToTensors(params));
}

ModelParams<float> LoadCheckpoint(const fs::path& path,
                                  const ModelConfig& model) {
  return ParamsFromTensors(model, ReadTensorFile(path));
}

namespace {

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("io_error", "cannot write " + path.string());
}

}  // namespace

TrainResult Pretrain(const TrainConfig& cfg, const ModelConfig& model,
                     const Dataset& dataset, const TrainHooks& hooks) {
  cfg.Validate();
  model.Validate();
  const LossSpec spec{cfg.temperature, cfg.variant.aggregate_silent()};
  spec.Validate();
  if (hooks.out_dir) fs::create_directories(*hooks.out_dir);

  std::vector<PairBatch> validation;
  for (int i = 0; i < cfg.validation_batches; ++i) {
    Rng rng = Rng::Stream(cfg.seed, "validation", i);
    validation.push_back(
        MineBatch(dataset, cfg.variant, cfg.batch_size, rng, Split::kValid));
  }
  auto mine = [&](int64_t update) {
    Rng rng = Rng::Stream(cfg.seed, "pairing", static_cast<uint64_t>(update));
    return MineBatch(dataset, cfg.variant, cfg.batch_size, rng, Split::kTrain);
  };

  TrainResult result;
  ModelParams<float> params = InitParams<float>(model);
  AdamState adam = MakeAdamState(params);
  EarlyStopper stopper(cfg.early_stop_window);
  double best_val = INFINITY;
  result.best_params = params;

  int64_t update = 0;
  std::future<PairBatch> next =
      std::async(std::launch::async, mine, update);
  for (int step = 0; step < cfg.total_steps; ++step) {
    double train_sum = 0;
    double lr = cfg.lr0;
    for (int b = 0; b < cfg.batches_per_step; ++b, ++update) {
      const PairBatch batch = next.get();
      const bool more =
          step + 1 < cfg.total_steps || b + 1 < cfg.batches_per_step;
      if (more) next = std::async(std::launch::async, mine, update + 1);
      lr = LearningRate(cfg, update);
      LossAndGrads<float> lg;
      try {
        lg = ForwardBackward(params, batch, spec);
      } catch (const Error& e) {
        if (e.code() != "numerical_blowup") throw;
        throw Error("numerical_blowup",
                    "update " + std::to_string(update) + ": " + e.what());
      }
      AdamUpdate(params, adam, lg.grads, lr, cfg.beta1, cfg.beta2,
                 cfg.epsilon);
      train_sum += lg.loss;
    }
    double val_sum = 0;
    for (const auto& vb : validation) val_sum += EvaluateLoss(params, vb, spec);

    CurveRow row;
    row.step = step;
    row.update = update;
    row.lr = lr;
    row.train_loss = train_sum / cfg.batches_per_step;
    row.val_loss = val_sum / static_cast<double>(validation.size());
    result.curve.push_back(row);
    if (row.val_loss < best_val) {
      best_val = row.val_loss;
      result.best_params = params;
      result.best_step = step;
      if (hooks.out_dir) SaveCheckpoint(*hooks.out_dir / "best.msat", params);
    }
    if (hooks.out_dir && (step + 1) % cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "step_%06d.msat", step + 1);
      SaveCheckpoint(*hooks.out_dir / name, params);
      WriteText(*hooks.out_dir / "curve.csv", CurveCsv(result.curve));
    }
    if (hooks.on_step) hooks.on_step(row);
    if (stopper.Push(row.val_loss)) {
      result.stopped_early = true;
      break;
    }
  }
  // Drain a prefetch left behind by an early stop.
  if (next.valid()) next.wait();

  result.final_params = params;
  if (hooks.out_dir) {
    SaveCheckpoint(*hooks.out_dir / "final.msat", params);
    WriteText(*hooks.out_dir / "curve.csv", CurveCsv(result.curve));
  }
  return result;
}

}  // namespace msa
