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


#ifndef MSA_TRAINER_H_
#define MSA_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msa/dataset.h"
#include "msa/model.h"
#include "msa/pairing.h"

namespace msa {

struct TrainConfig {
  int total_steps = 400;
  // Adam updates per scheduling step.
  int batches_per_step = 64;
  int batch_size = 32;
  double lr0 = 1e-3;
  // Step from which the learning rate is halved; unset means total_steps / 2.
  std::optional<int> halve_at;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int early_stop_window = 50;
  // Pre-mined validation batches, frozen for the whole run.
  int validation_batches = 4;
  int checkpoint_every = 25;
  double temperature = 0.2;
  PairVariant variant;
  uint64_t seed = 0;

  // Throws Error("invalid_train_config").
  void Validate() const;
  int HalveAt() const { return halve_at.value_or(total_steps / 2); }
};

// Learning rate of the update with zero-based index `update`.
double LearningRate(const TrainConfig& cfg, int64_t update);

struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  int64_t t = 0;
};

AdamState MakeAdamState(const ModelParams<float>& params);

// One bias-corrected Adam step. Throws Error("numerical_blowup") if any
// gradient is non-finite; params and state are left untouched in that case.
void AdamUpdate(ModelParams<float>& params, AdamState& state,
                const ModelParams<float>& grads, double lr, double beta1,
                double beta2, double epsilon);

// Plateau detector over per-step validation losses. After step t (zero-based,
// t >= 2w - 1) it fires when the mean of the last w losses is not lower than
// the mean of the w losses before them.
class EarlyStopper {
 public:
  explicit EarlyStopper(int window);
  // Records the loss of the next step; true if training should stop now.
  bool Push(double val_loss);
  const std::vector<double>& history() const { return history_; }

 private:
  int window_;
  std::vector<double> history_;
};

struct CurveRow {
  int step = 0;
  int64_t update = 0;  // updates completed at the end of the step
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

std::string CurveCsv(const std::vector<CurveRow>& rows);

struct TrainResult {
  ModelParams<float> final_params;
  ModelParams<float> best_params;
  int best_step = -1;
  bool stopped_early = false;
  std::vector<CurveRow> curve;
};

struct TrainHooks {
  // Checkpoints and curve.csv go here when set.
  std::optional<std::filesystem::path> out_dir;
  // Called after every step.
  std::function<void(const CurveRow&)> on_step;
};

// Pretrains from InitParams(model) on the training split and early-stops on
// the validation split. Batches depend only on (cfg.seed, update index).
TrainResult Pretrain(const TrainConfig& cfg, const ModelConfig& model,
                     const Dataset& dataset, const TrainHooks& hooks = {});

void SaveCheckpoint(const std::filesystem::path& path,
                    const ModelParams<float>& params);
ModelParams<float> LoadCheckpoint(const std::filesystem::path& path,
                                  const ModelConfig& model);

}  // namespace msa

#endif  // MSA_TRAINER_H_
