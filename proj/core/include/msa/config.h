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


#ifndef MSA_CONFIG_H_
#define MSA_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msa/dsp.h"
#include "msa/eval.h"
#include "msa/loss.h"
#include "msa/model.h"
#include "msa/pairing.h"
#include "msa/synth.h"
#include "msa/trainer.h"

namespace msa {

// Small model and batch used by the gradient oracle.
struct GradcheckConfig {
  int feature_dim = 16;
  int embed_dim = 8;
  std::vector<ConvStage> encoder = {{4, 3, 3, 2, 2}, {8, 3, 3, 2, 2}};
  int batch_size = 6;
  int num_silent = 2;
  double h = 1e-5;
  FdMode mode = FdMode::kExhaustive;
  int samples_per_tensor = 32;
};

// Which pretraining checkpoint the probe reads.
enum class CheckpointChoice { kBest, kFinal };

struct ExperimentConfig {
  // Empty run_id derives one from variant, source, leakage and seed.
  std::string run_id;
  std::string output_dir = "runs";
  // Empty dataset_dir derives a directory under output_dir keyed by the
  // generator and mel settings.
  std::string dataset_dir;
  uint64_t seed = 0;
  int threads = 0;

  GeneratorConfig generator;
  // Data seed; unset means it is drawn from the root seed.
  std::optional<uint64_t> generator_seed;
  MelConfig mel;
  PairVariant variant;
  ModelConfig model;
  TrainConfig train;
  ProbeConfig probe;
  CheckpointChoice probe_checkpoint = CheckpointChoice::kBest;
  GradcheckConfig gradcheck;

  // Throws Error("config_error") naming the offending field.
  void Validate() const;

  std::string ResolvedRunId() const;
  std::filesystem::path RunDir() const;
  std::filesystem::path DatasetDir() const;

  // Seeds of the named sub-streams, already folded into the returned configs.
  GeneratorConfig ResolvedGenerator() const;
  ModelConfig ResolvedModel() const;
  TrainConfig ResolvedTrain() const;
  ProbeConfig ResolvedProbe() const;
};

// Strict parse: unknown keys and type errors throw Error("config_error")
// with the JSON path of the field, e.g. "train.batch_size".
ExperimentConfig ParseExperimentConfig(const std::string& json_text);
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);
// Every field written, so the output parses back to an equal config.
std::string ExperimentToJson(const ExperimentConfig& cfg);

std::string GeneratorToJson(const GeneratorConfig& cfg);
std::string MelToJson(const MelConfig& cfg);
std::string ModelToJson(const ModelConfig& cfg);
ModelConfig ParseModelConfig(const std::string& json_text);

}  // namespace msa

#endif  // MSA_CONFIG_H_
