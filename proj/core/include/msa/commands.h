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

#ifndef MSA_COMMANDS_H_
#define MSA_COMMANDS_H_

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "msa/config.h"
#include "msa/loss.h"
#include "msa/model.h"
#include "msa/pairing.h"

namespace msa {

// Maximum relative error accepted by the gradient oracle.
inline constexpr double kGradcheckTolerance = 1e-4;

// Each command returns a process exit code and writes its artifacts under
// cfg.RunDir() (cmd_synth writes cfg.DatasetDir()) next to config.json.

int CmdSynth(const ExperimentConfig& cfg, std::ostream& log);
int CmdPretrain(const ExperimentConfig& cfg, std::ostream& log);
// Nonzero exit when either loss form reaches kGradcheckTolerance.
int CmdGradcheck(const ExperimentConfig& cfg, std::ostream& log);
// checkpoint defaults to best.msat or final.msat in cfg.RunDir().
int CmdProbe(const ExperimentConfig& cfg,
             const std::optional<std::filesystem::path>& checkpoint,
             std::ostream& log);
// Comparison CSV over the probe reports found in `runs`; the first two runs
// also get a per-tag PR-AUC differential.
int CmdReport(const ExperimentConfig& cfg,
              const std::vector<std::filesystem::path>& runs,
              std::ostream& log);

// Small batch for the gradient oracle: anchors and positives cut from
// generated clips, with num_silent positives (spread evenly over the batch)
// replaced by silence.
PairBatch MakeGradcheckBatch(const ExperimentConfig& cfg);
ModelConfig GradcheckModelConfig(const ExperimentConfig& cfg);

struct GradcheckOutcome {
  GradCheckReport aggregate;    // silent centroid
  GradCheckReport unaggregated; // plain NT-Xent layout
  double max_rel_error() const;
};
GradcheckOutcome RunGradcheck(const ExperimentConfig& cfg);

// Dataset directory of cfg, built if absent or stale.
std::filesystem::path EnsureDataset(const ExperimentConfig& cfg,
                                    std::ostream& log);

}  // namespace msa

#endif  // MSA_COMMANDS_H_
