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


// msa-lab: synthetic corpus generation, contrastive pretraining, gradient
// verification, frozen-encoder probing and run comparison.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msa/commands.h"
#include "msa/config.h"
#include "msa/error.h"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::string> source;
  std::optional<double> leakage;
  std::optional<std::string> run_id;
};

void AddCommon(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "root seed");
  cmd->add_option("--variant", o.variant,
                  "MSA|NSV1|NSV2|A1|A2|A3|COLA|RANDMASK");
  cmd->add_option("--source", o.source,
                  "fix the positive source: bass|drums|other|vocals");
  cmd->add_option("--leakage", o.leakage,
                  "mixture fraction blended into the stems, in [0, 1]");
  cmd->add_option("--run-id", o.run_id, "output subdirectory name");
}

msa::ExperimentConfig Resolve(const Overrides& o) {
  msa::ExperimentConfig cfg = msa::LoadExperimentConfig(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.variant) cfg.variant.kind = msa::ParseVariant(*o.variant);
  if (o.source) cfg.variant.fixed_source = msa::ParseSource(*o.source);
  if (o.leakage) cfg.generator.leakage = *o.leakage;
  if (o.run_id) cfg.run_id = *o.run_id;
  cfg.Validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"msa-lab: musical source association pretraining"};
  app.require_subcommand(1);
  Overrides o;
  std::optional<std::string> checkpoint;
  std::vector<std::string> runs;

  auto* synth = app.add_subcommand("synth", "generate the synthetic corpus");
  AddCommon(synth, o);
  auto* pretrain = app.add_subcommand("pretrain", "contrastive pretraining");
  AddCommon(pretrain, o);
  auto* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient oracle");
  AddCommon(gradcheck, o);
  auto* probe = app.add_subcommand("probe", "frozen-encoder probe");
  AddCommon(probe, o);
  probe->add_option("--checkpoint", checkpoint,
                    "checkpoint file (default: best.msat of the run)");
  auto* report = app.add_subcommand("report", "compare probe reports");
  AddCommon(report, o);
  report->add_option("runs", runs, "run directories")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    const msa::ExperimentConfig cfg = Resolve(o);
    if (*synth) return msa::CmdSynth(cfg, std::cout);
    if (*pretrain) return msa::CmdPretrain(cfg, std::cout);
    if (*gradcheck) return msa::CmdGradcheck(cfg, std::cout);
    if (*probe) {
      std::optional<std::filesystem::path> ck;
      if (checkpoint) ck = *checkpoint;
      return msa::CmdProbe(cfg, ck, std::cout);
    }
    if (*report) {
      return msa::CmdReport(
          cfg, std::vector<std::filesystem::path>(runs.begin(), runs.end()),
          std::cout);
    }
  } catch (const msa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
