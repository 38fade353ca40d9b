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


#include "msa/config.h"

#include <gtest/gtest.h>

#include "msa/error.h"

namespace msa {
namespace {

std::string ErrorOf(const std::string& text) {
  try {
    ParseExperimentConfig(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "config_error");
    return e.what();
  }
  return "";
}

TEST(ParseExperimentConfig, ShippedDeskConfigLoads) {
  const ExperimentConfig c =
      LoadExperimentConfig(std::filesystem::path(MSA_SOURCE_DIR) / "configs/desk.json");
  EXPECT_EQ(c.generator.n_clips, 2000);
  EXPECT_DOUBLE_EQ(c.generator.activity_prob[static_cast<int>(Source::kVocals)], 0.32);
  EXPECT_EQ(c.model.encoder.size(), 2u);
  EXPECT_EQ(c.model.encoder[1].channels, 16);
  EXPECT_EQ(c.train.batch_size, 32);
  EXPECT_EQ(c.variant.kind, VariantKind::kMsa);
  EXPECT_FALSE(c.variant.fixed_source.has_value());
  EXPECT_EQ(c.probe_checkpoint, CheckpointChoice::kBest);
  EXPECT_EQ(c.gradcheck.mode, FdMode::kExhaustive);
}

TEST(ParseExperimentConfig, MissingSectionsKeepDefaults) {
  const ExperimentConfig c = ParseExperimentConfig(R"({"seed": 3})");
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.train.total_steps, TrainConfig{}.total_steps);
  EXPECT_EQ(c.model.feature_dim, ModelConfig{}.feature_dim);
}

TEST(ParseExperimentConfig, UnknownKeysNameTheirPath) {
  EXPECT_NE(ErrorOf(R"({"trian": {}})").find("trian"), std::string::npos);
  EXPECT_NE(ErrorOf(R"({"train": {"batchsize": 4}})").find("train.batchsize"),
            std::string::npos);
  EXPECT_NE(ErrorOf(R"({"model": {"encoder": [{"channels": 4, "pad": 1}]}})")
                .find("pad"),
            std::string::npos);
}

TEST(ParseExperimentConfig, TypeAndValueErrors) {
  EXPECT_NE(ErrorOf(R"({"train": {"batch_size": "32"}})").find("train.batch_size"),
            std::string::npos);
  EXPECT_NE(ErrorOf(R"({"pairing": {"variant": "BYOL"}})").find("BYOL"),
            std::string::npos);
  EXPECT_NE(ErrorOf(R"({"pairing": {"variant": "NSV2", "source": "vocals"}})"), "");
  EXPECT_NE(ErrorOf(R"({"generator": {"leakage": 1.5}})"), "");
  EXPECT_NE(ErrorOf("{not json"), "");
}

TEST(ExperimentToJson, RoundTrips) {
  ExperimentConfig c;
  c.seed = 9;
  c.generator.leakage = 0.25;
  c.variant = {VariantKind::kNsv1, Source::kDrums};
  c.train.halve_at = 7;
  c.probe.head = ProbeHead::kMlp;
  c.probe.task = TaskType::kMulticlass;
  c.probe.tags = {"a", "b"};
  c.probe_checkpoint = CheckpointChoice::kFinal;
  c.generator_seed = 11;
  c.model.encoder = {{5, 2, 4, 1, 3}};
  c.gradcheck.mode = FdMode::kSampled;
  const std::string text = ExperimentToJson(c);
  const ExperimentConfig back = ParseExperimentConfig(text);
  EXPECT_EQ(ExperimentToJson(back), text);
  EXPECT_EQ(back.variant.fixed_source, Source::kDrums);
  EXPECT_EQ(back.model.encoder[0].kernel_w, 4);
  EXPECT_EQ(back.model.encoder[0].stride_w, 3);
  EXPECT_EQ(*back.train.halve_at, 7);
  EXPECT_EQ(*back.generator_seed, 11u);
}

TEST(ExperimentConfig, DerivedNamesAndSeeds) {
  ExperimentConfig c;
  c.seed = 2;
  EXPECT_EQ(c.ResolvedRunId(), "MSA-s2");
  c.variant = {VariantKind::kMsa, Source::kVocals};
  c.generator.leakage = 0.5;
  EXPECT_EQ(c.ResolvedRunId(), "MSA-vocals-leak0.5-s2");
  c.run_id = "mine";
  EXPECT_EQ(c.RunDir(), std::filesystem::path("runs") / "mine");

  // A pinned data seed shares one dataset across training seeds.
  ExperimentConfig a, b;
  a.generator_seed = b.generator_seed = 0;
  a.seed = 1;
  b.seed = 2;
  EXPECT_EQ(a.DatasetDir(), b.DatasetDir());
  EXPECT_NE(a.ResolvedTrain().seed, b.ResolvedTrain().seed);
  EXPECT_NE(a.ResolvedModel().init_seed, b.ResolvedModel().init_seed);
  a.generator_seed.reset();
  b.generator_seed.reset();
  EXPECT_NE(a.DatasetDir(), b.DatasetDir());
  const auto before = a.DatasetDir();
  a.generator.leakage = 0.1;
  EXPECT_NE(a.DatasetDir(), before);
}

TEST(ModelConfigJson, RoundTrips) {
  ModelConfig m;
  m.feature_dim = 12;
  m.encoder = {{3, 3, 5, 2, 1}};
  const ModelConfig back = ParseModelConfig(ModelToJson(m));
  EXPECT_EQ(back.feature_dim, 12);
  EXPECT_EQ(back.encoder[0].kernel_w, 5);
  EXPECT_EQ(ModelToJson(back), ModelToJson(m));
}

}  // namespace
}  // namespace msa
