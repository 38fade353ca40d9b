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


#include "msa/eval.h"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "msa/error.h"
#include "msa/model.h"
#include "test_util.h"

namespace msa {
namespace {

std::string CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

// Two Gaussian blobs in d dimensions; label 1 sits at +shift on axis 0.
void Blobs(size_t n, size_t d, double shift, uint64_t seed, Tensor<float>& x,
           Tensor<float>& y) {
  Rng rng(seed);
  x = Tensor<float>({n, d});
  y = Tensor<float>({n, 1});
  for (size_t i = 0; i < n; ++i) {
    const int label = i % 2;
    y.at(i, 0) = static_cast<float>(label);
    for (size_t k = 0; k < d; ++k) {
      x.at(i, k) = static_cast<float>(rng.Normal() + (k == 0 ? shift * label : 0));
    }
  }
}

ProbeConfig FastProbe() {
  ProbeConfig c;
  c.lr = 0.05;
  c.batch_size = 32;
  c.max_epochs = 200;
  c.patience = 10;
  return c;
}

TEST(NumSegments, FloorOfFramesOver98) {
  EXPECT_EQ(NumSegments(97), 0);
  EXPECT_EQ(NumSegments(98), 1);
  EXPECT_EQ(NumSegments(2998), 30);
}

TEST(ProbeConfig, DefaultRatesAndValidation) {
  ProbeConfig c;
  EXPECT_DOUBLE_EQ(c.LearningRate(), 5e-4);
  c.head = ProbeHead::kMlp;
  EXPECT_DOUBLE_EQ(c.LearningRate(), 3e-4);
  c.lr = 0.1;
  EXPECT_DOUBLE_EQ(c.LearningRate(), 0.1);
  c.patience = 0;
  EXPECT_THROW(c.Validate(), Error);
  EXPECT_EQ(ParseProbeHead("mlp512relu"), ProbeHead::kMlp);
  EXPECT_EQ(ParseTaskType("multiclass"), TaskType::kMulticlass);
  EXPECT_THROW(ParseProbeHead("svm"), Error);
}

TEST(TrainProbe, SeparableDataIsFitted) {
  Tensor<float> x, y, vx, vy;
  Blobs(200, 4, 8.0, 1, x, y);
  Blobs(60, 4, 8.0, 2, vx, vy);
  for (ProbeHead head : {ProbeHead::kLinear, ProbeHead::kMlp}) {
    ProbeConfig cfg = FastProbe();
    cfg.head = head;
    cfg.hidden_units = 16;
    cfg.lr = head == ProbeHead::kMlp ? 0.01 : 0.05;
    const ProbeTraining t = TrainProbe(x, y, vx, vy, cfg);
    EXPECT_LT(t.train_loss.back(), 0.05) << ProbeHeadName(head);
    const Tensor<float> p = t.model.Predict(vx);
    for (size_t i = 0; i < vx.dim(0); ++i) {
      EXPECT_EQ(p.at(i, 0) > 0.5f, vy.at(i, 0) > 0.5f);
    }
    EXPECT_EQ(static_cast<int>(t.val_loss.size()), t.epochs_run);
  }
}

TEST(TrainProbe, RestoresBestEpochAndStopsWithPatience) {
  Tensor<float> x, y, vx, vy;
  Blobs(100, 3, 0.0, 3, x, y);  // nothing to learn
  Blobs(100, 3, 0.0, 4, vx, vy);
  ProbeConfig cfg = FastProbe();
  cfg.lr = 0.5;
  cfg.patience = 3;
  const ProbeTraining t = TrainProbe(x, y, vx, vy, cfg);
  EXPECT_LT(t.epochs_run, cfg.max_epochs);
  EXPECT_EQ(t.epochs_run, t.best_epoch + 1 + cfg.patience);
  double best = INFINITY;
  for (double v : t.val_loss) best = std::min(best, v);
  EXPECT_DOUBLE_EQ(t.val_loss[t.best_epoch], best);
}

TEST(TrainProbe, ShuffledLabelsScoreAtChance) {
  Tensor<float> x, y, vx, vy, tx, ty;
  Blobs(300, 4, 4.0, 5, x, y);
  Blobs(100, 4, 4.0, 6, vx, vy);
  Blobs(400, 4, 4.0, 7, tx, ty);
  Rng rng(8);
  for (size_t i = 0; i < y.dim(0); ++i) y.at(i, 0) = rng.Bernoulli(0.5);
  for (size_t i = 0; i < vy.dim(0); ++i) vy.at(i, 0) = rng.Bernoulli(0.5);
  const ProbeTraining t = TrainProbe(x, y, vx, vy, FastProbe());
  const Tensor<double> scores = t.model.Predict(tx).Cast<double>();
  const ProbeReport r = ScoreClips(TaskType::kMultilabel, {"tag"}, scores, ty);
  EXPECT_NEAR(r.macro_roc_auc, 0.5, 0.1);
}

TEST(TrainProbe, MulticlassOneHotReachesFullAccuracy) {
  const size_t n = 240;
  Rng rng(9);
  auto make = [&](size_t rows, Tensor<float>& x, Tensor<float>& y) {
    x = Tensor<float>({rows, 3});
    y = Tensor<float>({rows, 3});
    for (size_t i = 0; i < rows; ++i) {
      const size_t c = i % 3;
      y.at(i, c) = 1;
      for (size_t k = 0; k < 3; ++k) {
        x.at(i, k) = static_cast<float>(0.3 * rng.Normal() + (k == c ? 5 : 0));
      }
    }
  };
  Tensor<float> x, y, vx, vy, tx, ty;
  make(n, x, y);
  make(60, vx, vy);
  make(90, tx, ty);
  ProbeConfig cfg = FastProbe();
  cfg.task = TaskType::kMulticlass;
  const ProbeTraining t = TrainProbe(x, y, vx, vy, cfg);
  const Tensor<float> p = t.model.Predict(tx);
  for (size_t i = 0; i < p.dim(0); ++i) {
    double sum = 0;
    for (size_t k = 0; k < 3; ++k) sum += p.at(i, k);
    EXPECT_NEAR(sum, 1.0, 1e-5);
  }
  const ProbeReport r = ScoreClips(TaskType::kMulticlass, {"a", "b", "c"},
                                   p.Cast<double>(), ty);
  ASSERT_TRUE(r.weighted_accuracy.has_value());
  EXPECT_DOUBLE_EQ(*r.weighted_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.macro_roc_auc, 1.0);
}

TEST(PredictClip, AveragesSegmentRows) {
  const Tensor<float> probs({3, 2}, {0.1f, 0.9f, 0.3f, 0.6f, 0.5f, 0.3f});
  const std::vector<double> clip = PredictClip(probs);
  EXPECT_NEAR(clip[0], 0.3, 1e-7);
  EXPECT_NEAR(clip[1], 0.6, 1e-7);
}

TEST(ScoreClips, SkipsSingleClassTagsAndReportsTheRest) {
  const Tensor<double> s({4, 3}, {0.9, 0.1, 0.5, 0.8, 0.2, 0.5, 0.2, 0.7, 0.5,
                                  0.1, 0.9, 0.5});
  const Tensor<float> y({4, 3}, {1, 0, 1, 1, 0, 1, 0, 0, 1, 0, 0, 1});
  const ProbeReport r = ScoreClips(TaskType::kMultilabel, {"a", "b", "c"}, s, y);
  ASSERT_EQ(r.tags.size(), 1u);
  EXPECT_EQ(r.tags[0].tag, "a");
  EXPECT_EQ(r.tags[0].positives, 2u);
  EXPECT_EQ(r.tags[0].negatives, 2u);
  EXPECT_DOUBLE_EQ(r.macro_roc_auc, 1.0);
  EXPECT_EQ(r.skipped.size(), 2u);
  EXPECT_EQ(r.Find("b"), nullptr);
  EXPECT_EQ(r.num_clips, 4u);

  const Tensor<float> none({4, 1}, {1, 1, 1, 1});
  EXPECT_EQ(CodeOf([&] {
              ScoreClips(TaskType::kMultilabel, {"c"},
                         Tensor<double>({4, 1}, 0.5), none);
            }),
            "no_reportable_tags");
}

TEST(ProbeReport, JsonRoundTripAndCsv) {
  ProbeReport r;
  r.task = TaskType::kMulticlass;
  r.tags = {{"pitch-C", 0.75, 0.5, 3, 9}, {"pitch-G", 0.625, 0.25, 2, 10}};
  r.macro_roc_auc = 0.6875;
  r.macro_pr_auc = 0.375;
  r.weighted_accuracy = 0.5;
  r.skipped = {"pitch-D: no positives"};
  r.num_clips = 12;
  const ProbeReport back = ProbeReport::FromJson(r.ToJson());
  EXPECT_EQ(back.task, r.task);
  ASSERT_EQ(back.tags.size(), 2u);
  EXPECT_EQ(back.tags[1].tag, "pitch-G");
  EXPECT_DOUBLE_EQ(back.tags[1].roc_auc, 0.625);
  EXPECT_EQ(back.tags[0].negatives, 9u);
  EXPECT_DOUBLE_EQ(*back.weighted_accuracy, 0.5);
  EXPECT_EQ(back.skipped, r.skipped);
  EXPECT_EQ(back.num_clips, 12u);

  std::istringstream csv(r.ToCsv());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "tag,roc_auc,pr_auc,positives,negatives,weighted_accuracy");
  EXPECT_EQ(lines[3].rfind("macro,", 0), 0u);
}

TEST(TagDifferentialCsv, DiffIsSecondMinusFirst) {
  ProbeReport a, b;
  a.tags = {{"fast", 0.5, 0.4, 1, 1}, {"vocal-present", 0.5, 0.6, 1, 1}};
  b.tags = {{"vocal-present", 0.5, 0.9, 1, 1}};
  const std::string csv = TagDifferentialCsv(a, b, "drums", "vocals");
  EXPECT_NE(csv.find("tag,pr_auc_drums,pr_auc_vocals,diff"), std::string::npos);
  EXPECT_NE(csv.find("vocal-present,"), std::string::npos);
  EXPECT_EQ(csv.find("fast"), std::string::npos);
  EXPECT_NE(csv.find(",0.3"), std::string::npos);
}

// Clips tagged "loud" carry extra energy in the low mel bands of the mixture.
Dataset TaggedDataset(size_t n_clips, int n_frames) {
  DatasetGeometry g = testing_util::ToyGeometry();
  std::vector<ClipEntry> clips;
  std::vector<std::array<MelSpectrogram, kNumSources + 1>> specs;
  Rng rng(10);
  for (size_t c = 0; c < n_clips; ++c) {
    ClipEntry e;
    e.record.clip_id = ClipIdForIndex(static_cast<int>(c));
    e.record.split = c % 5 == 0 ? Split::kValid
                     : c % 5 == 1 ? Split::kTest
                     : c % 5 == 2 ? Split::kTest
                                  : Split::kTrain;
    const bool loud = rng.Bernoulli(0.5);
    e.record.tags = {loud ? "loud" : "quiet", "pitch-C"};
    e.n_frames = n_frames;
    for (auto& a : e.activity) a = {true};
    std::array<MelSpectrogram, kNumSources + 1> set;
    for (auto& m : set) {
      m.n_mels = 64;
      m.n_frames = n_frames;
      m.data.resize(64 * static_cast<size_t>(n_frames));
      for (int mel = 0; mel < 64; ++mel) {
        for (int t = 0; t < n_frames; ++t) {
          m.at(mel, t) = static_cast<float>(-6 + rng.Normal() +
                                            (loud && mel < 16 ? 3.0 : 0.0));
        }
      }
    }
    clips.push_back(std::move(e));
    specs.push_back(std::move(set));
  }
  return Dataset::FromMemory(std::move(clips), std::move(specs), g);
}

ModelConfig SmallModel() {
  ModelConfig c;
  c.feature_dim = 16;
  c.embed_dim = 8;
  c.encoder = {{4, 3, 3, 2, 2}, {8, 3, 3, 2, 2}};
  return c;
}

TEST(ExtractFeatures, RowsAreSegmentEncodings) {
  const Dataset d = TaggedDataset(6, 250);
  const auto params = InitParams<float>(SmallModel());
  const FeatureTable t = ExtractFeatures(params, d, {4, 1}, 2);
  ASSERT_EQ(t.num_clips(), 2u);
  EXPECT_EQ(t.clip_index, (std::vector<size_t>{4, 1}));
  EXPECT_EQ(t.features.shape, (Shape{4, 16}));
  EXPECT_EQ(t.first_row, (std::vector<size_t>{0, 2, 4}));
  const std::vector<float> seg =
      Encode(params, d.ReadMixture(1, {kCropFrames, kCropFrames}));
  for (size_t k = 0; k < 16; ++k) EXPECT_NEAR(t.features.at(3, k), seg[k], 1e-5);
  EXPECT_EQ(t.Hash(), ExtractFeatures(params, d, {4, 1}, 1).Hash());
}

TEST(RunProbe, FindsATagThatLivesInTheSpectrogram) {
  const Dataset d = TaggedDataset(120, 196);
  const auto params = InitParams<float>(SmallModel());
  const FeatureTable table = ExtractFeatures(params, d);
  const uint64_t hash = table.Hash();
  ProbeConfig cfg = FastProbe();
  cfg.lr = 0.01;
  const ProbeReport r = RunProbe(table, d, cfg);
  // The encoder stays frozen: probing never touches the features.
  EXPECT_EQ(table.Hash(), hash);
  const TagMetrics* loud = r.Find("loud");
  ASSERT_NE(loud, nullptr);
  EXPECT_GT(loud->roc_auc, 0.9);
  EXPECT_EQ(r.Find("pitch-C"), nullptr);
  EXPECT_EQ(r.num_clips, d.SplitIndices(Split::kTest).size());
}

}  // namespace
}  // namespace msa
