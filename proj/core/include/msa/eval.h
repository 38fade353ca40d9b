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


#ifndef MSA_EVAL_H_
#define MSA_EVAL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msa/dataset.h"
#include "msa/model.h"
#include "msa/tensor.h"

namespace msa {

enum class ProbeHead { kLinear, kMlp };
enum class TaskType { kMultilabel, kMulticlass };

std::string_view ProbeHeadName(ProbeHead h);
ProbeHead ParseProbeHead(std::string_view name);  // linear | mlp512relu
std::string_view TaskTypeName(TaskType t);
TaskType ParseTaskType(std::string_view name);  // multilabel | multiclass

struct ProbeConfig {
  ProbeHead head = ProbeHead::kLinear;
  TaskType task = TaskType::kMultilabel;
  // Unset: 5e-4 for the linear head, 3e-4 for the MLP head.
  std::optional<double> lr;
  int batch_size = 128;
  int patience = 5;
  int max_epochs = 100;
  int hidden_units = 512;
  // Multiclass: tags with this prefix are the classes. Multilabel: tags with
  // this prefix are left out unless listed in `tags`.
  std::string class_prefix = "pitch-";
  // Multilabel tag list; empty means every tag without class_prefix.
  std::vector<std::string> tags;
  // z-score features with training-split statistics before the head.
  bool standardize = true;
  uint64_t seed = 0;

  double LearningRate() const;
  // Throws Error("invalid_probe_config").
  void Validate() const;
};

// Frozen encoder outputs of non-overlapping 98-frame segments.
struct FeatureTable {
  int feature_dim = 0;
  std::vector<size_t> clip_index;  // dataset row of each clip
  std::vector<size_t> first_row;   // clip c owns rows [first_row[c], first_row[c+1])
  Tensor<float> features;          // [rows, d_f]

  size_t num_clips() const { return clip_index.size(); }
  // FNV-1a over shape and payload bytes.
  uint64_t Hash() const;
};

// floor(n_frames / 98).
int NumSegments(int n_frames);

// Features of every clip in `clips` (all clips when empty), in that order.
// num_threads 0 picks hardware_concurrency().
FeatureTable ExtractFeatures(const ModelParams<float>& params,
                             const Dataset& dataset,
                             std::vector<size_t> clips = {},
                             int num_threads = 0);

struct ProbeModel {
  ProbeHead head = ProbeHead::kLinear;
  TaskType task = TaskType::kMultilabel;
  std::vector<float> mean;
  std::vector<float> inv_std;
  // linear: W [T, d], b [T]; mlp: W1 [H, d], b1 [H], W2 [T, H], b2 [T].
  std::vector<Tensor<float>> weights;

  // Per-row probabilities [N, T]: sigmoid for multilabel, softmax otherwise.
  Tensor<float> Predict(const Tensor<float>& x) const;
};

struct ProbeTraining {
  ProbeModel model;
  int epochs_run = 0;
  int best_epoch = -1;
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;    // per epoch
};

// Targets are {0, 1} of shape [N, T]; for multiclass every row is one-hot.
// Early-stops on validation loss with cfg.patience and restores the best
// weights.
ProbeTraining TrainProbe(const Tensor<float>& train_x,
                         const Tensor<float>& train_y,
                         const Tensor<float>& val_x, const Tensor<float>& val_y,
                         const ProbeConfig& cfg);

// Mean of per-segment probability rows [S, T] -> [T].
std::vector<double> PredictClip(const Tensor<float>& segment_probs);

struct TagMetrics {
  std::string tag;
  double roc_auc = 0.0;
  double pr_auc = 0.0;
  size_t positives = 0;
  size_t negatives = 0;
};

struct ProbeReport {
  TaskType task = TaskType::kMultilabel;
  std::vector<TagMetrics> tags;
  double macro_roc_auc = 0.0;
  double macro_pr_auc = 0.0;
  std::optional<double> weighted_accuracy;
  // Tags left out, each with the reason.
  std::vector<std::string> skipped;
  size_t num_clips = 0;

  const TagMetrics* Find(std::string_view tag) const;
  std::string ToCsv() const;
  std::string ToJson() const;
  static ProbeReport FromJson(const std::string& text);
};

// Clip-level metrics from scores and {0,1} targets, both [C, T]. Tags whose
// targets hold a single class are skipped and listed.
ProbeReport ScoreClips(TaskType task, const std::vector<std::string>& names,
                       const Tensor<double>& scores,
                       const Tensor<float>& targets);

// Full protocol: fit on training-split segments, early-stop on validation
// segments, report clip-level metrics on the test split.
ProbeReport RunProbe(const FeatureTable& table, const Dataset& dataset,
                     const ProbeConfig& cfg);

// tag,pr_auc_<a>,pr_auc_<b>,diff over tags reported by both (diff = b - a).
std::string TagDifferentialCsv(const ProbeReport& a, const ProbeReport& b,
                               const std::string& label_a,
                               const std::string& label_b);

}  // namespace msa

#endif  // MSA_EVAL_H_
