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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "msa/autodiff.h"
#include "msa/error.h"
#include "msa/metrics.h"
#include "msa/rng.h"
#include "msa/trainer.h"

namespace msa {
namespace {

using json = nlohmann::json;

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
// Rows per forward pass when scoring a whole split.
constexpr size_t kEvalChunk = 4096;

bool HasPrefix(const std::string& s, const std::string& prefix) {
  return !prefix.empty() && s.compare(0, prefix.size(), prefix) == 0;
}

Tensor<float> TakeRows(const Tensor<float>& x, std::span<const size_t> rows) {
  const size_t d = x.dim(1);
  Tensor<float> out({rows.size(), d});
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto src = x.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Tensor<float> SliceRows(const Tensor<float>& x, size_t first, size_t count) {
  const size_t d = x.dim(1);
  return Tensor<float>({count, d},
                       std::vector<float>(x.data.begin() + first * d,
                                          x.data.begin() + (first + count) * d));
}

Tensor<float> Standardize(const ProbeModel& m, const Tensor<float>& x) {
  Tensor<float> out = x;
  const size_t d = x.dim(1);
  for (size_t r = 0; r < x.dim(0); ++r) {
    for (size_t c = 0; c < d; ++c) {
      out.at(r, c) = (x.at(r, c) - m.mean[c]) * m.inv_std[c];
    }
  }
  return out;
}

Tape<float>::Var Logits(Tape<float>& tape, const ProbeModel& m,
                        const std::vector<Tape<float>::Var>& w,
                        Tape<float>::Var x) {
  auto h = tape.AddRowBias(tape.MatMulTransB(x, w[0]), w[1]);
  if (m.head == ProbeHead::kLinear) return h;
  h = tape.Relu(h);
  return tape.AddRowBias(tape.MatMulTransB(h, w[2]), w[3]);
}

std::vector<size_t> ArgmaxRows(const Tensor<float>& y) {
  std::vector<size_t> out(y.dim(0));
  for (size_t r = 0; r < y.dim(0); ++r) {
    const auto row = y.row(r);
    out[r] = static_cast<size_t>(
        std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

// Probe loss on standardised inputs; optionally fills gradients.
double ProbeLoss(const ProbeModel& m, const Tensor<float>& x,
                 const Tensor<float>& y, std::vector<Tensor<float>>* grads) {
  Tape<float> tape;
  std::vector<Tape<float>::Var> w;
  for (const auto& t : m.weights) w.push_back(tape.Leaf(t, grads != nullptr));
  const auto logits = Logits(tape, m, w, tape.Constant(x));
  const auto loss =
      m.task == TaskType::kMultilabel
          ? tape.SigmoidCrossEntropy(logits, y)
          : tape.SoftmaxCrossEntropy(logits, ArgmaxRows(y), 1.0f);
  const double value = tape.value(loss).data[0];
  if (grads) {
    tape.Backward(loss);
    grads->clear();
    for (auto v : w) grads->push_back(tape.grad(v));
  }
  return value;
}

double MeanLoss(const ProbeModel& m, const Tensor<float>& x,
                const Tensor<float>& y) {
  const size_t n = x.dim(0);
  double total = 0;
  for (size_t first = 0; first < n; first += kEvalChunk) {
    const size_t count = std::min(kEvalChunk, n - first);
    total += ProbeLoss(m, SliceRows(x, first, count),
                       SliceRows(y, first, count), nullptr) *
             static_cast<double>(count);
  }
  return total / static_cast<double>(n);
}

Tensor<float> UniformInit(Shape shape, size_t fan_in, Rng& rng) {
  Tensor<float> t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.data) v = static_cast<float>(rng.Uniform(-bound, bound));
  return t;
}

ModelParams<float> AsParams(const std::vector<Tensor<float>>& tensors) {
  ModelParams<float> p;
  for (size_t i = 0; i < tensors.size(); ++i) {
    p.names.push_back("probe." + std::to_string(i));
    p.tensors.push_back(tensors[i]);
  }
  return p;
}

void CheckXY(const Tensor<float>& x, const Tensor<float>& y,
             const char* what) {
  if (x.rank() != 2 || y.rank() != 2 || x.dim(0) != y.dim(0)) {
    throw Error("shape_mismatch", std::string(what) + " features/targets");
  }
  if (x.dim(0) == 0) throw Error("empty_split", std::string(what) + " is empty");
}

}  // namespace

std::string_view ProbeHeadName(ProbeHead h) {
  return h == ProbeHead::kLinear ? "linear" : "mlp512relu";
}

ProbeHead ParseProbeHead(std::string_view name) {
  if (name == "linear") return ProbeHead::kLinear;
  if (name == "mlp512relu") return ProbeHead::kMlp;
  throw Error("invalid_probe_config", "unknown head " + std::string(name));
}

std::string_view TaskTypeName(TaskType t) {
  return t == TaskType::kMultilabel ? "multilabel" : "multiclass";
}

TaskType ParseTaskType(std::string_view name) {
  if (name == "multilabel") return TaskType::kMultilabel;
  if (name == "multiclass") return TaskType::kMulticlass;
  throw Error("invalid_probe_config", "unknown task " + std::string(name));
}

double ProbeConfig::LearningRate() const {
  return lr.value_or(head == ProbeHead::kMlp ? 3e-4 : 5e-4);
}

void ProbeConfig::Validate() const {
  auto fail = [](const std::string& w) {
    throw Error("invalid_probe_config", w);
  };
  if (!(LearningRate() > 0)) fail("lr must be > 0");
  if (patience < 1) fail("patience must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (hidden_units < 1) fail("hidden_units must be >= 1");
  if (task == TaskType::kMulticlass && class_prefix.empty()) {
    fail("multiclass probes need a class_prefix");
  }
}

uint64_t FeatureTable::Hash() const {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (size_t d : features.shape) mix(&d, sizeof(d));
  mix(features.data.data(), features.data.size() * sizeof(float));
  return h;
}

int NumSegments(int n_frames) { return n_frames / kCropFrames; }

FeatureTable ExtractFeatures(const ModelParams<float>& params,
                             const Dataset& dataset, std::vector<size_t> clips,
                             int num_threads) {
  if (dataset.geometry().n_mels != params.config.input_mels) {
    throw Error("shape_mismatch", "dataset has " +
                                      std::to_string(dataset.geometry().n_mels) +
                                      " mel bands, checkpoint expects " +
                                      std::to_string(params.config.input_mels));
  }
  if (clips.empty()) {
    clips.resize(dataset.size());
    std::iota(clips.begin(), clips.end(), size_t{0});
  }
  FeatureTable table;
  table.feature_dim = params.config.feature_dim;
  table.clip_index = clips;
  table.first_row.push_back(0);
  for (size_t c : clips) {
    const int segs = NumSegments(dataset.clip(c).n_frames);
    if (segs < 1) {
      throw Error("clip_too_short", dataset.clip(c).record.clip_id +
                                        " is shorter than one segment");
    }
    table.first_row.push_back(table.first_row.back() + segs);
  }
  const size_t d = static_cast<size_t>(table.feature_dim);
  table.features = Tensor<float>({table.first_row.back(), d});

  const int threads =
      num_threads > 0 ? num_threads
                      : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    try {
      for (size_t c = next++; c < clips.size(); c = next++) {
        const MelSpectrogram full = dataset.ReadFullMixture(clips[c]);
        std::vector<MelSpectrogram> segs;
        for (size_t s = 0; s < table.first_row[c + 1] - table.first_row[c];
             ++s) {
          segs.push_back(Crop(
              full, CropWindow{static_cast<int>(s) * kCropFrames, kCropFrames}));
        }
        const Tensor<float> f =
            EncodeBatch(params, std::span<const MelSpectrogram>(segs));
        std::copy(f.data.begin(), f.data.end(),
                  table.features.data.begin() + table.first_row[c] * d);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mu);
      if (!failure) failure = std::current_exception();
      next = clips.size();
    }
  };
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return table;
}

Tensor<float> ProbeModel::Predict(const Tensor<float>& x) const {
  if (x.rank() != 2 || x.dim(1) != mean.size()) {
    throw Error("shape_mismatch", "probe input width");
  }
  const Tensor<float> z = Standardize(*this, x);
  Tape<float> tape;
  std::vector<Tape<float>::Var> w;
  for (const auto& t : weights) w.push_back(tape.Constant(t));
  Tensor<float> out = tape.value(Logits(tape, *this, w, tape.Constant(z)));
  const size_t k = out.dim(1);
  for (size_t r = 0; r < out.dim(0); ++r) {
    auto row = out.row(r);
    if (task == TaskType::kMultilabel) {
      for (auto& v : row) v = 1.0f / (1.0f + std::exp(-v));
    } else {
      const float mx = *std::max_element(row.begin(), row.end());
      double sum = 0;
      for (auto& v : row) sum += (v = std::exp(v - mx));
      for (size_t c = 0; c < k; ++c) row[c] = static_cast<float>(row[c] / sum);
    }
  }
  return out;
}

ProbeTraining TrainProbe(const Tensor<float>& train_x,
                         const Tensor<float>& train_y,
                         const Tensor<float>& val_x, const Tensor<float>& val_y,
                         const ProbeConfig& cfg) {
  cfg.Validate();
  CheckXY(train_x, train_y, "training split");
  CheckXY(val_x, val_y, "validation split");
  if (val_x.dim(1) != train_x.dim(1) || val_y.dim(1) != train_y.dim(1)) {
    throw Error("shape_mismatch", "training and validation widths differ");
  }
  const size_t n = train_x.dim(0);
  const size_t d = train_x.dim(1);
  const size_t t = train_y.dim(1);

  ProbeTraining out;
  ProbeModel& m = out.model;
  m.head = cfg.head;
  m.task = cfg.task;
  m.mean.assign(d, 0.0f);
  m.inv_std.assign(d, 1.0f);
  if (cfg.standardize) {
    for (size_t c = 0; c < d; ++c) {
      double s = 0, s2 = 0;
      for (size_t r = 0; r < n; ++r) s += train_x.at(r, c);
      const double mu = s / n;
      for (size_t r = 0; r < n; ++r) {
        const double e = train_x.at(r, c) - mu;
        s2 += e * e;
      }
      const double sd = std::sqrt(s2 / n);
      m.mean[c] = static_cast<float>(mu);
      m.inv_std[c] = sd > 1e-12 ? static_cast<float>(1.0 / sd) : 1.0f;
    }
  }
  Rng init = Rng::Stream(cfg.seed, "probe.init");
  if (cfg.head == ProbeHead::kLinear) {
    m.weights = {UniformInit({t, d}, d, init), Tensor<float>({t})};
  } else {
    const size_t h = static_cast<size_t>(cfg.hidden_units);
    m.weights = {UniformInit({h, d}, d, init), Tensor<float>({h}),
                 UniformInit({t, h}, h, init), Tensor<float>({t})};
  }

  const Tensor<float> xs = Standardize(m, train_x);
  const Tensor<float> vs = Standardize(m, val_x);
  ModelParams<float> params = AsParams(m.weights);
  AdamState adam = MakeAdamState(params);
  std::vector<Tensor<float>> best = m.weights;
  double best_val = INFINITY;
  int since_best = 0;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  const size_t bs = static_cast<size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng shuffle = Rng::Stream(cfg.seed, "probe.shuffle", epoch);
    for (size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.UniformInt(i)]);
    }
    double epoch_loss = 0;
    for (size_t first = 0; first < n; first += bs) {
      const size_t count = std::min(bs, n - first);
      const std::span<const size_t> rows(order.data() + first, count);
      std::vector<Tensor<float>> grads;
      m.weights = params.tensors;
      epoch_loss += ProbeLoss(m, TakeRows(xs, rows), TakeRows(train_y, rows),
                              &grads) *
                    static_cast<double>(count);
      AdamUpdate(params, adam, AsParams(grads), cfg.LearningRate(), kBeta1,
                 kBeta2, kAdamEps);
    }
    m.weights = params.tensors;
    const double val = MeanLoss(m, vs, val_y);
    out.train_loss.push_back(epoch_loss / static_cast<double>(n));
    out.val_loss.push_back(val);
    out.epochs_run = epoch + 1;
    if (val < best_val) {
      best_val = val;
      best = m.weights;
      out.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  m.weights = best;
  return out;
}

std::vector<double> PredictClip(const Tensor<float>& segment_probs) {
  if (segment_probs.rank() != 2 || segment_probs.dim(0) == 0) {
    throw Error("shape_mismatch", "a clip needs at least one segment");
  }
  std::vector<double> out(segment_probs.dim(1), 0.0);
  for (size_t r = 0; r < segment_probs.dim(0); ++r) {
    for (size_t c = 0; c < out.size(); ++c) out[c] += segment_probs.at(r, c);
  }
  for (auto& v : out) v /= static_cast<double>(segment_probs.dim(0));
  return out;
}

const TagMetrics* ProbeReport::Find(std::string_view tag) const {
  for (const auto& t : tags) {
    if (t.tag == tag) return &t;
  }
  return nullptr;
}

std::string ProbeReport::ToCsv() const {
  std::ostringstream out;
  out << "tag,roc_auc,pr_auc,positives,negatives,weighted_accuracy\n";
  char buf[256];
  for (const auto& t : tags) {
    std::snprintf(buf, sizeof(buf), "%s,%.9f,%.9f,%zu,%zu,\n", t.tag.c_str(),
                  t.roc_auc, t.pr_auc, t.positives, t.negatives);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "macro,%.9f,%.9f,,,", macro_roc_auc,
                macro_pr_auc);
  out << buf;
  if (weighted_accuracy) {
    std::snprintf(buf, sizeof(buf), "%.9f", *weighted_accuracy);
    out << buf;
  }
  out << "\n";
  return out.str();
}

std::string ProbeReport::ToJson() const {
  json j;
  j["task"] = std::string(TaskTypeName(task));
  j["tags"] = json::array();
  for (const auto& t : tags) {
    j["tags"].push_back({{"tag", t.tag},
                         {"roc_auc", t.roc_auc},
                         {"pr_auc", t.pr_auc},
                         {"positives", t.positives},
                         {"negatives", t.negatives}});
  }
  j["macro_roc_auc"] = macro_roc_auc;
  j["macro_pr_auc"] = macro_pr_auc;
  j["weighted_accuracy"] =
      weighted_accuracy ? json(*weighted_accuracy) : json(nullptr);
  j["skipped"] = skipped;
  j["num_clips"] = num_clips;
  return j.dump(2) + "\n";
}

ProbeReport ProbeReport::FromJson(const std::string& text) {
  ProbeReport r;
  try {
    const json j = json::parse(text);
    r.task = ParseTaskType(j.at("task").get<std::string>());
    for (const auto& t : j.at("tags")) {
      r.tags.push_back({t.at("tag").get<std::string>(),
                        t.at("roc_auc").get<double>(),
                        t.at("pr_auc").get<double>(),
                        t.at("positives").get<size_t>(),
                        t.at("negatives").get<size_t>()});
    }
    r.macro_roc_auc = j.at("macro_roc_auc").get<double>();
    r.macro_pr_auc = j.at("macro_pr_auc").get<double>();
    if (!j.at("weighted_accuracy").is_null()) {
      r.weighted_accuracy = j.at("weighted_accuracy").get<double>();
    }
    r.skipped = j.at("skipped").get<std::vector<std::string>>();
    r.num_clips = j.at("num_clips").get<size_t>();
  } catch (const json::exception& e) {
    throw Error("malformed_report", e.what());
  }
  return r;
}

ProbeReport ScoreClips(TaskType task, const std::vector<std::string>& names,
                       const Tensor<double>& scores,
                       const Tensor<float>& targets) {
  if (scores.rank() != 2 || targets.rank() != 2 ||
      scores.shape != targets.shape || scores.dim(1) != names.size()) {
    throw Error("shape_mismatch", "scores, targets and tag names");
  }
  const size_t c = scores.dim(0);
  ProbeReport r;
  r.task = task;
  r.num_clips = c;
  for (size_t k = 0; k < names.size(); ++k) {
    std::vector<double> s(c);
    std::vector<int> l(c);
    for (size_t i = 0; i < c; ++i) {
      s[i] = scores.at(i, k);
      l[i] = targets.at(i, k) > 0.5f ? 1 : 0;
    }
    const auto roc = RocAuc(s, l);
    const auto pr = PrAuc(s, l);
    if (!roc || !pr) {
      r.skipped.push_back(names[k] + ": single class in evaluation split");
      continue;
    }
    TagMetrics m{names[k], *roc, *pr, 0, 0};
    m.positives = static_cast<size_t>(std::count(l.begin(), l.end(), 1));
    m.negatives = c - m.positives;
    r.tags.push_back(m);
  }
  if (r.tags.empty()) {
    throw Error("no_reportable_tags", "every tag holds a single class");
  }
  // Plain left-to-right sums so the macro values are reproducible from the
  // per-tag rows.
  for (const auto& t : r.tags) {
    r.macro_roc_auc += t.roc_auc;
    r.macro_pr_auc += t.pr_auc;
  }
  r.macro_roc_auc /= static_cast<double>(r.tags.size());
  r.macro_pr_auc /= static_cast<double>(r.tags.size());
  if (task == TaskType::kMulticlass) {
    std::vector<int> pred(c), truth(c);
    for (size_t i = 0; i < c; ++i) {
      const auto srow = scores.row(i);
      const auto trow = targets.row(i);
      pred[i] = static_cast<int>(std::max_element(srow.begin(), srow.end()) -
                                 srow.begin());
      truth[i] = static_cast<int>(
          std::max_element(trow.begin(), trow.end()) - trow.begin());
    }
    r.weighted_accuracy = WeightedAccuracy(pred, truth);
  }
  return r;
}

ProbeReport RunProbe(const FeatureTable& table, const Dataset& dataset,
                     const ProbeConfig& cfg) {
  cfg.Validate();
  const size_t nclips = table.num_clips();
  std::vector<std::string> skipped;

  // Label vocabulary.
  std::vector<std::string> names;
  if (cfg.task == TaskType::kMultilabel && !cfg.tags.empty()) {
    names = cfg.tags;
  } else {
    std::set<std::string> seen;
    for (size_t c = 0; c < nclips; ++c) {
      for (const auto& tag : dataset.clip(table.clip_index[c]).record.tags) {
        const bool cls = HasPrefix(tag, cfg.class_prefix);
        if (cls == (cfg.task == TaskType::kMulticlass)) seen.insert(tag);
      }
    }
    names.assign(seen.begin(), seen.end());
  }
  if (names.empty()) throw Error("no_reportable_tags", "no labels found");

  auto clip_targets = [&](size_t c) {
    const auto& tags = dataset.clip(table.clip_index[c]).record.tags;
    std::vector<float> y(names.size(), 0.0f);
    for (size_t k = 0; k < names.size(); ++k) {
      if (std::find(tags.begin(), tags.end(), names[k]) != tags.end()) {
        y[k] = 1.0f;
      }
    }
    return y;
  };

  // Tags (or classes) with no training positives leave the vocabulary.
  {
    std::vector<size_t> train_pos(names.size(), 0);
    for (size_t c = 0; c < nclips; ++c) {
      if (dataset.clip(table.clip_index[c]).record.split != Split::kTrain) {
        continue;
      }
      const auto y = clip_targets(c);
      for (size_t k = 0; k < names.size(); ++k) train_pos[k] += y[k] > 0.5f;
    }
    std::vector<std::string> kept;
    for (size_t k = 0; k < names.size(); ++k) {
      if (train_pos[k] == 0) {
        skipped.push_back(names[k] + ": no positives in training split");
      } else {
        kept.push_back(names[k]);
      }
    }
    names = std::move(kept);
  }
  if (names.empty()) throw Error("no_reportable_tags", "no trainable labels");

  const size_t d = static_cast<size_t>(table.feature_dim);
  const size_t t = names.size();
  struct Part {
    std::vector<float> x, y;
    size_t rows = 0;
    std::vector<size_t> clips;
  };
  Part parts[3];
  size_t dropped = 0;
  for (size_t c = 0; c < nclips; ++c) {
    const auto y = clip_targets(c);
    const float hits = std::accumulate(y.begin(), y.end(), 0.0f);
    if (cfg.task == TaskType::kMulticlass && hits != 1.0f) {
      ++dropped;
      continue;
    }
    Part& p = parts[static_cast<int>(
        dataset.clip(table.clip_index[c]).record.split)];
    p.clips.push_back(c);
    for (size_t r = table.first_row[c]; r < table.first_row[c + 1]; ++r) {
      const auto f = table.features.row(r);
      p.x.insert(p.x.end(), f.begin(), f.end());
      p.y.insert(p.y.end(), y.begin(), y.end());
      ++p.rows;
    }
  }
  if (dropped > 0) {
    skipped.push_back(std::to_string(dropped) +
                      " clips without exactly one class label");
  }
  auto tensors = [&](Part& p) {
    return std::pair(Tensor<float>({p.rows, d}, std::move(p.x)),
                     Tensor<float>({p.rows, t}, std::move(p.y)));
  };
  auto [train_x, train_y] = tensors(parts[0]);
  auto [val_x, val_y] = tensors(parts[1]);
  const ProbeTraining fit = TrainProbe(train_x, train_y, val_x, val_y, cfg);

  const Part& test = parts[2];
  if (test.clips.empty()) throw Error("empty_split", "test split is empty");
  Tensor<double> scores({test.clips.size(), t});
  Tensor<float> targets({test.clips.size(), t});
  for (size_t i = 0; i < test.clips.size(); ++i) {
    const size_t c = test.clips[i];
    const Tensor<float> seg = SliceRows(table.features, table.first_row[c],
                                        table.first_row[c + 1] - table.first_row[c]);
    const auto clip_score = PredictClip(fit.model.Predict(seg));
    const auto y = clip_targets(c);
    for (size_t k = 0; k < t; ++k) {
      scores.at(i, k) = clip_score[k];
      targets.at(i, k) = y[k];
    }
  }
  ProbeReport report = ScoreClips(cfg.task, names, scores, targets);
  report.skipped.insert(report.skipped.begin(), skipped.begin(),
                        skipped.end());
  return report;
}

std::string TagDifferentialCsv(const ProbeReport& a, const ProbeReport& b,
                               const std::string& label_a,
                               const std::string& label_b) {
  std::ostringstream out;
  out << "tag,pr_auc_" << label_a << ",pr_auc_" << label_b << ",diff\n";
  char buf[256];
  for (const auto& ta : a.tags) {
    const TagMetrics* tb = b.Find(ta.tag);
    if (!tb) continue;
    std::snprintf(buf, sizeof(buf), "%s,%.9f,%.9f,%.9f\n", ta.tag.c_str(),
                  ta.pr_auc, tb->pr_auc, tb->pr_auc - ta.pr_auc);
    out << buf;
  }
  return out.str();
}

}  // namespace msa
