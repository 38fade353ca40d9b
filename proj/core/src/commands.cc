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


#include "msa/commands.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "msa/dataset.h"
#include "msa/error.h"
#include "msa/eval.h"
#include "msa/synth.h"
#include "msa/trainer.h"

namespace msa {
namespace fs = std::filesystem;
namespace {

using json = nlohmann::json;

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing_input", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("io_error", "cannot write " + path.string());
}

fs::path PrepareRunDir(const ExperimentConfig& cfg) {
  const fs::path dir = cfg.RunDir();
  fs::create_directories(dir);
  WriteText(dir / "config.json", ExperimentToJson(cfg));
  return dir;
}

bool DatasetUpToDate(const ExperimentConfig& cfg, const fs::path& dir) {
  if (!fs::exists(dir / "dataset.json") || !fs::exists(dir / "manifest.jsonl")) {
    return false;
  }
  try {
    const json meta = json::parse(ReadText(dir / "dataset.json"));
    return meta.at("generator") ==
               json::parse(GeneratorToJson(cfg.ResolvedGenerator())) &&
           meta.at("mel") == json::parse(MelToJson(cfg.mel));
  } catch (const std::exception&) {
    return false;
  }
}

Dataset OpenDataset(const ExperimentConfig& cfg) {
  const fs::path dir = cfg.DatasetDir();
  if (!fs::exists(dir / "dataset.json")) {
    throw Error("missing_input", "no dataset at " + dir.string() +
                                     "; run `msa-lab synth` first");
  }
  return Dataset::Open(dir);
}

}  // namespace

fs::path EnsureDataset(const ExperimentConfig& cfg, std::ostream& log) {
  const fs::path dir = cfg.DatasetDir();
  if (DatasetUpToDate(cfg, dir)) {
    log << "dataset up to date: " << dir.string() << "\n";
    return dir;
  }
  // dataset.json is written last, so its absence marks an incomplete build.
  fs::remove(dir / "dataset.json");
  log << "generating " << cfg.generator.n_clips << " clips into "
      << dir.string() << "\n";
  BuildSyntheticDataset(cfg.ResolvedGenerator(), cfg.mel, dir,
                        BuildOptions{cfg.threads});
  return dir;
}

int CmdSynth(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.Validate();
  const fs::path dir = EnsureDataset(cfg, log);
  WriteText(dir / "config.json", ExperimentToJson(cfg));
  return 0;
}

int CmdPretrain(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.Validate();
  const Dataset dataset = OpenDataset(cfg);
  const fs::path dir = PrepareRunDir(cfg);
  const ModelConfig model = cfg.ResolvedModel();
  WriteText(dir / "model.json", ModelToJson(model));
  TrainHooks hooks;
  hooks.out_dir = dir;
  hooks.on_step = [&](const CurveRow& r) {
    if (r.step % 10 == 0) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "step %4d  update %6lld  lr %.2e  train %.4f  val %.4f\n",
                    r.step, static_cast<long long>(r.update), r.lr,
                    r.train_loss, r.val_loss);
      log << buf << std::flush;
    }
  };
  const TrainResult result =
      Pretrain(cfg.ResolvedTrain(), model, dataset, hooks);
  log << "finished after " << result.curve.size() << " steps"
      << (result.stopped_early ? " (early stop)" : "") << ", best step "
      << result.best_step << "\n";
  return 0;
}

ModelConfig GradcheckModelConfig(const ExperimentConfig& cfg) {
  ModelConfig m;
  m.feature_dim = cfg.gradcheck.feature_dim;
  m.embed_dim = cfg.gradcheck.embed_dim;
  m.encoder = cfg.gradcheck.encoder;
  m.input_mels = cfg.mel.n_mels;
  m.input_frames = kCropFrames;
  m.init_seed = Rng::StreamSeed(cfg.seed, "gradcheck.init");
  m.Validate();
  return m;
}

PairBatch MakeGradcheckBatch(const ExperimentConfig& cfg) {
  const int b = cfg.gradcheck.batch_size;
  const int n_silent = cfg.gradcheck.num_silent;
  GeneratorConfig gen = cfg.generator;
  gen.n_clips = b;
  gen.clip_seconds = gen.chunk_seconds;
  gen.activity_prob.fill(1.0);
  gen.leakage = 0.0;
  gen.seed = Rng::StreamSeed(cfg.seed, "gradcheck.data");
  Rng rng = Rng::Stream(cfg.seed, "gradcheck.crops");

  std::vector<bool> silent(b, false);
  for (int k = 0; k < n_silent; ++k) {
    silent[((2 * k + 1) * b) / (2 * n_silent)] = true;
  }

  PairBatch batch;
  for (int i = 0; i < b; ++i) {
    const GeneratedClip clip = GenerateClip(gen, i);
    const auto specs = ClipSpectrograms(clip.stems, cfg.mel);
    const Source s = kAllSources[i % kNumSources];
    const int span = specs[kMixtureSignal].n_frames - kCropFrames + 1;
    const CropWindow aw{static_cast<int>(rng.UniformInt(span)), kCropFrames};
    const CropWindow pw{static_cast<int>(rng.UniformInt(span)), kCropFrames};
    batch.anchors.push_back(Crop(specs[kMixtureSignal], aw));
    MelSpectrogram pos = Crop(specs[static_cast<int>(s)], pw);
    if (silent[i]) {
      std::fill(pos.data.begin(), pos.data.end(),
                static_cast<float>(std::log(cfg.mel.log_floor)));
    }
    batch.positives.push_back(std::move(pos));
    batch.silent_mask.push_back(silent[i]);
    batch.source_ids.push_back(s);
    batch.clip_ids.push_back(clip.record.clip_id);
    batch.clip_indices.push_back(static_cast<size_t>(i));
    batch.anchor_windows.push_back(aw);
    batch.positive_windows.push_back(pw);
  }
  return batch;
}

double GradcheckOutcome::max_rel_error() const {
  return std::max(aggregate.max_rel_error, unaggregated.max_rel_error);
}

GradcheckOutcome RunGradcheck(const ExperimentConfig& cfg) {
  const ModelParams<double> params =
      InitParams<double>(GradcheckModelConfig(cfg));
  const PairBatch batch = MakeGradcheckBatch(cfg);
  GradCheckOptions opt;
  opt.h = cfg.gradcheck.h;
  opt.mode = cfg.gradcheck.mode;
  opt.samples_per_tensor = cfg.gradcheck.samples_per_tensor;
  opt.seed = Rng::StreamSeed(cfg.seed, "gradcheck.sample");
  GradcheckOutcome out;
  out.aggregate = FiniteDifferenceCheck(
      params, batch, LossSpec{cfg.train.temperature, true}, opt);
  out.unaggregated = FiniteDifferenceCheck(
      params, batch, LossSpec{cfg.train.temperature, false}, opt);
  return out;
}

int CmdGradcheck(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.Validate();
  const fs::path dir = PrepareRunDir(cfg);
  const GradcheckOutcome g = RunGradcheck(cfg);
  auto report_json = [](const GradCheckReport& r) {
    json per = json::object();
    for (const auto& [name, err] : r.per_tensor) per[name] = err;
    return json{{"max_rel_error", r.max_rel_error},
                {"worst_param", r.worst_param},
                {"worst_index", r.worst_index},
                {"worst_analytic", r.worst_analytic},
                {"worst_numeric", r.worst_numeric},
                {"num_checked", r.num_checked},
                {"per_tensor", per}};
  };
  const bool pass = g.max_rel_error() < kGradcheckTolerance;
  const json j = {{"aggregate_silent", report_json(g.aggregate)},
                  {"plain_ntxent", report_json(g.unaggregated)},
                  {"max_rel_error", g.max_rel_error()},
                  {"tolerance", kGradcheckTolerance},
                  {"pass", pass}};
  WriteText(dir / "gradcheck.json", j.dump(2) + "\n");
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "gradcheck: aggregate %.3e (%zu scalars), plain %.3e, "
                "max %.3e -> %s\n",
                g.aggregate.max_rel_error, g.aggregate.num_checked,
                g.unaggregated.max_rel_error, g.max_rel_error(),
                pass ? "PASS" : "FAIL");
  log << buf;
  return pass ? 0 : 1;
}

int CmdProbe(const ExperimentConfig& cfg,
             const std::optional<fs::path>& checkpoint, std::ostream& log) {
  cfg.Validate();
  const Dataset dataset = OpenDataset(cfg);
  const fs::path dir = cfg.RunDir();
  fs::path ckpt;
  if (checkpoint) {
    ckpt = *checkpoint;
  } else {
    ckpt = dir / (cfg.probe_checkpoint == CheckpointChoice::kBest
                      ? "best.msat"
                      : "final.msat");
  }
  if (!fs::exists(ckpt)) {
    throw Error("missing_input", "no checkpoint " + ckpt.string());
  }
  // The model layout comes from the run when it recorded one.
  const ModelConfig model =
      fs::exists(ckpt.parent_path() / "model.json")
          ? ParseModelConfig(ReadText(ckpt.parent_path() / "model.json"))
          : cfg.ResolvedModel();
  const ModelParams<float> params = LoadCheckpoint(ckpt, model);
  PrepareRunDir(cfg);

  const FeatureTable table = ExtractFeatures(params, dataset, {}, cfg.threads);
  const ProbeConfig probe = cfg.ResolvedProbe();
  const ProbeReport report = RunProbe(table, dataset, probe);
  const std::string stem = "probe_" + std::string(TaskTypeName(probe.task));
  WriteText(dir / (stem + ".csv"), report.ToCsv());
  WriteText(dir / (stem + ".json"), report.ToJson());
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "probe %s (%s head, %s): macro ROC-AUC %.4f, PR-AUC %.4f",
                std::string(TaskTypeName(probe.task)).c_str(),
                std::string(ProbeHeadName(probe.head)).c_str(),
                ckpt.filename().string().c_str(), report.macro_roc_auc,
                report.macro_pr_auc);
  log << buf;
  if (report.weighted_accuracy) {
    std::snprintf(buf, sizeof(buf), ", WA %.4f", *report.weighted_accuracy);
    log << buf;
  }
  log << "\n";
  for (const auto& s : report.skipped) log << "  skipped " << s << "\n";
  return 0;
}

int CmdReport(const ExperimentConfig& cfg, const std::vector<fs::path>& runs,
              std::ostream& log) {
  if (runs.empty()) throw Error("missing_input", "no run directories given");
  ExperimentConfig out_cfg = cfg;
  if (out_cfg.run_id.empty()) out_cfg.run_id = "report";
  const fs::path dir = PrepareRunDir(out_cfg);

  struct Loaded {
    std::string run;
    ProbeReport report;
  };
  std::vector<Loaded> loaded;
  for (const auto& run : runs) {
    if (!fs::is_directory(run)) {
      throw Error("missing_input", "not a run directory: " + run.string());
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(run)) {
      const std::string name = e.path().filename().string();
      if (name.rfind("probe_", 0) == 0 && e.path().extension() == ".json") {
        files.push_back(e.path());
      }
    }
    if (files.empty()) {
      throw Error("missing_input", "no probe report in " + run.string());
    }
    std::sort(files.begin(), files.end());
    fs::path named = run;
    if (!named.has_filename()) named = named.parent_path();
    const std::string run_name = named.filename().string();
    for (const auto& f : files) {
      loaded.push_back({run_name, ProbeReport::FromJson(ReadText(f))});
    }
  }

  std::ostringstream csv;
  csv << "run,task,metric,value\n";
  char buf[256];
  for (const auto& l : loaded) {
    const std::string task(TaskTypeName(l.report.task));
    std::vector<std::pair<std::string, double>> metrics = {
        {"macro_roc_auc", l.report.macro_roc_auc},
        {"macro_pr_auc", l.report.macro_pr_auc}};
    if (l.report.weighted_accuracy) {
      metrics.emplace_back("weighted_accuracy", *l.report.weighted_accuracy);
    }
    for (const auto& [name, value] : metrics) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.9f\n", l.run.c_str(),
                    task.c_str(), name.c_str(), value);
      csv << buf;
    }
  }
  WriteText(dir / "comparison.csv", csv.str());
  log << "wrote " << (dir / "comparison.csv").string() << "\n";

  if (loaded.size() >= 2) {
    // Differential between the first two reports of the same task.
    for (size_t j = 1; j < loaded.size(); ++j) {
      if (loaded[j].report.task != loaded[0].report.task ||
          loaded[j].run == loaded[0].run) {
        continue;
      }
      WriteText(dir / "tag_differential.csv",
                TagDifferentialCsv(loaded[0].report, loaded[j].report,
                                   loaded[0].run, loaded[j].run));
      log << "wrote " << (dir / "tag_differential.csv").string() << " ("
          << loaded[0].run << " vs " << loaded[j].run << ")\n";
      break;
    }
  }
  return 0;
}

}  // namespace msa
