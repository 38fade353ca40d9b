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

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "msa/error.h"
#include "msa/rng.h"

namespace msa {
namespace fs = std::filesystem;
namespace {

using json = nlohmann::json;

// Reads the fields of one JSON object and rejects whatever is left over.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) Fail(path_, "expected an object");
  }

  template <typename T>
  void Get(const char* key, T& out) {
    const json* v = Take(key);
    if (!v) return;
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      Fail(Path(key), "wrong type (" + std::string(v->type_name()) + ")");
    }
  }

  template <typename T>
  void GetOptional(const char* key, std::optional<T>& out) {
    const json* v = Take(key);
    if (!v) return;
    if (v->is_null()) {
      out.reset();
      return;
    }
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      Fail(Path(key), "wrong type (" + std::string(v->type_name()) + ")");
    }
  }

  const json* Take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string Path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  // Every key of the object must have been asked for.
  void Done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) Fail(Path(it.key()), "unknown key");
    }
  }

  [[noreturn]] static void Fail(const std::string& path,
                                const std::string& what) {
    throw Error("config_error", (path.empty() ? "<root>" : path) + ": " + what);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Runs `parse`, turning any domain error into a config_error at `path`.
template <typename F>
auto At(const std::string& path, F&& parse) {
  try {
    return parse();
  } catch (const Error& e) {
    if (e.code() == "config_error") throw;
    Fields::Fail(path, e.what());
  }
}

json GeneratorJson(const GeneratorConfig& g, bool with_seed) {
  json probs = json::object();
  for (Source s : kAllSources) {
    probs[std::string(SourceName(s))] = g.activity_prob[static_cast<int>(s)];
  }
  json j = {{"n_clips", g.n_clips},
            {"clip_seconds", g.clip_seconds},
            {"chunk_seconds", g.chunk_seconds},
            {"sample_rate", g.sample_rate},
            {"activity_prob", probs},
            {"tempo_range", {g.tempo_min, g.tempo_max}},
            {"pitch_set", g.pitch_set},
            {"leakage", g.leakage},
            {"split_ratio", g.split_ratio}};
  if (with_seed) j["seed"] = g.seed;
  return j;
}

void ParseGenerator(const json& j, const std::string& path, GeneratorConfig& g,
                    std::optional<uint64_t>* seed) {
  Fields f(j, path);
  f.Get("n_clips", g.n_clips);
  f.Get("clip_seconds", g.clip_seconds);
  f.Get("chunk_seconds", g.chunk_seconds);
  f.Get("sample_rate", g.sample_rate);
  if (const json* p = f.Take("activity_prob")) {
    Fields pf(*p, f.Path("activity_prob"));
    for (Source s : kAllSources) {
      pf.Get(std::string(SourceName(s)).c_str(),
             g.activity_prob[static_cast<int>(s)]);
    }
    pf.Done();
  }
  std::optional<std::array<double, 2>> tempo;
  f.GetOptional("tempo_range", tempo);
  if (tempo) {
    g.tempo_min = (*tempo)[0];
    g.tempo_max = (*tempo)[1];
  }
  f.Get("pitch_set", g.pitch_set);
  f.Get("leakage", g.leakage);
  f.Get("split_ratio", g.split_ratio);
  if (seed) {
    f.GetOptional("seed", *seed);
  } else {
    f.Get("seed", g.seed);
  }
  f.Done();
}

json MelJson(const MelConfig& m) {
  return {{"window_ms", m.window_ms}, {"hop_ms", m.hop_ms},
          {"n_mels", m.n_mels},       {"fmin", m.fmin},
          {"fmax", m.fmax ? json(*m.fmax) : json(nullptr)},
          {"log_floor", m.log_floor}};
}

void ParseMel(const json& j, const std::string& path, MelConfig& m) {
  Fields f(j, path);
  f.Get("window_ms", m.window_ms);
  f.Get("hop_ms", m.hop_ms);
  f.Get("n_mels", m.n_mels);
  f.Get("fmin", m.fmin);
  f.GetOptional("fmax", m.fmax);
  f.Get("log_floor", m.log_floor);
  f.Done();
}

json StagesJson(const std::vector<ConvStage>& stages) {
  json a = json::array();
  for (const auto& s : stages) {
    a.push_back({{"channels", s.channels},
                 {"kernel", {s.kernel_h, s.kernel_w}},
                 {"stride", {s.stride_h, s.stride_w}}});
  }
  return a;
}

std::vector<ConvStage> ParseStages(const json& j, const std::string& path) {
  if (!j.is_array()) Fields::Fail(path, "expected an array");
  std::vector<ConvStage> out;
  for (size_t i = 0; i < j.size(); ++i) {
    Fields f(j[i], path + "[" + std::to_string(i) + "]");
    ConvStage s;
    std::array<int, 2> kernel{s.kernel_h, s.kernel_w};
    std::array<int, 2> stride{s.stride_h, s.stride_w};
    f.Get("channels", s.channels);
    f.Get("kernel", kernel);
    f.Get("stride", stride);
    f.Done();
    s.kernel_h = kernel[0];
    s.kernel_w = kernel[1];
    s.stride_h = stride[0];
    s.stride_w = stride[1];
    out.push_back(s);
  }
  return out;
}

json ModelJson(const ModelConfig& m, bool with_seed) {
  json j = {{"feature_dim", m.feature_dim},
            {"embed_dim", m.embed_dim},
            {"encoder", StagesJson(m.encoder)},
            {"input_mels", m.input_mels},
            {"input_frames", m.input_frames}};
  if (with_seed) j["init_seed"] = m.init_seed;
  return j;
}

void ParseModel(const json& j, const std::string& path, ModelConfig& m,
                bool with_seed) {
  Fields f(j, path);
  f.Get("feature_dim", m.feature_dim);
  f.Get("embed_dim", m.embed_dim);
  if (const json* e = f.Take("encoder")) {
    m.encoder = ParseStages(*e, f.Path("encoder"));
  }
  f.Get("input_mels", m.input_mels);
  f.Get("input_frames", m.input_frames);
  if (with_seed) f.Get("init_seed", m.init_seed);
  f.Done();
}

json TrainJson(const TrainConfig& t) {
  return {{"total_steps", t.total_steps},
          {"batches_per_step", t.batches_per_step},
          {"batch_size", t.batch_size},
          {"lr0", t.lr0},
          {"halve_at", t.halve_at ? json(*t.halve_at) : json(nullptr)},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"epsilon", t.epsilon},
          {"early_stop_window", t.early_stop_window},
          {"validation_batches", t.validation_batches},
          {"checkpoint_every", t.checkpoint_every},
          {"temperature", t.temperature}};
}

void ParseTrain(const json& j, const std::string& path, TrainConfig& t) {
  Fields f(j, path);
  f.Get("total_steps", t.total_steps);
  f.Get("batches_per_step", t.batches_per_step);
  f.Get("batch_size", t.batch_size);
  f.Get("lr0", t.lr0);
  f.GetOptional("halve_at", t.halve_at);
  f.Get("beta1", t.beta1);
  f.Get("beta2", t.beta2);
  f.Get("epsilon", t.epsilon);
  f.Get("early_stop_window", t.early_stop_window);
  f.Get("validation_batches", t.validation_batches);
  f.Get("checkpoint_every", t.checkpoint_every);
  f.Get("temperature", t.temperature);
  f.Done();
}

json ProbeJson(const ProbeConfig& p, CheckpointChoice ck) {
  return {{"head", std::string(ProbeHeadName(p.head))},
          {"task", std::string(TaskTypeName(p.task))},
          {"lr", p.lr ? json(*p.lr) : json(nullptr)},
          {"batch_size", p.batch_size},
          {"patience", p.patience},
          {"max_epochs", p.max_epochs},
          {"hidden_units", p.hidden_units},
          {"class_prefix", p.class_prefix},
          {"tags", p.tags},
          {"standardize", p.standardize},
          {"checkpoint", ck == CheckpointChoice::kBest ? "best" : "final"}};
}

void ParseProbe(const json& j, const std::string& path, ProbeConfig& p,
                CheckpointChoice& ck) {
  Fields f(j, path);
  std::optional<std::string> s;
  f.GetOptional("head", s);
  if (s) p.head = At(f.Path("head"), [&] { return ParseProbeHead(*s); });
  s.reset();
  f.GetOptional("task", s);
  if (s) p.task = At(f.Path("task"), [&] { return ParseTaskType(*s); });
  f.GetOptional("lr", p.lr);
  f.Get("batch_size", p.batch_size);
  f.Get("patience", p.patience);
  f.Get("max_epochs", p.max_epochs);
  f.Get("hidden_units", p.hidden_units);
  f.Get("class_prefix", p.class_prefix);
  f.Get("tags", p.tags);
  f.Get("standardize", p.standardize);
  s.reset();
  f.GetOptional("checkpoint", s);
  if (s) {
    if (*s == "best") {
      ck = CheckpointChoice::kBest;
    } else if (*s == "final") {
      ck = CheckpointChoice::kFinal;
    } else {
      Fields::Fail(f.Path("checkpoint"), "expected \"best\" or \"final\"");
    }
  }
  f.Done();
}

json GradcheckJson(const GradcheckConfig& g) {
  return {{"feature_dim", g.feature_dim},
          {"embed_dim", g.embed_dim},
          {"encoder", StagesJson(g.encoder)},
          {"batch_size", g.batch_size},
          {"num_silent", g.num_silent},
          {"h", g.h},
          {"mode", g.mode == FdMode::kExhaustive ? "exhaustive" : "sampled"},
          {"samples_per_tensor", g.samples_per_tensor}};
}

void ParseGradcheck(const json& j, const std::string& path,
                    GradcheckConfig& g) {
  Fields f(j, path);
  f.Get("feature_dim", g.feature_dim);
  f.Get("embed_dim", g.embed_dim);
  if (const json* e = f.Take("encoder")) {
    g.encoder = ParseStages(*e, f.Path("encoder"));
  }
  f.Get("batch_size", g.batch_size);
  f.Get("num_silent", g.num_silent);
  f.Get("h", g.h);
  std::optional<std::string> mode;
  f.GetOptional("mode", mode);
  if (mode) {
    if (*mode == "exhaustive") {
      g.mode = FdMode::kExhaustive;
    } else if (*mode == "sampled") {
      g.mode = FdMode::kSampled;
    } else {
      Fields::Fail(f.Path("mode"), "expected \"exhaustive\" or \"sampled\"");
    }
  }
  f.Get("samples_per_tensor", g.samples_per_tensor);
  f.Done();
}

std::string Hex(uint64_t v, int digits) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf).substr(16 - digits);
}

}  // namespace

std::string GeneratorToJson(const GeneratorConfig& cfg) {
  return GeneratorJson(cfg, true).dump();
}

std::string MelToJson(const MelConfig& cfg) { return MelJson(cfg).dump(); }

std::string ModelToJson(const ModelConfig& cfg) {
  return ModelJson(cfg, true).dump(2) + "\n";
}

ModelConfig ParseModelConfig(const std::string& json_text) {
  ModelConfig m;
  try {
    ParseModel(json::parse(json_text), "", m, true);
  } catch (const json::parse_error& e) {
    throw Error("config_error", std::string("invalid JSON: ") + e.what());
  }
  At("model", [&] { m.Validate(); return 0; });
  return m;
}

void ExperimentConfig::Validate() const {
  At("generator", [&] { ResolvedGenerator().Validate(); return 0; });
  At("mel", [&] { mel.Validate(generator.sample_rate); return 0; });
  At("pairing", [&] { variant.Validate(); return 0; });
  At("model", [&] { model.Validate(); return 0; });
  if (model.input_mels != mel.n_mels) {
    Fields::Fail("model.input_mels", "must equal mel.n_mels");
  }
  At("train", [&] { ResolvedTrain().Validate(); return 0; });
  At("probe", [&] { probe.Validate(); return 0; });
  if (gradcheck.batch_size < 2 || gradcheck.num_silent < 0 ||
      gradcheck.num_silent >= gradcheck.batch_size) {
    Fields::Fail("gradcheck", "need batch_size >= 2 and "
                              "0 <= num_silent < batch_size");
  }
  if (!(gradcheck.h >= 1e-5 && gradcheck.h <= 1e-2)) {
    Fields::Fail("gradcheck.h", "must lie in [1e-5, 1e-2]");
  }
  if (threads < 0) Fields::Fail("threads", "must be >= 0");
}

std::string ExperimentConfig::ResolvedRunId() const {
  if (!run_id.empty()) return run_id;
  std::string id(VariantName(variant.kind));
  if (variant.fixed_source) id += "-" + std::string(SourceName(*variant.fixed_source));
  if (generator.leakage > 0) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "-leak%g", generator.leakage);
    id += buf;
  }
  return id + "-s" + std::to_string(seed);
}

fs::path ExperimentConfig::RunDir() const {
  return fs::path(output_dir) / ResolvedRunId();
}

fs::path ExperimentConfig::DatasetDir() const {
  if (!dataset_dir.empty()) return dataset_dir;
  const std::string key = GeneratorToJson(ResolvedGenerator()) + MelToJson(mel);
  return fs::path(output_dir) / ("data-" + Hex(HashString(key), 12));
}

GeneratorConfig ExperimentConfig::ResolvedGenerator() const {
  GeneratorConfig g = generator;
  g.seed = generator_seed.value_or(Rng::StreamSeed(seed, "data"));
  return g;
}

ModelConfig ExperimentConfig::ResolvedModel() const {
  ModelConfig m = model;
  m.init_seed = Rng::StreamSeed(seed, "init");
  return m;
}

TrainConfig ExperimentConfig::ResolvedTrain() const {
  TrainConfig t = train;
  t.variant = variant;
  t.seed = Rng::StreamSeed(seed, "pairing");
  return t;
}

ProbeConfig ExperimentConfig::ResolvedProbe() const {
  ProbeConfig p = probe;
  p.seed = Rng::StreamSeed(seed, "probe");
  return p;
}

ExperimentConfig ParseExperimentConfig(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error("config_error", std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Fields f(root, "");
  f.Get("run_id", c.run_id);
  f.Get("output_dir", c.output_dir);
  f.Get("dataset_dir", c.dataset_dir);
  f.Get("seed", c.seed);
  f.Get("threads", c.threads);
  if (const json* j = f.Take("generator")) {
    ParseGenerator(*j, "generator", c.generator, &c.generator_seed);
  }
  if (const json* j = f.Take("mel")) ParseMel(*j, "mel", c.mel);
  if (const json* j = f.Take("pairing")) {
    Fields p(*j, "pairing");
    std::optional<std::string> variant, source;
    p.GetOptional("variant", variant);
    p.GetOptional("source", source);
    p.Done();
    if (variant) {
      c.variant.kind =
          At("pairing.variant", [&] { return ParseVariant(*variant); });
    }
    if (source) {
      c.variant.fixed_source =
          At("pairing.source", [&] { return ParseSource(*source); });
    }
  }
  if (const json* j = f.Take("model")) ParseModel(*j, "model", c.model, false);
  if (const json* j = f.Take("train")) ParseTrain(*j, "train", c.train);
  if (const json* j = f.Take("probe")) {
    ParseProbe(*j, "probe", c.probe, c.probe_checkpoint);
  }
  if (const json* j = f.Take("gradcheck")) {
    ParseGradcheck(*j, "gradcheck", c.gradcheck);
  }
  f.Done();
  c.Validate();
  return c;
}

ExperimentConfig LoadExperimentConfig(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing_input", "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseExperimentConfig(ss.str());
}

std::string ExperimentToJson(const ExperimentConfig& c) {
  json gen = GeneratorJson(c.generator, false);
  gen["seed"] = c.generator_seed ? json(*c.generator_seed) : json(nullptr);
  json j = {
      {"run_id", c.run_id},
      {"output_dir", c.output_dir},
      {"dataset_dir", c.dataset_dir},
      {"seed", c.seed},
      {"threads", c.threads},
      {"generator", gen},
      {"mel", MelJson(c.mel)},
      {"pairing",
       {{"variant", std::string(VariantName(c.variant.kind))},
        {"source", c.variant.fixed_source
                       ? json(std::string(SourceName(*c.variant.fixed_source)))
                       : json(nullptr)}}},
      {"model", ModelJson(c.model, false)},
      {"train", TrainJson(c.train)},
      {"probe", ProbeJson(c.probe, c.probe_checkpoint)},
      {"gradcheck", GradcheckJson(c.gradcheck)}};
  return j.dump(2) + "\n";
}

}  // namespace msa
