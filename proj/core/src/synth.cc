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

#include "msa/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "msa/error.h"

namespace msa {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::array<std::string_view, kNumSources> kSourceNames = {
    "bass", "drums", "other", "vocals"};
constexpr std::array<std::string_view, 12> kPitchNames = {
    "C", "Db", "D", "Eb", "E", "F", "Gb", "G", "Ab", "A", "Bb", "B"};

// Peak amplitudes; their sum stays below 1 so mixtures never clip.
constexpr double kBassLevel = 0.18;
constexpr double kKickLevel = 0.22;
constexpr double kSnareLevel = 0.13;
constexpr double kHatLevel = 0.06;
constexpr double kChordNoteLevel = 0.04;
constexpr double kVocalLevel = 0.18;

double MidiToHz(double midi) {
  return 440.0 * std::pow(2.0, (midi - 69.0) / 12.0);
}

class ChunkGate {
 public:
  ChunkGate(const std::vector<bool>& active, size_t chunk_samples)
      : active_(active), chunk_samples_(chunk_samples) {}
  bool operator()(size_t sample) const {
    return active_[sample / chunk_samples_];
  }

 private:
  const std::vector<bool>& active_;
  size_t chunk_samples_;
};

// Sum of fixed-frequency sinusoids evaluated with rotating phasors.
class PhasorBank {
 public:
  void Start(const std::vector<double>& freqs, const std::vector<double>& amps,
             int sample_rate, double elapsed_seconds) {
    const size_t n = freqs.size();
    re_.resize(n);
    im_.resize(n);
    wr_.resize(n);
    wi_.resize(n);
    amp_ = amps;
    for (size_t k = 0; k < n; ++k) {
      const double phase = kTwoPi * freqs[k] * elapsed_seconds;
      re_[k] = std::cos(phase);
      im_[k] = std::sin(phase);
      const double step = kTwoPi * freqs[k] / sample_rate;
      wr_[k] = std::cos(step);
      wi_[k] = std::sin(step);
    }
    since_normalize_ = 0;
  }

  double Next() {
    double sum = 0.0;
    for (size_t k = 0; k < re_.size(); ++k) {
      sum += amp_[k] * im_[k];
      const double r = re_[k] * wr_[k] - im_[k] * wi_[k];
      const double i = re_[k] * wi_[k] + im_[k] * wr_[k];
      re_[k] = r;
      im_[k] = i;
    }
    if (++since_normalize_ == 1024) {
      since_normalize_ = 0;
      for (size_t k = 0; k < re_.size(); ++k) {
        const double norm = std::sqrt(re_[k] * re_[k] + im_[k] * im_[k]);
        re_[k] /= norm;
        im_[k] /= norm;
      }
    }
    return sum;
  }

 private:
  std::vector<double> re_, im_, wr_, wi_, amp_;
  int since_normalize_ = 0;
};

struct Note {
  size_t start = 0;
  size_t end = 0;
  std::vector<double> freqs;
  std::vector<double> amps;
  double attack_s = 0.005;
  double decay_s = 1.0;
};

// Renders back-to-back notes with an exponential attack/decay envelope,
// writing only inside active chunks.
void RenderNotes(const std::vector<Note>& notes, const ChunkGate& gate,
                 int sr, std::vector<float>& out) {
  PhasorBank bank;
  for (const Note& note : notes) {
    bool synced = false;
    double attack = 0.0, decay = 0.0;
    const double attack_step = std::exp(-1.0 / (note.attack_s * sr));
    const double decay_step = std::exp(-1.0 / (note.decay_s * sr));
    const size_t end = std::min(note.end, out.size());
    for (size_t s = note.start; s < end; ++s) {
      if (!gate(s)) {
        synced = false;
        continue;
      }
      if (!synced) {
        const double elapsed = static_cast<double>(s - note.start) / sr;
        bank.Start(note.freqs, note.amps, sr, elapsed);
        attack = std::exp(-elapsed / note.attack_s);
        decay = std::exp(-elapsed / note.decay_s);
        synced = true;
      }
      out[s] += static_cast<float>((1.0 - attack) * decay * bank.Next());
      attack *= attack_step;
      decay *= decay_step;
    }
  }
}

size_t BeatSample(double beat_index, double beat_seconds, int sr) {
  return static_cast<size_t>(std::llround(beat_index * beat_seconds * sr));
}

void RenderBass(const GeneratorConfig& cfg, const ClipParams& p, Rng& rng,
                const ChunkGate& gate, std::vector<float>& out) {
  static constexpr int kIntervals[] = {0, 5, 7, 12};
  const int sr = cfg.sample_rate;
  const double beat = 60.0 / p.tempo_bpm;
  const double second_harmonic = rng.Uniform(0.2, 0.45);
  std::vector<Note> notes;
  for (int k = 0; BeatSample(k, beat, sr) < out.size(); ++k) {
    const double f =
        MidiToHz(36 + p.root_pitch_class + kIntervals[rng.UniformInt(4)]);
    Note n;
    n.start = BeatSample(k, beat, sr);
    n.end = BeatSample(k + 1, beat, sr);
    n.freqs = {f, 2 * f};
    const double norm = kBassLevel / (1.0 + second_harmonic);
    n.amps = {norm, norm * second_harmonic};
    n.attack_s = 0.005;
    n.decay_s = 0.6 * beat;
    notes.push_back(std::move(n));
  }
  RenderNotes(notes, gate, sr, out);
}

void RenderChords(const GeneratorConfig& cfg, const ClipParams& p, Rng& rng,
                  const ChunkGate& gate, std::vector<float>& out) {
  // I, IV, V, vi of the clip's key.
  static constexpr int kDegrees[] = {0, 5, 7, 9};
  static constexpr bool kMinor[] = {false, false, false, true};
  const int sr = cfg.sample_rate;
  const double bar = 4 * 60.0 / p.tempo_bpm;
  const double rolloff = rng.Uniform(0.25, 0.55);
  std::vector<Note> notes;
  for (int k = 0; BeatSample(k, bar, sr) < out.size(); ++k) {
    const int d = static_cast<int>(rng.UniformInt(4));
    const int base = 60 + p.root_pitch_class + kDegrees[d];
    const int tones[3] = {0, kMinor[d] ? 3 : 4, 7};
    Note n;
    n.start = BeatSample(k, bar, sr);
    n.end = BeatSample(k + 1, bar, sr);
    for (int tone : tones) {
      int midi = base + tone;
      while (midi > 76) midi -= 12;
      const double f = MidiToHz(midi);
      double a = kChordNoteLevel / (1.0 + rolloff + rolloff * rolloff);
      for (int h = 1; h <= 3; ++h) {
        n.freqs.push_back(h * f);
        n.amps.push_back(a);
        a *= rolloff;
      }
    }
    n.attack_s = 0.02;
    n.decay_s = 2.0 * bar;
    notes.push_back(std::move(n));
  }
  RenderNotes(notes, gate, sr, out);
}

// Kick on every beat, snare on the off-beats, hats on eighth notes. Decay
// times scale with the beat period.
void RenderDrums(const GeneratorConfig& cfg, const ClipParams& p, Rng& rng,
                 uint64_t noise_seed, const ChunkGate& gate,
                 std::vector<float>& out) {
  const int sr = cfg.sample_rate;
  const double beat = 60.0 / p.tempo_bpm;
  const double kick_hz = rng.Uniform(45.0, 65.0);
  const double hat_brightness = rng.Uniform(0.6, 0.95);

  auto add_event = [&](size_t start, double tau, auto&& sample_fn) {
    const size_t len = static_cast<size_t>(9.0 * tau * sr);
    const double step = std::exp(-1.0 / (tau * sr));
    double env = 1.0;
    for (size_t i = 0; i < len && start + i < out.size(); ++i, env *= step) {
      const size_t s = start + i;
      const double v = sample_fn(static_cast<double>(i) / sr);
      if (gate(s)) out[s] += static_cast<float>(env * v);
    }
  };

  for (int k = 0; BeatSample(k, beat, sr) < out.size(); ++k) {
    const size_t at = BeatSample(k, beat, sr);
    add_event(at, 0.12 * beat, [&](double t) {
      const double phase =
          kTwoPi * (kick_hz * t + 70.0 * 0.03 * (1.0 - std::exp(-t / 0.03)));
      return kKickLevel * std::sin(phase);
    });
    if (k % 2 == 1) {
      Rng noise = Rng::Stream(noise_seed, "snare", static_cast<uint64_t>(k));
      add_event(at, 0.08 * beat, [&](double t) {
        return kSnareLevel *
               (0.6 * std::clamp(noise.Normal() / 3.0, -1.0, 1.0) +
                0.4 * std::sin(kTwoPi * 180.0 * t));
      });
    }
    for (int half = 0; half < 2; ++half) {
      const size_t hat_at = BeatSample(k + 0.5 * half, beat, sr);
      Rng noise =
          Rng::Stream(noise_seed, "hat", static_cast<uint64_t>(2 * k + half));
      double prev = 0.0;
      add_event(hat_at, 0.025 * beat, [&](double) {
        const double x = std::clamp(noise.Normal() / 3.0, -1.0, 1.0);
        const double v = x - hat_brightness * prev;
        prev = x;
        return 0.5 * kHatLevel * v;
      });
    }
  }
}

// Harmonic series with a gliding, vibrato-modulated fundamental shaped by a
// two-formant vowel envelope. The fundamental phase is integrated over the
// whole clip so gating does not alter the active portions.
void RenderVocals(const GeneratorConfig& cfg, const ClipParams& p, Rng& rng,
                  const ChunkGate& gate, std::vector<float>& out) {
  struct Vowel {
    double f1, f2;
  };
  static constexpr Vowel kVowels[] = {
      {800, 1200}, {400, 2300}, {300, 2700}, {500, 900}, {350, 700}};
  static constexpr int kScale[] = {0, 2, 4, 5, 7, 9, 11};
  constexpr int kHarmonics = 8;
  constexpr int kBlock = 32;

  const int sr = cfg.sample_rate;
  const double note_len = 2 * 60.0 / p.tempo_bpm;
  const double formant_shift = rng.Uniform(0.9, 1.1);
  const double vibrato_depth = rng.Uniform(0.15, 0.4);

  std::vector<double> pitches;  // semitones (MIDI)
  std::vector<int> vowels;
  const size_t n_notes =
      static_cast<size_t>(std::ceil(out.size() / (note_len * sr))) + 1;
  for (size_t i = 0; i < n_notes; ++i) {
    pitches.push_back(57 + p.root_pitch_class + kScale[rng.UniformInt(7)]);
    vowels.push_back(static_cast<int>(rng.UniformInt(5)));
  }

  double phase = 0.0;
  for (size_t b = 0; b < out.size(); b += kBlock) {
    const double t = (b + 0.5 * kBlock) / sr;
    const size_t ni = std::min(static_cast<size_t>(t / note_len), n_notes - 1);
    const double tn = t - ni * note_len;
    const double prev = ni > 0 ? pitches[ni - 1] : pitches[0];
    double semis = prev + (pitches[ni] - prev) * (1.0 - std::exp(-tn / 0.04));
    semis += vibrato_depth * std::min(1.0, tn / 0.15) *
             std::sin(kTwoPi * 5.5 * t);
    const double f0 = MidiToHz(semis);
    const double dphi = kTwoPi * f0 / sr;
    const size_t len = std::min<size_t>(kBlock, out.size() - b);

    if (gate(b)) {
      const Vowel& v = kVowels[vowels[ni]];
      double weights[kHarmonics];
      double wsum = 0.0;
      for (int h = 0; h < kHarmonics; ++h) {
        const double f = (h + 1) * f0;
        const double a = (f - v.f1 * formant_shift) / 120.0;
        const double c = (f - v.f2 * formant_shift) / 180.0;
        weights[h] = std::exp(-a * a) + 0.7 * std::exp(-c * c) + 0.05;
        wsum += weights[h];
      }
      double re[kHarmonics], im[kHarmonics], wr[kHarmonics], wi[kHarmonics];
      for (int h = 0; h < kHarmonics; ++h) {
        weights[h] *= kVocalLevel / wsum;
        re[h] = std::cos((h + 1) * phase);
        im[h] = std::sin((h + 1) * phase);
        wr[h] = std::cos((h + 1) * dphi);
        wi[h] = std::sin((h + 1) * dphi);
      }
      for (size_t i = 0; i < len; ++i) {
        const double ts = (b + i) / static_cast<double>(sr) - ni * note_len;
        double env = std::min(1.0, std::max(ts, 0.0) / 0.03);
        if (ts > 0.85 * note_len) {
          env *= std::max(0.0, (note_len - ts) / (0.15 * note_len));
        }
        double sum = 0.0;
        for (int h = 0; h < kHarmonics; ++h) {
          sum += weights[h] * im[h];
          const double r = re[h] * wr[h] - im[h] * wi[h];
          im[h] = re[h] * wi[h] + im[h] * wr[h];
          re[h] = r;
        }
        out[b + i] += static_cast<float>(env * sum);
      }
    }
    phase = std::fmod(phase + dphi * len, kTwoPi);
  }
}

// Zeroes silent chunks and returns the realized activity.
std::vector<bool> GateBySilence(std::vector<float>& samples,
                                size_t chunk_samples) {
  std::vector<bool> active;
  for (size_t start = 0; start < samples.size(); start += chunk_samples) {
    const size_t len = std::min(chunk_samples, samples.size() - start);
    std::span<float> chunk(samples.data() + start, len);
    const bool silent = IsSilent(chunk);
    if (silent) std::fill(chunk.begin(), chunk.end(), 0.0f);
    active.push_back(!silent);
  }
  return active;
}

}  // namespace

std::string_view SourceName(Source s) {
  return kSourceNames[static_cast<int>(s)];
}

Source ParseSource(std::string_view name) {
  for (Source s : kAllSources) {
    if (SourceName(s) == name) return s;
  }
  throw Error("unknown_source", std::string(name));
}

std::string PresenceTag(Source s) {
  if (s == Source::kVocals) return "vocal-present";
  return std::string(SourceName(s)) + "-present";
}

std::string_view SplitName(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kValid:
      return "valid";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "test") return Split::kTest;
  throw Error("unknown_split", std::string(name));
}

void GeneratorConfig::Validate() const {
  auto fail = [](const std::string& why) {
    return Error("invalid_generator_config", why);
  };
  if (n_clips < 1) throw fail("n_clips must be >= 1");
  if (clip_seconds < 4.0) throw fail("clip_seconds must be >= 4");
  if (chunk_seconds <= 0.0) throw fail("chunk_seconds must be positive");
  if (sample_rate <= 0) throw fail("sample_rate must be positive");
  for (double p : activity_prob) {
    if (!(p >= 0.0 && p <= 1.0)) throw fail("activity_prob outside [0, 1]");
  }
  if (!(tempo_min > 0 && tempo_min < tempo_max)) {
    throw fail("need 0 < tempo_min < tempo_max");
  }
  if (pitch_set.empty()) throw fail("pitch_set is empty");
  for (int pc : pitch_set) {
    if (pc < 0 || pc > 11) throw fail("pitch classes must be in [0, 11]");
  }
  if (!(leakage >= 0.0 && leakage <= 1.0)) throw fail("leakage outside [0, 1]");
  if (split_ratio[0] < 1 || split_ratio[1] < 0 || split_ratio[2] < 0) {
    throw fail("split_ratio needs a positive train share");
  }
}

size_t GeneratorConfig::ClipSamples() const {
  return static_cast<size_t>(std::llround(clip_seconds * sample_rate));
}

size_t GeneratorConfig::ChunkSamples() const {
  return static_cast<size_t>(std::llround(chunk_seconds * sample_rate));
}

size_t GeneratorConfig::NumChunks() const {
  return (ClipSamples() + ChunkSamples() - 1) / ChunkSamples();
}

std::string ClipIdForIndex(int clip_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "clip_%05d", clip_index);
  return buf;
}

Split SplitForClip(std::string_view clip_id, const std::array<int, 3>& ratio) {
  const uint64_t total = ratio[0] + ratio[1] + ratio[2];
  const uint64_t r = SplitMix64(HashString(clip_id)) % total;
  if (r < static_cast<uint64_t>(ratio[0])) return Split::kTrain;
  if (r < static_cast<uint64_t>(ratio[0] + ratio[1])) return Split::kValid;
  return Split::kTest;
}

std::string PitchTag(int pitch_class) {
  return "pitch-" + std::string(kPitchNames[pitch_class % 12]);
}

GeneratedClip GenerateClip(const GeneratorConfig& cfg, int clip_index) {
  cfg.Validate();
  const uint64_t clip_seed =
      Rng::StreamSeed(cfg.seed, "clip", static_cast<uint64_t>(clip_index));
  Rng rng(clip_seed);

  GeneratedClip g;
  ClipParams& p = g.params;
  p.tempo_bpm = rng.Uniform(cfg.tempo_min, cfg.tempo_max);
  p.root_pitch_class = cfg.pitch_set[rng.UniformInt(cfg.pitch_set.size())];

  // A source is present in a clip with probability sqrt(p) and then active
  // per chunk with probability sqrt(p): the marginal per-chunk rate is p.
  const size_t n_chunks = cfg.NumChunks();
  std::array<std::vector<bool>, kNumSources> planned;
  for (Source s : kAllSources) {
    const double q = std::sqrt(cfg.activity_prob[static_cast<int>(s)]);
    p.present[static_cast<int>(s)] = rng.Bernoulli(q);
    for (size_t c = 0; c < n_chunks; ++c) {
      planned[static_cast<int>(s)].push_back(p.present[static_cast<int>(s)] &&
                                             rng.Bernoulli(q));
    }
  }

  const size_t n = cfg.ClipSamples();
  const size_t chunk = cfg.ChunkSamples();
  StemSet& set = g.stems;
  for (Source s : kAllSources) {
    const int i = static_cast<int>(s);
    Waveform& w = set.stems[i];
    w.sample_rate = cfg.sample_rate;
    w.samples.assign(n, 0.0f);
    Rng stem_rng = Rng::Stream(clip_seed, SourceName(s));
    const ChunkGate gate(planned[i], chunk);
    switch (s) {
      case Source::kBass:
        RenderBass(cfg, p, stem_rng, gate, w.samples);
        break;
      case Source::kDrums:
        RenderDrums(cfg, p, stem_rng, Rng::StreamSeed(clip_seed, "noise"),
                    gate, w.samples);
        break;
      case Source::kOther:
        RenderChords(cfg, p, stem_rng, gate, w.samples);
        break;
      case Source::kVocals:
        RenderVocals(cfg, p, stem_rng, gate, w.samples);
        break;
    }
    g.clean_activity[i] = GateBySilence(w.samples, chunk);
  }

  set.mixture.sample_rate = cfg.sample_rate;
  set.mixture.samples.assign(n, 0.0f);
  for (const Waveform& w : set.stems) {
    for (size_t k = 0; k < n; ++k) set.mixture.samples[k] += w.samples[k];
  }

  for (Source s : kAllSources) {
    const int i = static_cast<int>(s);
    if (cfg.leakage > 0.0) {
      set.stems[i] = DegradeStem(set.stems[i], set.mixture, cfg.leakage);
      set.activity[i] = GateBySilence(set.stems[i].samples, chunk);
    } else {
      set.activity[i] = g.clean_activity[i];
    }
  }

  ClipRecord& rec = g.record;
  rec.clip_id = ClipIdForIndex(clip_index);
  rec.split = SplitForClip(rec.clip_id, cfg.split_ratio);
  for (Source s : kAllSources) {
    const auto& act = g.clean_activity[static_cast<int>(s)];
    if (std::find(act.begin(), act.end(), true) != act.end()) {
      rec.tags.push_back(PresenceTag(s));
    }
  }
  if (p.tempo_bpm > cfg.TempoMedian()) rec.tags.push_back("fast");
  rec.tags.push_back(PitchTag(p.root_pitch_class));
  std::sort(rec.tags.begin(), rec.tags.end());
  return g;
}

Waveform DegradeStem(const Waveform& stem, const Waveform& mixture,
                     double leakage) {
  if (stem.samples.size() != mixture.samples.size()) {
    throw Error("length_mismatch",
                "stem has " + std::to_string(stem.samples.size()) +
                    " samples, mixture " +
                    std::to_string(mixture.samples.size()));
  }
  if (!(leakage >= 0.0 && leakage <= 1.0)) {
    throw Error("invalid_leakage", std::to_string(leakage));
  }
  if (leakage == 0.0) return stem;
  if (leakage == 1.0) {
    Waveform out = mixture;
    out.sample_rate = stem.sample_rate;
    return out;
  }
  Waveform out;
  out.sample_rate = stem.sample_rate;
  out.samples.resize(stem.samples.size());
  for (size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] = static_cast<float>((1.0 - leakage) * stem.samples[i] +
                                        leakage * mixture.samples[i]);
  }
  return out;
}

MelSpectrogram ApplySoftMask(const MelSpectrogram& spec,
                             std::span<const float> mask, double log_floor) {
  if (mask.size() != spec.data.size()) {
    throw Error("shape_mismatch", "mask size differs from spectrogram");
  }
  MelSpectrogram out = spec;
  for (size_t i = 0; i < out.data.size(); ++i) {
    const double energy =
        std::max(0.0, std::exp(static_cast<double>(spec.data[i])) - log_floor);
    out.data[i] = static_cast<float>(
        std::log(log_floor + static_cast<double>(mask[i]) * energy));
  }
  return out;
}

MelSpectrogram RandomSoftMask(const MelSpectrogram& spec, Rng& rng,
                              double log_floor) {
  std::vector<float> mask(spec.data.size());
  for (float& m : mask) m = static_cast<float>(rng.Uniform());
  return ApplySoftMask(spec, mask, log_floor);
}

}  // namespace msa
