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

#include "msa/dsp.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "msa/error.h"

namespace msa {
namespace {

int NextPowerOfTwo(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// FFTW's planner is not thread-safe; plans are created once per size under a
// lock and executed with the new-array interface afterwards.
fftw_plan GetR2CPlan(int n_fft) {
  static std::mutex mu;
  static std::map<int, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto it = plans.find(n_fft);
  if (it != plans.end()) return it->second;
  double* in = fftw_alloc_real(n_fft);
  fftw_complex* out = fftw_alloc_complex(n_fft / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(n_fft, in, out, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  plans.emplace(n_fft, plan);
  return plan;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

void MelConfig::Validate(int sample_rate) const {
  if (sample_rate <= 0) {
    throw Error("invalid_mel_config", "sample_rate must be positive");
  }
  if (window_ms < hop_ms || hop_ms <= 0) {
    throw Error("invalid_mel_config", "need window_ms >= hop_ms > 0");
  }
  if (n_mels < 1) throw Error("invalid_mel_config", "n_mels must be >= 1");
  const double hi = ResolvedFmax(sample_rate);
  if (!(fmin >= 0 && fmin < hi && hi <= sample_rate / 2.0)) {
    throw Error("invalid_mel_config", "need 0 <= fmin < fmax <= sr/2");
  }
  if (!(log_floor > 0)) {
    throw Error("invalid_mel_config", "log_floor must be positive");
  }
}

int MelConfig::WindowSamples(int sample_rate) const {
  return static_cast<int>(std::lround(window_ms * sample_rate / 1000.0));
}

int MelConfig::HopSamples(int sample_rate) const {
  return static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0));
}

size_t MelConfig::NumFrames(size_t num_samples, int sample_rate) const {
  const size_t win = WindowSamples(sample_rate);
  const size_t hop = HopSamples(sample_rate);
  if (num_samples < win) return 0;
  return (num_samples - win) / hop + 1;
}

MelFilterbank MakeMelFilterbank(const MelConfig& cfg, int sample_rate,
                                int n_fft) {
  MelFilterbank fb;
  fb.n_fft = n_fft;
  const int n_bins = n_fft / 2 + 1;
  const double mel_lo = HzToMel(cfg.fmin);
  const double mel_hi = HzToMel(cfg.ResolvedFmax(sample_rate));
  const double step = (mel_hi - mel_lo) / (cfg.n_mels + 1);
  const double bin_hz = static_cast<double>(sample_rate) / n_fft;

  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = mel_lo + m * step;
    const double center = left + step;
    const double right = center + step;
    fb.center_hz.push_back(MelToHz(center));
    int first = -1;
    std::vector<double> w;
    for (int k = 0; k < n_bins; ++k) {
      const double mel = HzToMel(k * bin_hz);
      if (mel <= left || mel >= right) continue;
      const double weight = mel <= center ? (mel - left) / (center - left)
                                          : (right - mel) / (right - center);
      if (first < 0) first = k;
      // Bins inside one triangle are contiguous.
      w.resize(static_cast<size_t>(k - first), 0.0);
      w.push_back(weight);
    }
    fb.first_bin.push_back(std::max(first, 0));
    fb.weights.push_back(std::move(w));
  }
  return fb;
}

MelSpectrogram ComputeMel(const Waveform& w, const MelConfig& cfg) {
  cfg.Validate(w.sample_rate);
  const int sr = w.sample_rate;
  const int win = cfg.WindowSamples(sr);
  const int hop = cfg.HopSamples(sr);
  if (w.samples.size() < static_cast<size_t>(win)) {
    throw Error("clip_too_short",
                std::to_string(w.samples.size()) + " samples < window of " +
                    std::to_string(win));
  }
  const int n_fft = NextPowerOfTwo(win);
  const int n_bins = n_fft / 2 + 1;
  const int n_frames = static_cast<int>(cfg.NumFrames(w.samples.size(), sr));
  const MelFilterbank fb = MakeMelFilterbank(cfg, sr, n_fft);

  std::vector<double> hann(win);
  for (int i = 0; i < win; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);
  }

  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(n_fft));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(n_bins));
  std::fill(in.get(), in.get() + n_fft, 0.0);
  std::vector<double> magnitude(n_bins);
  fftw_plan plan = GetR2CPlan(n_fft);

  MelSpectrogram spec;
  spec.n_mels = cfg.n_mels;
  spec.n_frames = n_frames;
  spec.data.assign(static_cast<size_t>(cfg.n_mels) * n_frames, 0.0f);

  for (int t = 0; t < n_frames; ++t) {
    const float* frame = w.samples.data() + static_cast<size_t>(t) * hop;
    for (int i = 0; i < win; ++i) in.get()[i] = frame[i] * hann[i];
    fftw_execute_dft_r2c(plan, in.get(), out.get());
    for (int k = 0; k < n_bins; ++k) {
      magnitude[k] = std::hypot(out.get()[k][0], out.get()[k][1]);
    }
    for (int m = 0; m < cfg.n_mels; ++m) {
      double energy = 0.0;
      const auto& wm = fb.weights[m];
      const double* mag = magnitude.data() + fb.first_bin[m];
      for (size_t j = 0; j < wm.size(); ++j) energy += wm[j] * mag[j];
      spec.at(m, t) = static_cast<float>(std::log(cfg.log_floor + energy));
    }
  }
  return spec;
}

MelSpectrogram Crop(const MelSpectrogram& spec, const CropWindow& win) {
  if (win.start_frame < 0 || win.length_frames < 0 ||
      win.start_frame + win.length_frames > spec.n_frames) {
    throw Error("crop_out_of_range",
                "frames [" + std::to_string(win.start_frame) + ", " +
                    std::to_string(win.start_frame + win.length_frames) +
                    ") of " + std::to_string(spec.n_frames));
  }
  MelSpectrogram out;
  out.n_mels = spec.n_mels;
  out.n_frames = win.length_frames;
  out.clip_id = spec.clip_id;
  out.source_id = spec.source_id;
  out.data.resize(static_cast<size_t>(out.n_mels) * out.n_frames);
  for (int m = 0; m < spec.n_mels; ++m) {
    const float* src = &spec.data[static_cast<size_t>(m) * spec.n_frames +
                                  win.start_frame];
    std::copy(src, src + win.length_frames,
              &out.data[static_cast<size_t>(m) * out.n_frames]);
  }
  return out;
}

bool IsSilent(std::span<const float> segment) {
  if (segment.empty()) throw Error("empty_segment", "");
  double sum = 0.0;
  for (float x : segment) sum += std::fabs(x);
  return sum / static_cast<double>(segment.size()) < kSilenceThreshold;
}

}  // namespace msa
