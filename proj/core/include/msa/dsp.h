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

#ifndef MSA_DSP_H_
#define MSA_DSP_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace msa {

inline constexpr int kDefaultSampleRate = 16000;
inline constexpr double kSilenceThreshold = 0.01;
inline constexpr int kCropFrames = 98;

struct Waveform {
  std::vector<float> samples;
  int sample_rate = kDefaultSampleRate;
};

struct MelConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 64;
  double fmin = 0.0;
  // Defaults to sample_rate / 2 when unset.
  std::optional<double> fmax;
  double log_floor = 1e-6;

  // Throws Error("invalid_mel_config") when the invariants do not hold for
  // the given sample rate.
  void Validate(int sample_rate) const;
  double ResolvedFmax(int sample_rate) const {
    return fmax.value_or(sample_rate / 2.0);
  }
  int WindowSamples(int sample_rate) const;
  int HopSamples(int sample_rate) const;
  // floor((len - win) / hop) + 1, or 0 when len < win.
  size_t NumFrames(size_t num_samples, int sample_rate) const;
};

// Log-compressed mel energies stored mel-major: data[mel * n_frames + frame].
struct MelSpectrogram {
  int n_mels = 0;
  int n_frames = 0;
  std::vector<float> data;
  std::string clip_id;
  std::optional<std::string> source_id;

  float at(int mel, int frame) const {
    return data[static_cast<size_t>(mel) * n_frames + frame];
  }
  float& at(int mel, int frame) {
    return data[static_cast<size_t>(mel) * n_frames + frame];
  }
};

struct CropWindow {
  int start_frame = 0;
  int length_frames = kCropFrames;
};

// HTK mel scale.
double HzToMel(double hz);
double MelToHz(double mel);

// Triangular filters, linear in mel, with n_mels + 2 equally spaced edges
// between fmin and fmax. Row m holds the weights for FFT bins
// [first_bin[m], first_bin[m] + weights[m].size()).
struct MelFilterbank {
  int n_fft = 0;
  std::vector<double> center_hz;
  std::vector<int> first_bin;
  std::vector<std::vector<double>> weights;
};

MelFilterbank MakeMelFilterbank(const MelConfig& cfg, int sample_rate,
                                int n_fft);

// Hann-windowed STFT magnitude projected on the mel filterbank and
// compressed with log(log_floor + energy). Throws Error("clip_too_short").
MelSpectrogram ComputeMel(const Waveform& w, const MelConfig& cfg);

// Contiguous frame range; throws Error("crop_out_of_range").
MelSpectrogram Crop(const MelSpectrogram& spec, const CropWindow& win);

// mean(|x|) < 0.01. Throws Error("empty_segment").
bool IsSilent(std::span<const float> segment);

}  // namespace msa

#endif  // MSA_DSP_H_
