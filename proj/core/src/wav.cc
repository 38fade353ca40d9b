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

#include "msa/wav.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "msa/error.h"

namespace msa {
namespace {

uint32_t U32(const unsigned char* p) {
  return uint32_t{p[0]} | uint32_t{p[1]} << 8 | uint32_t{p[2]} << 16 |
         uint32_t{p[3]} << 24;
}
uint16_t U16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | p[1] << 8);
}

void Put32(std::string& s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>(v >> (8 * i)));
}
void Put16(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace

Waveform ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("unreadable_wav", "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  auto fail = [&](const std::string& why) {
    return Error("unreadable_wav", path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw fail("not a RIFF/WAVE file");
  }
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char* data = nullptr;
  size_t data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const uint32_t len = U32(chunk + 4);
    if (pos + 8 + len > bytes.size()) throw fail("truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0 && len >= 16) {
      format = U16(chunk + 8);
      channels = U16(chunk + 10);
      rate = U32(chunk + 12);
      bits = U16(chunk + 22);
      if (format == 0xfffe && len >= 26) format = U16(chunk + 32);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = len;
    }
    pos += 8 + len + (len & 1);
  }
  if (!data) throw fail("missing data chunk");
  if (channels != 1) throw fail("expected mono, got " + std::to_string(channels));
  if (rate == 0) throw fail("zero sample rate");

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    w.samples.resize(data_len / 2);
    for (size_t i = 0; i < w.samples.size(); ++i) {
      w.samples[i] = static_cast<int16_t>(U16(data + 2 * i)) / 32768.0f;
    }
  } else if (format == 3 && bits == 32) {
    w.samples.resize(data_len / 4);
    std::memcpy(w.samples.data(), data, w.samples.size() * 4);
  } else {
    throw fail("unsupported encoding (format " + std::to_string(format) +
               ", " + std::to_string(bits) + " bits)");
  }
  return w;
}

void WriteWav(const std::filesystem::path& path, const Waveform& w,
              WavEncoding encoding) {
  const bool pcm = encoding == WavEncoding::kPcm16;
  const uint16_t bits = pcm ? 16 : 32;
  const uint32_t data_len =
      static_cast<uint32_t>(w.samples.size() * (bits / 8));
  std::string s = "RIFF";
  Put32(s, 36 + data_len);
  s += "WAVEfmt ";
  Put32(s, 16);
  Put16(s, pcm ? 1 : 3);
  Put16(s, 1);
  Put32(s, static_cast<uint32_t>(w.sample_rate));
  Put32(s, static_cast<uint32_t>(w.sample_rate) * (bits / 8));
  Put16(s, bits / 8);
  Put16(s, bits);
  s += "data";
  Put32(s, data_len);
  if (pcm) {
    for (float x : w.samples) {
      const float c = std::clamp(x, -1.0f, 1.0f);
      Put16(s, static_cast<uint16_t>(
                   static_cast<int16_t>(std::lround(c * 32767.0f))));
    }
  } else {
    const size_t at = s.size();
    s.resize(at + data_len);
    std::memcpy(s.data() + at, w.samples.data(), data_len);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("wav_io", "cannot write " + path.string());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

Waveform ResampleLinear(const Waveform& w, int target_rate) {
  if (w.sample_rate == target_rate || w.samples.empty()) {
    Waveform copy = w;
    copy.sample_rate = target_rate;
    return copy;
  }
  const double ratio = static_cast<double>(w.sample_rate) / target_rate;
  const size_t n = static_cast<size_t>(
      std::floor((w.samples.size() - 1) / ratio)) + 1;
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double x = i * ratio;
    const size_t i0 = static_cast<size_t>(x);
    const size_t i1 = std::min(i0 + 1, w.samples.size() - 1);
    const double frac = x - static_cast<double>(i0);
    out.samples[i] =
        static_cast<float>((1.0 - frac) * w.samples[i0] + frac * w.samples[i1]);
  }
  return out;
}

}  // namespace msa
