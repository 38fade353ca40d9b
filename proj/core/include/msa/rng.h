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

#ifndef MSA_RNG_H_
#define MSA_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace msa {

// Deterministic random stream. Every draw is derived from raw 64-bit engine
// output so sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  // Independent named sub-stream of a root seed, e.g. Stream(seed, "pairing",
  // update_index). The same triple always yields the same stream.
  static Rng Stream(uint64_t root_seed, std::string_view name,
                    uint64_t index = 0);
  static uint64_t StreamSeed(uint64_t root_seed, std::string_view name,
                             uint64_t index = 0);

  uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1).
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n). n must be > 0.
  uint64_t UniformInt(uint64_t n);
  bool Bernoulli(double p) { return Uniform() < p; }
  double Normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

uint64_t SplitMix64(uint64_t x);
uint64_t HashString(std::string_view s);

}  // namespace msa

#endif  // MSA_RNG_H_
