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


#ifndef MSA_METRICS_H_
#define MSA_METRICS_H_

#include <optional>
#include <span>
#include <vector>

namespace msa {

// Mann-Whitney area: P(s+ > s-) + P(s+ == s-) / 2, exact under ties.
// nullopt unless both classes are present.
std::optional<double> RocAuc(std::span<const double> scores,
                             std::span<const int> labels);

// Average precision sum_k (R_k - R_{k-1}) P_k over the descending-score
// sweep, each block of tied scores taken as one threshold. nullopt without
// positives.
std::optional<double> PrAuc(std::span<const double> scores,
                            std::span<const int> labels);

// Fraction of positions where predicted == truth. Empty input gives 0.
double WeightedAccuracy(std::span<const int> predicted,
                        std::span<const int> truth);

}  // namespace msa

#endif  // MSA_METRICS_H_
