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

#ifndef MSA_ERROR_H_
#define MSA_ERROR_H_

#include <stdexcept>
#include <string>

namespace msa {

// Exception carrying a stable machine-readable code ("clip_too_short",
// "dataset_exhausted", ...) next to a human-readable detail string.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& detail);

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

}  // namespace msa

#endif  // MSA_ERROR_H_
