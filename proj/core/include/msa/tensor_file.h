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

#ifndef MSA_TENSOR_FILE_H_
#define MSA_TENSOR_FILE_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace msa {

// On-disk layout of an MSAT tensor file (all integers little-endian):
//
//   "MSAT" | version u16 | tensor count u32 |
//   per tensor: name length u16 | name bytes (UTF-8) | dtype u8 |
//               rank u8 | dims u32 x rank | payload
//
// dtype codes: 1 = f32, 2 = f64. Payloads are little-endian IEEE-754.
inline constexpr char kTensorFileMagic[4] = {'M', 'S', 'A', 'T'};
inline constexpr uint16_t kTensorFileVersion = 1;

enum class DType : uint8_t { kF32 = 1, kF64 = 2 };

size_t DTypeSize(DType dtype);

struct NamedTensor {
  std::string name;
  std::vector<uint32_t> dims;
  std::variant<std::vector<float>, std::vector<double>> data;

  DType dtype() const {
    return std::holds_alternative<std::vector<float>>(data) ? DType::kF32
                                                            : DType::kF64;
  }
  size_t NumElements() const;
  const std::vector<float>& f32() const {
    return std::get<std::vector<float>>(data);
  }
  const std::vector<double>& f64() const {
    return std::get<std::vector<double>>(data);
  }
};

// Location of one tensor's payload inside a file, for partial reads.
struct TensorIndexEntry {
  std::string name;
  DType dtype;
  std::vector<uint32_t> dims;
  uint64_t payload_offset;
};

void WriteTensorFile(const std::filesystem::path& path,
                     const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> ReadTensorFile(const std::filesystem::path& path);
std::vector<TensorIndexEntry> ReadTensorIndex(
    const std::filesystem::path& path);

// Reads `count` f32 values starting at element `first` of the tensor at
// `entry` without loading the rest of the file.
void ReadF32Range(const std::filesystem::path& path,
                  const TensorIndexEntry& entry, size_t first, size_t count,
                  float* out);

}  // namespace msa

#endif  // MSA_TENSOR_FILE_H_
