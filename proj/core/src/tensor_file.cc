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

#include "msa/tensor_file.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>

#include "msa/error.h"
#include "msa/tensor.h"

namespace msa {
namespace {

static_assert(std::endian::native == std::endian::little,
              "payloads are copied verbatim; big-endian hosts need swapping");

template <typename T>
void PutLE(std::string& out, T value) {
  for (size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<uint64_t>(value) >> (8 * i)) &
                                    0xff));
  }
}

class Reader {
 public:
  Reader(std::ifstream& in, const std::filesystem::path& path)
      : in_(in), path_(path) {}

  template <typename T>
  T Get() {
    unsigned char buf[sizeof(T)];
    Bytes(buf, sizeof(T));
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= uint64_t{buf[i]} << (8 * i);
    return static_cast<T>(v);
  }

  void Bytes(void* dst, size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) {
      throw Error("tensor_file_format",
                  "truncated tensor file " + path_.string());
    }
  }

  uint64_t Tell() { return static_cast<uint64_t>(in_.tellg()); }
  void Skip(uint64_t n) { in_.seekg(static_cast<std::streamoff>(n), std::ios::cur); }

 private:
  std::ifstream& in_;
  const std::filesystem::path& path_;
};

TensorIndexEntry ReadEntryHeader(Reader& r) {
  TensorIndexEntry e;
  const auto name_len = r.Get<uint16_t>();
  e.name.resize(name_len);
  r.Bytes(e.name.data(), name_len);
  const auto dtype = r.Get<uint8_t>();
  if (dtype != 1 && dtype != 2) {
    throw Error("tensor_file_format",
                "unknown dtype code " + std::to_string(dtype) + " for " +
                    e.name);
  }
  e.dtype = static_cast<DType>(dtype);
  const auto rank = r.Get<uint8_t>();
  e.dims.resize(rank);
  for (auto& d : e.dims) d = r.Get<uint32_t>();
  e.payload_offset = r.Tell();
  return e;
}

size_t EntryElements(const TensorIndexEntry& e) {
  size_t n = 1;
  for (auto d : e.dims) n *= d;
  return n;
}

std::ifstream OpenAndCheckHeader(const std::filesystem::path& path,
                                 uint32_t& count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("tensor_file_io", "cannot open " + path.string());
  Reader r(in, path);
  char magic[4];
  r.Bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kTensorFileMagic)) {
    throw Error("tensor_file_format", "bad magic in " + path.string());
  }
  const auto version = r.Get<uint16_t>();
  if (version != kTensorFileVersion) {
    throw Error("tensor_version_mismatch",
                path.string() + " has version " + std::to_string(version) +
                    ", expected " + std::to_string(kTensorFileVersion));
  }
  count = r.Get<uint32_t>();
  return in;
}

}  // namespace

std::string ShapeString(const Shape& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

size_t DTypeSize(DType dtype) { return dtype == DType::kF32 ? 4 : 8; }

size_t NamedTensor::NumElements() const {
  size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void WriteTensorFile(const std::filesystem::path& path,
                     const std::vector<NamedTensor>& tensors) {
  std::set<std::string> names;
  std::string header;
  header.append(kTensorFileMagic, 4);
  PutLE<uint16_t>(header, kTensorFileVersion);
  PutLE<uint32_t>(header, static_cast<uint32_t>(tensors.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("tensor_file_io", "cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  for (const auto& t : tensors) {
    if (!names.insert(t.name).second) {
      throw Error("duplicate_tensor_name", t.name);
    }
    if (t.name.size() > UINT16_MAX || t.dims.size() > UINT8_MAX) {
      throw Error("tensor_file_format", "name or rank too large: " + t.name);
    }
    const size_t n = t.NumElements();
    const size_t stored = std::visit([](const auto& v) { return v.size(); },
                                     t.data);
    if (n != stored) {
      throw Error("tensor_file_format",
                  t.name + ": dims describe " + std::to_string(n) +
                      " elements but payload has " + std::to_string(stored));
    }
    std::string h;
    PutLE<uint16_t>(h, static_cast<uint16_t>(t.name.size()));
    h += t.name;
    PutLE<uint8_t>(h, static_cast<uint8_t>(t.dtype()));
    PutLE<uint8_t>(h, static_cast<uint8_t>(t.dims.size()));
    for (auto d : t.dims) PutLE<uint32_t>(h, d);
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    std::visit(
        [&](const auto& v) {
          out.write(reinterpret_cast<const char*>(v.data()),
                    static_cast<std::streamsize>(v.size() * sizeof(v[0])));
        },
        t.data);
  }
  if (!out) throw Error("tensor_file_io", "write failed for " + path.string());
}

std::vector<NamedTensor> ReadTensorFile(const std::filesystem::path& path) {
  uint32_t count = 0;
  auto in = OpenAndCheckHeader(path, count);
  Reader r(in, path);
  std::vector<NamedTensor> tensors;
  std::set<std::string> names;
  for (uint32_t i = 0; i < count; ++i) {
    TensorIndexEntry e = ReadEntryHeader(r);
    if (!names.insert(e.name).second) {
      throw Error("duplicate_tensor_name", e.name + " in " + path.string());
    }
    NamedTensor t;
    t.name = e.name;
    t.dims = e.dims;
    const size_t n = EntryElements(e);
    if (e.dtype == DType::kF32) {
      std::vector<float> v(n);
      r.Bytes(v.data(), n * 4);
      t.data = std::move(v);
    } else {
      std::vector<double> v(n);
      r.Bytes(v.data(), n * 8);
      t.data = std::move(v);
    }
    tensors.push_back(std::move(t));
  }
  return tensors;
}

std::vector<TensorIndexEntry> ReadTensorIndex(
    const std::filesystem::path& path) {
  uint32_t count = 0;
  auto in = OpenAndCheckHeader(path, count);
  Reader r(in, path);
  std::vector<TensorIndexEntry> entries;
  for (uint32_t i = 0; i < count; ++i) {
    TensorIndexEntry e = ReadEntryHeader(r);
    r.Skip(EntryElements(e) * DTypeSize(e.dtype));
    entries.push_back(std::move(e));
  }
  return entries;
}

void ReadF32Range(const std::filesystem::path& path,
                  const TensorIndexEntry& entry, size_t first, size_t count,
                  float* out) {
  if (entry.dtype != DType::kF32) {
    throw Error("tensor_file_format", entry.name + " is not f32");
  }
  if (first + count > EntryElements(entry)) {
    throw Error("tensor_file_format", "range past end of " + entry.name);
  }
  // Crops are small scattered reads from a corpus that may not fit in the
  // page cache; plain pread without readahead keeps the I/O to what is used.
  const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) throw Error("tensor_file_io", "cannot open " + path.string());
  ::posix_fadvise(fd, 0, 0, POSIX_FADV_RANDOM);
  char* dst = reinterpret_cast<char*>(out);
  size_t remaining = count * 4;
  off_t offset = static_cast<off_t>(entry.payload_offset + first * 4);
  while (remaining > 0) {
    const ssize_t n = ::pread(fd, dst, remaining, offset);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      ::close(fd);
      throw Error("tensor_file_format", "truncated payload in " + path.string());
    }
    dst += n;
    offset += n;
    remaining -= static_cast<size_t>(n);
  }
  ::close(fd);
}

}  // namespace msa
