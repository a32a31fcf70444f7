// Copyright 2026 The Tokenveil Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tokenveil/ptem.h"

#include <bit>
#include <cstring>
#include <limits>

#include "absl/strings/str_cat.h"
#include "tokenveil/file_io.h"

namespace tokenveil {
namespace {

constexpr size_t kHeaderBytes = 16;

void PutU32(std::string& out, uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<char>((v >> shift) & 0xffu));
  }
}

uint32_t GetU32(std::string_view bytes, size_t offset) {
  uint32_t v = 0;
  for (int b = 0; b < 4; ++b) {
    v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[offset + b]))
         << (8 * b);
  }
  return v;
}

}  // namespace

std::string EncodePtem(const Matrix& matrix) {
  std::string out;
  out.reserve(kHeaderBytes + 4 * matrix.size());
  out.append(kPtemMagic, 4);
  PutU32(out, kPtemVersion);
  PutU32(out, static_cast<uint32_t>(matrix.rows()));
  PutU32(out, static_cast<uint32_t>(matrix.cols()));
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      PutU32(out, std::bit_cast<uint32_t>(static_cast<float>(matrix(r, c))));
    }
  }
  return out;
}

absl::StatusOr<Matrix> DecodePtem(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes) {
    return absl::DataLossError("PTEM: truncated header");
  }
  if (std::memcmp(bytes.data(), kPtemMagic, 4) != 0) {
    return absl::DataLossError("PTEM: bad magic");
  }
  const uint32_t version = GetU32(bytes, 4);
  if (version != kPtemVersion) {
    return absl::DataLossError(
        absl::StrCat("PTEM: unsupported version ", version));
  }
  const uint64_t rows = GetU32(bytes, 8);
  const uint64_t cols = GetU32(bytes, 12);
  const uint64_t expected = kHeaderBytes + 4 * rows * cols;
  if (bytes.size() != expected) {
    return absl::DataLossError(absl::StrCat("PTEM: expected ", expected,
                                            " bytes for ", rows, "x", cols,
                                            ", found ", bytes.size()));
  }
  Matrix m(rows, cols);
  size_t offset = kHeaderBytes;
  for (uint64_t r = 0; r < rows; ++r) {
    for (uint64_t c = 0; c < cols; ++c) {
      m(r, c) = std::bit_cast<float>(GetU32(bytes, offset));
      offset += 4;
    }
  }
  return m;
}

absl::StatusOr<Matrix> ReadPtem(const std::string& path) {
  absl::StatusOr<std::string> bytes = ReadFileToString(path);
  if (!bytes.ok()) return bytes.status();
  absl::StatusOr<Matrix> m = DecodePtem(*bytes);
  if (!m.ok()) {
    return absl::Status(m.status().code(),
                        absl::StrCat(path, ": ", m.status().message()));
  }
  return m;
}

absl::Status WritePtem(const std::string& path, const Matrix& matrix) {
  if (matrix.rows() > std::numeric_limits<uint32_t>::max() ||
      matrix.cols() > std::numeric_limits<uint32_t>::max()) {
    return absl::InvalidArgumentError("PTEM: matrix too large");
  }
  return WriteFileAtomically(path, EncodePtem(matrix));
}

}  // namespace tokenveil
