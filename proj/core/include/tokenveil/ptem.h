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

#ifndef TOKENVEIL_PTEM_H_
#define TOKENVEIL_PTEM_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "tokenveil/types.h"

namespace tokenveil {

// PTEM binary matrix format:
//   bytes 0..3   magic "PTEM"
//   u32 LE       version (1)
//   u32 LE       rows
//   u32 LE       cols
//   rows*cols    f32 LE values, row-major
// Values are widened to double on load and narrowed to float on store, so a
// matrix read from disk is written back bit-exactly.
inline constexpr char kPtemMagic[4] = {'P', 'T', 'E', 'M'};
inline constexpr uint32_t kPtemVersion = 1;

std::string EncodePtem(const Matrix& matrix);

// Returns DataLossError on bad magic, unsupported version or size mismatch.
absl::StatusOr<Matrix> DecodePtem(std::string_view bytes);

absl::StatusOr<Matrix> ReadPtem(const std::string& path);
absl::Status WritePtem(const std::string& path, const Matrix& matrix);

}  // namespace tokenveil

#endif  // TOKENVEIL_PTEM_H_
