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

#ifndef TOKENVEIL_ROUGE_H_
#define TOKENVEIL_ROUGE_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace tokenveil {

// Length of the longest common subsequence.
size_t LcsLength(std::span<const std::string> a, std::span<const std::string> b);

// ROUGE-L F-measure: P = LCS/|candidate|, R = LCS/|reference|,
// F = 2PR / (P + R), and 0 when the LCS is empty.
absl::StatusOr<double> RougeL(std::span<const std::string> candidate,
                              std::span<const std::string> reference);

// Whitespace-tokenizes both strings and applies RougeL.
absl::StatusOr<double> RougeLText(std::string_view candidate,
                                  std::string_view reference);

}  // namespace tokenveil

#endif  // TOKENVEIL_ROUGE_H_
