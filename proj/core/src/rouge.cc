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

#include "tokenveil/rouge.h"

#include "absl/strings/str_split.h"

namespace tokenveil {

size_t LcsLength(std::span<const std::string> a,
                 std::span<const std::string> b) {
  // Two-row dynamic program over b.
  std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

absl::StatusOr<double> RougeL(std::span<const std::string> candidate,
                              std::span<const std::string> reference) {
  if (candidate.empty() || reference.empty()) {
    return absl::InvalidArgumentError("ROUGE-L needs non-empty sequences");
  }
  const double lcs = static_cast<double>(LcsLength(candidate, reference));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(candidate.size());
  const double r = lcs / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

absl::StatusOr<double> RougeLText(std::string_view candidate,
                                  std::string_view reference) {
  auto split = [](std::string_view s) {
    return std::vector<std::string>(
        absl::StrSplit(absl::string_view(s.data(), s.size()),
                       absl::ByAnyChar(" \t\n"), absl::SkipEmpty()));
  };
  const std::vector<std::string> c = split(candidate);
  const std::vector<std::string> r = split(reference);
  return RougeL(c, r);
}

}  // namespace tokenveil
