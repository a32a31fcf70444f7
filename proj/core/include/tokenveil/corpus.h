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

#ifndef TOKENVEIL_CORPUS_H_
#define TOKENVEIL_CORPUS_H_

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "tokenveil/embedding_space.h"
#include "tokenveil/types.h"

namespace tokenveil {

struct CorpusDocument {
  std::vector<TokenId> tokens;
  // Task label y, which doubles as the private attribute a in the simulator.
  std::optional<ClassId> label;
  std::optional<ClassId> pseudo_label;
};

// Non-empty and every id < vocab_size.
absl::Status ValidateDocument(const CorpusDocument& doc, int vocab_size);

// Token strings indexed by id; line number of the vocabulary file is the id.
class Vocabulary {
 public:
  static absl::StatusOr<Vocabulary> FromTokens(std::vector<std::string> tokens);
  static absl::StatusOr<Vocabulary> Parse(std::string_view text);
  static absl::StatusOr<Vocabulary> Load(const std::string& path);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(TokenId id) const { return tokens_[id]; }
  absl::StatusOr<TokenId> Lookup(std::string_view token) const;
  std::string Format() const;

 private:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// One document per line: optional "label<TAB>" prefix, then whitespace
// separated tokens. Blank lines are skipped.
absl::StatusOr<std::vector<CorpusDocument>> ParseCorpus(
    std::string_view text, const Vocabulary& vocab);
absl::StatusOr<std::vector<CorpusDocument>> LoadCorpus(
    const std::string& path, const Vocabulary& vocab);
std::string FormatCorpus(const std::vector<CorpusDocument>& docs,
                         const Vocabulary& vocab);

// bottom_forward: len x dim activations for one document.
absl::StatusOr<Matrix> BottomForward(const BottomModel& model,
                                     const CorpusDocument& doc);

}  // namespace tokenveil

#endif  // TOKENVEIL_CORPUS_H_
