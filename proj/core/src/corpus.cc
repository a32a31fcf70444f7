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

#include "tokenveil/corpus.h"

#include <charconv>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "tokenveil/file_io.h"

namespace tokenveil {

absl::Status ValidateDocument(const CorpusDocument& doc, int vocab_size) {
  if (doc.tokens.empty()) {
    return absl::InvalidArgumentError("document has no tokens");
  }
  for (TokenId t : doc.tokens) {
    if (t < 0 || t >= vocab_size) {
      return absl::InvalidArgumentError(absl::StrCat(
          "token id ", t, " out of range [0, ", vocab_size, ")"));
    }
  }
  return absl::OkStatus();
}

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  for (size_t i = 0; i < tokens_.size(); ++i) {
    index_.emplace(tokens_[i], static_cast<TokenId>(i));
  }
}

absl::StatusOr<Vocabulary> Vocabulary::FromTokens(
    std::vector<std::string> tokens) {
  std::unordered_map<std::string, size_t> seen;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("vocabulary line ", i + 1, " is empty"));
    }
    auto [it, inserted] = seen.emplace(tokens[i], i);
    if (!inserted) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate vocabulary token '", tokens[i], "' on lines ",
                       it->second + 1, " and ", i + 1));
    }
  }
  return Vocabulary(std::move(tokens));
}

absl::StatusOr<Vocabulary> Vocabulary::Parse(std::string_view text) {
  std::vector<std::string> tokens;
  for (absl::string_view line : absl::StrSplit(absl::string_view(text.data(), text.size()), '\n')) {
    line = absl::StripTrailingAsciiWhitespace(line);
    tokens.emplace_back(line);
  }
  // A trailing newline yields one empty final entry.
  if (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
  return FromTokens(std::move(tokens));
}

absl::StatusOr<Vocabulary> Vocabulary::Load(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFileToString(path);
  if (!text.ok()) return text.status();
  return Parse(*text);
}

absl::StatusOr<TokenId> Vocabulary::Lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown token '", std::string(token), "'"));
  }
  return it->second;
}

std::string Vocabulary::Format() const {
  std::string out;
  for (const std::string& t : tokens_) absl::StrAppend(&out, t, "\n");
  return out;
}

absl::StatusOr<std::vector<CorpusDocument>> ParseCorpus(
    std::string_view text, const Vocabulary& vocab) {
  std::vector<CorpusDocument> docs;
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(absl::string_view(text.data(), text.size()), '\n')) {
    ++line_no;
    line = absl::StripAsciiWhitespace(line);
    if (line.empty()) continue;
    CorpusDocument doc;
    const size_t tab = line.find('\t');
    if (tab != absl::string_view::npos) {
      absl::string_view label = absl::StripAsciiWhitespace(line.substr(0, tab));
      int value = 0;
      auto [ptr, ec] =
          std::from_chars(label.data(), label.data() + label.size(), value);
      if (ec != std::errc() || ptr != label.data() + label.size() ||
          value < 0) {
        return absl::InvalidArgumentError(absl::StrCat(
            "corpus line ", line_no, ": bad label '", label, "'"));
      }
      doc.label = value;
      line = line.substr(tab + 1);
    }
    for (absl::string_view word :
         absl::StrSplit(line, absl::ByAnyChar(" \t"), absl::SkipEmpty())) {
      absl::StatusOr<TokenId> id = vocab.Lookup(std::string_view(word.data(), word.size()));
      if (!id.ok()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "corpus line ", line_no, ": ", id.status().message()));
      }
      doc.tokens.push_back(*id);
    }
    if (doc.tokens.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("corpus line ", line_no, ": document has no tokens"));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

absl::StatusOr<std::vector<CorpusDocument>> LoadCorpus(
    const std::string& path, const Vocabulary& vocab) {
  absl::StatusOr<std::string> text = ReadFileToString(path);
  if (!text.ok()) return text.status();
  return ParseCorpus(*text, vocab);
}

std::string FormatCorpus(const std::vector<CorpusDocument>& docs,
                         const Vocabulary& vocab) {
  std::string out;
  for (const CorpusDocument& doc : docs) {
    if (doc.label.has_value()) absl::StrAppend(&out, *doc.label, "\t");
    absl::StrAppend(&out,
                    absl::StrJoin(doc.tokens, " ",
                                  [&vocab](std::string* o, TokenId t) {
                                    o->append(vocab.token(t));
                                  }),
                    "\n");
  }
  return out;
}

absl::StatusOr<Matrix> BottomForward(const BottomModel& model,
                                     const CorpusDocument& doc) {
  if (absl::Status s = ValidateDocument(doc, model.embedding().vocab_size());
      !s.ok()) {
    return s;
  }
  return model.Forward(doc.tokens);
}

}  // namespace tokenveil
