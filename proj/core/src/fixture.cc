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

#include "tokenveil/fixture.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "tokenveil/file_io.h"
#include "tokenveil/ptem.h"
#include "tokenveil/rng.h"

namespace tokenveil {

absl::StatusOr<SyntheticFixture> MakeSyntheticFixture(
    const SyntheticFixtureOptions& o) {
  if (o.num_classes < 2 || o.dim < 2 || o.num_arcs < 1 ||
      o.vocab_size < 4 * o.num_arcs || o.num_docs < 4 || o.doc_length < 1 ||
      !(o.arc_extent > 0.0) || !(o.jitter >= 0.0) ||
      !(o.class_share > 0.0 && o.class_share < 0.5) ||
      !(o.class_token_rate >= 0.0 && o.class_token_rate <= 1.0)) {
    return absl::InvalidArgumentError(
        "synthetic fixture needs >= 2 classes, >= 4 tokens per arc, "
        "class_share in (0, 0.5) and rates in [0, 1]");
  }
  std::mt19937_64 engine(SplitMix64(o.seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_unit = [&](int dim) {
    Vector v(dim);
    for (int j = 0; j < dim; ++j) v(j) = normal(engine);
    return Vector(v.normalized());
  };

  // Arc a holds tokens [first[a], first[a+1]); sizes differ by at most one.
  std::vector<int> first(o.num_arcs + 1);
  for (int a = 0; a <= o.num_arcs; ++a) {
    first[a] = static_cast<int>(static_cast<int64_t>(a) * o.vocab_size /
                                o.num_arcs);
  }
  const double jitter = o.jitter / std::sqrt(static_cast<double>(o.dim));
  Matrix vectors(o.vocab_size, o.dim);
  std::vector<std::vector<TokenId>> class_tokens(o.num_classes);
  std::vector<TokenId> filler;
  for (int a = 0; a < o.num_arcs; ++a) {
    const Vector u = random_unit(o.dim);
    Vector w = random_unit(o.dim);
    w = (w - u * u.dot(w)).normalized();
    const int len = first[a + 1] - first[a];
    const int owned = std::max(1, static_cast<int>(o.class_share * len));
    const ClassId head = a % o.num_classes;
    const ClassId tail = (a + 1) % o.num_classes;
    for (int j = 0; j < len; ++j) {
      const TokenId t = first[a] + j;
      const double angle = o.arc_extent * j / (len - 1);
      for (int c = 0; c < o.dim; ++c) {
        // Stored as float32 on disk; round now so memory and file agree.
        vectors(t, c) = static_cast<float>(std::cos(angle) * u(c) +
                                           std::sin(angle) * w(c) +
                                           jitter * normal(engine));
      }
      if (j < owned) {
        class_tokens[head].push_back(t);
      } else if (j >= len - owned) {
        class_tokens[tail].push_back(t);
      } else {
        filler.push_back(t);
      }
    }
  }
  for (int c = 0; c < o.num_classes; ++c) {
    if (class_tokens[c].empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("class ", c, " owns no tokens; add arcs"));
    }
  }
  absl::StatusOr<EmbeddingSpace> space = EmbeddingSpace::Create(vectors);
  if (!space.ok()) return space.status();

  std::shuffle(filler.begin(), filler.end(), engine);
  std::vector<double> filler_weight;
  for (size_t r = 0; r < filler.size(); ++r) {
    filler_weight.push_back(1.0 / static_cast<double>(r + 1));
  }
  std::discrete_distribution<size_t> pick_filler(filler_weight.begin(),
                                                 filler_weight.end());
  std::bernoulli_distribution use_class(o.class_token_rate);

  std::vector<CorpusDocument> docs(o.num_docs);
  for (int d = 0; d < o.num_docs; ++d) {
    const ClassId label = d % o.num_classes;
    docs[d].label = label;
    const auto& own = class_tokens[label];
    std::uniform_int_distribution<size_t> pick_own(0, own.size() - 1);
    for (int j = 0; j < o.doc_length; ++j) {
      docs[d].tokens.push_back(use_class(engine) ? own[pick_own(engine)]
                                                 : filler[pick_filler(engine)]);
    }
  }

  std::vector<std::string> names;
  for (TokenId t = 0; t < o.vocab_size; ++t) {
    names.push_back(absl::StrFormat("tok%03d", t));
  }
  absl::StatusOr<Vocabulary> vocab = Vocabulary::FromTokens(std::move(names));
  if (!vocab.ok()) return vocab.status();
  return SyntheticFixture{*std::move(vocab), *std::move(space),
                          std::move(docs)};
}

absl::Status WriteFixture(const SyntheticFixture& fixture,
                          const std::string& dir, ExperimentConfig defaults) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::InternalError(
        absl::StrCat("cannot create ", dir, ": ", ec.message()));
  }
  const std::filesystem::path base(dir);
  if (absl::Status s = WriteFileAtomically((base / "vocab.txt").string(),
                                           fixture.vocab.Format());
      !s.ok()) {
    return s;
  }
  if (absl::Status s =
          WriteFileAtomically((base / "corpus.txt").string(),
                              FormatCorpus(fixture.docs, fixture.vocab));
      !s.ok()) {
    return s;
  }
  if (absl::Status s = SaveEmbeddings((base / "embeddings.ptem").string(),
                                      fixture.embedding);
      !s.ok()) {
    return s;
  }
  defaults.corpus = "corpus.txt";
  defaults.vocab = "vocab.txt";
  defaults.embeddings = "embeddings.ptem";
  return WriteFileAtomically((base / "experiment.cfg").string(),
                             FormatExperimentConfig(defaults));
}

}  // namespace tokenveil
