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

#ifndef TOKENVEIL_FIXTURE_H_
#define TOKENVEIL_FIXTURE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "tokenveil/corpus.h"
#include "tokenveil/embedding_space.h"
#include "tokenveil/experiment.h"

namespace tokenveil {

// Synthetic labeled corpus over an embedding space made of arcs. Each arc is a
// run of tokens at equal angular steps along a great circle through a random
// plane, so the k-NN graph follows the arc and n-hop neighbors lie n steps
// away. The first tokens of every arc belong to one class and the last tokens
// to another; the middle of the arc is shared filler with a Zipf-like
// frequency profile.
struct SyntheticFixtureOptions {
  int vocab_size = 400;
  int dim = 16;
  int num_arcs = 10;
  int num_classes = 2;
  // Angle spanned by one arc, in radians.
  double arc_extent = 2.5;
  // Share of each arc's tokens owned by each of its two end classes.
  double class_share = 0.25;
  // Norm of the Gaussian jitter added to every token.
  double jitter = 0.04;
  int num_docs = 1600;
  int doc_length = 20;
  // Probability that a position draws from the document class's tokens.
  double class_token_rate = 0.4;
  uint64_t seed = 0;
};

struct SyntheticFixture {
  Vocabulary vocab;
  EmbeddingSpace embedding;
  std::vector<CorpusDocument> docs;

  ExperimentData data() const { return ExperimentData{embedding, docs}; }
};

absl::StatusOr<SyntheticFixture> MakeSyntheticFixture(
    const SyntheticFixtureOptions& options);

// Writes vocab.txt, corpus.txt, embeddings.ptem and experiment.cfg (with the
// file keys pointing at the written files) into `dir`.
absl::Status WriteFixture(const SyntheticFixture& fixture,
                          const std::string& dir, ExperimentConfig defaults);

}  // namespace tokenveil

#endif  // TOKENVEIL_FIXTURE_H_
