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

#ifndef TOKENVEIL_EMBEDDING_SPACE_H_
#define TOKENVEIL_EMBEDDING_SPACE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "tokenveil/types.h"

namespace tokenveil {

// Global statistics of a set of row vectors.
struct SpaceStatistics {
  double norm_bound = 0.0;  // B: max row l2 norm
  Vector centroid;          // mu: row mean
  double radius = 0.0;      // R: max l2 distance of any row to mu
};

// Computes B, mu and R. The centroid is accumulated per column over sorted
// values, so the result is bit-identical under any permutation of the rows.
SpaceStatistics ComputeSpaceStatistics(const Matrix& rows);

// Vocabulary-indexed token vectors together with their global statistics.
// Immutable after construction.
class EmbeddingSpace {
 public:
  // Requires at least two rows and one column of finite values.
  static absl::StatusOr<EmbeddingSpace> Create(Matrix vectors);

  int vocab_size() const { return static_cast<int>(vectors_.rows()); }
  int dim() const { return static_cast<int>(vectors_.cols()); }
  const Matrix& vectors() const { return vectors_; }
  auto row(TokenId token) const { return vectors_.row(token); }

  double norm_bound() const { return stats_.norm_bound; }
  const Vector& centroid() const { return stats_.centroid; }
  double radius() const { return stats_.radius; }
  const SpaceStatistics& statistics() const { return stats_; }

 private:
  EmbeddingSpace(Matrix vectors, SpaceStatistics stats)
      : vectors_(std::move(vectors)), stats_(std::move(stats)) {}

  Matrix vectors_;
  SpaceStatistics stats_;
};

// Loads a PTEM file into an EmbeddingSpace. Format problems surface as
// DataLossError, a single-row matrix as InvalidArgumentError.
absl::StatusOr<EmbeddingSpace> LoadEmbeddings(const std::string& path);
absl::Status SaveEmbeddings(const std::string& path,
                            const EmbeddingSpace& space);

// The frozen device-side half of the split model: an embedding lookup followed
// by l-1 frozen dim x dim linear maps, applied as h <- W h.
class BottomModel {
 public:
  static absl::StatusOr<BottomModel> Create(EmbeddingSpace embedding,
                                            std::vector<Matrix> frozen_layers);

  // Lookup plus `split_depth - 1` layers of the form I + noise * G / sqrt(dim)
  // with G standard normal, drawn from `seed`.
  static absl::StatusOr<BottomModel> NearIdentity(EmbeddingSpace embedding,
                                                  int split_depth,
                                                  double layer_noise,
                                                  uint64_t seed);

  const EmbeddingSpace& embedding() const { return embedding_; }
  std::span<const Matrix> frozen_layers() const { return frozen_layers_; }
  int split_depth() const { return 1 + static_cast<int>(frozen_layers_.size()); }
  bool is_lookup() const { return frozen_layers_.empty(); }
  int dim() const { return embedding_.dim(); }

  // Forward pass for one token; `token` must be in range.
  Vector ForwardToken(TokenId token) const;

  // One output row per input token. InvalidArgument on out-of-range ids.
  absl::StatusOr<Matrix> Forward(std::span<const TokenId> tokens) const;

  // Output row for every vocabulary token (row t = Forward({t})).
  Matrix ForwardVocabulary() const;

 private:
  BottomModel(EmbeddingSpace embedding, std::vector<Matrix> layers)
      : embedding_(std::move(embedding)), frozen_layers_(std::move(layers)) {}

  EmbeddingSpace embedding_;
  std::vector<Matrix> frozen_layers_;
};

}  // namespace tokenveil

#endif  // TOKENVEIL_EMBEDDING_SPACE_H_
