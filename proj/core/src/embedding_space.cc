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

#include "tokenveil/embedding_space.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "absl/strings/str_cat.h"
#include "tokenveil/ptem.h"
#include "tokenveil/rng.h"

namespace tokenveil {

SpaceStatistics ComputeSpaceStatistics(const Matrix& rows) {
  SpaceStatistics stats;
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols();
  stats.centroid = Vector::Zero(d);
  if (n == 0) return stats;

  std::vector<double> column(n);
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) column[r] = rows(r, c);
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    stats.centroid(c) = sum / static_cast<double>(n);
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    stats.norm_bound = std::max(stats.norm_bound, rows.row(r).norm());
    stats.radius = std::max(
        stats.radius, (rows.row(r).transpose() - stats.centroid).norm());
  }
  return stats;
}

absl::StatusOr<EmbeddingSpace> EmbeddingSpace::Create(Matrix vectors) {
  if (vectors.rows() < 2) {
    return absl::InvalidArgumentError(absl::StrCat(
        "embedding space needs at least 2 rows, got ", vectors.rows()));
  }
  if (vectors.cols() < 1) {
    return absl::InvalidArgumentError("embedding space needs dim >= 1");
  }
  if (!vectors.allFinite()) {
    return absl::InvalidArgumentError("embedding space has non-finite values");
  }
  SpaceStatistics stats = ComputeSpaceStatistics(vectors);
  return EmbeddingSpace(std::move(vectors), std::move(stats));
}

absl::StatusOr<EmbeddingSpace> LoadEmbeddings(const std::string& path) {
  absl::StatusOr<Matrix> m = ReadPtem(path);
  if (!m.ok()) return m.status();
  absl::StatusOr<EmbeddingSpace> space = EmbeddingSpace::Create(*std::move(m));
  if (!space.ok()) {
    return absl::Status(space.status().code(),
                        absl::StrCat(path, ": ", space.status().message()));
  }
  return space;
}

absl::Status SaveEmbeddings(const std::string& path,
                            const EmbeddingSpace& space) {
  return WritePtem(path, space.vectors());
}

absl::StatusOr<BottomModel> BottomModel::Create(
    EmbeddingSpace embedding, std::vector<Matrix> frozen_layers) {
  const int d = embedding.dim();
  for (size_t i = 0; i < frozen_layers.size(); ++i) {
    const Matrix& w = frozen_layers[i];
    if (w.rows() != d || w.cols() != d) {
      return absl::InvalidArgumentError(
          absl::StrCat("frozen layer ", i, " is ", w.rows(), "x", w.cols(),
                       ", expected ", d, "x", d));
    }
    if (!w.allFinite()) {
      return absl::InvalidArgumentError(
          absl::StrCat("frozen layer ", i, " has non-finite values"));
    }
  }
  return BottomModel(std::move(embedding), std::move(frozen_layers));
}

absl::StatusOr<BottomModel> BottomModel::NearIdentity(EmbeddingSpace embedding,
                                                      int split_depth,
                                                      double layer_noise,
                                                      uint64_t seed) {
  if (split_depth < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("split depth must be >= 1, got ", split_depth));
  }
  const int d = embedding.dim();
  std::mt19937_64 engine(SplitMix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = layer_noise / std::sqrt(static_cast<double>(d));
  std::vector<Matrix> layers;
  for (int l = 1; l < split_depth; ++l) {
    Matrix w = Matrix::Identity(d, d);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) w(r, c) += scale * normal(engine);
    }
    layers.push_back(std::move(w));
  }
  return Create(std::move(embedding), std::move(layers));
}

Vector BottomModel::ForwardToken(TokenId token) const {
  Vector h = embedding_.row(token).transpose();
  for (const Matrix& w : frozen_layers_) h = w * h;
  return h;
}

absl::StatusOr<Matrix> BottomModel::Forward(
    std::span<const TokenId> tokens) const {
  Matrix out(static_cast<Eigen::Index>(tokens.size()), dim());
  for (size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] < 0 || tokens[t] >= embedding_.vocab_size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("token id ", tokens[t], " out of range [0, ",
                       embedding_.vocab_size(), ")"));
    }
    out.row(t) = ForwardToken(tokens[t]).transpose();
  }
  return out;
}

Matrix BottomModel::ForwardVocabulary() const {
  Matrix out(embedding_.vocab_size(), dim());
  for (TokenId t = 0; t < embedding_.vocab_size(); ++t) {
    out.row(t) = ForwardToken(t).transpose();
  }
  return out;
}

}  // namespace tokenveil
