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

#ifndef TOKENVEIL_OBJECTIVE_H_
#define TOKENVEIL_OBJECTIVE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "tokenveil/embedding_space.h"
#include "tokenveil/neighbor_graph.h"
#include "tokenveil/types.h"

namespace tokenveil {

inline constexpr double kDefaultLambda = 0.1;

struct ObjectiveConfig {
  // Weight of the class-dispersion term.
  double lambda = kDefaultLambda;
  // Adds the Pearson correlation to the cosine in similarity().
  bool include_corr = true;

  absl::Status Validate() const;
};

// Everything the per-token objective reads. Centroids are computed from the
// unperturbed rows and stay fixed while the perturbations are optimized.
struct ObjectiveContext {
  Matrix base_rows;
  NeighborGraph graph;
  std::map<ClassId, Vector> class_centroids;
  std::vector<std::optional<ClassId>> labels;  // one per row
  SpaceStatistics bounds;                      // B, mu, R of base_rows

  // Checks that graph, labels and centroids agree with base_rows and fills
  // `bounds`.
  static absl::StatusOr<ObjectiveContext> Create(
      Matrix base_rows, NeighborGraph graph,
      std::map<ClassId, Vector> class_centroids,
      std::vector<std::optional<ClassId>> labels);

  int num_tokens() const { return static_cast<int>(base_rows.rows()); }
  int dim() const { return static_cast<int>(base_rows.cols()); }
};

// Number of pairwise similarity evaluations performed by one call.
struct EvalCounter {
  int64_t similarity_calls = 0;
};

// corr(u, v) + cos(u, v). The Pearson term is taken across coordinates and is
// 0 when either vector is constant (or include_corr is false). Zero vectors
// are rejected.
absl::StatusOr<double> Similarity(const Vector& u, const Vector& v,
                                  bool include_corr = true);

// Gradient of Similarity(u, v) with respect to u. Requires u, v != 0.
Vector SimilarityGradient(const Vector& u, const Vector& v,
                          bool include_corr = true);

// Mean similarity of h_i + p_i to its k nearest neighbors minus the mean
// similarity to its n-hop set. std::nullopt when the n-hop set is empty: such
// tokens are skipped in the EIA sum.
absl::StatusOr<std::optional<double>> EiaGap(TokenId token, const Vector& p,
                                             const ObjectiveContext& ctx,
                                             const ObjectiveConfig& cfg,
                                             EvalCounter* counter = nullptr);

// lambda * ||h_i + p_i - mu_{y_i}||^2. InvalidArgument without a label.
absl::StatusOr<double> AiaGap(TokenId token, const Vector& p,
                              const ObjectiveContext& ctx,
                              const ObjectiveConfig& cfg);

// EiaGap (0 when skipped) minus AiaGap for one token.
absl::StatusOr<double> TokenObjective(TokenId token, const Vector& p,
                                      const ObjectiveContext& ctx,
                                      const ObjectiveConfig& cfg,
                                      EvalCounter* counter = nullptr);

// Analytic gradient of TokenObjective with respect to p; neighbor rows and
// centroids are constants.
absl::StatusOr<Vector> TokenGradient(TokenId token, const Vector& p,
                                     const ObjectiveContext& ctx,
                                     const ObjectiveConfig& cfg);

// Sum of TokenObjective over all rows of `perturbations`, reduced in token
// order so the value does not depend on the thread count.
absl::StatusOr<double> TotalObjective(const Matrix& perturbations,
                                      const ObjectiveContext& ctx,
                                      const ObjectiveConfig& cfg,
                                      EvalCounter* counter = nullptr);

absl::StatusOr<Matrix> ObjectiveGradient(const Matrix& perturbations,
                                         const ObjectiveContext& ctx,
                                         const ObjectiveConfig& cfg);

}  // namespace tokenveil

#endif  // TOKENVEIL_OBJECTIVE_H_
