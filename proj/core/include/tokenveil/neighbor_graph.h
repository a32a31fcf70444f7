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

#ifndef TOKENVEIL_NEIGHBOR_GRAPH_H_
#define TOKENVEIL_NEIGHBOR_GRAPH_H_

#include <vector>

#include "absl/status/statusor.h"
#include "tokenveil/embedding_space.h"
#include "tokenveil/types.h"

namespace tokenveil {

// k-nearest-neighbor digraph over token vectors plus, per token, the set of
// tokens first reached after exactly n hops when edges are read as
// undirected.
struct NeighborGraph {
  int k = 0;
  int n_hops = 0;
  // knn[i]: the k closest rows to i in l2, ascending distance, ties by id.
  std::vector<std::vector<TokenId>> knn;
  // indirect[i]: ids whose BFS hop count from i is exactly n_hops, ascending.
  std::vector<std::vector<TokenId>> indirect;

  int size() const { return static_cast<int>(knn.size()); }
};

// Exact O(N^2 d) construction, parallel over rows. Requires 1 <= k < rows and
// n_hops >= 2.
absl::StatusOr<NeighborGraph> BuildNeighborGraph(const Matrix& rows, int k,
                                                 int n_hops);
absl::StatusOr<NeighborGraph> BuildNeighborGraph(const EmbeddingSpace& space,
                                                 int k, int n_hops);

// Hop distances from `source` over the symmetrized knn graph; -1 for
// unreachable ids.
std::vector<int> HopDistances(const NeighborGraph& graph, TokenId source);

}  // namespace tokenveil

#endif  // TOKENVEIL_NEIGHBOR_GRAPH_H_
