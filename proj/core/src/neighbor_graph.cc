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

#include "tokenveil/neighbor_graph.h"

#include <algorithm>
#include <deque>
#include <utility>

#include "absl/strings/str_cat.h"
#include "tokenveil/parallel.h"

namespace tokenveil {

namespace {

// Hop counts treat every knn edge as undirected.
std::vector<std::vector<TokenId>> Adjacency(const NeighborGraph& graph) {
  std::vector<std::vector<TokenId>> adj(graph.size());
  for (TokenId u = 0; u < graph.size(); ++u) {
    for (TokenId v : graph.knn[u]) {
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
  }
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return adj;
}

std::vector<int> Bfs(const std::vector<std::vector<TokenId>>& adj,
                     TokenId source) {
  std::vector<int> hops(adj.size(), -1);
  std::deque<TokenId> frontier{source};
  hops[source] = 0;
  while (!frontier.empty()) {
    const TokenId u = frontier.front();
    frontier.pop_front();
    for (TokenId v : adj[u]) {
      if (hops[v] >= 0) continue;
      hops[v] = hops[u] + 1;
      frontier.push_back(v);
    }
  }
  return hops;
}

}  // namespace


absl::StatusOr<NeighborGraph> BuildNeighborGraph(const Matrix& rows, int k,
                                                 int n_hops) {
  const int n = static_cast<int>(rows.rows());
  if (k < 1 || k >= n) {
    return absl::InvalidArgumentError(
        absl::StrCat("k must satisfy 1 <= k < ", n, ", got ", k));
  }
  if (n_hops < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("n must be >= 2, got ", n_hops));
  }

  NeighborGraph graph;
  graph.k = k;
  graph.n_hops = n_hops;
  graph.knn.assign(n, {});
  graph.indirect.assign(n, {});

  ParallelFor(0, n, [&](int64_t i) {
    std::vector<std::pair<double, TokenId>> candidates;
    candidates.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      candidates.emplace_back((rows.row(j) - rows.row(i)).squaredNorm(), j);
    }
    // Pairs compare by distance, then id.
    std::partial_sort(candidates.begin(), candidates.begin() + k,
                      candidates.end());
    auto& out = graph.knn[i];
    out.reserve(k);
    for (int m = 0; m < k; ++m) out.push_back(candidates[m].second);
  });

  const std::vector<std::vector<TokenId>> adj = Adjacency(graph);
  ParallelFor(0, n, [&](int64_t i) {
    const std::vector<int> hops = Bfs(adj, static_cast<TokenId>(i));
    for (int j = 0; j < n; ++j) {
      if (hops[j] == n_hops) graph.indirect[i].push_back(j);
    }
  });
  return graph;
}

absl::StatusOr<NeighborGraph> BuildNeighborGraph(const EmbeddingSpace& space,
                                                 int k, int n_hops) {
  return BuildNeighborGraph(space.vectors(), k, n_hops);
}

std::vector<int> HopDistances(const NeighborGraph& graph, TokenId source) {
  return Bfs(Adjacency(graph), source);
}

}  // namespace tokenveil
