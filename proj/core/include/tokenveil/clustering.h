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

#ifndef TOKENVEIL_CLUSTERING_H_
#define TOKENVEIL_CLUSTERING_H_

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "tokenveil/types.h"

namespace tokenveil {

// Per-class arithmetic mean of the rows carrying that label.
absl::StatusOr<std::map<ClassId, Vector>> ClassCentroids(
    const Matrix& rows, std::span<const ClassId> labels);

// As above, but every class in [0, num_classes) must own at least one row.
absl::StatusOr<std::map<ClassId, Vector>> ClassCentroids(
    const Matrix& rows, std::span<const ClassId> labels, int num_classes);

struct KMeansResult {
  std::vector<ClassId> assignment;
  Matrix centroids;  // num_clusters x dim
  int iterations = 0;
};

inline constexpr int kKMeansMaxIterations = 100;

// Lloyd's algorithm with k-means++ seeding. Stops when no assignment changes
// or after kKMeansMaxIterations. Distance ties go to the lower cluster id and
// empty clusters keep their previous centroid.
absl::StatusOr<KMeansResult> KMeans(const Matrix& rows, int num_clusters,
                                    uint64_t seed);

// Cluster ids in [0, num_clusters) per row; deterministic for fixed seed.
absl::StatusOr<std::vector<ClassId>> PseudoLabel(const Matrix& rows,
                                                 int num_clusters,
                                                 uint64_t seed);

}  // namespace tokenveil

#endif  // TOKENVEIL_CLUSTERING_H_
