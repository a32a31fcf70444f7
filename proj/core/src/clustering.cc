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

#include "tokenveil/clustering.h"

#include <limits>
#include <random>

#include "absl/strings/str_cat.h"
#include "tokenveil/rng.h"

namespace tokenveil {
namespace {

// Index of the nearest centroid, ties to the lowest index.
int Nearest(const Matrix& centroids, const Eigen::Ref<const Vector>& x,
            double* best_distance = nullptr) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c).transpose() - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (best_distance != nullptr) *best_distance = best_d;
  return best;
}

Matrix PlusPlusSeeding(const Matrix& rows, int num_clusters,
                       std::mt19937_64& engine) {
  const Eigen::Index n = rows.rows();
  Matrix centroids(num_clusters, rows.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centroids.row(0) = rows.row(pick(engine));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < num_clusters; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (rows.row(i) - centroids.row(c - 1)).squaredNorm());
      total += d2[i];
    }
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(engine);
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      // Every row coincides with a chosen centroid.
      chosen = pick(engine);
    }
    centroids.row(c) = rows.row(chosen);
  }
  return centroids;
}

}  // namespace

absl::StatusOr<std::map<ClassId, Vector>> ClassCentroids(
    const Matrix& rows, std::span<const ClassId> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != rows.rows()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "got ", labels.size(), " labels for ", rows.rows(), " rows"));
  }
  std::map<ClassId, Vector> sums;
  std::map<ClassId, int> counts;
  for (size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = sums.try_emplace(labels[i], Vector::Zero(rows.cols()));
    it->second += rows.row(i).transpose();
    ++counts[labels[i]];
  }
  if (sums.empty()) {
    return absl::InvalidArgumentError("no rows to average");
  }
  for (auto& [cls, sum] : sums) sum /= static_cast<double>(counts[cls]);
  return sums;
}

absl::StatusOr<std::map<ClassId, Vector>> ClassCentroids(
    const Matrix& rows, std::span<const ClassId> labels, int num_classes) {
  for (ClassId label : labels) {
    if (label < 0 || label >= num_classes) {
      return absl::InvalidArgumentError(absl::StrCat(
          "label ", label, " outside [0, ", num_classes, ")"));
    }
  }
  absl::StatusOr<std::map<ClassId, Vector>> centroids =
      ClassCentroids(rows, labels);
  if (!centroids.ok()) return centroids.status();
  for (ClassId c = 0; c < num_classes; ++c) {
    if (!centroids->contains(c)) {
      return absl::InvalidArgumentError(
          absl::StrCat("class ", c, " has no rows"));
    }
  }
  return centroids;
}

absl::StatusOr<KMeansResult> KMeans(const Matrix& rows, int num_clusters,
                                    uint64_t seed) {
  if (num_clusters < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("need at least 2 clusters, got ", num_clusters));
  }
  if (rows.rows() < num_clusters) {
    return absl::InvalidArgumentError(absl::StrCat(
        "need at least ", num_clusters, " rows, got ", rows.rows()));
  }
  std::mt19937_64 engine(SplitMix64(seed));
  KMeansResult result;
  result.centroids = PlusPlusSeeding(rows, num_clusters, engine);
  result.assignment.assign(rows.rows(), -1);

  for (int iter = 0; iter < kKMeansMaxIterations; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const int c = Nearest(result.centroids, rows.row(i).transpose());
      if (c != result.assignment[i]) {
        result.assignment[i] = c;
        changed = true;
      }
    }
    result.iterations = iter + 1;
    if (!changed) break;
    Matrix sums = Matrix::Zero(num_clusters, rows.cols());
    std::vector<int> counts(num_clusters, 0);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      sums.row(result.assignment[i]) += rows.row(i);
      ++counts[result.assignment[i]];
    }
    for (int c = 0; c < num_clusters; ++c) {
      if (counts[c] > 0) result.centroids.row(c) = sums.row(c) / counts[c];
    }
  }
  return result;
}

absl::StatusOr<std::vector<ClassId>> PseudoLabel(const Matrix& rows,
                                                 int num_clusters,
                                                 uint64_t seed) {
  absl::StatusOr<KMeansResult> result = KMeans(rows, num_clusters, seed);
  if (!result.ok()) return result.status();
  return std::move(result->assignment);
}

}  // namespace tokenveil
