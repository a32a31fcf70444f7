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

#ifndef TOKENVEIL_ATTACKS_H_
#define TOKENVEIL_ATTACKS_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "tokenveil/embedding_space.h"
#include "tokenveil/probe.h"
#include "tokenveil/types.h"

namespace tokenveil {

enum class AttackId {
  kActivationInversion = 0,  // a0
  kGradientInversion = 1,    // a1
  kNearestNeighbor = 2,      // a2
  kSupervisedAttribute = 3,  // a3
  kGradientAttribute = 4,    // a4
  kClustering = 5,           // a5
};

// "a0" .. "a5".
std::string_view AttackName(AttackId id);
absl::StatusOr<AttackId> ParseAttackId(std::string_view name);
// Parses a comma separated list such as "a0,a2,a3"; sorted and deduplicated.
absl::StatusOr<std::vector<AttackId>> ParseAttackList(std::string_view list);

struct AttackItem {
  int64_t truth = 0;
  int64_t prediction = 0;
  bool success = false;

  bool operator==(const AttackItem&) const = default;
};

struct AttackReport {
  AttackId attack_id = AttackId::kActivationInversion;
  std::vector<AttackItem> per_item;
  double asr = 0.0;
  int64_t n = 0;
};

// Successes / items. InvalidArgument for an empty list.
absl::StatusOr<double> ComputeAsr(std::span<const AttackItem> items);

// Items with success = (truth == prediction), and their ASR.
absl::StatusOr<AttackReport> MakeReport(AttackId id,
                                        std::span<const int64_t> truth,
                                        std::span<const int64_t> prediction);

// Attack-0: argmin over the vocabulary of ||f(x') - h_obs||^2 given the
// vocabulary outputs f(x') of the bottom model; ties go to the lowest id.
TokenId ActivationInversion(const Vector& h_obs, const Matrix& vocab_outputs);
TokenId ActivationInversion(const Vector& h_obs, const BottomModel& model);

// Attack-1: for a lookup bottom model the loss gradient with respect to the
// embedding table is supported exactly on the rows used by the batch.
// Returns ascending ids of rows with l2 norm > 1e-12. Unimplemented for
// models with frozen layers.
absl::StatusOr<std::vector<TokenId>> GradientInversion(
    const Matrix& grad_table, const BottomModel& model);

// Attack-2: argmax over rows of cos(h_obs, E_t); ties go to the lowest id.
absl::StatusOr<TokenId> NearestNeighborRecovery(const Vector& h_obs,
                                                const EmbeddingSpace& space);

// Row norms of `space` precomputed for repeated Attack-2 queries.
class NearestNeighborIndex {
 public:
  explicit NearestNeighborIndex(const EmbeddingSpace& space);
  absl::StatusOr<TokenId> Query(const Vector& h_obs) const;

 private:
  Matrix unit_rows_;
};

// Attack-3: probe on per-document mean activations, trained on shadow data.
absl::StatusOr<AttackReport> SupervisedAttributeAttack(
    const Matrix& train_features, std::span<const ClassId> train_labels,
    const Matrix& test_features, std::span<const ClassId> test_labels,
    const ProbeConfig& cfg);

// Attack-4: the same probe trained on per-example top-model gradients.
absl::StatusOr<AttackReport> GradientAttributeAttack(
    const Matrix& train_gradients, std::span<const ClassId> train_labels,
    const Matrix& test_gradients, std::span<const ClassId> test_labels,
    const ProbeConfig& cfg);

// Attack-5: k-means (k = num_attrs) over shadow and target features; each
// cluster takes the majority shadow attribute (ties: lowest id) or, without
// shadow members, the attribute of the shadow point nearest its centroid.
absl::StatusOr<AttackReport> ClusteringAttack(
    const Matrix& target_features, std::span<const ClassId> target_labels,
    const Matrix& shadow_features, std::span<const ClassId> shadow_labels,
    int num_attrs, uint64_t seed);

}  // namespace tokenveil

#endif  // TOKENVEIL_ATTACKS_H_
