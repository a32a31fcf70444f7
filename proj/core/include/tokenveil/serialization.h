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

#ifndef TOKENVEIL_SERIALIZATION_H_
#define TOKENVEIL_SERIALIZATION_H_

#include <string>
#include <string_view>

#include "absl/status/statusor.h"
#include "tokenveil/attacks.h"
#include "tokenveil/dchi_mechanism.h"
#include "tokenveil/experiment.h"
#include "tokenveil/importance.h"
#include "tokenveil/neighbor_graph.h"
#include "tokenveil/objective.h"
#include "tokenveil/pgd_solver.h"

namespace tokenveil {

// Reports above this many items omit per_item.
inline constexpr size_t kMaxSerializedItems = 10000;

std::string NeighborGraphToJson(const NeighborGraph& graph);
absl::StatusOr<NeighborGraph> NeighborGraphFromJson(std::string_view json);

// {"objective_trace": [...], "feasible": b, "config": {...}}
std::string NoisePlanSidecarToJson(const NoisePlan& plan,
                                   const SolverConfig& cfg,
                                   const ObjectiveConfig& obj_cfg);
// Rebuilds a plan from its PTEM matrix and JSON sidecar.
absl::StatusOr<NoisePlan> NoisePlanFromParts(Matrix p_star,
                                             std::string_view sidecar_json);

// {"<position>": {"raw": x, "normalized": z, "scale": s}, ...}
std::string ImportanceScoresToJson(const ImportanceScores& scores);
absl::StatusOr<ImportanceScores> ImportanceScoresFromJson(std::string_view json);
std::string ImportanceScoresToCsv(const ImportanceScores& scores);

std::string NoiseSampleMetadataToJson(const NoiseSample& sample,
                                      const PrivacyConfig& cfg);

// {"attack_id": "a2", "asr": x, "n": n, "per_item": [[truth, pred, ok], ...]}
std::string AttackReportToJson(const AttackReport& report);
absl::StatusOr<AttackReport> AttackReportFromJson(std::string_view json);
std::string AttackReportToCsv(const AttackReport& report);

std::string TradeoffRecordToJson(const TradeoffRecord& record);

}  // namespace tokenveil

#endif  // TOKENVEIL_SERIALIZATION_H_
