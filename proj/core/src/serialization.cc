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

#include "tokenveil/serialization.h"

#include <string>

#include <nlohmann/json.hpp>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"

namespace tokenveil {
namespace {

using Json = nlohmann::ordered_json;

absl::StatusOr<Json> ParseJson(std::string_view text, std::string_view what) {
  Json j = Json::parse(text.begin(), text.end(), nullptr,
                       /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    return absl::DataLossError(
        absl::StrCat("malformed ", std::string(what), " JSON"));
  }
  return j;
}

absl::Status SchemaError(std::string_view what, const std::exception& e) {
  return absl::DataLossError(
      absl::StrCat("bad ", std::string(what), " JSON: ", e.what()));
}

}  // namespace

std::string NeighborGraphToJson(const NeighborGraph& graph) {
  Json j;
  j["k"] = graph.k;
  j["n_hops"] = graph.n_hops;
  j["knn"] = graph.knn;
  j["indirect"] = graph.indirect;
  return j.dump() + "\n";
}

absl::StatusOr<NeighborGraph> NeighborGraphFromJson(std::string_view json) {
  absl::StatusOr<Json> j = ParseJson(json, "neighbor graph");
  if (!j.ok()) return j.status();
  try {
    NeighborGraph g;
    g.k = j->at("k").get<int>();
    g.n_hops = j->at("n_hops").get<int>();
    g.knn = j->at("knn").get<std::vector<std::vector<TokenId>>>();
    g.indirect = j->at("indirect").get<std::vector<std::vector<TokenId>>>();
    if (g.knn.size() != g.indirect.size()) {
      return absl::DataLossError("neighbor graph knn/indirect size mismatch");
    }
    const int n = g.size();
    for (const auto* lists : {&g.knn, &g.indirect}) {
      for (const auto& list : *lists) {
        for (TokenId t : list) {
          if (t < 0 || t >= n) {
            return absl::DataLossError(
                absl::StrCat("neighbor graph id ", t, " out of range"));
          }
        }
      }
    }
    return g;
  } catch (const std::exception& e) {
    return SchemaError("neighbor graph", e);
  }
}

std::string NoisePlanSidecarToJson(const NoisePlan& plan,
                                   const SolverConfig& cfg,
                                   const ObjectiveConfig& obj_cfg) {
  Json j;
  j["objective_trace"] = plan.objective_trace;
  j["feasible"] = plan.feasible;
  Json c;
  if (cfg.eta.has_value()) {
    c["eta"] = *cfg.eta;
  } else {
    c["eta"] = nullptr;
  }
  c["max_iters"] = cfg.max_iters;
  c["delta"] = cfg.delta;
  c["stop_tol"] = cfg.stop_tol;
  c["lambda"] = obj_cfg.lambda;
  c["include_corr"] = obj_cfg.include_corr;
  j["config"] = c;
  return j.dump() + "\n";
}

absl::StatusOr<NoisePlan> NoisePlanFromParts(Matrix p_star,
                                             std::string_view sidecar_json) {
  absl::StatusOr<Json> j = ParseJson(sidecar_json, "noise plan sidecar");
  if (!j.ok()) return j.status();
  try {
    NoisePlan plan;
    plan.p_star = std::move(p_star);
    plan.objective_trace = j->at("objective_trace").get<std::vector<double>>();
    plan.feasible = j->at("feasible").get<bool>();
    return plan;
  } catch (const std::exception& e) {
    return SchemaError("noise plan sidecar", e);
  }
}

std::string ImportanceScoresToJson(const ImportanceScores& scores) {
  Json j = Json::object();
  for (int i = 0; i < scores.size(); ++i) {
    j[std::to_string(i)] = {{"raw", scores.raw[i]},
                            {"normalized", scores.normalized[i]},
                            {"scale", scores.scale[i]}};
  }
  return j.dump() + "\n";
}

absl::StatusOr<ImportanceScores> ImportanceScoresFromJson(
    std::string_view json) {
  absl::StatusOr<Json> j = ParseJson(json, "importance");
  if (!j.ok()) return j.status();
  if (!j->is_object()) return absl::DataLossError("importance JSON not an object");
  const size_t n = j->size();
  ImportanceScores s;
  s.raw.resize(n);
  s.normalized.resize(n);
  s.scale.resize(n);
  try {
    for (size_t i = 0; i < n; ++i) {
      const Json& e = j->at(std::to_string(i));
      s.raw[i] = e.at("raw").get<double>();
      s.normalized[i] = e.at("normalized").get<double>();
      s.scale[i] = e.at("scale").get<double>();
      if (!(s.scale[i] > 0.0)) {
        return absl::DataLossError(
            absl::StrCat("importance scale of position ", i, " is not > 0"));
      }
    }
  } catch (const std::exception& e) {
    return SchemaError("importance", e);
  }
  return s;
}

std::string ImportanceScoresToCsv(const ImportanceScores& scores) {
  std::string out = "position,raw,normalized,scale\n";
  for (int i = 0; i < scores.size(); ++i) {
    absl::StrAppend(&out, absl::StrFormat("%d,%.17g,%.17g,%.17g\n", i,
                                          scores.raw[i], scores.normalized[i],
                                          scores.scale[i]));
  }
  return out;
}

std::string NoiseSampleMetadataToJson(const NoiseSample& sample,
                                      const PrivacyConfig& cfg) {
  Json j;
  j["seed"] = cfg.seed;
  j["epsilon"] = cfg.epsilon;
  j["sensitivity"] = cfg.sensitivity;
  j["mean_shift_enabled"] = cfg.mean_shift_enabled;
  j["importance_enabled"] = cfg.importance_enabled;
  j["effective_rate"] = sample.effective_rate;
  return j.dump() + "\n";
}

std::string AttackReportToJson(const AttackReport& report) {
  Json j;
  j["attack_id"] = std::string(AttackName(report.attack_id));
  j["asr"] = report.asr;
  j["n"] = report.n;
  if (report.per_item.size() <= kMaxSerializedItems) {
    Json items = Json::array();
    for (const AttackItem& item : report.per_item) {
      items.push_back({item.truth, item.prediction, item.success});
    }
    j["per_item"] = std::move(items);
  }
  return j.dump() + "\n";
}

absl::StatusOr<AttackReport> AttackReportFromJson(std::string_view json) {
  absl::StatusOr<Json> j = ParseJson(json, "attack report");
  if (!j.ok()) return j.status();
  try {
    AttackReport r;
    absl::StatusOr<AttackId> id =
        ParseAttackId(j->at("attack_id").get<std::string>());
    if (!id.ok()) return absl::DataLossError(id.status().message());
    r.attack_id = *id;
    r.asr = j->at("asr").get<double>();
    r.n = j->at("n").get<int64_t>();
    if (j->contains("per_item")) {
      for (const Json& item : j->at("per_item")) {
        r.per_item.push_back({item.at(0).get<int64_t>(),
                              item.at(1).get<int64_t>(),
                              item.at(2).get<bool>()});
      }
    }
    return r;
  } catch (const std::exception& e) {
    return SchemaError("attack report", e);
  }
}

std::string AttackReportToCsv(const AttackReport& report) {
  std::string out = "index,truth,prediction,success\n";
  for (size_t i = 0; i < report.per_item.size(); ++i) {
    const AttackItem& item = report.per_item[i];
    absl::StrAppend(&out, i, ",", item.truth, ",", item.prediction, ",",
                    item.success ? 1 : 0, "\n");
  }
  return out;
}

std::string TradeoffRecordToJson(const TradeoffRecord& record) {
  Json j;
  j["epsilon"] = record.epsilon;
  j["utility"] = record.utility;
  Json asr = Json::object();
  for (const auto& [id, value] : record.asr) {
    asr[std::string(AttackName(id))] = value;
  }
  j["asr"] = asr;
  Json config = Json::object();
  const std::string text = FormatExperimentConfig(record.config);
  for (absl::string_view line : absl::StrSplit(text, '\n', absl::SkipEmpty())) {
    const size_t eq = line.find('=');
    config[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
  }
  j["config"] = std::move(config);
  return j.dump() + "\n";
}

}  // namespace tokenveil
