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

#include "tokenveil/attacks.h"

#include <algorithm>
#include <limits>
#include <map>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "tokenveil/clustering.h"

namespace tokenveil {

std::string_view AttackName(AttackId id) {
  switch (id) {
    case AttackId::kActivationInversion: return "a0";
    case AttackId::kGradientInversion: return "a1";
    case AttackId::kNearestNeighbor: return "a2";
    case AttackId::kSupervisedAttribute: return "a3";
    case AttackId::kGradientAttribute: return "a4";
    case AttackId::kClustering: return "a5";
  }
  return "a?";
}

absl::StatusOr<AttackId> ParseAttackId(std::string_view name) {
  if (name.size() == 2 && (name[0] == 'a' || name[0] == 'A') &&
      name[1] >= '0' && name[1] <= '5') {
    return static_cast<AttackId>(name[1] - '0');
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown attack '", std::string(name), "', expected a0..a5"));
}

absl::StatusOr<std::vector<AttackId>> ParseAttackList(std::string_view list) {
  std::vector<AttackId> ids;
  for (absl::string_view part :
       absl::StrSplit(absl::string_view(list.data(), list.size()), ',',
                      absl::SkipWhitespace())) {
    part = absl::StripAsciiWhitespace(part);
    absl::StatusOr<AttackId> id =
        ParseAttackId(std::string_view(part.data(), part.size()));
    if (!id.ok()) return id.status();
    ids.push_back(*id);
  }
  if (ids.empty()) return absl::InvalidArgumentError("empty attack list");
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

absl::StatusOr<double> ComputeAsr(std::span<const AttackItem> items) {
  if (items.empty()) {
    return absl::InvalidArgumentError("cannot compute ASR of zero items");
  }
  int64_t hits = 0;
  for (const AttackItem& item : items) hits += item.success ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(items.size());
}

absl::StatusOr<AttackReport> MakeReport(AttackId id,
                                        std::span<const int64_t> truth,
                                        std::span<const int64_t> prediction) {
  if (truth.size() != prediction.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "got ", prediction.size(), " predictions for ", truth.size(),
        " items"));
  }
  AttackReport report;
  report.attack_id = id;
  report.per_item.reserve(truth.size());
  for (size_t i = 0; i < truth.size(); ++i) {
    report.per_item.push_back(
        {truth[i], prediction[i], truth[i] == prediction[i]});
  }
  absl::StatusOr<double> asr = ComputeAsr(report.per_item);
  if (!asr.ok()) return asr.status();
  report.asr = *asr;
  report.n = static_cast<int64_t>(truth.size());
  return report;
}

TokenId ActivationInversion(const Vector& h_obs, const Matrix& vocab_outputs) {
  TokenId best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < vocab_outputs.rows(); ++t) {
    const double d = (vocab_outputs.row(t).transpose() - h_obs).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<TokenId>(t);
    }
  }
  return best;
}

TokenId ActivationInversion(const Vector& h_obs, const BottomModel& model) {
  return ActivationInversion(h_obs, model.ForwardVocabulary());
}

absl::StatusOr<std::vector<TokenId>> GradientInversion(
    const Matrix& grad_table, const BottomModel& model) {
  if (!model.is_lookup()) {
    return absl::UnimplementedError(
        "gradient inversion needs a lookup-only bottom model");
  }
  if (grad_table.rows() != model.embedding().vocab_size() ||
      grad_table.cols() != model.dim()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "gradient table is ", grad_table.rows(), "x", grad_table.cols(),
        ", expected ", model.embedding().vocab_size(), "x", model.dim()));
  }
  std::vector<TokenId> used;
  for (Eigen::Index t = 0; t < grad_table.rows(); ++t) {
    if (grad_table.row(t).norm() > 1e-12) used.push_back(static_cast<TokenId>(t));
  }
  return used;
}

NearestNeighborIndex::NearestNeighborIndex(const EmbeddingSpace& space)
    : unit_rows_(space.vectors()) {
  for (Eigen::Index t = 0; t < unit_rows_.rows(); ++t) {
    const double norm = unit_rows_.row(t).norm();
    if (norm > 0.0) unit_rows_.row(t) /= norm;
  }
}

absl::StatusOr<TokenId> NearestNeighborIndex::Query(const Vector& h_obs) const {
  if (h_obs.size() != unit_rows_.cols()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "observed vector has dim ", h_obs.size(), ", expected ",
        unit_rows_.cols()));
  }
  const double norm = h_obs.norm();
  if (!(norm > 0.0)) {
    return absl::InvalidArgumentError("observed vector is zero");
  }
  const Vector u = h_obs / norm;
  TokenId best = 0;
  double best_cos = -std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < unit_rows_.rows(); ++t) {
    const double c = unit_rows_.row(t).dot(u);
    if (c > best_cos) {
      best_cos = c;
      best = static_cast<TokenId>(t);
    }
  }
  return best;
}

absl::StatusOr<TokenId> NearestNeighborRecovery(const Vector& h_obs,
                                                const EmbeddingSpace& space) {
  return NearestNeighborIndex(space).Query(h_obs);
}

namespace {

absl::StatusOr<AttackReport> ProbeAttack(AttackId id, const Matrix& train,
                                         std::span<const ClassId> train_labels,
                                         const Matrix& test,
                                         std::span<const ClassId> test_labels,
                                         const ProbeConfig& cfg) {
  if (train.cols() != test.cols()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "train features have ", train.cols(), " columns, test features ",
        test.cols()));
  }
  if (static_cast<Eigen::Index>(test_labels.size()) != test.rows()) {
    return absl::InvalidArgumentError("test labels do not match test rows");
  }
  absl::StatusOr<AttributeProbe> probe =
      AttributeProbe::Train(train, train_labels, cfg);
  if (!probe.ok()) return probe.status();
  const std::vector<ClassId> predicted = probe->Predict(test);
  std::vector<int64_t> truth(test_labels.begin(), test_labels.end());
  std::vector<int64_t> pred(predicted.begin(), predicted.end());
  return MakeReport(id, truth, pred);
}

}  // namespace

absl::StatusOr<AttackReport> SupervisedAttributeAttack(
    const Matrix& train_features, std::span<const ClassId> train_labels,
    const Matrix& test_features, std::span<const ClassId> test_labels,
    const ProbeConfig& cfg) {
  return ProbeAttack(AttackId::kSupervisedAttribute, train_features,
                     train_labels, test_features, test_labels, cfg);
}

absl::StatusOr<AttackReport> GradientAttributeAttack(
    const Matrix& train_gradients, std::span<const ClassId> train_labels,
    const Matrix& test_gradients, std::span<const ClassId> test_labels,
    const ProbeConfig& cfg) {
  return ProbeAttack(AttackId::kGradientAttribute, train_gradients,
                     train_labels, test_gradients, test_labels, cfg);
}

absl::StatusOr<AttackReport> ClusteringAttack(
    const Matrix& target_features, std::span<const ClassId> target_labels,
    const Matrix& shadow_features, std::span<const ClassId> shadow_labels,
    int num_attrs, uint64_t seed) {
  if (num_attrs < 2) {
    return absl::InvalidArgumentError("clustering attack needs >= 2 attributes");
  }
  if (static_cast<Eigen::Index>(shadow_labels.size()) !=
          shadow_features.rows() ||
      static_cast<Eigen::Index>(target_labels.size()) !=
          target_features.rows()) {
    return absl::InvalidArgumentError("labels do not match feature rows");
  }
  if (shadow_features.cols() != target_features.cols()) {
    return absl::InvalidArgumentError(
        "shadow and target features differ in width");
  }
  std::vector<ClassId> attrs(shadow_labels.begin(), shadow_labels.end());
  std::sort(attrs.begin(), attrs.end());
  attrs.erase(std::unique(attrs.begin(), attrs.end()), attrs.end());
  if (static_cast<int>(attrs.size()) != num_attrs) {
    return absl::InvalidArgumentError(absl::StrCat(
        "shadow set has ", attrs.size(), " attributes, expected ", num_attrs));
  }

  const Eigen::Index ns = shadow_features.rows();
  Matrix all(ns + target_features.rows(), shadow_features.cols());
  all.topRows(ns) = shadow_features;
  all.bottomRows(target_features.rows()) = target_features;
  absl::StatusOr<KMeansResult> km = KMeans(all, num_attrs, seed);
  if (!km.ok()) return km.status();

  std::vector<std::map<ClassId, int>> votes(num_attrs);
  for (Eigen::Index i = 0; i < ns; ++i) {
    ++votes[km->assignment[i]][shadow_labels[i]];
  }
  std::vector<ClassId> cluster_attr(num_attrs);
  for (int c = 0; c < num_attrs; ++c) {
    if (!votes[c].empty()) {
      // std::map iterates ascending, so ties keep the lowest attribute.
      int best_count = -1;
      for (const auto& [attr, count] : votes[c]) {
        if (count > best_count) {
          best_count = count;
          cluster_attr[c] = attr;
        }
      }
      continue;
    }
    Eigen::Index nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ns; ++i) {
      const double d =
          (shadow_features.row(i) - km->centroids.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    cluster_attr[c] = shadow_labels[nearest];
  }

  std::vector<int64_t> truth(target_labels.begin(), target_labels.end());
  std::vector<int64_t> pred(target_features.rows());
  for (Eigen::Index i = 0; i < target_features.rows(); ++i) {
    pred[i] = cluster_attr[km->assignment[ns + i]];
  }
  return MakeReport(AttackId::kClustering, truth, pred);
}

}  // namespace tokenveil
