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

#include "tokenveil/dchi_mechanism.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"
#include "tokenveil/parallel.h"
#include "tokenveil/rng.h"

namespace tokenveil {

absl::Status PrivacyConfig::Validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be finite and > 0, got ", epsilon));
  }
  if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sensitivity must be finite and > 0, got ", sensitivity));
  }
  return absl::OkStatus();
}

absl::StatusOr<double> EstimateSensitivity(const BottomModel& model,
                                           int sample_pairs, uint64_t seed) {
  if (sample_pairs < 1) {
    return absl::InvalidArgumentError("sample_pairs must be >= 1");
  }
  const EmbeddingSpace& space = model.embedding();
  if (space.vocab_size() < 2) {
    return absl::InvalidArgumentError("sensitivity needs at least two tokens");
  }
  if (model.is_lookup()) return 1.0;

  std::mt19937_64 engine(SplitMix64(seed));
  std::uniform_int_distribution<TokenId> pick(0, space.vocab_size() - 1);
  double best = 0.0;
  int used = 0;
  for (int s = 0; s < sample_pairs; ++s) {
    const TokenId a = pick(engine);
    const TokenId b = pick(engine);
    const double in = (space.row(a) - space.row(b)).norm();
    if (in == 0.0) continue;
    const double out = (model.ForwardToken(a) - model.ForwardToken(b)).norm();
    best = std::max(best, out / in);
    ++used;
  }
  if (used == 0) {
    return absl::InvalidArgumentError(
        "every sampled token pair has coincident embedding rows");
  }
  return best;
}

Vector SampleNoise(int dim, double rate, const Vector& center,
                   std::mt19937_64& engine) {
  // Radius first so that draws at different rates from the same stream are
  // scaled copies of each other.
  std::gamma_distribution<double> gamma(static_cast<double>(dim), 1.0);
  const double radius = gamma(engine) / rate;
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector dir(dim);
  double norm = 0.0;
  do {
    for (int j = 0; j < dim; ++j) dir(j) = normal(engine);
    norm = dir.norm();
  } while (norm == 0.0);
  return center + (radius / norm) * dir;
}

absl::StatusOr<PerturbResult> PerturbRows(const Matrix& rows,
                                          const Matrix& centers,
                                          std::span<const double> scales,
                                          const PrivacyConfig& cfg) {
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  const Eigen::Index n = rows.rows();
  const int dim = static_cast<int>(rows.cols());
  const bool has_centers = centers.size() > 0;
  if (has_centers && (centers.rows() != n || centers.cols() != dim)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "noise centers are ", centers.rows(), "x", centers.cols(),
        " but rows are ", n, "x", dim));
  }
  if (!scales.empty() && static_cast<Eigen::Index>(scales.size()) != n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "got ", scales.size(), " importance scales for ", n, " rows"));
  }
  for (double s : scales) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      return absl::InvalidArgumentError(
          absl::StrCat("importance scale must be finite and > 0, got ", s));
    }
  }

  PerturbResult result;
  result.noise.p.resize(n, dim);
  result.noise.center = has_centers ? centers : Matrix::Zero(n, dim);
  result.noise.effective_rate.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double scale = scales.empty() ? 1.0 : scales[i];
    result.noise.effective_rate[i] = cfg.epsilon / (scale * cfg.sensitivity);
  }
  ParallelFor(0, n, [&](int64_t i) {
    std::mt19937_64 engine = StreamEngine(cfg.seed, static_cast<uint64_t>(i));
    const Vector center = result.noise.center.row(i).transpose();
    result.noise.p.row(i) =
        SampleNoise(dim, result.noise.effective_rate[i], center, engine)
            .transpose();
  });
  result.perturbed = rows + result.noise.p;
  return result;
}

absl::StatusOr<PerturbResult> PerturbBatch(const Matrix& rows,
                                           const NoisePlan* plan,
                                           const ImportanceScores* scores,
                                           const PrivacyConfig& cfg) {
  Matrix centers;
  if (cfg.mean_shift_enabled) {
    if (plan == nullptr) {
      return absl::InvalidArgumentError("mean shift enabled without a plan");
    }
    centers = plan->p_star;
    if (centers.rows() != rows.rows() || centers.cols() != rows.cols()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "noise plan is ", centers.rows(), "x", centers.cols(),
          " but rows are ", rows.rows(), "x", rows.cols()));
    }
  }
  std::span<const double> scales;
  if (cfg.importance_enabled) {
    if (scores == nullptr) {
      return absl::InvalidArgumentError(
          "importance enabled without importance scores");
    }
    if (scores->size() != rows.rows()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "got ", scores->size(), " importance scores for ", rows.rows(),
          " rows"));
    }
    scales = scores->scale;
  }
  return PerturbRows(rows, centers, scales, cfg);
}

}  // namespace tokenveil
