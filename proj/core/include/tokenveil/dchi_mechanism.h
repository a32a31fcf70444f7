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

#ifndef TOKENVEIL_DCHI_MECHANISM_H_
#define TOKENVEIL_DCHI_MECHANISM_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "tokenveil/embedding_space.h"
#include "tokenveil/importance.h"
#include "tokenveil/pgd_solver.h"
#include "tokenveil/types.h"

namespace tokenveil {

struct PrivacyConfig {
  double epsilon = 10.0;
  double sensitivity = 1.0;
  // Center the noise on the solver's p*_i instead of 0.
  bool mean_shift_enabled = true;
  // Scale the noise by the token's importance factor S(x_i).
  bool importance_enabled = true;
  uint64_t seed = 0;

  absl::Status Validate() const;
};

struct NoiseSample {
  Matrix p;                            // sampled noise, one row per token
  std::vector<double> effective_rate;  // epsilon / (S_i * sensitivity)
  Matrix center;                       // p*_i rows, or zeros
};

struct PerturbResult {
  Matrix perturbed;  // h~ = h + p
  NoiseSample noise;
};

// Empirical max over `sample_pairs` random token pairs of
// ||f(x) - f(x')|| / ||E(x) - E(x')||. Pairs with coincident embedding rows are
// skipped; a lookup-only model returns exactly 1.
absl::StatusOr<double> EstimateSensitivity(const BottomModel& model,
                                           int sample_pairs, uint64_t seed);

// Draws from the density proportional to exp(-rate * ||p - center||_2):
// radius ~ Gamma(dim, 1) / rate and a uniform direction on the unit sphere.
Vector SampleNoise(int dim, double rate, const Vector& center,
                   std::mt19937_64& engine);

// Perturbs each row with noise centered at centers.row(i) (or 0 when `centers`
// is empty) at rate epsilon / (scales[i] * sensitivity) (scale 1 when `scales`
// is empty). Row i draws from substream cfg.seed ^ i. Flags in `cfg` are
// ignored here; callers pass empty centers/scales to disable a component.
absl::StatusOr<PerturbResult> PerturbRows(const Matrix& rows,
                                          const Matrix& centers,
                                          std::span<const double> scales,
                                          const PrivacyConfig& cfg);

// h~ = h + p with p centered on plan->p_star (mean shift) and scaled by
// scores->scale (importance), each honored only when enabled in `cfg`.
absl::StatusOr<PerturbResult> PerturbBatch(const Matrix& rows,
                                           const NoisePlan* plan,
                                           const ImportanceScores* scores,
                                           const PrivacyConfig& cfg);

}  // namespace tokenveil

#endif  // TOKENVEIL_DCHI_MECHANISM_H_
