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

#ifndef TOKENVEIL_PGD_SOLVER_H_
#define TOKENVEIL_PGD_SOLVER_H_

#include <optional>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "tokenveil/objective.h"
#include "tokenveil/types.h"

namespace tokenveil {

inline constexpr double kDefaultDelta = 0.6;
inline constexpr int kDefaultMaxIters = 200;
inline constexpr double kDefaultStopTol = 1e-8;
inline constexpr double kFeasibilityTol = 1e-9;

struct SolverConfig {
  // Step size; std::nullopt selects 1e-2 * r with r the local radius.
  std::optional<double> eta;
  int max_iters = kDefaultMaxIters;
  // Cosine threshold behind the local proximity constraint.
  double delta = kDefaultDelta;
  // Early stop after 3 consecutive iterations with |objective change| below
  // this value.
  double stop_tol = kDefaultStopTol;

  absl::Status Validate() const;
};

// Optimal per-token perturbations p*_i = h~_i - h_i.
struct NoisePlan {
  Matrix p_star;
  // Total objective at p = 0 followed by one entry per completed iteration.
  std::vector<double> objective_trace;
  bool feasible = false;
};

// Radius of the local ball ||h~ - h||^2 <= 2 B^2 (1 - delta).
double LocalRadius(double norm_bound, double delta);

// Radial projection of h_tilde onto the local ball around h. Points already
// inside are returned unchanged.
Vector ProjectLocal(const Vector& h, const Vector& h_tilde, double norm_bound,
                    double delta);

// Euclidean projection onto the ball of radius R around mu.
Vector ProjectGlobal(const Vector& h_tilde, const Vector& mu, double radius);

// Applies the local then the global projection; if the global step left the
// local ball, alternates (at most 50 rounds) until both hold to 1e-9.
Vector ProjectFeasible(const Vector& h, const Vector& h_tilde,
                       double norm_bound, double delta, const Vector& mu,
                       double radius);

// Projected gradient descent on the per-token objective, starting from p = 0.
// Tokens are independent given the frozen centroids and run in parallel.
absl::StatusOr<NoisePlan> SolveOpt3(const ObjectiveContext& ctx,
                                    const SolverConfig& cfg,
                                    const ObjectiveConfig& obj_cfg);

// True when every row of p_star satisfies both constraints within 1e-9.
bool IsFeasible(const ObjectiveContext& ctx, const Matrix& p_star,
                double delta);

}  // namespace tokenveil

#endif  // TOKENVEIL_PGD_SOLVER_H_
