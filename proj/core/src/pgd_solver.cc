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

#include "tokenveil/pgd_solver.h"

#include <cmath>

#include "absl/strings/str_cat.h"
#include "tokenveil/parallel.h"

namespace tokenveil {
namespace {

constexpr int kMaxProjectionRounds = 50;
constexpr int kStopPatience = 3;

bool Inside(const Vector& x, const Vector& center, double radius) {
  return (x - center).norm() <= radius + kFeasibilityTol;
}

}  // namespace

absl::Status SolverConfig::Validate() const {
  if (eta.has_value() && !(std::isfinite(*eta) && *eta > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("eta must be finite and > 0, got ", *eta));
  }
  if (max_iters < 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("max_iters must be >= 0, got ", max_iters));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", delta));
  }
  if (!(stop_tol >= 0.0)) {
    return absl::InvalidArgumentError("stop_tol must be >= 0");
  }
  return absl::OkStatus();
}

double LocalRadius(double norm_bound, double delta) {
  return norm_bound * std::sqrt(2.0 * (1.0 - delta));
}

Vector ProjectLocal(const Vector& h, const Vector& h_tilde, double norm_bound,
                    double delta) {
  const Vector offset = h_tilde - h;
  const double sq = offset.squaredNorm();
  if (sq <= 2.0 * norm_bound * norm_bound * (1.0 - delta)) return h_tilde;
  return h + offset * (LocalRadius(norm_bound, delta) / std::sqrt(sq));
}

Vector ProjectGlobal(const Vector& h_tilde, const Vector& mu, double radius) {
  const Vector offset = h_tilde - mu;
  const double norm = offset.norm();
  if (norm <= radius) return h_tilde;
  return mu + offset * (radius / norm);
}

Vector ProjectFeasible(const Vector& h, const Vector& h_tilde,
                       double norm_bound, double delta, const Vector& mu,
                       double radius) {
  const double r = LocalRadius(norm_bound, delta);
  Vector x = ProjectGlobal(ProjectLocal(h, h_tilde, norm_bound, delta), mu,
                           radius);
  for (int round = 0; round < kMaxProjectionRounds; ++round) {
    if (Inside(x, h, r) && Inside(x, mu, radius)) break;
    x = ProjectGlobal(ProjectLocal(h, x, norm_bound, delta), mu, radius);
  }
  return x;
}

bool IsFeasible(const ObjectiveContext& ctx, const Matrix& p_star,
                double delta) {
  const double r = LocalRadius(ctx.bounds.norm_bound, delta);
  for (int i = 0; i < ctx.num_tokens(); ++i) {
    const Vector p = p_star.row(i).transpose();
    const Vector h_tilde = ctx.base_rows.row(i).transpose() + p;
    if (p.norm() > r + kFeasibilityTol) return false;
    if (!Inside(h_tilde, ctx.bounds.centroid, ctx.bounds.radius)) return false;
  }
  return true;
}

absl::StatusOr<NoisePlan> SolveOpt3(const ObjectiveContext& ctx,
                                    const SolverConfig& cfg,
                                    const ObjectiveConfig& obj_cfg) {
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  if (absl::Status s = obj_cfg.Validate(); !s.ok()) return s;

  const int n = ctx.num_tokens();
  const double norm_bound = ctx.bounds.norm_bound;
  const double radius = ctx.bounds.radius;
  const Vector& mu = ctx.bounds.centroid;
  const double eta = cfg.eta.value_or(1e-2 * LocalRadius(norm_bound, cfg.delta));

  NoisePlan plan;
  plan.p_star = Matrix::Zero(n, ctx.dim());
  absl::StatusOr<double> initial = TotalObjective(plan.p_star, ctx, obj_cfg);
  if (!initial.ok()) return initial.status();
  plan.objective_trace.push_back(*initial);

  int quiet = 0;
  std::vector<absl::Status> errors(n);
  for (int t = 0; t < cfg.max_iters; ++t) {
    ParallelFor(0, n, [&](int64_t i) {
      const Vector h = ctx.base_rows.row(i).transpose();
      const Vector p = plan.p_star.row(i).transpose();
      absl::StatusOr<Vector> grad =
          TokenGradient(static_cast<TokenId>(i), p, ctx, obj_cfg);
      if (!grad.ok()) {
        errors[i] = absl::InternalError(absl::StrCat(
            "solver failed at token ", i, ": ", grad.status().message()));
        return;
      }
      if (!grad->allFinite()) {
        errors[i] = absl::InternalError(
            absl::StrCat("non-finite gradient at token ", i));
        return;
      }
      const Vector h_tilde = ProjectFeasible(h, h + p - eta * *grad,
                                             norm_bound, cfg.delta, mu, radius);
      plan.p_star.row(i) = (h_tilde - h).transpose();
    });
    for (const absl::Status& e : errors) {
      if (!e.ok()) return e;
    }
    absl::StatusOr<double> value = TotalObjective(plan.p_star, ctx, obj_cfg);
    if (!value.ok()) return value.status();
    const double change = std::abs(*value - plan.objective_trace.back());
    plan.objective_trace.push_back(*value);
    quiet = change < cfg.stop_tol ? quiet + 1 : 0;
    if (quiet >= kStopPatience) break;
  }
  plan.feasible = IsFeasible(ctx, plan.p_star, cfg.delta);
  return plan;
}

}  // namespace tokenveil
