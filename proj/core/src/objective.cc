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

#include "tokenveil/objective.h"

#include <cmath>

#include "absl/strings/str_cat.h"
#include "tokenveil/parallel.h"

namespace tokenveil {
namespace {

// Centered vectors shorter than this fraction of the original count as
// constant, which sets the Pearson term to 0.
constexpr double kConstantTol = 1e-12;

bool IsConstant(const Vector& centered, double norm) {
  return centered.norm() <= kConstantTol * norm;
}

Vector Centered(const Vector& v) {
  return v.array() - v.mean();
}

// d/du of cos(u, v) = v / (|u||v|) - (u.v) u / (|u|^3 |v|).
Vector CosineGradient(const Vector& u, const Vector& v, double nu, double nv) {
  const double dot = u.dot(v);
  return v / (nu * nv) - u * (dot / (nu * nu * nu * nv));
}

}  // namespace

absl::Status ObjectiveConfig::Validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("lambda must be finite and >= 0, got ", lambda));
  }
  return absl::OkStatus();
}

absl::StatusOr<ObjectiveContext> ObjectiveContext::Create(
    Matrix base_rows, NeighborGraph graph,
    std::map<ClassId, Vector> class_centroids,
    std::vector<std::optional<ClassId>> labels) {
  const int n = static_cast<int>(base_rows.rows());
  if (n == 0 || base_rows.cols() == 0) {
    return absl::InvalidArgumentError("objective needs a non-empty matrix");
  }
  if (graph.size() != n || static_cast<int>(graph.indirect.size()) != n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "neighbor graph has ", graph.size(), " tokens, rows have ", n));
  }
  if (static_cast<int>(labels.size()) != n) {
    return absl::InvalidArgumentError(
        absl::StrCat("got ", labels.size(), " labels for ", n, " rows"));
  }
  auto in_range = [n](TokenId t) { return t >= 0 && t < n; };
  for (int i = 0; i < n; ++i) {
    for (TokenId j : graph.knn[i]) {
      if (!in_range(j)) {
        return absl::InvalidArgumentError(
            absl::StrCat("neighbor id ", j, " out of range"));
      }
    }
    for (TokenId j : graph.indirect[i]) {
      if (!in_range(j)) {
        return absl::InvalidArgumentError(
            absl::StrCat("indirect neighbor id ", j, " out of range"));
      }
    }
  }
  for (const auto& [cls, centroid] : class_centroids) {
    if (centroid.size() != base_rows.cols()) {
      return absl::InvalidArgumentError(
          absl::StrCat("centroid of class ", cls, " has dim ", centroid.size()));
    }
  }
  ObjectiveContext ctx;
  ctx.bounds = ComputeSpaceStatistics(base_rows);
  ctx.base_rows = std::move(base_rows);
  ctx.graph = std::move(graph);
  ctx.class_centroids = std::move(class_centroids);
  ctx.labels = std::move(labels);
  return ctx;
}

absl::StatusOr<double> Similarity(const Vector& u, const Vector& v,
                                  bool include_corr) {
  if (u.size() != v.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "similarity of vectors with dims ", u.size(), " and ", v.size()));
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    return absl::InvalidArgumentError("similarity of a zero vector");
  }
  double value = u.dot(v) / (nu * nv);
  if (include_corr) {
    const Vector uc = Centered(u);
    const Vector vc = Centered(v);
    if (!IsConstant(uc, nu) && !IsConstant(vc, nv)) {
      value += uc.dot(vc) / (uc.norm() * vc.norm());
    }
  }
  return value;
}

Vector SimilarityGradient(const Vector& u, const Vector& v, bool include_corr) {
  const double nu = u.norm();
  const double nv = v.norm();
  Vector grad = CosineGradient(u, v, nu, nv);
  if (include_corr) {
    const Vector uc = Centered(u);
    const Vector vc = Centered(v);
    if (!IsConstant(uc, nu) && !IsConstant(vc, nv)) {
      // Centering is a symmetric projection and both vectors are already
      // centered, so the chain rule leaves the cosine gradient unchanged.
      grad += CosineGradient(uc, vc, uc.norm(), vc.norm());
    }
  }
  return grad;
}

absl::StatusOr<std::optional<double>> EiaGap(TokenId token, const Vector& p,
                                             const ObjectiveContext& ctx,
                                             const ObjectiveConfig& cfg,
                                             EvalCounter* counter) {
  const auto& near = ctx.graph.knn[token];
  const auto& far = ctx.graph.indirect[token];
  if (far.empty() || near.empty()) return std::optional<double>();
  const Vector h_tilde = ctx.base_rows.row(token).transpose() + p;
  double near_sum = 0.0;
  for (TokenId j : near) {
    absl::StatusOr<double> s =
        Similarity(h_tilde, ctx.base_rows.row(j).transpose(), cfg.include_corr);
    if (!s.ok()) return s.status();
    near_sum += *s;
  }
  double far_sum = 0.0;
  for (TokenId j : far) {
    absl::StatusOr<double> s =
        Similarity(h_tilde, ctx.base_rows.row(j).transpose(), cfg.include_corr);
    if (!s.ok()) return s.status();
    far_sum += *s;
  }
  if (counter != nullptr) {
    counter->similarity_calls += static_cast<int64_t>(near.size() + far.size());
  }
  return std::optional<double>(near_sum / static_cast<double>(near.size()) -
                               far_sum / static_cast<double>(far.size()));
}

namespace {

absl::StatusOr<const Vector*> CentroidFor(TokenId token,
                                          const ObjectiveContext& ctx) {
  const std::optional<ClassId>& label = ctx.labels[token];
  if (!label.has_value()) {
    return absl::InvalidArgumentError(
        absl::StrCat("token ", token, " has no class label"));
  }
  auto it = ctx.class_centroids.find(*label);
  if (it == ctx.class_centroids.end()) {
    return absl::InvalidArgumentError(
        absl::StrCat("no centroid for class ", *label));
  }
  return &it->second;
}

}  // namespace

absl::StatusOr<double> AiaGap(TokenId token, const Vector& p,
                              const ObjectiveContext& ctx,
                              const ObjectiveConfig& cfg) {
  absl::StatusOr<const Vector*> mu = CentroidFor(token, ctx);
  if (!mu.ok()) return mu.status();
  const Vector offset = ctx.base_rows.row(token).transpose() + p - **mu;
  return cfg.lambda * offset.squaredNorm();
}

absl::StatusOr<double> TokenObjective(TokenId token, const Vector& p,
                                      const ObjectiveContext& ctx,
                                      const ObjectiveConfig& cfg,
                                      EvalCounter* counter) {
  absl::StatusOr<std::optional<double>> eia = EiaGap(token, p, ctx, cfg, counter);
  if (!eia.ok()) return eia.status();
  absl::StatusOr<double> aia = AiaGap(token, p, ctx, cfg);
  if (!aia.ok()) return aia.status();
  return eia->value_or(0.0) - *aia;
}

absl::StatusOr<Vector> TokenGradient(TokenId token, const Vector& p,
                                     const ObjectiveContext& ctx,
                                     const ObjectiveConfig& cfg) {
  const Vector h_tilde = ctx.base_rows.row(token).transpose() + p;
  absl::StatusOr<const Vector*> mu = CentroidFor(token, ctx);
  if (!mu.ok()) return mu.status();
  Vector grad = -2.0 * cfg.lambda * (h_tilde - **mu);

  const auto& near = ctx.graph.knn[token];
  const auto& far = ctx.graph.indirect[token];
  if (far.empty() || near.empty()) return grad;
  if (h_tilde.norm() == 0.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("perturbed row of token ", token, " is zero"));
  }
  Vector near_grad = Vector::Zero(p.size());
  for (TokenId j : near) {
    near_grad += SimilarityGradient(h_tilde, ctx.base_rows.row(j).transpose(),
                                    cfg.include_corr);
  }
  Vector far_grad = Vector::Zero(p.size());
  for (TokenId j : far) {
    far_grad += SimilarityGradient(h_tilde, ctx.base_rows.row(j).transpose(),
                                   cfg.include_corr);
  }
  grad += near_grad / static_cast<double>(near.size()) -
          far_grad / static_cast<double>(far.size());
  return grad;
}

absl::StatusOr<double> TotalObjective(const Matrix& perturbations,
                                      const ObjectiveContext& ctx,
                                      const ObjectiveConfig& cfg,
                                      EvalCounter* counter) {
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  if (perturbations.rows() != ctx.num_tokens() ||
      perturbations.cols() != ctx.dim()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "perturbations are ", perturbations.rows(), "x", perturbations.cols(),
        ", expected ", ctx.num_tokens(), "x", ctx.dim()));
  }
  const int n = ctx.num_tokens();
  std::vector<double> values(n, 0.0);
  std::vector<int64_t> calls(n, 0);
  std::vector<absl::Status> errors(n);
  ParallelFor(0, n, [&](int64_t i) {
    EvalCounter local;
    absl::StatusOr<double> v =
        TokenObjective(static_cast<TokenId>(i),
                       perturbations.row(i).transpose(), ctx, cfg, &local);
    if (v.ok()) {
      values[i] = *v;
    } else {
      errors[i] = v.status();
    }
    calls[i] = local.similarity_calls;
  });
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!errors[i].ok()) return errors[i];
    total += values[i];
    if (counter != nullptr) counter->similarity_calls += calls[i];
  }
  return total;
}

absl::StatusOr<Matrix> ObjectiveGradient(const Matrix& perturbations,
                                         const ObjectiveContext& ctx,
                                         const ObjectiveConfig& cfg) {
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  if (perturbations.rows() != ctx.num_tokens() ||
      perturbations.cols() != ctx.dim()) {
    return absl::InvalidArgumentError("perturbation shape mismatch");
  }
  const int n = ctx.num_tokens();
  Matrix grad(n, ctx.dim());
  std::vector<absl::Status> errors(n);
  ParallelFor(0, n, [&](int64_t i) {
    absl::StatusOr<Vector> g = TokenGradient(
        static_cast<TokenId>(i), perturbations.row(i).transpose(), ctx, cfg);
    if (g.ok()) {
      grad.row(i) = g->transpose();
    } else {
      errors[i] = g.status();
    }
  });
  for (const absl::Status& e : errors) {
    if (!e.ok()) return e;
  }
  return grad;
}

}  // namespace tokenveil
