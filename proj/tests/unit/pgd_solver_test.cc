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

#include "gtest/gtest.h"
#include "test_util.h"
#include "tokenveil/clustering.h"
#include "tokenveil/neighbor_graph.h"
#include "tokenveil/parallel.h"

namespace tokenveil {
namespace {

using ::tokenveil::testing::RandomMatrix;
using ::tokenveil::testing::RandomVector;
using ::tokenveil::testing::ValueOrDie;

ObjectiveContext StandardFixture(uint64_t seed, int tokens = 40, int dim = 8) {
  const Matrix rows = RandomMatrix(tokens, dim, seed);
  NeighborGraph graph = ValueOrDie(BuildNeighborGraph(rows, 2, 3));
  std::vector<ClassId> classes(tokens);
  std::vector<std::optional<ClassId>> labels(tokens);
  for (int i = 0; i < tokens; ++i) labels[i] = classes[i] = i % 2;
  auto centroids = ValueOrDie(ClassCentroids(rows, classes));
  return ValueOrDie(ObjectiveContext::Create(rows, std::move(graph),
                                             std::move(centroids), labels));
}

// Best per-token objective over a grid of step 0.01 r covering the local
// disk; points outside either ball are skipped.
double GridOracle(const ObjectiveContext& ctx, double delta,
                  const ObjectiveConfig& cfg) {
  const double r = LocalRadius(ctx.bounds.norm_bound, delta);
  const double step = 0.01 * r;
  double total = 0.0;
  for (TokenId i = 0; i < ctx.num_tokens(); ++i) {
    const Vector h = ctx.base_rows.row(i).transpose();
    double best = ValueOrDie(TokenObjective(i, Vector::Zero(2), ctx, cfg));
    for (int a = -100; a <= 100; ++a) {
      for (int b = -100; b <= 100; ++b) {
        Vector p(2);
        p << a * step, b * step;
        if (p.norm() > r) continue;
        if ((h + p - ctx.bounds.centroid).norm() > ctx.bounds.radius) continue;
        if ((h + p).norm() == 0.0) continue;
        best = std::min(best, ValueOrDie(TokenObjective(i, p, ctx, cfg)));
      }
    }
    total += best;
  }
  return total;
}

TEST(ProjectLocalTest, InsideIsUnchanged) {
  const Vector h = RandomVector(4, 1);
  const Vector x = h + RandomVector(4, 2, 0.01);
  const Vector y = ProjectLocal(h, x, 1.0, 0.6);
  EXPECT_EQ(y, x);
}

TEST(ProjectLocalTest, RadialScaling) {
  const double r = LocalRadius(1.0, 0.6);
  EXPECT_NEAR(r, std::sqrt(0.8), 1e-15);
  const Vector y = ProjectLocal(Vector::Zero(2), Vector::Unit(2, 0) * 2 * r, 1.0,
                                0.6);
  EXPECT_NEAR(y(0), r, 1e-15);
  EXPECT_EQ(y(1), 0.0);
}

TEST(ProjectLocalTest, NormIsMinOfOriginalAndRadius) {
  for (uint64_t s = 0; s < 200; ++s) {
    const Vector h = RandomVector(5, s);
    const Vector x = h + RandomVector(5, 1000 + s, 0.5 + (s % 3));
    const double b = 1.0 + 0.01 * s;
    const Vector y = ProjectLocal(h, x, b, 0.6);
    EXPECT_NEAR((y - h).norm(),
                std::min((x - h).norm(), LocalRadius(b, 0.6)), 1e-12);
  }
}

TEST(ProjectGlobalTest, Examples) {
  const Vector mu = Vector::Zero(2);
  const Vector boundary = Vector::Unit(2, 1);
  EXPECT_EQ(ProjectGlobal(boundary, mu, 1.0), boundary);
  EXPECT_EQ(ProjectGlobal(Vector::Unit(2, 1) * 3.0, mu, 1.0), boundary);
  for (uint64_t s = 0; s < 50; ++s) {
    const Vector x = RandomVector(3, s, 3.0);
    const Vector c = RandomVector(3, 100 + s);
    const Vector once = ProjectGlobal(x, c, 1.5);
    EXPECT_LT((ProjectGlobal(once, c, 1.5) - once).norm(), 1e-12);
  }
}

TEST(ProjectFeasibleTest, LandsInBothBalls) {
  for (uint64_t s = 0; s < 200; ++s) {
    const Vector mu = Vector::Zero(3);
    const Vector h = RandomVector(3, s);
    const double radius = h.norm() + 0.1;
    const Vector x = RandomVector(3, 500 + s, 4.0);
    const Vector y = ProjectFeasible(h, x, 1.0, 0.6, mu, radius);
    EXPECT_LE((y - h).norm(), LocalRadius(1.0, 0.6) + 1e-9);
    EXPECT_LE((y - mu).norm(), radius + 1e-9);
  }
}

TEST(SolveOpt3Test, ZeroGradientKeepsZero) {
  // Two tokens sitting on their own class centroids with no indirect sets:
  // the EIA term is skipped and the AIA gradient vanishes.
  Matrix rows(2, 2);
  rows << 1, 0, 0, 1;
  NeighborGraph graph{1, 2, {{1}, {0}}, {{}, {}}};
  Vector c0(2), c1(2);
  c0 << 1, 0;
  c1 << 0, 1;
  const ObjectiveContext ctx = ValueOrDie(ObjectiveContext::Create(
      rows, graph, {{0, c0}, {1, c1}}, {0, 1}));
  SolverConfig cfg;
  cfg.max_iters = 50;
  const NoisePlan plan = ValueOrDie(SolveOpt3(ctx, cfg, {}));
  EXPECT_EQ(plan.p_star, Matrix::Zero(2, 2));
  EXPECT_TRUE(plan.feasible);
}

TEST(SolveOpt3Test, ZeroIterationsGiveZeroPlan) {
  const ObjectiveContext ctx = StandardFixture(1);
  SolverConfig cfg;
  cfg.max_iters = 0;
  const NoisePlan plan = ValueOrDie(SolveOpt3(ctx, cfg, {}));
  EXPECT_EQ(plan.p_star, Matrix::Zero(40, 8));
  EXPECT_EQ(plan.objective_trace.size(), 1u);
}

TEST(SolveOpt3Test, MatchesGridOracleIn2d) {
  ObjectiveConfig obj;
  obj.include_corr = false;
  SolverConfig cfg;
  // Enough iterations for the default step to converge on every seed.
  cfg.max_iters = 20000;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const ObjectiveContext ctx = StandardFixture(seed, 8, 2);
    const NoisePlan plan = ValueOrDie(SolveOpt3(ctx, cfg, obj));
    const double pgd = plan.objective_trace.back();
    const double oracle = GridOracle(ctx, cfg.delta, obj);
    EXPECT_LE(pgd, oracle + 0.02 * std::abs(oracle)) << "seed " << seed;
  }
}

TEST(SolveOpt3Test, TraceNonIncreasingForSmallStep) {
  const ObjectiveContext ctx = StandardFixture(3);
  SolverConfig cfg;
  cfg.eta = 1e-3;
  const NoisePlan plan = ValueOrDie(SolveOpt3(ctx, cfg, {}));
  for (size_t t = 1; t < plan.objective_trace.size(); ++t) {
    EXPECT_LE(plan.objective_trace[t], plan.objective_trace[t - 1] + 1e-9);
  }
}

TEST(SolveOpt3Test, FeasibleAfterEveryIteration) {
  const ObjectiveContext ctx = StandardFixture(4);
  for (int iters : {1, 2, 5, 20, 200}) {
    SolverConfig cfg;
    cfg.max_iters = iters;
    cfg.stop_tol = 0.0;
    const NoisePlan plan = ValueOrDie(SolveOpt3(ctx, cfg, {}));
    EXPECT_TRUE(plan.feasible);
    EXPECT_TRUE(IsFeasible(ctx, plan.p_star, cfg.delta));
  }
}

TEST(SolveOpt3Test, DeterministicAcrossThreadCounts) {
  const ObjectiveContext ctx = StandardFixture(5);
  SetMaxThreads(1);
  const NoisePlan a = ValueOrDie(SolveOpt3(ctx, {}, {}));
  SetMaxThreads(4);
  const NoisePlan b = ValueOrDie(SolveOpt3(ctx, {}, {}));
  SetMaxThreads(0);
  EXPECT_EQ(a.p_star, b.p_star);
  EXPECT_EQ(a.objective_trace, b.objective_trace);
}

TEST(SolveOpt3Test, SmallerStepIsNotMuchWorse) {
  int worse = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const ObjectiveContext ctx = StandardFixture(100 + seed);
    const double r = LocalRadius(ctx.bounds.norm_bound, kDefaultDelta);
    SolverConfig big;
    big.eta = 1e-2 * r;
    SolverConfig small = big;
    small.eta = 1e-3 * r;
    small.max_iters = 2000;
    const double a = ValueOrDie(SolveOpt3(ctx, big, {})).objective_trace.back();
    const double b =
        ValueOrDie(SolveOpt3(ctx, small, {})).objective_trace.back();
    if (b > a + 0.05 * std::abs(a)) ++worse;
  }
  EXPECT_EQ(worse, 0);
}

TEST(SolverConfigTest, Validation) {
  SolverConfig cfg;
  EXPECT_TRUE(cfg.Validate().ok());
  cfg.delta = 1.0;
  EXPECT_FALSE(cfg.Validate().ok());
  cfg = SolverConfig();
  cfg.eta = 0.0;
  EXPECT_FALSE(cfg.Validate().ok());
  cfg = SolverConfig();
  cfg.max_iters = -1;
  EXPECT_FALSE(cfg.Validate().ok());
}

}  // namespace
}  // namespace tokenveil
