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

#include <map>
#include <optional>
#include <random>
#include <vector>

#include "benchmark/benchmark.h"
#include "tokenveil/attacks.h"
#include "tokenveil/clustering.h"
#include "tokenveil/dchi_mechanism.h"
#include "tokenveil/neighbor_graph.h"
#include "tokenveil/objective.h"
#include "tokenveil/pgd_solver.h"

namespace tokenveil {
namespace {

Matrix Rows(int n, int dim, uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal;
  Matrix m(n, dim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) m(i, j) = normal(engine);
  }
  return m;
}

void BM_NeighborGraph(benchmark::State& state) {
  const Matrix rows = Rows(static_cast<int>(state.range(0)), 16, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(BuildNeighborGraph(rows, 2, 3));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NeighborGraph)->Arg(250)->Arg(1000)->Complexity();

void BM_SolveNoisePlan(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix rows = Rows(n, 16, 2);
  std::vector<ClassId> classes(n);
  std::vector<std::optional<ClassId>> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = classes[i] = i % 2;
  auto graph = BuildNeighborGraph(rows, 2, 3);
  auto centroids = ClassCentroids(rows, classes);
  auto ctx = ObjectiveContext::Create(rows, *std::move(graph),
                                      *std::move(centroids), labels);
  SolverConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(SolveOpt3(*ctx, cfg, ObjectiveConfig{}));
  }
}
BENCHMARK(BM_SolveNoisePlan)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_SampleNoise(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  std::mt19937_64 engine(3);
  const Vector center = Vector::Zero(dim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(SampleNoise(dim, 10.0, center, engine));
  }
}
BENCHMARK(BM_SampleNoise)->Arg(16)->Arg(768);

void BM_NearestNeighborQuery(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto space = EmbeddingSpace::Create(Rows(n, 16, 4));
  NearestNeighborIndex index(*space);
  const Matrix queries = Rows(64, 16, 5);
  for (auto _ : state) {
    for (int q = 0; q < queries.rows(); ++q) {
      benchmark::DoNotOptimize(index.Query(queries.row(q).transpose()));
    }
  }
  state.SetItemsProcessed(state.iterations() * queries.rows());
}
BENCHMARK(BM_NearestNeighborQuery)->Arg(1000)->Arg(10000);

}  // namespace
}  // namespace tokenveil

BENCHMARK_MAIN();
