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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Each check recomputes its reference independently of the code
// under test.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "cli.h"
#include "test_util.h"
#include "tokenveil/attacks.h"
#include "tokenveil/clustering.h"
#include "tokenveil/dchi_mechanism.h"
#include "tokenveil/experiment.h"
#include "tokenveil/file_io.h"
#include "tokenveil/fixture.h"
#include "tokenveil/neighbor_graph.h"
#include "tokenveil/objective.h"
#include "tokenveil/pgd_solver.h"
#include "tokenveil/ptem.h"
#include "tokenveil/split_sim.h"

namespace tokenveil {
namespace {

using ::tokenveil::testing::RandomMatrix;
using ::tokenveil::testing::RelativeError;
using ::tokenveil::testing::SeparatedRows;
using ::tokenveil::testing::ValueOrDie;

struct Outcome {
  bool pass = true;
  std::string detail;

  void Require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

ObjectiveContext Context(const Matrix& rows, int k, int n) {
  const int tokens = static_cast<int>(rows.rows());
  std::vector<ClassId> classes(tokens);
  std::vector<std::optional<ClassId>> labels(tokens);
  for (int i = 0; i < tokens; ++i) labels[i] = classes[i] = i % 2;
  NeighborGraph graph = ValueOrDie(BuildNeighborGraph(rows, k, n));
  auto centroids = ValueOrDie(ClassCentroids(rows, classes));
  return ValueOrDie(ObjectiveContext::Create(rows, std::move(graph),
                                             std::move(centroids), labels));
}

// Bounds recomputed from the rows: B = max norm, mu = mean, R = max distance.
struct Bounds {
  double b = 0.0, r = 0.0;
  Vector mu;
};

Bounds NaiveBounds(const Matrix& rows) {
  Bounds out;
  out.mu = Vector::Zero(rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out.mu += rows.row(i).transpose();
  out.mu /= static_cast<double>(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    out.b = std::max(out.b, rows.row(i).norm());
    out.r = std::max(out.r, (rows.row(i).transpose() - out.mu).norm());
  }
  return out;
}

Outcome Feasibility() {
  Outcome o;
  const Matrix rows = RandomMatrix(1000, 16, 11);
  const ObjectiveContext ctx = Context(rows, 2, 3);
  const SolverConfig cfg;  // delta 0.6
  const NoisePlan plan = ValueOrDie(SolveOpt3(ctx, cfg, ObjectiveConfig{}));
  const Bounds bounds = NaiveBounds(rows);
  const double local = bounds.b * std::sqrt(2.0 * (1.0 - 0.6));
  double worst_local = 0.0, worst_global = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vector p = plan.p_star.row(i).transpose();
    const Vector h = rows.row(i).transpose();
    worst_local = std::max(worst_local, p.norm() - local);
    worst_global = std::max(worst_global, (h + p - bounds.mu).norm() - bounds.r);
  }
  o.Require(worst_local <= 1e-9,
            absl::StrFormat("local excess %.3g", worst_local));
  o.Require(worst_global <= 1e-9,
            absl::StrFormat("global excess %.3g", worst_global));
  o.Require(plan.feasible, "solver reported infeasible");
  o.Require(plan.p_star.norm() > 0.0, "plan is all zero");
  o.detail = absl::StrFormat("max local excess %.3g, max global excess %.3g%s",
                             worst_local, worst_global,
                             o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

double PooledLoss(const Matrix& pooled, const TopModel& top,
                  const std::vector<ClassId>& labels) {
  Matrix logits = pooled * top.EffectiveWeights();
  logits.rowwise() += top.bias.transpose();
  // Cross-entropy written out directly.
  double total = 0.0;
  for (Eigen::Index d = 0; d < logits.rows(); ++d) {
    const double m = logits.row(d).maxCoeff();
    const double lse = m + std::log((logits.row(d).array() - m).exp().sum());
    total += lse - logits(d, labels[d]);
  }
  return total / static_cast<double>(logits.rows());
}

Outcome Gradients() {
  Outcome o;
  double worst_obj = 0.0, worst_adapter = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = std::array<int, 3>{2, 4, 16}[trial % 3];
    const int tokens = 5 + trial % 4;
    const ObjectiveContext ctx =
        Context(RandomMatrix(tokens, dim, 900 + trial), 2, 2);
    const Matrix p = RandomMatrix(tokens, dim, 1900 + trial, 0.2);
    ObjectiveConfig cfg;
    cfg.lambda = 0.3;
    const Matrix g = ValueOrDie(ObjectiveGradient(p, ctx, cfg));
    for (int i = 0; i < tokens; ++i) {
      for (int d = 0; d < dim; ++d) {
        Matrix up = p, dn = p;
        up(i, d) += 1e-5;
        dn(i, d) -= 1e-5;
        const double fd = (ValueOrDie(TotalObjective(up, ctx, cfg)) -
                           ValueOrDie(TotalObjective(dn, ctx, cfg))) / 2e-5;
        if (std::abs(fd) < 1e-6 && std::abs(g(i, d)) < 1e-6) continue;
        worst_obj = std::max(worst_obj, RelativeError(g(i, d), fd));
      }
    }

    // Adapter gradients of a random top model on a random pooled batch.
    const int classes = 2 + trial % 3, rank = 1 + trial % 4, batch = 4;
    TopModel top = ValueOrDie(
        TopModel::Create(RandomMatrix(dim, classes, 3000 + trial), rank, trial));
    top.adapter_b = RandomMatrix(rank, classes, 4000 + trial);
    top.bias = RandomMatrix(classes, 1, 5000 + trial).col(0);
    std::vector<Matrix> sent;
    std::vector<ClassId> labels;
    for (int d = 0; d < batch; ++d) {
      sent.push_back(RandomMatrix(3 + d, dim, 6000 + 10 * trial + d));
      labels.push_back(d % classes);
    }
    CloudServer cloud(top);
    const Matrix logits = ValueOrDie(cloud.Forward(sent));
    const LossGradient lg = ValueOrDie(SoftmaxCrossEntropy(logits, labels));
    const AdapterGradients ag = ValueOrDie(cloud.Backward(lg.output_gradient));
    Matrix pooled(batch, dim);
    for (int d = 0; d < batch; ++d) pooled.row(d) = sent[d].colwise().mean();
    auto check = [&](double* param, Eigen::Index size, const double* analytic) {
      for (Eigen::Index i = 0; i < size; ++i) {
        const double saved = param[i];
        param[i] = saved + 1e-5;
        const double up = PooledLoss(pooled, top, labels);
        param[i] = saved - 1e-5;
        const double dn = PooledLoss(pooled, top, labels);
        param[i] = saved;
        const double fd = (up - dn) / 2e-5;
        if (std::abs(fd) < 1e-6 && std::abs(analytic[i]) < 1e-6) continue;
        worst_adapter = std::max(worst_adapter, RelativeError(analytic[i], fd));
      }
    };
    check(top.adapter_a.data(), top.adapter_a.size(), ag.d_adapter_a.data());
    check(top.adapter_b.data(), top.adapter_b.size(), ag.d_adapter_b.data());
    check(top.bias.data(), top.bias.size(), ag.d_bias.data());
  }
  o.Require(worst_obj < 1e-4, "objective gradient off");
  o.Require(worst_adapter < 1e-4, "adapter gradient off");
  o.detail = absl::StrFormat("worst rel error objective %.3g, adapter %.3g%s",
                             worst_obj, worst_adapter,
                             o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// Best per-token objective on a grid of step 0.01 r over the feasible region.
double GridOracle(const ObjectiveContext& ctx, const ObjectiveConfig& cfg) {
  const Bounds bounds = NaiveBounds(ctx.base_rows);
  const double r = bounds.b * std::sqrt(2.0 * (1.0 - 0.6));
  const double step = 0.01 * r;
  double total = 0.0;
  for (TokenId i = 0; i < ctx.num_tokens(); ++i) {
    const Vector h = ctx.base_rows.row(i).transpose();
    double best = ValueOrDie(TokenObjective(i, Vector::Zero(2), ctx, cfg));
    for (int a = -100; a <= 100; ++a) {
      for (int b = -100; b <= 100; ++b) {
        Vector p(2);
        p << a * step, b * step;
        if (p.norm() > r || (h + p - bounds.mu).norm() > bounds.r ||
            (h + p).norm() == 0.0) {
          continue;
        }
        best = std::min(best, ValueOrDie(TokenObjective(i, p, ctx, cfg)));
      }
    }
    total += best;
  }
  return total;
}

Outcome SolverVsOracle() {
  Outcome o;
  ObjectiveConfig obj;
  // With two coordinates the Pearson term is a sign, so it is left out.
  obj.include_corr = false;
  SolverConfig cfg;
  cfg.max_iters = 20000;
  std::vector<std::string> misses;
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const ObjectiveContext ctx = Context(RandomMatrix(8, 2, seed), 2, 3);
    const double pgd = ValueOrDie(SolveOpt3(ctx, cfg, obj)).objective_trace.back();
    const double oracle = GridOracle(ctx, obj);
    const double gap = (pgd - oracle) / std::abs(oracle);
    worst = std::max(worst, gap);
    if (gap > 0.02) {
      misses.push_back(absl::StrFormat("seed %d %.1f%%", seed, 100.0 * gap));
    }
  }
  o.Require(misses.empty(),
            absl::StrCat(misses.size(), "/20 seeds above 2%: ",
                         absl::StrJoin(misses, ", ")));
  if (o.pass) o.detail = absl::StrFormat("worst gap %.2f%%", 100.0 * worst);
  return o;
}

Outcome Sampler() {
  Outcome o;
  const int dim = 8, draws = 100000;
  const double rate = 2.5;
  Vector center = Vector::LinSpaced(dim, -1.0, 1.0);
  std::mt19937_64 engine(21);
  Vector sum = Vector::Zero(dim);
  double radius = 0.0;
  for (int i = 0; i < draws; ++i) {
    const Vector p = SampleNoise(dim, rate, center, engine);
    sum += p;
    radius += (p - center).norm();
  }
  const double mean_radius = radius / draws;
  const double expected = dim / rate;
  const double mean_err = (sum / draws - center).norm();
  o.Require(std::abs(mean_radius - expected) <= 0.03 * expected,
            absl::StrFormat("mean radius %.4f vs %.4f", mean_radius, expected));
  o.Require(mean_err <= 0.05, absl::StrFormat("mean offset %.4f", mean_err));

  const double rate1 = 1.0, width = 0.25;
  const int bins = 20, draws1 = 200000;
  std::vector<double> counts(bins, 0.0);
  std::mt19937_64 engine1(22);
  for (int i = 0; i < draws1; ++i) {
    const double x = SampleNoise(1, rate1, Vector::Zero(1), engine1)(0);
    const int b = static_cast<int>(std::floor((x + 2.5) / width));
    if (b >= 0 && b < bins) counts[b] += 1.0;
  }
  double worst = -1e9;
  for (int a = 0; a < bins; ++a) {
    for (int b = 0; b < bins; ++b) {
      worst = std::max(worst, std::log(counts[a] / counts[b]) -
                                  rate1 * std::abs(a - b) * width);
    }
  }
  o.Require(worst <= 0.1, absl::StrFormat("density ratio excess %.3f", worst));
  if (o.pass) {
    o.detail = absl::StrFormat(
        "radius %.4f vs %.4f, mean offset %.4f, ratio excess %.3f", mean_radius,
        expected, mean_err, worst);
  }
  return o;
}

void Clouds(int per_class, int classes, double gap, uint64_t seed, Matrix* x,
            std::vector<ClassId>* y) {
  *x = RandomMatrix(per_class * classes, 4, seed);
  y->resize(per_class * classes);
  for (int i = 0; i < x->rows(); ++i) {
    (*y)[i] = i % classes;
    x->row(i).array() += gap * (*y)[i];
  }
}

std::vector<ClassId> Shuffled(std::vector<ClassId> y, uint64_t seed) {
  std::shuffle(y.begin(), y.end(), std::mt19937_64(seed));
  return y;
}

Outcome AttackBaselines() {
  Outcome o;
  const EmbeddingSpace space =
      ValueOrDie(EmbeddingSpace::Create(SeparatedRows(200, 16, 31)));
  const BottomModel bottom = ValueOrDie(BottomModel::Create(space, {}));
  std::vector<int64_t> truth(200), a0(200), a2(200);
  NearestNeighborIndex index(space);
  for (int t = 0; t < 200; ++t) {
    truth[t] = t;
    const Vector h = space.vectors().row(t).transpose();
    a0[t] = ActivationInversion(h, bottom);
    a2[t] = ValueOrDie(index.Query(h));
  }
  const double asr0 =
      ValueOrDie(MakeReport(AttackId::kActivationInversion, truth, a0)).asr;
  const double asr2 =
      ValueOrDie(MakeReport(AttackId::kNearestNeighbor, truth, a2)).asr;
  o.Require(asr0 == 1.0, absl::StrCat("a0 asr ", asr0));
  o.Require(asr2 == 1.0, absl::StrCat("a2 asr ", asr2));

  std::mt19937_64 engine(32);
  std::uniform_int_distribution<TokenId> token(0, 199);
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Matrix table = Matrix::Zero(200, 16);
    std::set<TokenId> used;
    const Matrix w = RandomMatrix(16, 3, 100 + trial);
    const Matrix g = RandomMatrix(4, 3, 200 + trial);
    for (int d = 0; d < 4; ++d) {
      const Vector row = w * g.row(d).transpose() / 6.0;
      for (int j = 0; j < 6; ++j) {
        const TokenId t = token(engine);
        used.insert(t);
        table.row(t) += row.transpose();
      }
    }
    const std::vector<TokenId> got = ValueOrDie(GradientInversion(table, bottom));
    exact += std::set<TokenId>(got.begin(), got.end()) == used;
  }
  o.Require(exact == 100, absl::StrCat("a1 exact on ", exact, "/100"));

  Matrix train, test;
  std::vector<ClassId> ytrain, ytest;
  Clouds(100, 2, 100.0, 41, &train, &ytrain);
  Clouds(100, 2, 100.0, 42, &test, &ytest);
  const double a3 =
      ValueOrDie(SupervisedAttributeAttack(train, ytrain, test, ytest, {})).asr;
  const double a5 =
      ValueOrDie(ClusteringAttack(test, ytest, train, ytrain, 2, 0)).asr;
  o.Require(a3 >= 0.99, absl::StrCat("a3 asr ", a3));
  o.Require(a5 >= 0.99, absl::StrCat("a5 asr ", a5));

  std::vector<std::string> chance;
  for (int classes : {2, 3}) {
    Clouds(300, classes, 0.0, 43, &train, &ytrain);
    Clouds(300, classes, 0.0, 44, &test, &ytest);
    const auto ys = Shuffled(ytrain, 45), yt = Shuffled(ytest, 46);
    const double level = 1.0 / classes;
    const double c3 =
        ValueOrDie(SupervisedAttributeAttack(train, ys, test, yt, {})).asr;
    const double c4 =
        ValueOrDie(GradientAttributeAttack(train, ys, test, yt, {})).asr;
    const double c5 =
        ValueOrDie(ClusteringAttack(test, yt, train, ys, classes, 0)).asr;
    for (double c : {c3, c4, c5}) {
      o.Require(std::abs(c - level) <= 0.1,
                absl::StrFormat("chance check %.3f vs %.3f", c, level));
    }
    chance.push_back(absl::StrFormat("|C|=%d: %.3f/%.3f/%.3f", classes, c3, c4, c5));
  }
  if (o.pass) {
    o.detail = absl::StrFormat(
        "a0 %.2f a2 %.2f a1 %d/100 a3 %.3f a5 %.3f; shuffled a3/a4/a5 %s", asr0,
        asr2, exact, a3, a5, absl::StrJoin(chance, ", "));
  }
  return o;
}

const ExperimentData& Data() {
  static const ExperimentData* data = new ExperimentData(
      ValueOrDie(MakeSyntheticFixture(SyntheticFixtureOptions{})).data());
  return *data;
}

std::string Points(const std::vector<double>& v) {
  std::vector<std::string> parts;
  for (double x : v) parts.push_back(absl::StrFormat("%.4f", x));
  return absl::StrJoin(parts, " ");
}

Outcome TradeoffTrend() {
  Outcome o;
  ExperimentConfig cfg;
  cfg.attacks = {AttackId::kNearestNeighbor};
  const std::vector<double> eps = {80, 60, 40, 30, 20, 10};
  const auto records = ValueOrDie(Sweep(Data(), cfg, eps));
  std::vector<double> asr, utility;
  for (const TradeoffRecord& r : records) {
    asr.push_back(r.asr.at(AttackId::kNearestNeighbor));
    utility.push_back(r.utility);
  }
  int inversions = 0;
  for (size_t i = 1; i < eps.size(); ++i) {
    const double rise = asr[i] - asr[i - 1];
    if (rise > 0.0) {
      ++inversions;
      o.Require(rise <= 0.02, absl::StrFormat("a2 rises %.4f", rise));
    }
    o.Require(utility[i] <= utility[i - 1] + 0.01,
              absl::StrFormat("utility rises at eps %g", eps[i]));
  }
  o.Require(inversions <= 1, absl::StrCat(inversions, " a2 inversions"));
  o.detail = absl::StrCat("eps 80..10 a2 [", Points(asr), "] utility [",
                          Points(utility), "]",
                          o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

Outcome HopTrend() {
  Outcome o;
  std::vector<double> utility;
  for (int n : {3, 4, 5}) {
    ExperimentConfig cfg;
    cfg.epsilon = 10.0;
    cfg.n = n;
    cfg.attacks = {AttackId::kNearestNeighbor};
    utility.push_back(ValueOrDie(RunExperiment(Data(), cfg)).utility);
  }
  for (size_t i = 1; i < utility.size(); ++i) {
    o.Require(utility[i] <= utility[i - 1] + 0.01, "utility rises with n");
  }
  o.detail = absl::StrCat("n 3..5 utility [", Points(utility), "]",
                          o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

Outcome Ablation() {
  Outcome o;
  ExperimentConfig full;
  full.epsilon = 10.0;
  full.attacks = {AttackId::kNearestNeighbor};
  const TradeoffRecord target = ValueOrDie(RunExperiment(Data(), full));
  const double goal = target.asr.at(AttackId::kNearestNeighbor);

  // Attack-2 ASR rises with epsilon; bisect log(epsilon) until it lands within
  // 2 points of the full pipeline.
  ExperimentConfig plain = full;
  plain.importance = false;
  double lo = std::log(1.0), hi = std::log(1000.0);
  std::optional<TradeoffRecord> matched;
  for (int step = 0; step < 30 && !matched; ++step) {
    plain.epsilon = std::exp(0.5 * (lo + hi));
    const TradeoffRecord r = ValueOrDie(RunExperiment(Data(), plain));
    const double asr = r.asr.at(AttackId::kNearestNeighbor);
    if (std::abs(asr - goal) <= 0.02) {
      matched = r;
    } else if (asr < goal) {
      lo = std::log(plain.epsilon);
    } else {
      hi = std::log(plain.epsilon);
    }
  }
  if (!matched) {
    o.Require(false, "no epsilon matched the full pipeline's a2 asr");
    return o;
  }
  o.Require(target.utility >= matched->utility,
            "importance scaling loses utility at matched a2");
  o.detail = absl::StrFormat(
      "full eps 10: utility %.4f a2 %.4f; no importance eps %.2f: utility "
      "%.4f a2 %.4f%s",
      target.utility, goal, matched->epsilon, matched->utility,
      matched->asr.at(AttackId::kNearestNeighbor),
      o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// Runs the full command set once and returns every artifact by name.
std::map<std::string, std::string> CliRun(const std::filesystem::path& dir,
                                          const std::string& threads,
                                          Outcome& o) {
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto p = [&](const std::string& name) { return (dir / name).string(); };
  std::map<std::string, std::string> stdout_by_step;
  int step = 0;
  auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), {"tokenveil", "--threads", threads});
    std::ostringstream out, err;
    const int code = cli::RunCli(args, out, err);
    if (code != 0) o.Require(false, absl::StrCat(args[3], " exit ", code, " ", err.str()));
    stdout_by_step[absl::StrCat("stdout.", step++)] = out.str();
  };
  run({"make-fixture", "--out-dir", p("fx"), "--vocab-size", "120", "--arcs",
       "6", "--docs", "200", "--seed", "3"});
  const std::string emb = p("fx/embeddings.ptem");
  run({"graph", "--embeddings", emb, "--k", "2", "--n", "3", "--out", p("graph.json")});
  run({"importance", "--corpus", p("fx/corpus.txt"), "--vocab",
       p("fx/vocab.txt"), "--out", p("importance.json")});
  run({"solve", "--embeddings", emb, "--graph", p("graph.json"), "--clusters",
       "2", "--seed", "5", "--out", p("plan.ptem")});
  run({"perturb", "--embeddings", emb, "--plan", p("plan.ptem"), "--importance",
       p("importance.json"), "--epsilon", "10", "--seed", "7", "--out",
       p("perturbed.ptem")});

  // Inputs for the gradient and attribute attacks.
  const Matrix rows = ValueOrDie(ReadPtem(emb));
  Matrix table = Matrix::Zero(rows.rows(), rows.cols());
  for (int t : {3, 17, 40}) table.row(t) = rows.row(t) * 0.5;
  if (!WritePtem(p("table.ptem"), table).ok()) o.Require(false, "table write");
  std::string labels;
  for (Eigen::Index t = 0; t < rows.rows(); ++t) absl::StrAppend(&labels, t % 2, "\n");
  if (!WriteFileAtomically(p("labels.txt"), labels).ok()) {
    o.Require(false, "labels write");
  }
  if (!WriteFileAtomically(p("used.txt"), "3 17 40\n").ok()) {
    o.Require(false, "ids write");
  }
  for (const char* a : {"a0", "a2"}) {
    run({"attack", "--attack", a, "--observed", p("perturbed.ptem"),
         "--embeddings", emb, "--out", p(absl::StrCat(a, ".json"))});
  }
  run({"attack", "--attack", "a1", "--observed", p("table.ptem"),
       "--embeddings", emb, "--truth", p("used.txt"), "--out", p("a1.json")});
  for (const char* a : {"a3", "a4", "a5"}) {
    run({"attack", "--attack", a, "--observed", p("perturbed.ptem"), "--labels",
         p("labels.txt"), "--shadow", emb, "--shadow-labels", p("labels.txt"),
         "--seed", "9", "--format", "csv", "--out", p(absl::StrCat(a, ".csv"))});
  }
  const std::vector<std::string> experiment = {
      "--config", p("fx/experiment.cfg"), "--set", "rounds=40", "--attacks",
      "a0,a2,a3,a4,a5", "--seed", "11"};
  std::vector<std::string> sim = {"simulate", "--out", p("record.json")};
  sim.insert(sim.end(), experiment.begin(), experiment.end());
  run(sim);
  // Gradient inversion needs the embedding to be the whole bottom model.
  run({"simulate", "--config", p("fx/experiment.cfg"), "--set", "rounds=40",
       "--l", "1", "--attacks", "a1", "--seed", "11", "--format", "csv",
       "--out", p("record_a1.csv")});
  std::vector<std::string> sweep = {"sweep", "--epsilons", "40,10", "--out-dir",
                                    p("sweep")};
  sweep.insert(sweep.end(), experiment.begin(), experiment.end());
  run(sweep);
  run({"rouge", "--candidate", "a b c d", "--reference", "a c d e"});

  std::map<std::string, std::string> artifacts = stdout_by_step;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name =
        std::filesystem::relative(entry.path(), dir).string();
    artifacts[name] = ValueOrDie(ReadFileToString(entry.path().string()));
  }
  return artifacts;
}

Outcome Determinism() {
  Outcome o;
  const auto base = std::filesystem::temp_directory_path() / "tokenveil_accept";
  const auto dir = base / "run";
  const auto first = CliRun(dir, "1", o);
  const auto second = CliRun(dir, "1", o);
  const auto wide = CliRun(dir, "4", o);
  std::filesystem::remove_all(base);
  for (const auto* other : {&second, &wide}) {
    if (other->size() != first.size()) {
      o.Require(false, "artifact sets differ");
      continue;
    }
    for (const auto& [name, bytes] : first) {
      auto it = other->find(name);
      if (it == other->end() || it->second != bytes) {
        o.Require(false, absl::StrCat(name, " differs"));
      }
    }
  }
  if (o.pass) {
    o.detail = absl::StrCat(first.size(),
                            " artifacts identical over 2 runs and threads 1/4");
  }
  return o;
}

Outcome FormatFidelity() {
  Outcome o;
  Matrix m = RandomMatrix(37, 5, 51);
  m(0, 0) = -0.0;
  m(0, 1) = std::numeric_limits<float>::denorm_min();
  m(0, 2) = std::numeric_limits<float>::max();
  m(0, 3) = std::numeric_limits<float>::lowest();
  m(0, 4) = 1.0 / 3.0;  // rounded to float on write
  const auto path =
      (std::filesystem::temp_directory_path() / "tokenveil_accept.ptem").string();
  o.Require(WritePtem(path, m).ok(), "ptem write");
  const std::string bytes = ValueOrDie(ReadFileToString(path));
  const Matrix back = ValueOrDie(ReadPtem(path));
  o.Require(back.rows() == 37 && back.cols() == 5, "ptem shape");
  bool exact = true;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const float want = static_cast<float>(m.data()[i]);
    const float got = static_cast<float>(back.data()[i]);
    exact &= std::memcmp(&want, &got, sizeof(float)) == 0;
  }
  o.Require(exact, "ptem values not bit-exact");
  o.Require(EncodePtem(back) == bytes, "re-encoded ptem differs");
  o.Require(bytes.size() == 16 + 4 * 37 * 5, "ptem size");
  std::filesystem::remove(path);

  std::vector<TradeoffRecord> records(2);
  records[0].epsilon = 80.0;
  records[0].utility = 0.98765432;
  records[0].asr[AttackId::kNearestNeighbor] = 1.0 / 7.0;
  records[1].epsilon = 10.0;
  records[1].utility = 0.5;
  const std::vector<AttackId> ids = {
      AttackId::kActivationInversion, AttackId::kGradientInversion,
      AttackId::kNearestNeighbor,     AttackId::kSupervisedAttribute,
      AttackId::kGradientAttribute,   AttackId::kClustering};
  const std::string csv = FormatTradeoffCsv(records, ids);
  const std::vector<std::string> lines =
      absl::StrSplit(csv, '\n', absl::SkipEmpty());
  o.Require(lines.size() == 3, "csv line count");
  o.Require(!lines.empty() &&
                lines[0] ==
                    "epsilon,utility,asr_a0,asr_a1,asr_a2,asr_a3,asr_a4,asr_a5",
            "csv header");
  const std::regex row("^-?[0-9]+\\.[0-9]{6}(,-?[0-9]+\\.[0-9]{6}){7}$");
  for (size_t i = 1; i < lines.size(); ++i) {
    o.Require(std::regex_match(lines[i], row), "csv row format: " + lines[i]);
  }
  o.Require(lines.size() > 1 &&
                lines[1] == "80.000000,0.987654,0.000000,0.000000,0.142857,"
                            "0.000000,0.000000,0.000000",
            "csv values");
  if (o.pass) o.detail = "ptem bit-exact; csv header and 6-decimal rows match";
  return o;
}

}  // namespace
}  // namespace tokenveil

int main() {
  using Clock = std::chrono::steady_clock;
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0 = no runtime limit
    std::function<tokenveil::Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "feasibility", 30, tokenveil::Feasibility},
      {2, "gradients", 10, tokenveil::Gradients},
      {3, "solver vs grid oracle", 60, tokenveil::SolverVsOracle},
      {4, "sampler", 30, tokenveil::Sampler},
      {5, "attack baselines", 0, tokenveil::AttackBaselines},
      {6, "tradeoff trend", 300, tokenveil::TradeoffTrend},
      {7, "hop trend", 0, tokenveil::HopTrend},
      {8, "importance ablation", 0, tokenveil::Ablation},
      {9, "determinism", 0, tokenveil::Determinism},
      {10, "format fidelity", 0, tokenveil::FormatFidelity},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = Clock::now();
    tokenveil::Outcome o = c.run();
    const double secs =
        std::chrono::duration<double>(Clock::now() - start).count();
    if (c.limit_s > 0 && secs >= c.limit_s) {
      o.pass = false;
      o.detail += absl::StrFormat("; over the %.0f s limit", c.limit_s);
    }
    failures += !o.pass;
    std::printf("criterion %d %s: %s (%s) [%.1f s]\n", c.id, c.name,
                o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
