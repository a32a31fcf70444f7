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

#include "tokenveil/experiment.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <random>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "tokenveil/clustering.h"
#include "tokenveil/dchi_mechanism.h"
#include "tokenveil/file_io.h"
#include "tokenveil/importance.h"
#include "tokenveil/neighbor_graph.h"
#include "tokenveil/objective.h"
#include "tokenveil/parallel.h"
#include "tokenveil/pgd_solver.h"
#include "tokenveil/rng.h"
#include "tokenveil/split_sim.h"

namespace tokenveil {
namespace {

// Shortest text that parses back to the same double.
std::string RoundTrip(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// Salts for the independent random streams of one experiment.
enum Salt : uint64_t {
  kSaltSplit = 1,
  kSaltBottom,
  kSaltPseudoLabel,
  kSaltTop,
  kSaltSensitivity,
  kSaltTrainNoise,
  kSaltEvalNoise,
  kSaltProbe,
  kSaltClustering,
};

absl::string_view AbslView(std::string_view s) {
  return absl::string_view(s.data(), s.size());
}

absl::Status BadValue(std::string_view key, std::string_view value) {
  return absl::InvalidArgumentError(absl::StrCat(
      "bad value '", std::string(value), "' for key '", std::string(key), "'"));
}

template <typename T>
absl::Status ParseNumber(std::string_view key, std::string_view value, T& out) {
  if constexpr (std::is_floating_point_v<T>) {
    if (!absl::SimpleAtod(AbslView(value), &out) || !std::isfinite(out)) {
      return BadValue(key, value);
    }
  } else {
    if (!absl::SimpleAtoi(AbslView(value), &out)) return BadValue(key, value);
  }
  return absl::OkStatus();
}

absl::Status ParseBool(std::string_view key, std::string_view value,
                       bool& out) {
  if (!absl::SimpleAtob(AbslView(value), &out)) return BadValue(key, value);
  return absl::OkStatus();
}

absl::Status Stage(std::string_view stage, const absl::Status& s) {
  return absl::Status(s.code(),
                      absl::StrCat(std::string(stage), ": ", s.message()));
}

absl::Status ValidateConfig(const ExperimentConfig& c) {
  auto fail = [](std::string_view what) {
    return absl::InvalidArgumentError(
        absl::StrCat("invalid experiment config: ", std::string(what)));
  };
  if (!(c.epsilon > 0.0)) return fail("epsilon must be > 0");
  if (c.split_layers < 1) return fail("l must be >= 1");
  if (c.k < 1) return fail("k must be >= 1");
  if (c.n < 2) return fail("n must be >= 2");
  if (!(c.lambda >= 0.0)) return fail("lambda must be >= 0");
  if (!(c.delta > 0.0 && c.delta < 1.0)) return fail("delta must be in (0,1)");
  if (c.rank < 1) return fail("rank must be >= 1");
  if (c.rounds < 0) return fail("rounds must be >= 0");
  if (!(c.step >= 0.0)) return fail("step must be >= 0");
  if (c.batch < 1) return fail("batch must be >= 1");
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) {
    return fail("test_fraction must be in (0,1)");
  }
  if (!(c.layer_noise >= 0.0)) return fail("layer_noise must be >= 0");
  if (c.clusters < 0) return fail("clusters must be >= 0");
  if (c.solver_iters < 0) return fail("solver_iters must be >= 0");
  if (!(c.eta >= 0.0)) return fail("eta must be >= 0");
  if (c.sensitivity_pairs < 1) return fail("sensitivity_pairs must be >= 1");
  if (c.probe_epochs < 0) return fail("probe_epochs must be >= 0");
  if (!(c.probe_step >= 0.0)) return fail("probe_step must be >= 0");
  if (c.attack_tokens < 1) return fail("attack_tokens must be >= 1");
  if (c.attacks.empty()) return fail("attacks must not be empty");
  return absl::OkStatus();
}

// Training traces reduced to what the attacks read.
struct TraceLog {
  std::vector<TokenId> tokens;  // one per sent row, in round order
  Matrix rows;                  // sent rows, capped at attack_tokens
  Matrix pooled;                // one row per sent document
  Matrix gradients;             // per-example adapter gradients
  std::vector<ClassId> labels;  // per sent document
  std::vector<bool> shadow;     // per sent document: hashed source parity
  std::vector<std::vector<TokenId>> round_tokens;  // for a1: batch tokens
  std::vector<Matrix> round_table_grad;            // for a1
};

absl::StatusOr<AttackReport> RunTokenAttack(
    AttackId id, const TraceLog& log, const EmbeddingSpace& space,
    const Matrix& vocab_outputs) {
  const Eigen::Index n = log.rows.rows();
  std::vector<int64_t> truth(n), pred(n);
  std::vector<absl::Status> errors(n);
  NearestNeighborIndex index(space);
  ParallelFor(0, n, [&](int64_t i) {
    const Vector h = log.rows.row(i).transpose();
    truth[i] = log.tokens[i];
    if (id == AttackId::kActivationInversion) {
      pred[i] = ActivationInversion(h, vocab_outputs);
      return;
    }
    absl::StatusOr<TokenId> t = index.Query(h);
    if (t.ok()) {
      pred[i] = *t;
    } else {
      errors[i] = t.status();
    }
  });
  for (const absl::Status& s : errors) {
    if (!s.ok()) return s;
  }
  return MakeReport(id, truth, pred);
}

absl::StatusOr<AttackReport> RunGradientInversion(const TraceLog& log,
                                                  const BottomModel& bottom) {
  std::vector<int64_t> truth, pred;
  for (size_t r = 0; r < log.round_tokens.size(); ++r) {
    absl::StatusOr<std::vector<TokenId>> found =
        GradientInversion(log.round_table_grad[r], bottom);
    if (!found.ok()) return found.status();
    for (TokenId t : log.round_tokens[r]) {
      truth.push_back(t);
      pred.push_back(std::binary_search(found->begin(), found->end(), t) ? t
                                                                         : -1);
    }
  }
  return MakeReport(AttackId::kGradientInversion, truth, pred);
}

// Splits the rows of `features` by the shadow flag.
void SplitShadow(const Matrix& features, const TraceLog& log, Matrix& shadow,
                 std::vector<ClassId>& shadow_labels, Matrix& target,
                 std::vector<ClassId>& target_labels) {
  const Eigen::Index n = features.rows();
  const Eigen::Index ns = std::count(log.shadow.begin(), log.shadow.end(), true);
  shadow.resize(ns, features.cols());
  target.resize(n - ns, features.cols());
  Eigen::Index s = 0, t = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (log.shadow[i]) {
      shadow.row(s++) = features.row(i);
      shadow_labels.push_back(log.labels[i]);
    } else {
      target.row(t++) = features.row(i);
      target_labels.push_back(log.labels[i]);
    }
  }
}

}  // namespace

std::vector<std::string> ExperimentConfigKeys() {
  return {"corpus",        "vocab",         "embeddings",
          "output_dir",    "epsilon",       "l",
          "k",             "n",             "lambda",
          "delta",         "rank",          "rounds",
          "step",          "seed",          "attacks",
          "batch",         "test_fraction", "layer_noise",
          "noise",         "mean_shift",    "importance",
          "clusters",      "solver_iters",  "eta",
          "sensitivity_pairs", "probe_epochs", "probe_step",
          "attack_tokens"};
}

absl::Status SetConfigValue(ExperimentConfig& cfg, std::string_view key,
                            std::string_view value) {
  if (key == "corpus") { cfg.corpus = value; return absl::OkStatus(); }
  if (key == "vocab") { cfg.vocab = value; return absl::OkStatus(); }
  if (key == "embeddings") { cfg.embeddings = value; return absl::OkStatus(); }
  if (key == "output_dir") { cfg.output_dir = value; return absl::OkStatus(); }
  if (key == "epsilon") return ParseNumber(key, value, cfg.epsilon);
  if (key == "l") return ParseNumber(key, value, cfg.split_layers);
  if (key == "k") return ParseNumber(key, value, cfg.k);
  if (key == "n") return ParseNumber(key, value, cfg.n);
  if (key == "lambda") return ParseNumber(key, value, cfg.lambda);
  if (key == "delta") return ParseNumber(key, value, cfg.delta);
  if (key == "rank") return ParseNumber(key, value, cfg.rank);
  if (key == "rounds") return ParseNumber(key, value, cfg.rounds);
  if (key == "step") return ParseNumber(key, value, cfg.step);
  if (key == "seed") return ParseNumber(key, value, cfg.seed);
  if (key == "attacks") {
    absl::StatusOr<std::vector<AttackId>> ids = ParseAttackList(value);
    if (!ids.ok()) return ids.status();
    cfg.attacks = *std::move(ids);
    return absl::OkStatus();
  }
  if (key == "batch") return ParseNumber(key, value, cfg.batch);
  if (key == "test_fraction") return ParseNumber(key, value, cfg.test_fraction);
  if (key == "layer_noise") return ParseNumber(key, value, cfg.layer_noise);
  if (key == "noise") return ParseBool(key, value, cfg.noise);
  if (key == "mean_shift") return ParseBool(key, value, cfg.mean_shift);
  if (key == "importance") return ParseBool(key, value, cfg.importance);
  if (key == "clusters") return ParseNumber(key, value, cfg.clusters);
  if (key == "solver_iters") return ParseNumber(key, value, cfg.solver_iters);
  if (key == "eta") return ParseNumber(key, value, cfg.eta);
  if (key == "sensitivity_pairs") {
    return ParseNumber(key, value, cfg.sensitivity_pairs);
  }
  if (key == "probe_epochs") return ParseNumber(key, value, cfg.probe_epochs);
  if (key == "probe_step") return ParseNumber(key, value, cfg.probe_step);
  if (key == "attack_tokens") return ParseNumber(key, value, cfg.attack_tokens);
  return absl::InvalidArgumentError(
      absl::StrCat("unknown config key '", std::string(key), "'"));
}

absl::StatusOr<ExperimentConfig> ParseExperimentConfig(std::string_view text) {
  ExperimentConfig cfg;
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(AbslView(text), '\n')) {
    ++line_no;
    if (const size_t hash = line.find('#'); hash != absl::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = absl::StripAsciiWhitespace(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == absl::string_view::npos) {
      return absl::InvalidArgumentError(
          absl::StrCat("config line ", line_no, ": expected key=value"));
    }
    const absl::string_view key = absl::StripAsciiWhitespace(line.substr(0, eq));
    const absl::string_view value =
        absl::StripAsciiWhitespace(line.substr(eq + 1));
    absl::Status s =
        SetConfigValue(cfg, std::string_view(key.data(), key.size()),
                       std::string_view(value.data(), value.size()));
    if (!s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("config line ", line_no, ": ", s.message()));
    }
  }
  return cfg;
}

absl::StatusOr<ExperimentConfig> LoadExperimentConfig(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFileToString(path);
  if (!text.ok()) return text.status();
  absl::StatusOr<ExperimentConfig> cfg = ParseExperimentConfig(*text);
  if (!cfg.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": ", cfg.status().message()));
  }
  // Relative data paths are taken relative to the config file.
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  for (std::string* p : {&cfg->corpus, &cfg->vocab, &cfg->embeddings}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) {
      *p = (base / *p).lexically_normal().string();
    }
  }
  return cfg;
}

std::string FormatExperimentConfig(const ExperimentConfig& c) {
  std::vector<std::string> names;
  for (AttackId id : c.attacks) names.emplace_back(AttackName(id));
  std::string out;
  auto line = [&out](std::string_view key, const auto& value) {
    absl::StrAppend(&out, std::string(key), "=", value, "\n");
  };
  auto flag = [](bool b) { return b ? "true" : "false"; };
  line("corpus", c.corpus);
  line("vocab", c.vocab);
  line("embeddings", c.embeddings);
  line("output_dir", c.output_dir);
  line("epsilon", RoundTrip(c.epsilon));
  line("l", c.split_layers);
  line("k", c.k);
  line("n", c.n);
  line("lambda", RoundTrip(c.lambda));
  line("delta", RoundTrip(c.delta));
  line("rank", c.rank);
  line("rounds", c.rounds);
  line("step", RoundTrip(c.step));
  line("seed", c.seed);
  line("attacks", absl::StrJoin(names, ","));
  line("batch", c.batch);
  line("test_fraction", RoundTrip(c.test_fraction));
  line("layer_noise", RoundTrip(c.layer_noise));
  line("noise", flag(c.noise));
  line("mean_shift", flag(c.mean_shift));
  line("importance", flag(c.importance));
  line("clusters", c.clusters);
  line("solver_iters", c.solver_iters);
  line("eta", RoundTrip(c.eta));
  line("sensitivity_pairs", c.sensitivity_pairs);
  line("probe_epochs", c.probe_epochs);
  line("probe_step", RoundTrip(c.probe_step));
  line("attack_tokens", c.attack_tokens);
  return out;
}

absl::StatusOr<ExperimentData> LoadExperimentData(const ExperimentConfig& cfg) {
  if (cfg.embeddings.empty() || cfg.vocab.empty() || cfg.corpus.empty()) {
    return absl::InvalidArgumentError(
        "config must name embeddings, vocab and corpus files");
  }
  absl::StatusOr<EmbeddingSpace> space = LoadEmbeddings(cfg.embeddings);
  if (!space.ok()) return space.status();
  absl::StatusOr<Vocabulary> vocab = Vocabulary::Load(cfg.vocab);
  if (!vocab.ok()) return vocab.status();
  if (vocab->size() != space->vocab_size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        cfg.vocab, " has ", vocab->size(), " tokens but ", cfg.embeddings,
        " has ", space->vocab_size(), " rows"));
  }
  absl::StatusOr<std::vector<CorpusDocument>> docs =
      LoadCorpus(cfg.corpus, *vocab);
  if (!docs.ok()) return docs.status();
  return ExperimentData{*std::move(space), *std::move(docs)};
}

absl::StatusOr<TradeoffRecord> RunExperiment(const ExperimentData& data,
                                             const ExperimentConfig& cfg) {
  if (absl::Status s = ValidateConfig(cfg); !s.ok()) return s;
  const uint64_t seed = cfg.seed;
  const EmbeddingSpace& space = data.embedding;
  const int vocab = space.vocab_size();

  // Labeled documents, split into train and held-out test.
  std::vector<int> labeled;
  for (size_t i = 0; i < data.docs.size(); ++i) {
    const CorpusDocument& doc = data.docs[i];
    if (!doc.label.has_value()) continue;
    if (absl::Status s = ValidateDocument(doc, vocab); !s.ok()) {
      return Stage("corpus", s);
    }
    labeled.push_back(static_cast<int>(i));
  }
  std::mt19937_64 split_engine(DeriveSeed(seed, kSaltSplit));
  std::shuffle(labeled.begin(), labeled.end(), split_engine);
  const int num_test = static_cast<int>(
      std::lround(cfg.test_fraction * static_cast<double>(labeled.size())));
  if (num_test < 1 || static_cast<int>(labeled.size()) - num_test < 2) {
    return absl::InvalidArgumentError(absl::StrCat(
        "corpus: ", labeled.size(), " labeled documents are too few to split"));
  }
  std::vector<int> test_ids(labeled.begin(), labeled.begin() + num_test);
  std::vector<int> train_ids(labeled.begin() + num_test, labeled.end());
  std::vector<CorpusDocument> train_docs, test_docs;
  for (int i : train_ids) train_docs.push_back(data.docs[i]);
  for (int i : test_ids) test_docs.push_back(data.docs[i]);

  ClassId max_label = 0;
  for (int i : labeled) max_label = std::max(max_label, *data.docs[i].label);
  const int num_classes = max_label + 1;
  if (num_classes < 2) {
    return absl::InvalidArgumentError("corpus: needs at least two classes");
  }

  // Stage 1: frozen bottom model and the vocabulary in its output space.
  absl::StatusOr<BottomModel> bottom =
      BottomModel::NearIdentity(space, cfg.split_layers, cfg.layer_noise,
                                DeriveSeed(seed, kSaltBottom));
  if (!bottom.ok()) return Stage("bottom model", bottom.status());
  const Matrix outputs = bottom->ForwardVocabulary();

  // Stage 2: importance scores from the device's labeled training data.
  std::optional<ImportanceScores> scores;
  if (cfg.importance) {
    absl::StatusOr<ClassTokenStats> stats =
        ClassTokenStats::FromCorpus(train_docs, vocab);
    if (!stats.ok()) return Stage("importance", stats.status());
    absl::StatusOr<ImportanceScores> s = VocabularyImportance(*stats);
    if (!s.ok()) return Stage("importance", s.status());
    scores = *std::move(s);
  }

  // Stage 3: noise plan p* from the neighbor-graph objective.
  std::optional<NoisePlan> plan;
  if (cfg.mean_shift) {
    absl::StatusOr<NeighborGraph> graph =
        BuildNeighborGraph(outputs, cfg.k, cfg.n);
    if (!graph.ok()) return Stage("graph", graph.status());
    const int clusters = cfg.clusters > 0 ? cfg.clusters : num_classes;
    absl::StatusOr<std::vector<ClassId>> pseudo =
        PseudoLabel(outputs, clusters, DeriveSeed(seed, kSaltPseudoLabel));
    if (!pseudo.ok()) return Stage("pseudo labels", pseudo.status());
    absl::StatusOr<std::map<ClassId, Vector>> centroids =
        ClassCentroids(outputs, *pseudo);
    if (!centroids.ok()) return Stage("centroids", centroids.status());
    std::vector<std::optional<ClassId>> labels(pseudo->begin(), pseudo->end());
    absl::StatusOr<ObjectiveContext> ctx = ObjectiveContext::Create(
        outputs, *std::move(graph), *std::move(centroids), std::move(labels));
    if (!ctx.ok()) return Stage("objective", ctx.status());
    SolverConfig solver;
    solver.max_iters = cfg.solver_iters;
    solver.delta = cfg.delta;
    if (cfg.eta > 0.0) solver.eta = cfg.eta;
    ObjectiveConfig obj;
    obj.lambda = cfg.lambda;
    absl::StatusOr<NoisePlan> p = SolveOpt3(*ctx, solver, obj);
    if (!p.ok()) return Stage("solver", p.status());
    plan = *std::move(p);
  }

  Defense defense;
  defense.noise_enabled = cfg.noise;
  defense.privacy.epsilon = cfg.epsilon;
  defense.privacy.mean_shift_enabled = cfg.mean_shift;
  defense.privacy.importance_enabled = cfg.importance;
  defense.plan = plan ? &*plan : nullptr;
  defense.scores = scores ? &*scores : nullptr;
  if (cfg.noise) {
    absl::StatusOr<double> sensitivity =
        EstimateSensitivity(*bottom, cfg.sensitivity_pairs,
                            DeriveSeed(seed, kSaltSensitivity));
    if (!sensitivity.ok()) return Stage("sensitivity", sensitivity.status());
    defense.privacy.sensitivity = *sensitivity;
  }

  // Stage 4: collaborative training on perturbed activations.
  absl::StatusOr<TopModel> top = TopModel::Create(
      Matrix::Zero(space.dim(), num_classes), cfg.rank,
      DeriveSeed(seed, kSaltTop));
  if (!top.ok()) return Stage("top model", top.status());

  const bool want_a1 = std::count(cfg.attacks.begin(), cfg.attacks.end(),
                                  AttackId::kGradientInversion) > 0;
  TraceLog log;
  std::vector<Matrix> kept_rows;
  std::vector<Eigen::RowVectorXd> pooled_rows, grad_rows;
  int64_t kept = 0;
  const uint64_t train_seed = DeriveSeed(seed, kSaltTrainNoise);
  const int ntrain = static_cast<int>(train_docs.size());
  for (int round = 0; round < cfg.rounds; ++round) {
    std::vector<CorpusDocument> batch;
    std::vector<int> sources;
    for (int j = 0; j < cfg.batch; ++j) {
      const int idx = static_cast<int>(
          (static_cast<int64_t>(round) * cfg.batch + j) % ntrain);
      batch.push_back(train_docs[idx]);
      sources.push_back(train_ids[idx]);
    }
    const Matrix weights_before = top->EffectiveWeights();
    absl::StatusOr<RoundTrace> trace = TrainRound(
        batch, *bottom, *top, defense, cfg.step, round, train_seed);
    if (!trace.ok()) return Stage("training", trace.status());
    for (size_t d = 0; d < batch.size(); ++d) {
      const Matrix& sent = trace->sent[d];
      pooled_rows.push_back(sent.colwise().mean());
      grad_rows.push_back(trace->gradients.per_example.row(d));
      log.labels.push_back(*batch[d].label);
      log.shadow.push_back((SplitMix64(sources[d]) & 1) == 0);
      for (Eigen::Index j = 0; j < sent.rows() && kept < cfg.attack_tokens;
           ++j, ++kept) {
        log.tokens.push_back(batch[d].tokens[j]);
        kept_rows.push_back(sent.row(j));
      }
    }
    if (want_a1) {
      // Lookup-layer gradient: each used embedding row receives the pooled
      // output gradient of its documents.
      Matrix table = Matrix::Zero(vocab, space.dim());
      const Matrix& w = weights_before;
      std::vector<TokenId> used;
      // Reconstruct d loss / d pooled from the per-example bias gradients.
      const Eigen::Index nc = top->num_classes();
      const Eigen::Index off = trace->gradients.per_example.cols() - nc;
      for (size_t d = 0; d < batch.size(); ++d) {
        const Eigen::RowVectorXd g =
            trace->gradients.per_example.row(d).segment(off, nc) /
            static_cast<double>(batch.size());
        const double len = static_cast<double>(batch[d].tokens.size());
        const Eigen::RowVectorXd dh = (g * w.transpose()) / len;
        for (TokenId t : batch[d].tokens) {
          table.row(t) += dh;
          used.push_back(t);
        }
      }
      std::sort(used.begin(), used.end());
      used.erase(std::unique(used.begin(), used.end()), used.end());
      log.round_tokens.push_back(std::move(used));
      log.round_table_grad.push_back(std::move(table));
    }
  }

  // Stage 5: utility on held-out documents.
  absl::StatusOr<double> utility = EvaluateUtility(
      test_docs, *bottom, *top, defense, DeriveSeed(seed, kSaltEvalNoise));
  if (!utility.ok()) return Stage("evaluation", utility.status());

  log.rows.resize(static_cast<Eigen::Index>(kept_rows.size()), space.dim());
  for (size_t i = 0; i < kept_rows.size(); ++i) log.rows.row(i) = kept_rows[i];
  log.pooled.resize(static_cast<Eigen::Index>(pooled_rows.size()), space.dim());
  for (size_t i = 0; i < pooled_rows.size(); ++i) {
    log.pooled.row(i) = pooled_rows[i];
  }
  if (!grad_rows.empty()) {
    log.gradients.resize(static_cast<Eigen::Index>(grad_rows.size()),
                         grad_rows.front().size());
    for (size_t i = 0; i < grad_rows.size(); ++i) {
      log.gradients.row(i) = grad_rows[i];
    }
  }

  // Stage 6: attacks on the recorded traces.
  TradeoffRecord record;
  record.epsilon = cfg.epsilon;
  record.utility = *utility;
  record.config = cfg;
  ProbeConfig probe_cfg;
  probe_cfg.epochs = cfg.probe_epochs;
  probe_cfg.step = cfg.probe_step;
  probe_cfg.seed = DeriveSeed(seed, kSaltProbe);
  for (AttackId id : cfg.attacks) {
    absl::StatusOr<AttackReport> report;
    const std::string stage = absl::StrCat("attack ", std::string(AttackName(id)));
    if (cfg.rounds == 0) {
      return absl::InvalidArgumentError(
          absl::StrCat(stage, ": no training rounds were recorded"));
    }
    switch (id) {
      case AttackId::kActivationInversion:
      case AttackId::kNearestNeighbor:
        report = RunTokenAttack(id, log, space, outputs);
        break;
      case AttackId::kGradientInversion:
        report = RunGradientInversion(log, *bottom);
        break;
      case AttackId::kSupervisedAttribute:
      case AttackId::kGradientAttribute:
      case AttackId::kClustering: {
        const Matrix& features =
            id == AttackId::kGradientAttribute ? log.gradients : log.pooled;
        Matrix shadow, target;
        std::vector<ClassId> shadow_labels, target_labels;
        SplitShadow(features, log, shadow, shadow_labels, target,
                    target_labels);
        if (id == AttackId::kClustering) {
          report = ClusteringAttack(target, target_labels, shadow,
                                    shadow_labels, num_classes,
                                    DeriveSeed(seed, kSaltClustering));
        } else if (id == AttackId::kSupervisedAttribute) {
          report = SupervisedAttributeAttack(shadow, shadow_labels, target,
                                             target_labels, probe_cfg);
        } else {
          report = GradientAttributeAttack(shadow, shadow_labels, target,
                                           target_labels, probe_cfg);
        }
        break;
      }
    }
    if (!report.ok()) return Stage(stage, report.status());
    record.asr[id] = report->asr;
  }
  return record;
}

absl::StatusOr<TradeoffRecord> RunExperiment(const ExperimentConfig& cfg) {
  absl::StatusOr<ExperimentData> data = LoadExperimentData(cfg);
  if (!data.ok()) return data.status();
  return RunExperiment(*data, cfg);
}

absl::StatusOr<std::vector<TradeoffRecord>> Sweep(
    const ExperimentData& data, const ExperimentConfig& cfg,
    std::span<const double> epsilons) {
  if (epsilons.empty()) {
    return absl::InvalidArgumentError("sweep needs at least one epsilon");
  }
  std::vector<absl::StatusOr<TradeoffRecord>> results(
      epsilons.size(), absl::UnknownError("not run"));
  ParallelFor(0, static_cast<int64_t>(epsilons.size()), [&](int64_t i) {
    ExperimentConfig c = cfg;
    c.epsilon = epsilons[i];
    results[i] = RunExperiment(data, c);
  });
  std::vector<TradeoffRecord> records;
  for (size_t i = 0; i < results.size(); ++i) {
    if (!results[i].ok()) {
      return Stage(absl::StrCat("epsilon ", epsilons[i]), results[i].status());
    }
    records.push_back(*std::move(results[i]));
  }
  return records;
}

std::string FormatTradeoffCsv(std::span<const TradeoffRecord> records,
                              std::span<const AttackId> attacks) {
  std::string out = "epsilon,utility";
  for (AttackId id : attacks) absl::StrAppend(&out, ",asr_", std::string(AttackName(id)));
  out += "\n";
  for (const TradeoffRecord& r : records) {
    absl::StrAppend(&out, absl::StrFormat("%.6f,%.6f", r.epsilon, r.utility));
    for (AttackId id : attacks) {
      auto it = r.asr.find(id);
      absl::StrAppend(&out, absl::StrFormat(
                                ",%.6f", it == r.asr.end() ? 0.0 : it->second));
    }
    out += "\n";
  }
  return out;
}

std::string FormatTradeoffDat(std::span<const TradeoffRecord> records,
                              std::span<const AttackId> attacks) {
  std::string out = "# epsilon utility";
  for (AttackId id : attacks) absl::StrAppend(&out, " asr_", std::string(AttackName(id)));
  out += "\n";
  for (const TradeoffRecord& r : records) {
    absl::StrAppend(&out, absl::StrFormat("%.6f %.6f", r.epsilon, r.utility));
    for (AttackId id : attacks) {
      auto it = r.asr.find(id);
      absl::StrAppend(&out, absl::StrFormat(
                                " %.6f", it == r.asr.end() ? 0.0 : it->second));
    }
    out += "\n";
  }
  return out;
}

}  // namespace tokenveil
