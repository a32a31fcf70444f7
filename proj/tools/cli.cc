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

#include "cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "tokenveil/attacks.h"
#include "tokenveil/clustering.h"
#include "tokenveil/dchi_mechanism.h"
#include "tokenveil/embedding_space.h"
#include "tokenveil/experiment.h"
#include "tokenveil/file_io.h"
#include "tokenveil/fixture.h"
#include "tokenveil/importance.h"
#include "tokenveil/neighbor_graph.h"
#include "tokenveil/objective.h"
#include "tokenveil/parallel.h"
#include "tokenveil/pgd_solver.h"
#include "tokenveil/ptem.h"
#include "tokenveil/rouge.h"
#include "tokenveil/serialization.h"

namespace tokenveil::cli {
namespace {

int ExitCodeFor(const absl::Status& s) {
  switch (s.code()) {
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kDataLoss:
    case absl::StatusCode::kNotFound:
      return kExitData;
    default:
      return kExitRuntime;
  }
}

int Fail(std::ostream& err, int code, std::string_view message) {
  nlohmann::ordered_json j;
  j["error"] = std::string(message);
  j["exit_code"] = code;
  err << j.dump() << "\n";
  return code;
}

int Fail(std::ostream& err, const absl::Status& s) {
  return Fail(err, ExitCodeFor(s),
              absl::StrCat(absl::StatusCodeToString(s.code()), ": ",
                           s.message()));
}

absl::StatusOr<std::vector<int64_t>> ReadIds(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFileToString(path);
  if (!text.ok()) return text.status();
  std::vector<int64_t> ids;
  for (absl::string_view word :
       absl::StrSplit(*text, absl::ByAnyChar(" \t\r\n,"), absl::SkipEmpty())) {
    int64_t id = 0;
    if (!absl::SimpleAtoi(word, &id)) {
      return absl::DataLossError(absl::StrCat(
          path, ": '", std::string(word.data(), word.size()),
          "' is not an integer"));
    }
    ids.push_back(id);
  }
  return ids;
}

absl::StatusOr<std::vector<ClassId>> ReadLabels(const std::string& path) {
  absl::StatusOr<std::vector<int64_t>> ids = ReadIds(path);
  if (!ids.ok()) return ids.status();
  return std::vector<ClassId>(ids->begin(), ids->end());
}

absl::StatusOr<std::vector<double>> ParseDoubleList(std::string_view list) {
  std::vector<double> out;
  for (absl::string_view part :
       absl::StrSplit(absl::string_view(list.data(), list.size()), ',',
                      absl::SkipWhitespace())) {
    double v = 0.0;
    if (!absl::SimpleAtod(absl::StripAsciiWhitespace(part), &v)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "'", std::string(part.data(), part.size()), "' is not a number"));
    }
    out.push_back(v);
  }
  if (out.empty()) return absl::InvalidArgumentError("empty number list");
  return out;
}

absl::Status Write(const std::string& path, const std::string& contents,
                   std::ostream& out) {
  if (absl::Status s = WriteFileAtomically(path, contents); !s.ok()) return s;
  out << path << "\n";
  return absl::OkStatus();
}

absl::Status WriteMatrix(const std::string& path, const Matrix& m,
                         std::ostream& out) {
  if (absl::Status s = WritePtem(path, m); !s.ok()) return s;
  out << path << "\n";
  return absl::OkStatus();
}

// Flags shared by simulate and sweep; each maps onto one config key.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> values;  // key -> flag value
  std::map<std::string, CLI::Option*> options;

  void Register(CLI::App* app) {
    app->add_option("--config", config_path,
                    "Experiment config file (key=value lines)");
    app->add_option("--set", sets,
                    "Override any config key, e.g. --set rounds=100")
        ->take_all();
    const std::vector<std::pair<std::string, std::string>> flags = {
        {"corpus", "Corpus file"},
        {"vocab", "Vocabulary file"},
        {"embeddings", "Embedding PTEM file"},
        {"output_dir", "Directory for reports"},
        {"epsilon", "Privacy budget"},
        {"l", "Split depth: embedding plus l-1 frozen layers"},
        {"k", "Nearest neighbors per token"},
        {"n", "Hop count of indirect neighbors"},
        {"lambda", "Weight of the class-dispersion term"},
        {"delta", "Cosine threshold of the local constraint"},
        {"rank", "Adapter rank"},
        {"rounds", "Training rounds"},
        {"step", "SGD step size"},
        {"attacks", "Comma separated attacks, e.g. a0,a2,a3,a5"},
    };
    for (const auto& [key, help] : flags) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      options[key] = app->add_option("--" + flag, values[key], help);
    }
  }

  absl::StatusOr<ExperimentConfig> Resolve(uint64_t seed,
                                           bool seed_given) const {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      absl::StatusOr<ExperimentConfig> loaded = LoadExperimentConfig(config_path);
      if (!loaded.ok()) return loaded.status();
      cfg = *std::move(loaded);
    }
    for (const std::string& kv : sets) {
      const size_t eq = kv.find('=');
      if (eq == std::string::npos) {
        return absl::InvalidArgumentError(
            absl::StrCat("--set expects key=value, got '", kv, "'"));
      }
      if (absl::Status s =
              SetConfigValue(cfg, kv.substr(0, eq), kv.substr(eq + 1));
          !s.ok()) {
        return s;
      }
    }
    for (const auto& [key, option] : options) {
      if (option->count() == 0) continue;
      if (absl::Status s = SetConfigValue(cfg, key, values.at(key)); !s.ok()) {
        return s;
      }
    }
    if (seed_given) cfg.seed = seed;
    return cfg;
  }
};

absl::StatusOr<std::vector<std::optional<ClassId>>> TokenLabels(
    const Matrix& rows, int clusters, uint64_t seed) {
  absl::StatusOr<std::vector<ClassId>> pseudo = PseudoLabel(rows, clusters, seed);
  if (!pseudo.ok()) return pseudo.status();
  return std::vector<std::optional<ClassId>>(pseudo->begin(), pseudo->end());
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Token-level embedding defense toolkit: noise planning, "
               "perturbation, attacks and split fine-tuning simulation.",
               "tokenveil"};
  app.require_subcommand(1);
  int threads = 0;
  uint64_t seed = 0;
  std::string format = "json";
  app.add_option("--threads", threads,
                 "Worker thread cap (default: available parallelism)");

  auto add_seed = [&](CLI::App* sub) {
    return sub->add_option("--seed", seed, "Random seed (default 0)");
  };
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", format, "Report format")
        ->check(CLI::IsMember({"json", "csv"}));
  };

  // graph
  CLI::App* graph = app.add_subcommand("graph", "Build the k-NN / n-hop graph");
  std::string embeddings_path, out_path;
  int k = 2, n_hops = 3;
  graph->add_option("--embeddings", embeddings_path, "Embedding PTEM file")
      ->required();
  graph->add_option("--k", k, "Nearest neighbors per token");
  graph->add_option("--n", n_hops, "Hop count of indirect neighbors");
  graph->add_option("--out", out_path, "Output JSON path")->required();

  // importance
  CLI::App* importance =
      app.add_subcommand("importance", "Compute token importance scores");
  std::string corpus_path, vocab_path, attention_dir, layers;
  double alpha = kDefaultSmoothingAlpha;
  importance->add_option("--corpus", corpus_path,
                         "Labeled corpus (classification importance)");
  importance->add_option("--vocab", vocab_path, "Vocabulary file");
  importance->add_option("--alpha", alpha, "Add-alpha smoothing");
  importance->add_option("--attention-dir", attention_dir,
                         "Directory of layer<l>_head<h>.ptem files "
                         "(generation importance)");
  importance->add_option("--layers", layers,
                         "Comma separated layers to aggregate (default all)");
  importance->add_option("--out", out_path, "Output path")->required();
  add_format(importance);

  // solve
  CLI::App* solve = app.add_subcommand("solve", "Solve the noise plan p*");
  std::string graph_path;
  int clusters = 2, iters = kDefaultMaxIters;
  double lambda = kDefaultLambda, delta = kDefaultDelta, eta = 0.0,
         stop_tol = kDefaultStopTol;
  solve->add_option("--embeddings", embeddings_path, "Embedding PTEM file")
      ->required();
  solve->add_option("--graph", graph_path,
                    "Neighbor graph JSON (default: build with --k/--n)");
  solve->add_option("--k", k, "Nearest neighbors per token");
  solve->add_option("--n", n_hops, "Hop count of indirect neighbors");
  solve->add_option("--clusters", clusters,
                    "Pseudo-label clusters for the dispersion term");
  solve->add_option("--lambda", lambda, "Weight of the dispersion term");
  solve->add_option("--delta", delta, "Cosine threshold of the local ball");
  solve->add_option("--eta", eta, "Step size (default 1e-2 * local radius)");
  solve->add_option("--iters", iters, "Maximum iterations");
  solve->add_option("--stop-tol", stop_tol, "Early-stop objective change");
  solve->add_option("--out", out_path,
                    "Output PTEM for p*; the sidecar goes to <out>.json")
      ->required();
  add_seed(solve);

  // perturb
  CLI::App* perturb = app.add_subcommand(
      "perturb", "Add d_chi noise to every row of an embedding matrix");
  std::string plan_path, importance_path;
  double epsilon = 10.0, sensitivity = 1.0;
  perturb->add_option("--embeddings", embeddings_path, "Rows to perturb (PTEM)")
      ->required();
  perturb->add_option("--plan", plan_path,
                      "Noise plan PTEM; enables the mean shift");
  perturb->add_option("--importance", importance_path,
                      "Importance JSON; enables importance scaling");
  perturb->add_option("--epsilon", epsilon, "Privacy budget");
  perturb->add_option("--sensitivity", sensitivity, "Sensitivity");
  perturb->add_option("--out", out_path,
                      "Output PTEM; metadata goes to <out>.json")
      ->required();
  add_seed(perturb);

  // attack
  CLI::App* attack = app.add_subcommand("attack", "Run one attack");
  std::string attack_name, observed_path, truth_path, labels_path, shadow_path,
      shadow_labels_path;
  int num_attrs = 0;
  ProbeConfig probe_cfg;
  attack->add_option("--attack", attack_name, "a0 .. a5")->required();
  attack->add_option("--observed", observed_path,
                     "Observed rows (a0/a2), gradient table (a1) or target "
                     "features (a3-a5), PTEM")
      ->required();
  attack->add_option("--embeddings", embeddings_path,
                     "Embedding PTEM (a0, a1, a2)");
  attack->add_option("--truth", truth_path,
                     "True token ids (a0, a2: default row index; a1: used "
                     "tokens)");
  attack->add_option("--labels", labels_path,
                     "Attribute labels of the observed rows (a3-a5)");
  attack->add_option("--shadow", shadow_path, "Shadow features PTEM (a3-a5)");
  attack->add_option("--shadow-labels", shadow_labels_path,
                     "Shadow attribute labels (a3-a5)");
  attack->add_option("--num-attrs", num_attrs,
                     "Attribute count for a5 (default: shadow classes)");
  attack->add_option("--epochs", probe_cfg.epochs, "Probe epochs (a3, a4)");
  attack->add_option("--step", probe_cfg.step, "Probe step size (a3, a4)");
  attack->add_option("--hidden", probe_cfg.hidden_width,
                     "Probe hidden width, 0 = linear (a3, a4)");
  attack->add_option("--out", out_path, "Report path")->required();
  add_seed(attack);
  add_format(attack);

  // simulate
  CLI::App* simulate =
      app.add_subcommand("simulate", "Run one split fine-tuning experiment");
  ConfigFlags sim_flags;
  sim_flags.Register(simulate);
  simulate->add_option("--out", out_path,
                       "Report path (default <output_dir>/record.<format>)");
  CLI::Option* sim_seed = add_seed(simulate);
  add_format(simulate);

  // sweep
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run one experiment per epsilon and write the tradeoff table");
  ConfigFlags sweep_flags;
  sweep_flags.Register(sweep);
  std::string epsilons = "80,60,40,30,20,10", out_dir;
  sweep->add_option("--epsilons", epsilons, "Comma separated budgets");
  sweep->add_option("--out-dir", out_dir,
                    "Directory for tradeoff.csv / tradeoff.dat "
                    "(default output_dir or .)");
  CLI::Option* sweep_seed = add_seed(sweep);
  add_format(sweep);

  // make-fixture
  CLI::App* make_fixture =
      app.add_subcommand("make-fixture", "Write the synthetic fixture");
  SyntheticFixtureOptions fixture_opts;
  make_fixture->add_option("--out-dir", out_dir, "Output directory")
      ->required();
  make_fixture->add_option("--vocab-size", fixture_opts.vocab_size,
                           "Vocabulary size");
  make_fixture->add_option("--dim", fixture_opts.dim, "Embedding width");
  make_fixture->add_option("--arcs", fixture_opts.num_arcs,
                           "Token arcs in the embedding space");
  make_fixture->add_option("--arc-extent", fixture_opts.arc_extent,
                           "Angle spanned by one arc (radians)");
  make_fixture->add_option("--class-share", fixture_opts.class_share,
                           "Share of each arc owned by each end class");
  make_fixture->add_option("--classes", fixture_opts.num_classes, "Classes");
  make_fixture->add_option("--jitter", fixture_opts.jitter,
                           "Norm of the per-token Gaussian jitter");
  make_fixture->add_option("--docs", fixture_opts.num_docs, "Documents");
  make_fixture->add_option("--doc-length", fixture_opts.doc_length,
                           "Tokens per document");
  make_fixture->add_option("--class-rate", fixture_opts.class_token_rate,
                           "Share of class-specific tokens per document");
  CLI::Option* fixture_seed = add_seed(make_fixture);

  // rouge
  CLI::App* rouge = app.add_subcommand("rouge", "ROUGE-L of two texts");
  std::string candidate, reference;
  rouge->add_option("--candidate", candidate, "Candidate text")->required();
  rouge->add_option("--reference", reference, "Reference text")->required();

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand --help surfaces as CallForHelp from the subcommand.
    return Fail(err, kExitUsage, e.what());
  }
  SetMaxThreads(threads);

  absl::Status status = absl::OkStatus();
  if (graph->parsed()) {
    status = [&]() -> absl::Status {
      absl::StatusOr<EmbeddingSpace> space = LoadEmbeddings(embeddings_path);
      if (!space.ok()) return space.status();
      absl::StatusOr<NeighborGraph> g = BuildNeighborGraph(*space, k, n_hops);
      if (!g.ok()) return g.status();
      return Write(out_path, NeighborGraphToJson(*g), out);
    }();
  } else if (importance->parsed()) {
    status = [&]() -> absl::Status {
      absl::StatusOr<ImportanceScores> scores;
      if (!attention_dir.empty()) {
        std::set<int> selected;
        if (!layers.empty()) {
          absl::StatusOr<std::vector<double>> ls = ParseDoubleList(layers);
          if (!ls.ok()) return ls.status();
          for (double l : *ls) selected.insert(static_cast<int>(l));
        }
        absl::StatusOr<AttentionStack> stack =
            AttentionStack::LoadFromDirectory(attention_dir, selected);
        if (!stack.ok()) return stack.status();
        scores = GenerationImportance(*stack);
      } else {
        if (corpus_path.empty() || vocab_path.empty()) {
          return absl::InvalidArgumentError(
              "importance needs --corpus and --vocab, or --attention-dir");
        }
        absl::StatusOr<Vocabulary> vocab = Vocabulary::Load(vocab_path);
        if (!vocab.ok()) return vocab.status();
        absl::StatusOr<std::vector<CorpusDocument>> docs =
            LoadCorpus(corpus_path, *vocab);
        if (!docs.ok()) return docs.status();
        absl::StatusOr<ClassTokenStats> stats =
            ClassTokenStats::FromCorpus(*docs, vocab->size(), alpha);
        if (!stats.ok()) return stats.status();
        scores = VocabularyImportance(*stats);
      }
      if (!scores.ok()) return scores.status();
      return Write(out_path,
                   format == "csv" ? ImportanceScoresToCsv(*scores)
                                   : ImportanceScoresToJson(*scores),
                   out);
    }();
  } else if (solve->parsed()) {
    status = [&]() -> absl::Status {
      absl::StatusOr<EmbeddingSpace> space = LoadEmbeddings(embeddings_path);
      if (!space.ok()) return space.status();
      absl::StatusOr<NeighborGraph> g;
      if (!graph_path.empty()) {
        absl::StatusOr<std::string> text = ReadFileToString(graph_path);
        if (!text.ok()) return text.status();
        g = NeighborGraphFromJson(*text);
      } else {
        g = BuildNeighborGraph(*space, k, n_hops);
      }
      if (!g.ok()) return g.status();
      if (g->size() != space->vocab_size()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "graph has ", g->size(), " tokens, embeddings have ",
            space->vocab_size()));
      }
      absl::StatusOr<std::vector<std::optional<ClassId>>> labels =
          TokenLabels(space->vectors(), clusters, seed);
      if (!labels.ok()) return labels.status();
      std::vector<ClassId> flat;
      for (const auto& l : *labels) flat.push_back(*l);
      absl::StatusOr<std::map<ClassId, Vector>> centroids =
          ClassCentroids(space->vectors(), flat);
      if (!centroids.ok()) return centroids.status();
      absl::StatusOr<ObjectiveContext> ctx = ObjectiveContext::Create(
          space->vectors(), *std::move(g), *std::move(centroids),
          *std::move(labels));
      if (!ctx.ok()) return ctx.status();
      SolverConfig cfg;
      cfg.max_iters = iters;
      cfg.delta = delta;
      cfg.stop_tol = stop_tol;
      if (eta > 0.0) cfg.eta = eta;
      ObjectiveConfig obj;
      obj.lambda = lambda;
      absl::StatusOr<NoisePlan> plan = SolveOpt3(*ctx, cfg, obj);
      if (!plan.ok()) return plan.status();
      if (absl::Status s = WriteMatrix(out_path, plan->p_star, out); !s.ok()) {
        return s;
      }
      return Write(out_path + ".json", NoisePlanSidecarToJson(*plan, cfg, obj),
                   out);
    }();
  } else if (perturb->parsed()) {
    status = [&]() -> absl::Status {
      absl::StatusOr<Matrix> rows = ReadPtem(embeddings_path);
      if (!rows.ok()) return rows.status();
      PrivacyConfig cfg;
      cfg.epsilon = epsilon;
      cfg.sensitivity = sensitivity;
      cfg.seed = seed;
      cfg.mean_shift_enabled = !plan_path.empty();
      cfg.importance_enabled = !importance_path.empty();
      NoisePlan plan;
      if (cfg.mean_shift_enabled) {
        absl::StatusOr<Matrix> p = ReadPtem(plan_path);
        if (!p.ok()) return p.status();
        plan.p_star = *std::move(p);
      }
      std::optional<ImportanceScores> scores;
      if (cfg.importance_enabled) {
        absl::StatusOr<std::string> text = ReadFileToString(importance_path);
        if (!text.ok()) return text.status();
        absl::StatusOr<ImportanceScores> s = ImportanceScoresFromJson(*text);
        if (!s.ok()) return s.status();
        scores = *std::move(s);
      }
      absl::StatusOr<PerturbResult> result = PerturbBatch(
          *rows, &plan, scores ? &*scores : nullptr, cfg);
      if (!result.ok()) return result.status();
      if (absl::Status s = WriteMatrix(out_path, result->perturbed, out);
          !s.ok()) {
        return s;
      }
      return Write(out_path + ".json",
                   NoiseSampleMetadataToJson(result->noise, cfg), out);
    }();
  } else if (attack->parsed()) {
    status = [&]() -> absl::Status {
      absl::StatusOr<AttackId> id = ParseAttackId(attack_name);
      if (!id.ok()) return id.status();
      absl::StatusOr<Matrix> observed = ReadPtem(observed_path);
      if (!observed.ok()) return observed.status();
      absl::StatusOr<AttackReport> report;
      const bool token_attack = *id == AttackId::kActivationInversion ||
                                *id == AttackId::kGradientInversion ||
                                *id == AttackId::kNearestNeighbor;
      if (token_attack) {
        if (embeddings_path.empty()) {
          return absl::InvalidArgumentError(
              absl::StrCat(std::string(AttackName(*id)),
                           " needs --embeddings"));
        }
        absl::StatusOr<EmbeddingSpace> space = LoadEmbeddings(embeddings_path);
        if (!space.ok()) return space.status();
        std::vector<int64_t> truth;
        if (!truth_path.empty()) {
          absl::StatusOr<std::vector<int64_t>> t = ReadIds(truth_path);
          if (!t.ok()) return t.status();
          truth = *std::move(t);
        }
        if (*id == AttackId::kGradientInversion) {
          absl::StatusOr<BottomModel> model = BottomModel::Create(*space, {});
          if (!model.ok()) return model.status();
          absl::StatusOr<std::vector<TokenId>> found =
              GradientInversion(*observed, *model);
          if (!found.ok()) return found.status();
          // Items: every truth token, recovered or not, plus false alarms.
          std::set<int64_t> hit(found->begin(), found->end());
          std::set<int64_t> used(truth.begin(), truth.end());
          std::vector<int64_t> t_ids, p_ids;
          for (int64_t u : used) {
            t_ids.push_back(u);
            p_ids.push_back(hit.contains(u) ? u : -1);
          }
          for (int64_t h : hit) {
            if (used.contains(h)) continue;
            t_ids.push_back(-1);
            p_ids.push_back(h);
          }
          report = MakeReport(*id, t_ids, p_ids);
        } else {
          if (truth.empty()) {
            for (Eigen::Index i = 0; i < observed->rows(); ++i) {
              truth.push_back(i);
            }
          }
          if (static_cast<Eigen::Index>(truth.size()) != observed->rows()) {
            return absl::InvalidArgumentError(absl::StrCat(
                "got ", truth.size(), " truth ids for ", observed->rows(),
                " observed rows"));
          }
          if (observed->cols() != space->dim()) {
            return absl::InvalidArgumentError(absl::StrCat(
                "observed rows have width ", observed->cols(),
                ", embeddings ", space->dim()));
          }
          std::vector<int64_t> pred(observed->rows());
          std::vector<absl::Status> errors(observed->rows());
          NearestNeighborIndex index(*space);
          ParallelFor(0, observed->rows(), [&](int64_t i) {
            const Vector h = observed->row(i).transpose();
            if (*id == AttackId::kActivationInversion) {
              pred[i] = ActivationInversion(h, space->vectors());
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
          report = MakeReport(*id, truth, pred);
        }
      } else {
        if (labels_path.empty() || shadow_path.empty() ||
            shadow_labels_path.empty()) {
          return absl::InvalidArgumentError(
              "attribute attacks need --labels, --shadow and --shadow-labels");
        }
        absl::StatusOr<std::vector<ClassId>> labels = ReadLabels(labels_path);
        if (!labels.ok()) return labels.status();
        absl::StatusOr<Matrix> shadow = ReadPtem(shadow_path);
        if (!shadow.ok()) return shadow.status();
        absl::StatusOr<std::vector<ClassId>> shadow_labels =
            ReadLabels(shadow_labels_path);
        if (!shadow_labels.ok()) return shadow_labels.status();
        probe_cfg.seed = seed;
        if (*id == AttackId::kClustering) {
          int attrs = num_attrs;
          if (attrs == 0) {
            attrs = static_cast<int>(
                std::set<ClassId>(shadow_labels->begin(), shadow_labels->end())
                    .size());
          }
          report = ClusteringAttack(*observed, *labels, *shadow,
                                    *shadow_labels, attrs, seed);
        } else if (*id == AttackId::kSupervisedAttribute) {
          report = SupervisedAttributeAttack(*shadow, *shadow_labels, *observed,
                                             *labels, probe_cfg);
        } else {
          report = GradientAttributeAttack(*shadow, *shadow_labels, *observed,
                                           *labels, probe_cfg);
        }
      }
      if (!report.ok()) return report.status();
      return Write(out_path,
                   format == "csv" ? AttackReportToCsv(*report)
                                   : AttackReportToJson(*report),
                   out);
    }();
  } else if (simulate->parsed()) {
    status = [&]() -> absl::Status {
      absl::StatusOr<ExperimentConfig> cfg =
          sim_flags.Resolve(seed, sim_seed->count() > 0);
      if (!cfg.ok()) return cfg.status();
      absl::StatusOr<TradeoffRecord> record = RunExperiment(*cfg);
      if (!record.ok()) return record.status();
      std::string path = out_path;
      if (path.empty()) {
        const std::filesystem::path dir =
            cfg->output_dir.empty() ? "." : cfg->output_dir;
        std::filesystem::create_directories(dir);
        path = (dir / ("record." + format)).string();
      }
      return Write(path,
                   format == "csv"
                       ? FormatTradeoffCsv(std::span(&*record, 1), cfg->attacks)
                       : TradeoffRecordToJson(*record),
                   out);
    }();
  } else if (sweep->parsed()) {
    status = [&]() -> absl::Status {
      absl::StatusOr<ExperimentConfig> cfg =
          sweep_flags.Resolve(seed, sweep_seed->count() > 0);
      if (!cfg.ok()) return cfg.status();
      absl::StatusOr<std::vector<double>> eps = ParseDoubleList(epsilons);
      if (!eps.ok()) return eps.status();
      absl::StatusOr<ExperimentData> data = LoadExperimentData(*cfg);
      if (!data.ok()) return data.status();
      absl::StatusOr<std::vector<TradeoffRecord>> records =
          Sweep(*data, *cfg, *eps);
      if (!records.ok()) return records.status();
      const std::filesystem::path dir =
          !out_dir.empty()           ? std::filesystem::path(out_dir)
          : !cfg->output_dir.empty() ? std::filesystem::path(cfg->output_dir)
                                     : std::filesystem::path(".");
      std::filesystem::create_directories(dir);
      if (absl::Status s =
              Write((dir / "tradeoff.csv").string(),
                    FormatTradeoffCsv(*records, cfg->attacks), out);
          !s.ok()) {
        return s;
      }
      if (absl::Status s =
              Write((dir / "tradeoff.dat").string(),
                    FormatTradeoffDat(*records, cfg->attacks), out);
          !s.ok()) {
        return s;
      }
      if (format == "json") {
        std::string lines;
        for (const TradeoffRecord& r : *records) {
          lines += TradeoffRecordToJson(r);
        }
        return Write((dir / "tradeoff.jsonl").string(), lines, out);
      }
      return absl::OkStatus();
    }();
  } else if (make_fixture->parsed()) {
    status = [&]() -> absl::Status {
      if (fixture_seed->count() > 0) fixture_opts.seed = seed;
      absl::StatusOr<SyntheticFixture> fixture =
          MakeSyntheticFixture(fixture_opts);
      if (!fixture.ok()) return fixture.status();
      ExperimentConfig defaults;
      defaults.seed = fixture_opts.seed;
      if (absl::Status s = WriteFixture(*fixture, out_dir, defaults); !s.ok()) {
        return s;
      }
      out << out_dir << "\n";
      return absl::OkStatus();
    }();
  } else if (rouge->parsed()) {
    absl::StatusOr<double> f = RougeLText(candidate, reference);
    if (!f.ok()) {
      status = f.status();
    } else {
      nlohmann::ordered_json j;
      j["rouge_l"] = *f;
      out << j.dump() << "\n";
    }
  }
  if (!status.ok()) return Fail(err, status);
  return kExitOk;
}

}  // namespace tokenveil::cli
