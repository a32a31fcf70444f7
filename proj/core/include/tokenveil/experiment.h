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

#ifndef TOKENVEIL_EXPERIMENT_H_
#define TOKENVEIL_EXPERIMENT_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "tokenveil/attacks.h"
#include "tokenveil/corpus.h"
#include "tokenveil/embedding_space.h"

namespace tokenveil {

// Flat key=value experiment description. Keys mirror the field names; see
// ExperimentConfigKeys() for the accepted spelling.
struct ExperimentConfig {
  std::string corpus;
  std::string vocab;
  std::string embeddings;
  std::string output_dir;

  double epsilon = 10.0;
  int split_layers = 3;  // key "l": embedding + (l - 1) frozen layers
  int k = 2;
  int n = 3;
  double lambda = 0.1;
  double delta = 0.6;
  int rank = 4;
  int rounds = 300;
  double step = 0.5;
  uint64_t seed = 0;
  std::vector<AttackId> attacks = {AttackId::kActivationInversion,
                                   AttackId::kNearestNeighbor,
                                   AttackId::kSupervisedAttribute,
                                   AttackId::kClustering};

  int batch = 32;
  double test_fraction = 0.25;
  double layer_noise = 0.05;
  bool noise = true;
  bool mean_shift = true;
  bool importance = true;
  int clusters = 0;  // pseudo-label clusters; 0 = number of classes
  int solver_iters = 200;
  double eta = 0.0;  // 0 = scale-aware default
  int sensitivity_pairs = 2000;
  int probe_epochs = 300;
  double probe_step = 0.5;
  int attack_tokens = 50000;  // cap on token rows fed to a0/a2
};

std::vector<std::string> ExperimentConfigKeys();
absl::Status SetConfigValue(ExperimentConfig& cfg, std::string_view key,
                            std::string_view value);
// Lines of key=value; '#' starts a comment. Unknown keys are errors.
absl::StatusOr<ExperimentConfig> ParseExperimentConfig(std::string_view text);
absl::StatusOr<ExperimentConfig> LoadExperimentConfig(const std::string& path);
std::string FormatExperimentConfig(const ExperimentConfig& cfg);

struct ExperimentData {
  EmbeddingSpace embedding;
  std::vector<CorpusDocument> docs;
};

// Reads embeddings, vocabulary and corpus named by the config.
absl::StatusOr<ExperimentData> LoadExperimentData(const ExperimentConfig& cfg);

struct TradeoffRecord {
  double epsilon = 0.0;
  double utility = 0.0;
  std::map<AttackId, double> asr;
  ExperimentConfig config;
};

// Builds the neighbor graph, importance scores and noise plan, trains the
// split model on perturbed activations, measures utility on the held-out
// documents and runs the configured attacks on the recorded round traces.
absl::StatusOr<TradeoffRecord> RunExperiment(const ExperimentData& data,
                                             const ExperimentConfig& cfg);
absl::StatusOr<TradeoffRecord> RunExperiment(const ExperimentConfig& cfg);

// One record per epsilon; everything else, seeds included, is shared.
absl::StatusOr<std::vector<TradeoffRecord>> Sweep(
    const ExperimentData& data, const ExperimentConfig& cfg,
    std::span<const double> epsilons);

// epsilon,utility,asr_<id>... with 6-decimal fixed-point values.
std::string FormatTradeoffCsv(std::span<const TradeoffRecord> records,
                              std::span<const AttackId> attacks);
// Whitespace-separated columns with a '#' header line, for gnuplot.
std::string FormatTradeoffDat(std::span<const TradeoffRecord> records,
                              std::span<const AttackId> attacks);

}  // namespace tokenveil

#endif  // TOKENVEIL_EXPERIMENT_H_
