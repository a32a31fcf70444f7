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

#ifndef TOKENVEIL_IMPORTANCE_H_
#define TOKENVEIL_IMPORTANCE_H_

#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "tokenveil/corpus.h"
#include "tokenveil/types.h"

namespace tokenveil {

inline constexpr double kDefaultSmoothingAlpha = 1.0;
inline constexpr double kEntropyFloor = 1e-6;

// Add-alpha smoothed relative token frequencies per class, p(x | y = c).
class ClassTokenStats {
 public:
  // Counts tokens of every labeled document; unlabeled documents are ignored.
  static absl::StatusOr<ClassTokenStats> FromCorpus(
      std::span<const CorpusDocument> docs, int vocab_size,
      double smoothing_alpha = kDefaultSmoothingAlpha);

  // Direct construction from a (vocab x classes) probability table.
  static absl::StatusOr<ClassTokenStats> FromProbabilities(
      std::vector<ClassId> classes, Matrix p_given_class,
      double smoothing_alpha);

  int vocab_size() const { return static_cast<int>(probs_.rows()); }
  int num_classes() const { return static_cast<int>(classes_.size()); }
  const std::vector<ClassId>& classes() const { return classes_; }
  double smoothing_alpha() const { return alpha_; }

  // p(x = token | y = cls); cls must be one of classes().
  double Probability(TokenId token, ClassId cls) const;
  // Column index of `cls`, or -1.
  int ClassIndex(ClassId cls) const;
  // Class in which the token is most frequent (ties: lowest class id).
  ClassId DominantClass(TokenId token) const;

 private:
  ClassTokenStats(std::vector<ClassId> classes, Matrix probs, double alpha)
      : classes_(std::move(classes)), probs_(std::move(probs)), alpha_(alpha) {}

  std::vector<ClassId> classes_;
  Matrix probs_;  // vocab x classes
  double alpha_;
};

// Mean log-ratio of the token's frequency in `own_class` against every other
// class. Requires at least two classes.
absl::StatusOr<double> ClassificationImportance(const ClassTokenStats& stats,
                                                TokenId token,
                                                ClassId own_class);

// Natural-log entropy of an attention row with 0 log 0 = 0.
absl::StatusOr<double> AttentionEntropy(std::span<const double> row);

// Attention matrices keyed by (layer, head); each N x N and row-stochastic.
class AttentionStack {
 public:
  using Key = std::pair<int, int>;

  // Validates shapes and rows. `selected_layers` empty selects every layer.
  static absl::StatusOr<AttentionStack> Create(std::map<Key, Matrix> matrices,
                                               std::set<int> selected_layers = {});

  // Reads every `layer<l>_head<h>.ptem` file in `dir`.
  static absl::StatusOr<AttentionStack> LoadFromDirectory(
      const std::string& dir, std::set<int> selected_layers = {});

  const std::map<Key, Matrix>& matrices() const { return matrices_; }
  const std::set<int>& selected_layers() const { return selected_layers_; }
  int sequence_length() const;

 private:
  AttentionStack(std::map<Key, Matrix> matrices, std::set<int> layers)
      : matrices_(std::move(matrices)), selected_layers_(std::move(layers)) {}

  std::map<Key, Matrix> matrices_;
  std::set<int> selected_layers_;
};

// Per token (or position) importance: raw score, its z-score and the squashed
// noise scale in (0, 1).
struct ImportanceScores {
  std::vector<double> raw;
  std::vector<double> normalized;
  std::vector<double> scale;

  int size() const { return static_cast<int>(raw.size()); }

  // Z-scores `raw` with the population variance (all zeros when it is 0) and
  // squashes the result.
  static ImportanceScores FromRaw(std::vector<double> raw);

  // Every token at scale 1, i.e. the importance-free mechanism.
  static ImportanceScores Uniform(int size);
};

// Entropy-weighted attention aggregation: column-mean attention received by
// each position, weighted by 1 / max(entropy of that position's own query row,
// 1e-6), averaged over heads and then over selected layers.
absl::StatusOr<ImportanceScores> GenerationImportance(
    const AttentionStack& stack);

// Classification importance of every vocabulary token against its dominant
// class, then z-scored and squashed.
absl::StatusOr<ImportanceScores> VocabularyImportance(
    const ClassTokenStats& stats);

// 1 / (1 + exp(-x)).
double Squash(double importance);

// Population z-scores; all zeros when the variance is 0.
std::vector<double> ZScore(std::span<const double> values);

}  // namespace tokenveil

#endif  // TOKENVEIL_IMPORTANCE_H_
