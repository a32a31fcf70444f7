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

#include "tokenveil/importance.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <regex>

#include "absl/strings/str_cat.h"
#include "tokenveil/ptem.h"

namespace tokenveil {

absl::StatusOr<ClassTokenStats> ClassTokenStats::FromCorpus(
    std::span<const CorpusDocument> docs, int vocab_size,
    double smoothing_alpha) {
  if (!(smoothing_alpha > 0.0) || !std::isfinite(smoothing_alpha)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "smoothing alpha must be finite and > 0, got ", smoothing_alpha));
  }
  if (vocab_size < 1) {
    return absl::InvalidArgumentError("vocabulary is empty");
  }
  std::vector<ClassId> classes;
  for (const CorpusDocument& doc : docs) {
    if (doc.label.has_value()) classes.push_back(*doc.label);
  }
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.empty()) {
    return absl::InvalidArgumentError("corpus has no labeled documents");
  }

  Matrix counts = Matrix::Zero(vocab_size, classes.size());
  for (const CorpusDocument& doc : docs) {
    if (!doc.label.has_value()) continue;
    if (absl::Status s = ValidateDocument(doc, vocab_size); !s.ok()) return s;
    const auto col = std::lower_bound(classes.begin(), classes.end(), *doc.label) -
                     classes.begin();
    for (TokenId t : doc.tokens) counts(t, col) += 1.0;
  }
  for (Eigen::Index c = 0; c < counts.cols(); ++c) {
    const double total = counts.col(c).sum();
    counts.col(c) = (counts.col(c).array() + smoothing_alpha) /
                    (total + smoothing_alpha * vocab_size);
  }
  return ClassTokenStats(std::move(classes), std::move(counts),
                         smoothing_alpha);
}

absl::StatusOr<ClassTokenStats> ClassTokenStats::FromProbabilities(
    std::vector<ClassId> classes, Matrix p_given_class,
    double smoothing_alpha) {
  if (static_cast<Eigen::Index>(classes.size()) != p_given_class.cols()) {
    return absl::InvalidArgumentError("class list does not match table");
  }
  if (!std::is_sorted(classes.begin(), classes.end()) ||
      std::adjacent_find(classes.begin(), classes.end()) != classes.end()) {
    return absl::InvalidArgumentError("classes must be strictly ascending");
  }
  for (Eigen::Index c = 0; c < p_given_class.cols(); ++c) {
    if ((p_given_class.col(c).array() <= 0.0).any()) {
      return absl::InvalidArgumentError(
          absl::StrCat("class ", classes[c], " has non-positive probabilities"));
    }
    if (std::abs(p_given_class.col(c).sum() - 1.0) > 1e-9) {
      return absl::InvalidArgumentError(
          absl::StrCat("class ", classes[c], " probabilities do not sum to 1"));
    }
  }
  return ClassTokenStats(std::move(classes), std::move(p_given_class),
                         smoothing_alpha);
}

int ClassTokenStats::ClassIndex(ClassId cls) const {
  auto it = std::lower_bound(classes_.begin(), classes_.end(), cls);
  if (it == classes_.end() || *it != cls) return -1;
  return static_cast<int>(it - classes_.begin());
}

double ClassTokenStats::Probability(TokenId token, ClassId cls) const {
  return probs_(token, ClassIndex(cls));
}

ClassId ClassTokenStats::DominantClass(TokenId token) const {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < probs_.cols(); ++c) {
    if (probs_(token, c) > probs_(token, best)) best = c;
  }
  return classes_[best];
}

absl::StatusOr<double> ClassificationImportance(const ClassTokenStats& stats,
                                                TokenId token,
                                                ClassId own_class) {
  if (stats.num_classes() < 2) {
    return absl::InvalidArgumentError(
        "classification importance needs at least 2 classes");
  }
  if (token < 0 || token >= stats.vocab_size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("token id ", token, " out of range"));
  }
  const int own = stats.ClassIndex(own_class);
  if (own < 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown class ", own_class));
  }
  const double p_own = stats.Probability(token, own_class);
  double sum = 0.0;
  for (ClassId other : stats.classes()) {
    if (other == own_class) continue;
    sum += std::log(p_own / stats.Probability(token, other));
  }
  return sum / static_cast<double>(stats.num_classes() - 1);
}

absl::StatusOr<double> AttentionEntropy(std::span<const double> row) {
  double entropy = 0.0;
  for (double a : row) {
    if (a < 0.0 || !std::isfinite(a)) {
      return absl::InvalidArgumentError(
          absl::StrCat("attention weight ", a, " is not a probability"));
    }
    if (a > 0.0) entropy -= a * std::log(a);
  }
  return entropy;
}

absl::StatusOr<AttentionStack> AttentionStack::Create(
    std::map<Key, Matrix> matrices, std::set<int> selected_layers) {
  if (matrices.empty()) {
    return absl::InvalidArgumentError("attention stack is empty");
  }
  const Eigen::Index n = matrices.begin()->second.rows();
  for (const auto& [key, a] : matrices) {
    if (a.rows() != n || a.cols() != n) {
      return absl::InvalidArgumentError(
          absl::StrCat("attention layer ", key.first, " head ", key.second,
                       " is ", a.rows(), "x", a.cols(), ", expected ", n, "x",
                       n));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if ((a.row(i).array() < 0.0).any() ||
          std::abs(a.row(i).sum() - 1.0) > 1e-6) {
        return absl::InvalidArgumentError(
            absl::StrCat("attention layer ", key.first, " head ", key.second,
                         " row ", i, " is not a probability distribution"));
      }
    }
  }
  std::set<int> available;
  for (const auto& entry : matrices) available.insert(entry.first.first);
  if (selected_layers.empty()) {
    selected_layers = available;
  }
  for (int l : selected_layers) {
    if (!available.contains(l)) {
      return absl::InvalidArgumentError(
          absl::StrCat("selected layer ", l, " has no attention heads"));
    }
  }
  return AttentionStack(std::move(matrices), std::move(selected_layers));
}

absl::StatusOr<AttentionStack> AttentionStack::LoadFromDirectory(
    const std::string& dir, std::set<int> selected_layers) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    return absl::NotFoundError(absl::StrCat("no such directory: ", dir));
  }
  static const std::regex kName(R"(layer(\d+)_head(\d+)\.ptem)");
  std::map<Key, Matrix> matrices;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(name, m, kName)) continue;
    absl::StatusOr<Matrix> a = ReadPtem(entry.path().string());
    if (!a.ok()) return a.status();
    matrices.emplace(Key{std::stoi(m[1]), std::stoi(m[2])}, *std::move(a));
  }
  if (matrices.empty()) {
    return absl::NotFoundError(
        absl::StrCat("no layer<l>_head<h>.ptem files in ", dir));
  }
  return Create(std::move(matrices), std::move(selected_layers));
}

int AttentionStack::sequence_length() const {
  return static_cast<int>(matrices_.begin()->second.rows());
}

double Squash(double importance) {
  if (importance >= 0.0) return 1.0 / (1.0 + std::exp(-importance));
  const double e = std::exp(importance);
  return e / (1.0 + e);
}

std::vector<double> ZScore(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) return out;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  if (!(var > 0.0)) return out;
  const double sd = std::sqrt(var);
  for (size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / sd;
  return out;
}

ImportanceScores ImportanceScores::FromRaw(std::vector<double> raw) {
  ImportanceScores scores;
  scores.normalized = ZScore(raw);
  scores.scale.reserve(raw.size());
  for (double z : scores.normalized) scores.scale.push_back(Squash(z));
  scores.raw = std::move(raw);
  return scores;
}

ImportanceScores ImportanceScores::Uniform(int size) {
  ImportanceScores scores;
  scores.raw.assign(size, 0.0);
  scores.normalized.assign(size, 0.0);
  scores.scale.assign(size, 1.0);
  return scores;
}

absl::StatusOr<ImportanceScores> GenerationImportance(
    const AttentionStack& stack) {
  const int n = stack.sequence_length();
  if (n < 2) {
    return absl::InvalidArgumentError("sequence length must be >= 2");
  }
  std::vector<double> raw(n, 0.0);
  for (int layer : stack.selected_layers()) {
    std::vector<double> layer_sum(n, 0.0);
    int heads = 0;
    for (const auto& [key, a] : stack.matrices()) {
      if (key.first != layer) continue;
      ++heads;
      for (int i = 0; i < n; ++i) {
        // Attention received by position i, over all queries.
        const double received = a.col(i).sum() / static_cast<double>(n);
        const Eigen::RowVectorXd query_row = a.row(i);
        absl::StatusOr<double> entropy = AttentionEntropy(
            std::span<const double>(query_row.data(), query_row.size()));
        if (!entropy.ok()) return entropy.status();
        layer_sum[i] += received / std::max(*entropy, kEntropyFloor);
      }
    }
    for (int i = 0; i < n; ++i) raw[i] += layer_sum[i] / heads;
  }
  const double layers = static_cast<double>(stack.selected_layers().size());
  for (double& v : raw) v /= layers;
  return ImportanceScores::FromRaw(std::move(raw));
}

absl::StatusOr<ImportanceScores> VocabularyImportance(
    const ClassTokenStats& stats) {
  std::vector<double> raw(stats.vocab_size());
  for (TokenId t = 0; t < stats.vocab_size(); ++t) {
    absl::StatusOr<double> is =
        ClassificationImportance(stats, t, stats.DominantClass(t));
    if (!is.ok()) return is.status();
    raw[t] = *is;
  }
  return ImportanceScores::FromRaw(std::move(raw));
}

}  // namespace tokenveil
