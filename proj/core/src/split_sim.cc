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

#include "tokenveil/split_sim.h"

#include <cmath>
#include <random>

#include "absl/strings/str_cat.h"
#include "tokenveil/rng.h"

namespace tokenveil {

absl::StatusOr<TopModel> TopModel::Create(Matrix base, int rank,
                                          uint64_t seed) {
  if (base.rows() < 1 || base.cols() < 2) {
    return absl::InvalidArgumentError(absl::StrCat(
        "top model base must be dim x classes with >= 2 classes, got ",
        base.rows(), "x", base.cols()));
  }
  if (rank < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("adapter rank must be >= 1, got ", rank));
  }
  TopModel top;
  const Eigen::Index dim = base.rows();
  top.adapter_a.resize(dim, rank);
  std::mt19937_64 engine(SplitMix64(seed));
  std::normal_distribution<double> normal(
      0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  for (Eigen::Index i = 0; i < top.adapter_a.size(); ++i) {
    top.adapter_a.data()[i] = normal(engine);
  }
  top.adapter_b = Matrix::Zero(rank, base.cols());
  top.bias = Vector::Zero(base.cols());
  top.base = std::move(base);
  return top;
}

absl::StatusOr<Matrix> CloudServer::Forward(
    std::span<const Matrix> transmitted) {
  if (transmitted.empty()) {
    return absl::InvalidArgumentError("empty batch");
  }
  pooled_.resize(static_cast<Eigen::Index>(transmitted.size()),
                 model_.dim());
  for (size_t i = 0; i < transmitted.size(); ++i) {
    const Matrix& rows = transmitted[i];
    if (rows.rows() == 0 || rows.cols() != model_.dim()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "document ", i, " activations are ", rows.rows(), "x", rows.cols(),
          ", expected n x ", model_.dim()));
    }
    pooled_.row(i) = rows.colwise().mean();
  }
  Matrix logits = pooled_ * model_.EffectiveWeights();
  logits.rowwise() += model_.bias.transpose();
  return logits;
}

absl::StatusOr<AdapterGradients> CloudServer::Backward(
    const Matrix& output_gradient) const {
  if (output_gradient.rows() != pooled_.rows() ||
      output_gradient.cols() != model_.num_classes()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "output gradient is ", output_gradient.rows(), "x",
        output_gradient.cols(), ", expected ", pooled_.rows(), "x",
        model_.num_classes()));
  }
  const Matrix& a = model_.adapter_a;
  const Matrix& b = model_.adapter_b;
  const Matrix d_weights = pooled_.transpose() * output_gradient;
  AdapterGradients g;
  g.d_adapter_a = d_weights * b.transpose();
  g.d_adapter_b = a.transpose() * d_weights;
  g.d_bias = output_gradient.colwise().sum().transpose();

  // Per-example gradients of each example's own (unaveraged) loss.
  const Eigen::Index n = pooled_.rows();
  const Eigen::Index na = a.size();
  const Eigen::Index nb = b.size();
  const Eigen::Index classes = model_.num_classes();
  g.per_example.resize(n, na + nb + classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd gi =
        output_gradient.row(i) * static_cast<double>(n);
    const Matrix dw = pooled_.row(i).transpose() * gi;
    const Matrix da = dw * b.transpose();
    const Matrix db = a.transpose() * dw;
    g.per_example.row(i).segment(0, na) =
        Eigen::Map<const Eigen::RowVectorXd>(da.data(), na);
    g.per_example.row(i).segment(na, nb) =
        Eigen::Map<const Eigen::RowVectorXd>(db.data(), nb);
    g.per_example.row(i).segment(na + nb, classes) = gi;
  }
  return g;
}

void CloudServer::ApplyUpdate(const AdapterGradients& gradients, double step) {
  if (step == 0.0) return;
  model_.adapter_a -= step * gradients.d_adapter_a;
  model_.adapter_b -= step * gradients.d_adapter_b;
  model_.bias -= step * gradients.d_bias;
}

absl::Status Defense::Validate(int vocab_size, int dim) const {
  if (noise_enabled) {
    if (absl::Status s = privacy.Validate(); !s.ok()) return s;
    if (privacy.importance_enabled) {
      if (scores == nullptr || scores->size() != vocab_size) {
        return absl::InvalidArgumentError(absl::StrCat(
            "importance scaling needs one score per vocabulary token (",
            vocab_size, ")"));
      }
    }
  }
  if (privacy.mean_shift_enabled) {
    if (plan == nullptr || plan->p_star.rows() != vocab_size ||
        plan->p_star.cols() != dim) {
      return absl::InvalidArgumentError(absl::StrCat(
          "mean shift needs a ", vocab_size, "x", dim, " noise plan"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<Matrix>> DeviceClient::Transmit(
    std::span<const CorpusDocument> batch, uint64_t round_seed) const {
  const int vocab = bottom_.embedding().vocab_size();
  const int dim = bottom_.dim();
  if (absl::Status s = defense_.Validate(vocab, dim); !s.ok()) return s;

  std::vector<Matrix> clean;
  clean.reserve(batch.size());
  Eigen::Index total = 0;
  for (const CorpusDocument& doc : batch) {
    absl::StatusOr<Matrix> rows = bottom_.Forward(doc.tokens);
    if (!rows.ok()) return rows.status();
    total += rows->rows();
    clean.push_back(*std::move(rows));
  }

  Matrix stacked(total, dim);
  Matrix centers;
  if (defense_.privacy.mean_shift_enabled) centers = Matrix::Zero(total, dim);
  std::vector<double> scales;
  const bool scaled =
      defense_.noise_enabled && defense_.privacy.importance_enabled;
  Eigen::Index r = 0;
  for (size_t d = 0; d < batch.size(); ++d) {
    for (size_t j = 0; j < batch[d].tokens.size(); ++j, ++r) {
      const TokenId t = batch[d].tokens[j];
      stacked.row(r) = clean[d].row(j);
      if (centers.size() > 0) centers.row(r) = defense_.plan->p_star.row(t);
      if (scaled) scales.push_back(defense_.scores->scale[t]);
    }
  }

  Matrix perturbed;
  if (defense_.noise_enabled) {
    PrivacyConfig cfg = defense_.privacy;
    cfg.seed = round_seed;
    absl::StatusOr<PerturbResult> result =
        PerturbRows(stacked, centers, scales, cfg);
    if (!result.ok()) return result.status();
    perturbed = std::move(result->perturbed);
  } else {
    perturbed = centers.size() > 0 ? Matrix(stacked + centers) : stacked;
  }

  std::vector<Matrix> out;
  out.reserve(batch.size());
  r = 0;
  for (const Matrix& doc_rows : clean) {
    out.push_back(perturbed.middleRows(r, doc_rows.rows()));
    r += doc_rows.rows();
  }
  return out;
}

absl::StatusOr<LossGradient> SoftmaxCrossEntropy(
    const Matrix& logits, std::span<const ClassId> labels) {
  const Eigen::Index n = logits.rows();
  if (n == 0 || static_cast<Eigen::Index>(labels.size()) != n) {
    return absl::InvalidArgumentError("need one label per logit row");
  }
  LossGradient out;
  out.output_gradient.resize(n, logits.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const ClassId y = labels[i];
    if (y < 0 || y >= logits.cols()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "label ", y, " out of range for ", logits.cols(), " classes"));
    }
    const double m = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - m).exp();
    const double z = e.sum();
    loss += std::log(z) + m - logits(i, y);
    out.output_gradient.row(i) = e / z;
    out.output_gradient(i, y) -= 1.0;
  }
  out.output_gradient /= static_cast<double>(n);
  out.loss = loss / static_cast<double>(n);
  if (!std::isfinite(out.loss)) {
    return absl::InternalError("training loss is not finite");
  }
  return out;
}

absl::StatusOr<LossGradient> DeviceClient::OutputGradient(
    const Matrix& logits, std::span<const CorpusDocument> batch) const {
  std::vector<ClassId> labels;
  labels.reserve(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    if (!batch[i].label.has_value()) {
      return absl::InvalidArgumentError(
          absl::StrCat("batch document ", i, " has no label"));
    }
    labels.push_back(*batch[i].label);
  }
  return SoftmaxCrossEntropy(logits, labels);
}

std::vector<ClassId> ArgmaxRows(const Matrix& logits) {
  std::vector<ClassId> out(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    out[i] = static_cast<ClassId>(best);
  }
  return out;
}

absl::StatusOr<RoundTrace> TrainRound(std::span<const CorpusDocument> batch,
                                      const BottomModel& bottom, TopModel& top,
                                      const Defense& defense, double step,
                                      int round, uint64_t seed) {
  if (!(step >= 0.0) || !std::isfinite(step)) {
    return absl::InvalidArgumentError(
        absl::StrCat("step must be finite and >= 0, got ", step));
  }
  DeviceClient device(bottom, defense);
  CloudServer cloud(top);
  RoundTrace trace;
  trace.round = round;
  absl::StatusOr<std::vector<Matrix>> sent =
      device.Transmit(batch, DeriveSeed(seed, static_cast<uint64_t>(round)));
  if (!sent.ok()) return sent.status();
  absl::StatusOr<Matrix> logits = cloud.Forward(*sent);
  if (!logits.ok()) return logits.status();
  absl::StatusOr<LossGradient> lg = device.OutputGradient(*logits, batch);
  if (!lg.ok()) return lg.status();
  absl::StatusOr<AdapterGradients> grads = cloud.Backward(lg->output_gradient);
  if (!grads.ok()) return grads.status();
  cloud.ApplyUpdate(*grads, step);
  trace.loss = lg->loss;
  trace.gradients = *std::move(grads);
  trace.sent = *std::move(sent);
  return trace;
}

absl::StatusOr<double> EvaluateUtility(std::span<const CorpusDocument> test,
                                       const BottomModel& bottom,
                                       const TopModel& top,
                                       const Defense& defense, uint64_t seed) {
  if (test.empty()) return absl::InvalidArgumentError("empty test set");
  for (size_t i = 0; i < test.size(); ++i) {
    if (!test[i].label.has_value()) {
      return absl::InvalidArgumentError(
          absl::StrCat("test document ", i, " has no label"));
    }
  }
  DeviceClient device(bottom, defense);
  TopModel copy = top;
  CloudServer cloud(copy);
  absl::StatusOr<std::vector<Matrix>> sent = device.Transmit(test, seed);
  if (!sent.ok()) return sent.status();
  absl::StatusOr<Matrix> logits = cloud.Forward(*sent);
  if (!logits.ok()) return logits.status();
  const std::vector<ClassId> predicted = ArgmaxRows(*logits);
  int64_t hits = 0;
  for (size_t i = 0; i < test.size(); ++i) {
    hits += predicted[i] == *test[i].label ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

}  // namespace tokenveil
