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

#include "tokenveil/probe.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "absl/strings/str_cat.h"
#include "tokenveil/rng.h"

namespace tokenveil {
namespace {

// Row-wise softmax in place.
void Softmax(Matrix& logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - m).exp();
    logits.row(i) /= logits.row(i).sum();
  }
}

}  // namespace

absl::StatusOr<AttributeProbe> AttributeProbe::Train(
    const Matrix& features, std::span<const ClassId> labels,
    const ProbeConfig& cfg) {
  const Eigen::Index n = features.rows();
  if (n == 0 || static_cast<Eigen::Index>(labels.size()) != n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "probe needs one label per feature row, got ", labels.size(),
        " labels for ", n, " rows"));
  }
  if (cfg.epochs < 0 || !(cfg.step >= 0.0) || cfg.hidden_width < 0) {
    return absl::InvalidArgumentError("bad probe configuration");
  }
  if (!features.allFinite()) {
    return absl::InvalidArgumentError("probe features are not finite");
  }
  AttributeProbe probe;
  probe.classes_.assign(labels.begin(), labels.end());
  std::sort(probe.classes_.begin(), probe.classes_.end());
  probe.classes_.erase(
      std::unique(probe.classes_.begin(), probe.classes_.end()),
      probe.classes_.end());
  if (probe.classes_.size() < 2) {
    return absl::InvalidArgumentError(
        "probe training set contains a single class");
  }
  const Eigen::Index num_classes = probe.classes_.size();
  Matrix targets = Matrix::Zero(n, num_classes);
  Vector prior = Vector::Zero(num_classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = std::lower_bound(probe.classes_.begin(),
                                    probe.classes_.end(), labels[i]) -
                   probe.classes_.begin();
    targets(i, c) = 1.0;
    prior(c) += 1.0;
  }

  probe.feature_mean_ = features.colwise().mean().transpose();
  Matrix x = features.rowwise() - probe.feature_mean_.transpose();
  probe.feature_scale_ =
      (x.array().square().colwise().sum() / static_cast<double>(n))
          .sqrt()
          .transpose();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (!(probe.feature_scale_(j) > 1e-12)) probe.feature_scale_(j) = 1.0;
    x.col(j) /= probe.feature_scale_(j);
  }

  if (cfg.hidden_width > 0) {
    std::mt19937_64 engine(SplitMix64(cfg.seed));
    std::normal_distribution<double> normal(
        0.0, 1.0 / std::sqrt(static_cast<double>(x.cols())));
    probe.hidden_weights_.resize(x.cols(), cfg.hidden_width);
    for (Eigen::Index i = 0; i < probe.hidden_weights_.size(); ++i) {
      probe.hidden_weights_.data()[i] = normal(engine);
    }
    probe.hidden_bias_ = Vector::Zero(cfg.hidden_width);
  }
  const Eigen::Index in_dim = cfg.hidden_width > 0 ? cfg.hidden_width : x.cols();
  probe.weights_ = Matrix::Zero(in_dim, num_classes);
  probe.bias_ = (prior / static_cast<double>(n)).array().log().matrix();

  const double scale = cfg.step / static_cast<double>(n);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Matrix hidden = probe.Hidden(x);
    Matrix delta = hidden * probe.weights_;
    delta.rowwise() += probe.bias_.transpose();
    Softmax(delta);
    delta -= targets;  // d loss / d logits, times n
    if (cfg.hidden_width > 0) {
      Matrix back = delta * probe.weights_.transpose();
      back = back.array() * (hidden.array() > 0.0).cast<double>();
      probe.hidden_weights_ -= scale * (x.transpose() * back);
      probe.hidden_bias_ -= scale * back.colwise().sum().transpose();
    }
    probe.weights_ -= scale * (hidden.transpose() * delta);
    probe.bias_ -= scale * delta.colwise().sum().transpose();
  }
  if (!probe.weights_.allFinite() || !probe.bias_.allFinite()) {
    return absl::InternalError("probe training diverged");
  }
  return probe;
}

Matrix AttributeProbe::Hidden(const Matrix& standardized) const {
  if (hidden_weights_.size() == 0) return standardized;
  Matrix h = standardized * hidden_weights_;
  h.rowwise() += hidden_bias_.transpose();
  return h.cwiseMax(0.0);
}

Matrix AttributeProbe::Logits(const Matrix& standardized) const {
  Matrix logits = Hidden(standardized) * weights_;
  logits.rowwise() += bias_.transpose();
  return logits;
}

std::vector<ClassId> AttributeProbe::Predict(const Matrix& features) const {
  Matrix x = features.rowwise() - feature_mean_.transpose();
  for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) /= feature_scale_(j);
  const Matrix logits = Logits(x);
  std::vector<ClassId> out(features.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    out[i] = classes_[best];
  }
  return out;
}

}  // namespace tokenveil
