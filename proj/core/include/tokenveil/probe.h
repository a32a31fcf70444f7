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

#ifndef TOKENVEIL_PROBE_H_
#define TOKENVEIL_PROBE_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "tokenveil/types.h"

namespace tokenveil {

struct ProbeConfig {
  int epochs = 300;
  double step = 0.5;
  uint64_t seed = 0;
  // 0 trains a linear softmax probe; > 0 inserts one ReLU hidden layer.
  int hidden_width = 0;
};

// Softmax classifier trained by full-batch gradient descent on cross-entropy.
// Features are standardized with the training mean and deviation. Output
// weights start at zero and the bias at the log class prior, so an untrained
// probe predicts the training majority class.
class AttributeProbe {
 public:
  static absl::StatusOr<AttributeProbe> Train(const Matrix& features,
                                              std::span<const ClassId> labels,
                                              const ProbeConfig& cfg);

  std::vector<ClassId> Predict(const Matrix& features) const;

  const Matrix& weights() const { return weights_; }
  const Vector& bias() const { return bias_; }
  const std::vector<ClassId>& classes() const { return classes_; }

 private:
  AttributeProbe() = default;

  Matrix Logits(const Matrix& standardized) const;
  Matrix Hidden(const Matrix& standardized) const;

  std::vector<ClassId> classes_;
  Vector feature_mean_;
  Vector feature_scale_;
  Matrix hidden_weights_;  // dim x hidden, empty when linear
  Vector hidden_bias_;
  Matrix weights_;         // (dim or hidden) x classes
  Vector bias_;
};

}  // namespace tokenveil

#endif  // TOKENVEIL_PROBE_H_
