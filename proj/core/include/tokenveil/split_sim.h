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

#ifndef TOKENVEIL_SPLIT_SIM_H_
#define TOKENVEIL_SPLIT_SIM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "tokenveil/corpus.h"
#include "tokenveil/dchi_mechanism.h"
#include "tokenveil/embedding_space.h"
#include "tokenveil/importance.h"
#include "tokenveil/pgd_solver.h"
#include "tokenveil/types.h"

namespace tokenveil {

// Cloud-side head: logits = x (base + A B) + bias, where x is the mean of a
// document's transmitted rows. Only A, B and bias are trained.
struct TopModel {
  Matrix base;       // dim x classes, frozen
  Matrix adapter_a;  // dim x rank
  Matrix adapter_b;  // rank x classes
  Vector bias;       // classes

  // A ~ N(0, 1/dim) from `seed`, B = 0, bias = 0.
  static absl::StatusOr<TopModel> Create(Matrix base, int rank, uint64_t seed);

  int dim() const { return static_cast<int>(base.rows()); }
  int num_classes() const { return static_cast<int>(base.cols()); }
  int rank() const { return static_cast<int>(adapter_a.cols()); }
  Matrix EffectiveWeights() const { return base + adapter_a * adapter_b; }
};

struct AdapterGradients {
  Matrix d_adapter_a;
  Matrix d_adapter_b;
  Vector d_bias;
  // One row per example: vec(dA), vec(dB), d_bias of that example alone.
  Matrix per_example;
};

// Server half of the split. It only ever sees transmitted activations and
// output gradients; labels never cross into this class.
class CloudServer {
 public:
  explicit CloudServer(TopModel& model) : model_(model) {}

  // Mean-pools each document's rows and returns batch x classes logits.
  absl::StatusOr<Matrix> Forward(std::span<const Matrix> transmitted);

  // Backpropagates d loss / d logits (for the last Forward batch) into the
  // trainable parameters.
  absl::StatusOr<AdapterGradients> Backward(const Matrix& output_gradient) const;

  void ApplyUpdate(const AdapterGradients& gradients, double step);

  const Matrix& pooled() const { return pooled_; }

 private:
  TopModel& model_;
  Matrix pooled_;
};

// How the device perturbs activations before they leave it.
struct Defense {
  // d_chi noise; when false only the deterministic mean shift (if enabled in
  // privacy.mean_shift_enabled) is applied.
  bool noise_enabled = true;
  PrivacyConfig privacy;
  const NoisePlan* plan = nullptr;           // p*_t per vocabulary token
  const ImportanceScores* scores = nullptr;  // S(x_t) per vocabulary token

  absl::Status Validate(int vocab_size, int dim) const;
};

struct LossGradient {
  double loss = 0.0;     // mean cross-entropy
  Matrix output_gradient;  // d loss / d logits, batch x classes
};

// Device half: runs the frozen bottom model, perturbs, and owns the labels.
class DeviceClient {
 public:
  DeviceClient(const BottomModel& bottom, const Defense& defense)
      : bottom_(bottom), defense_(defense) {}

  // Per-document perturbed activations h~. Token rows of the batch are
  // numbered in order and row j draws from substream round_seed ^ j.
  absl::StatusOr<std::vector<Matrix>> Transmit(
      std::span<const CorpusDocument> batch, uint64_t round_seed) const;

  absl::StatusOr<LossGradient> OutputGradient(
      const Matrix& logits, std::span<const CorpusDocument> batch) const;

 private:
  const BottomModel& bottom_;
  const Defense& defense_;
};

// Softmax cross-entropy averaged over rows.
absl::StatusOr<LossGradient> SoftmaxCrossEntropy(
    const Matrix& logits, std::span<const ClassId> labels);

// Row-wise argmax with ties to the lowest class id.
std::vector<ClassId> ArgmaxRows(const Matrix& logits);

struct RoundTrace {
  int round = 0;
  double loss = 0.0;
  AdapterGradients gradients;
  std::vector<Matrix> sent;  // transmitted activations per document
};

// One collaborative step: device forward + perturbation, cloud logits, device
// loss gradient, cloud backward and SGD on the adapter.
absl::StatusOr<RoundTrace> TrainRound(std::span<const CorpusDocument> batch,
                                      const BottomModel& bottom, TopModel& top,
                                      const Defense& defense, double step,
                                      int round, uint64_t seed);

// Accuracy of the top model on perturbed test activations.
absl::StatusOr<double> EvaluateUtility(std::span<const CorpusDocument> test,
                                       const BottomModel& bottom,
                                       const TopModel& top,
                                       const Defense& defense, uint64_t seed);

}  // namespace tokenveil

#endif  // TOKENVEIL_SPLIT_SIM_H_
