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

#include <algorithm>
#include <random>

#include "gtest/gtest.h"
#include "test_util.h"

namespace tokenveil {
namespace {

using ::tokenveil::testing::RandomMatrix;
using ::tokenveil::testing::Spearman;
using ::tokenveil::testing::ValueOrDie;

constexpr int kVocab = 20;
constexpr int kDim = 8;

// Tokens 0..9 lean along +e0 and belong to class 0, tokens 10..19 lean along
// -e0 and belong to class 1; every document draws from its class's tokens.
struct Separable {
  EmbeddingSpace space;
  std::vector<CorpusDocument> docs;
};

Separable MakeSeparable(int num_docs, uint64_t seed) {
  Matrix m = RandomMatrix(kVocab, kDim, seed, 0.3);
  for (int t = 0; t < kVocab; ++t) m(t, 0) += t < kVocab / 2 ? 1.0 : -1.0;
  std::mt19937_64 engine(seed + 1);
  std::uniform_int_distribution<TokenId> pick(0, kVocab / 2 - 1);
  std::vector<CorpusDocument> docs;
  for (int d = 0; d < num_docs; ++d) {
    CorpusDocument doc;
    doc.label = d % 2;
    for (int j = 0; j < 6; ++j) {
      doc.tokens.push_back(pick(engine) + (d % 2) * (kVocab / 2));
    }
    docs.push_back(std::move(doc));
  }
  return {ValueOrDie(EmbeddingSpace::Create(m)), std::move(docs)};
}

Defense NoDefense() {
  Defense d;
  d.noise_enabled = false;
  d.privacy.mean_shift_enabled = false;
  d.privacy.importance_enabled = false;
  return d;
}

double Loss(const Matrix& pooled, const TopModel& top,
            const std::vector<ClassId>& labels) {
  Matrix logits = pooled * top.EffectiveWeights();
  logits.rowwise() += top.bias.transpose();
  return ValueOrDie(SoftmaxCrossEntropy(logits, labels)).loss;
}

TEST(TopModelTest, CreateShapes) {
  const TopModel top = ValueOrDie(TopModel::Create(Matrix::Zero(kDim, 3), 4, 1));
  EXPECT_EQ(top.rank(), 4);
  EXPECT_EQ(top.num_classes(), 3);
  EXPECT_EQ(top.adapter_b, Matrix::Zero(4, 3));
  EXPECT_EQ(top.EffectiveWeights(), Matrix::Zero(kDim, 3));
  EXPECT_FALSE(TopModel::Create(Matrix::Zero(kDim, 1), 4, 1).ok());
  EXPECT_FALSE(TopModel::Create(Matrix::Zero(kDim, 2), 0, 1).ok());
}

TEST(SplitSimTest, ZeroStepLeavesParametersUnchanged) {
  const Separable f = MakeSeparable(8, 1);
  const BottomModel bottom = ValueOrDie(BottomModel::Create(f.space, {}));
  TopModel top = ValueOrDie(TopModel::Create(RandomMatrix(kDim, 2, 3), 4, 1));
  top.adapter_b = RandomMatrix(4, 2, 4);
  const TopModel before = top;
  const RoundTrace trace =
      ValueOrDie(TrainRound(f.docs, bottom, top, NoDefense(), 0.0, 0, 0));
  EXPECT_GT(trace.gradients.d_adapter_a.norm(), 0.0);
  EXPECT_EQ(top.adapter_a, before.adapter_a);
  EXPECT_EQ(top.adapter_b, before.adapter_b);
  EXPECT_EQ(top.bias, before.bias);
}

TEST(SplitSimTest, NoiselessTrainingConverges) {
  const Separable f = MakeSeparable(64, 2);
  const EmbeddingSpace space = f.space;
  const BottomModel bottom = ValueOrDie(BottomModel::Create(space, {}));
  TopModel top = ValueOrDie(TopModel::Create(Matrix::Zero(kDim, 2), 4, 1));
  const Matrix base = top.base;
  Defense defense;
  defense.privacy.epsilon = 1e12;
  defense.privacy.mean_shift_enabled = false;
  defense.privacy.importance_enabled = false;
  std::vector<double> losses;
  for (int round = 0; round < 200; ++round) {
    std::vector<CorpusDocument> batch(f.docs.begin() + (round % 4) * 16,
                                      f.docs.begin() + (round % 4 + 1) * 16);
    losses.push_back(
        ValueOrDie(TrainRound(batch, bottom, top, defense, 0.5, round, 0)).loss);
  }
  EXPECT_LT(losses.back(), 0.1);
  EXPECT_LT(losses.back(), losses.front());
  // Frozen pieces never move.
  EXPECT_EQ(top.base, base);
  EXPECT_EQ(bottom.embedding().vectors(), space.vectors());
  EXPECT_GE(ValueOrDie(EvaluateUtility(f.docs, bottom, top, defense, 9)), 0.98);

  std::vector<CorpusDocument> permuted = f.docs;
  std::vector<ClassId> labels;
  for (const auto& d : permuted) labels.push_back(*d.label);
  std::shuffle(labels.begin(), labels.end(), std::mt19937_64(4));
  for (size_t i = 0; i < permuted.size(); ++i) permuted[i].label = labels[i];
  EXPECT_NEAR(ValueOrDie(EvaluateUtility(permuted, bottom, top, defense, 9)),
              0.5, 0.1);
}

TEST(SplitSimTest, UntrainedModelPredictsLowestClass) {
  Separable f = MakeSeparable(10, 3);
  for (int i = 0; i < 3; ++i) f.docs[2 * i + 1].label = 0;  // 8 of 10 are 0
  const BottomModel bottom = ValueOrDie(BottomModel::Create(f.space, {}));
  TopModel top = ValueOrDie(TopModel::Create(Matrix::Zero(kDim, 2), 4, 1));
  EXPECT_EQ(ValueOrDie(EvaluateUtility(f.docs, bottom, top, NoDefense(), 0)),
            0.8);
}

TEST(SplitSimTest, AdapterGradientsMatchFiniteDifferences) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const Separable f = MakeSeparable(3, 10 + seed);
    const BottomModel bottom = ValueOrDie(BottomModel::Create(f.space, {}));
    TopModel top =
        ValueOrDie(TopModel::Create(RandomMatrix(kDim, 2, seed, 0.5), 3, seed));
    top.adapter_b = RandomMatrix(3, 2, 100 + seed);
    top.bias = RandomMatrix(2, 1, 200 + seed).col(0);
    CloudServer cloud(top);
    DeviceClient device(bottom, NoDefense());
    const auto sent = ValueOrDie(device.Transmit(f.docs, 0));
    const Matrix logits = ValueOrDie(cloud.Forward(sent));
    const LossGradient lg = ValueOrDie(device.OutputGradient(logits, f.docs));
    const AdapterGradients g = ValueOrDie(cloud.Backward(lg.output_gradient));
    const Matrix pooled = cloud.pooled();
    std::vector<ClassId> labels;
    for (const auto& d : f.docs) labels.push_back(*d.label);
    EXPECT_NEAR(lg.loss, Loss(pooled, top, labels), 1e-12);

    double worst = 0.0;
    auto check = [&](Matrix& param, const Matrix& analytic) {
      for (Eigen::Index i = 0; i < param.size(); ++i) {
        const double saved = param.data()[i];
        param.data()[i] = saved + 1e-5;
        const double up = Loss(pooled, top, labels);
        param.data()[i] = saved - 1e-5;
        const double dn = Loss(pooled, top, labels);
        param.data()[i] = saved;
        const double fd = (up - dn) / 2e-5;
        worst = std::max(worst, std::abs(fd - analytic.data()[i]) /
                                    std::max(std::abs(fd), 1e-3));
      }
    };
    check(top.adapter_a, g.d_adapter_a);
    check(top.adapter_b, g.d_adapter_b);
    Matrix bias = top.bias;
    for (int c = 0; c < 2; ++c) {
      top.bias(c) = bias(c) + 1e-5;
      const double up = Loss(pooled, top, labels);
      top.bias(c) = bias(c) - 1e-5;
      const double dn = Loss(pooled, top, labels);
      top.bias(c) = bias(c);
      worst = std::max(worst, std::abs((up - dn) / 2e-5 - g.d_bias(c)) /
                                  std::max(std::abs((up - dn) / 2e-5), 1e-3));
    }
    EXPECT_LT(worst, 1e-4) << "seed " << seed;
    // Per-example rows sum back to the batch gradient (scaled by n).
    const Eigen::Index na = top.adapter_a.size();
    Matrix summed_a(kDim, 3);
    Eigen::Map<Eigen::RowVectorXd>(summed_a.data(), na) =
        g.per_example.leftCols(na).colwise().sum() / 3.0;
    EXPECT_NEAR((summed_a - g.d_adapter_a).norm(), 0.0, 1e-12);
  }
}

TEST(SplitSimTest, ImportanceScalesPerTokenNoise) {
  const Separable f = MakeSeparable(40, 5);
  const BottomModel bottom = ValueOrDie(BottomModel::Create(f.space, {}));
  std::vector<double> raw(kVocab);
  for (int t = 0; t < kVocab; ++t) raw[t] = (t * 7) % kVocab;  // spread out
  const ImportanceScores scores = ImportanceScores::FromRaw(raw);
  Defense defense;
  defense.privacy.epsilon = 20.0;
  defense.privacy.mean_shift_enabled = false;
  defense.scores = &scores;
  DeviceClient device(bottom, defense);
  std::vector<double> sum(kVocab, 0.0), count(kVocab, 0.0);
  for (int round = 0; round < 50; ++round) {
    const auto sent = ValueOrDie(device.Transmit(f.docs, round));
    for (size_t d = 0; d < f.docs.size(); ++d) {
      for (size_t j = 0; j < f.docs[d].tokens.size(); ++j) {
        const TokenId t = f.docs[d].tokens[j];
        sum[t] += (sent[d].row(j) - f.space.row(t)).norm();
        count[t] += 1.0;
      }
    }
  }
  std::vector<double> mean(kVocab);
  for (int t = 0; t < kVocab; ++t) mean[t] = sum[t] / count[t];
  // The rate is epsilon / (S * sensitivity), so the noise radius grows with S.
  EXPECT_GE(Spearman(mean, scores.scale), 0.9);
}

TEST(SplitSimTest, TransmitIsDeterministicAndShiftsByPlan) {
  const Separable f = MakeSeparable(6, 6);
  const BottomModel bottom = ValueOrDie(BottomModel::Create(f.space, {}));
  NoisePlan plan;
  plan.p_star = RandomMatrix(kVocab, kDim, 7, 0.1);
  Defense defense = NoDefense();
  defense.privacy.mean_shift_enabled = true;
  defense.plan = &plan;
  DeviceClient device(bottom, defense);
  const auto sent = ValueOrDie(device.Transmit(f.docs, 0));
  for (size_t d = 0; d < f.docs.size(); ++d) {
    for (size_t j = 0; j < f.docs[d].tokens.size(); ++j) {
      const TokenId t = f.docs[d].tokens[j];
      EXPECT_EQ(sent[d].row(j), f.space.row(t) + plan.p_star.row(t));
    }
  }
  Defense noisy = defense;
  noisy.noise_enabled = true;
  noisy.privacy.importance_enabled = false;
  DeviceClient noisy_device(bottom, noisy);
  const auto a = ValueOrDie(noisy_device.Transmit(f.docs, 3));
  const auto b = ValueOrDie(noisy_device.Transmit(f.docs, 3));
  const auto c = ValueOrDie(noisy_device.Transmit(f.docs, 4));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(SplitSimTest, Errors) {
  Separable f = MakeSeparable(4, 7);
  const BottomModel bottom = ValueOrDie(BottomModel::Create(f.space, {}));
  TopModel top = ValueOrDie(TopModel::Create(Matrix::Zero(kDim, 2), 2, 1));
  Defense missing_plan;
  missing_plan.noise_enabled = false;
  EXPECT_FALSE(TrainRound(f.docs, bottom, top, missing_plan, 0.1, 0, 0).ok());
  EXPECT_FALSE(TrainRound(f.docs, bottom, top, NoDefense(), -1.0, 0, 0).ok());
  EXPECT_FALSE(EvaluateUtility({}, bottom, top, NoDefense(), 0).ok());
  f.docs[0].label.reset();
  EXPECT_FALSE(TrainRound(f.docs, bottom, top, NoDefense(), 0.1, 0, 0).ok());
  EXPECT_FALSE(EvaluateUtility(f.docs, bottom, top, NoDefense(), 0).ok());
  const std::vector<ClassId> bad = {5};
  EXPECT_FALSE(SoftmaxCrossEntropy(Matrix::Zero(1, 2), bad).ok());
}

}  // namespace
}  // namespace tokenveil
