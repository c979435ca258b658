// Copyright 2026 The Promptex Authors
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

#include "promptex/training.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "promptex/model.h"
#include "test_util.h"

namespace promptex::training {
namespace {

using ad::Matrix;

TEST(AdamWTest, FirstStepMatchesHandComputation) {
  ad::Parameter p{"w", Matrix(1, 2, std::vector<double>{1.0, -2.0}), {}, true};
  p.grad = Matrix(1, 2, std::vector<double>{0.5, -0.25});
  AdamW optimizer(0.1, 0.9, 0.999, 1e-8);
  optimizer.Step({&p}, 0.01);
  // After one step the bias-corrected update is lr * g / (|g| + eps').
  for (int j = 0; j < 2; ++j) {
    const double start = j == 0 ? 1.0 : -2.0;
    const double g = j == 0 ? 0.5 : -0.25;
    const double m = 0.1 * g;
    const double v = 0.001 * g * g;
    const double step = 0.01 * std::sqrt(0.001) / 0.1;
    double expected = start - step * m / (std::sqrt(v) + 1e-8);
    expected -= 0.01 * 0.1 * expected;
    EXPECT_NEAR(p.value(0, j), expected, 1e-12);
  }
  EXPECT_EQ(optimizer.steps(), 1);
}

TEST(AdamWTest, DecayIsSkippedForExemptTensors) {
  ad::Parameter p{"b", Matrix(1, 1, 3.0), Matrix(1, 1, 0.0), false};
  AdamW optimizer(0.5);
  optimizer.Step({&p}, 0.1);
  EXPECT_DOUBLE_EQ(p.value(0, 0), 3.0);
}

TEST(AdamWProperty, ZeroLearningRateLeavesParametersUnchanged) {
  std::mt19937_64 rng(1);
  for (int round = 0; round < 50; ++round) {
    ad::Parameter p{"w", ad::RandomNormal(3, 4, 1.0, rng), ad::RandomNormal(3, 4, 1.0, rng),
                    true};
    const Matrix before = p.value;
    AdamW optimizer(0.01);
    for (int s = 0; s < 3; ++s) optimizer.Step({&p}, 0.0);
    EXPECT_EQ(p.value, before);
  }
}

TEST(TrainConfigTest, JsonRoundTripsAndValidates) {
  TrainConfig config;
  config.batch_size = 4;
  config.learning_rate = 3e-4;
  config.loss.lambda = 0.3;
  config.scorer.prior = ranker::PriorType::kEmbed;
  config.encoder.layers = 2;
  config.seed = 17;
  EXPECT_EQ(TrainConfigFromJson(TrainConfigToJson(config)), config);
  EXPECT_EQ(TrainConfigFromJson(R"({"batch_size": 2})").batch_size, 2);
  config.batch_size = 0;
  EXPECT_THROW(config.Validate(), std::invalid_argument);
}

struct Fixture {
  corpus::SyntheticCorpus data = corpus::GenerateSyntheticCorpus(testing::TinySynthetic(), 5);
  prompts::PromptSet prompts = prompts::MakeNamePrompts(data.ontology);

  TrainConfig SmallConfig() const {
    TrainConfig c;
    c.batch_size = 8;
    c.learning_rate = 3e-3;
    c.max_epochs = 3;
    c.patience = 3;
    c.encoder.hidden = 8;
    c.encoder.distance_size = 4;
    c.encoder.max_distance = 8;
    c.scorer.hidden_units = 8;
    return c;
  }

  std::unique_ptr<model::Model> MakeModel(const TrainConfig& c) const {
    model::ModelConfig mc{c.encoder, c.scorer};
    return std::make_unique<model::Model>(mc, model::BuildVocabulary(data.train, prompts),
                                          data.ontology.SlotKeys(), prompts);
  }
};

TEST(MakeExamplesTest, OneExamplePerInstanceSlot) {
  Fixture f;
  const auto examples = model::MakeExamples(f.data.train, f.prompts);
  size_t expected = 0;
  for (const auto& instance : f.data.train.instances) expected += instance.slots.size();
  EXPECT_EQ(examples.size(), expected);
  const bool has_nil = std::any_of(examples.begin(), examples.end(),
                                   [](const model::Example& e) { return e.gold.empty(); });
  EXPECT_TRUE(has_nil);
}

TEST(GradientCheckTest, SmallRandomConfigsAgreeWithFiniteDifferences) {
  Fixture f;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    TrainConfig c = f.SmallConfig();
    c.encoder.seed = seed;
    c.encoder.layers = 1 + static_cast<int>(seed % 2);
    auto model = f.MakeModel(c);
    const auto examples = model::MakeExamples(f.data.train, f.prompts);
    GradientCheckOptions options;
    options.seed = seed;
    const auto report = FiniteDifferenceCheck(*model, examples[seed * 3], c.loss, options);
    EXPECT_GT(report.checked, 0);
    EXPECT_LT(report.max_relative_error, 1e-3) << "seed " << seed;
  }
}

TEST(GradientCheckTest, ZeroLossExampleHasZeroGradients) {
  Fixture f;
  const TrainConfig c = f.SmallConfig();
  auto model = f.MakeModel(c);
  model::Example example = model::MakeExamples(f.data.train, f.prompts).front();
  example.candidates.clear();
  example.gold.clear();
  const auto report = FiniteDifferenceCheck(*model, example, c.loss);
  EXPECT_DOUBLE_EQ(report.loss, 0.0);
  EXPECT_LE(report.max_relative_error, 1e-9);
}

TEST(TrainTest, FrozenModelWithPatienceOneStopsAfterTwoEpochs) {
  Fixture f;
  TrainConfig c = f.SmallConfig();
  c.max_epochs = 10;
  c.patience = 1;
  TrainOptions options;
  options.freeze = true;
  const auto result = Train(c, f.data.train, f.data.dev, f.prompts, f.data.ontology, options);
  EXPECT_EQ(result.log.size(), 2u);
}

TEST(TrainTest, SameSeedGivesIdenticalLogsAndCheckpoints) {
  Fixture f;
  const TrainConfig c = f.SmallConfig();
  const auto a = Train(c, f.data.train, f.data.dev, f.prompts, f.data.ontology);
  const auto b = Train(c, f.data.train, f.data.dev, f.prompts, f.data.ontology);
  EXPECT_EQ(a.log, b.log);
  std::ostringstream sa, sb;
  a.model->Write(sa);
  b.model->Write(sb);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(TrainTest, BestSnapshotIsNeverWorseThanAnyLoggedEpoch) {
  Fixture f;
  TrainConfig c = f.SmallConfig();
  c.max_epochs = 5;
  const auto result = Train(c, f.data.train, f.data.dev, f.prompts, f.data.ontology);
  double best = 0.0;
  for (const auto& e : result.log) best = std::max(best, e.dev_micro_f1);
  EXPECT_DOUBLE_EQ(result.best_dev_micro_f1, best);
  const auto predictions =
      PredictExamples(*result.model, model::MakeExamples(f.data.dev, f.prompts));
  EXPECT_NEAR(evaluation::Evaluate(predictions).micro.f1, best, 1e-9);
}

TEST(TrainTest, CheckpointRoundTripPreservesPredictions) {
  Fixture f;
  const auto result = Train(f.SmallConfig(), f.data.train, f.data.dev, f.prompts,
                            f.data.ontology);
  testing::TempDir dir;
  result.model->Save(dir / "checkpoint.json");
  auto loaded = model::Model::Load(dir / "checkpoint.json");
  const auto examples = model::MakeExamples(f.data.test, f.prompts);
  std::vector<ranker::ScoreSheet> a, b;
  PredictExamples(*result.model, examples, &a);
  PredictExamples(*loaded, examples, &b);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].predicted, b[i].predicted);
    EXPECT_DOUBLE_EQ(a[i].cls_score, b[i].cls_score);
  }
}

TEST(TrainProperty, FullBatchDescentDoesNotIncreaseLoss) {
  Fixture f;
  TrainConfig c = f.SmallConfig();
  c.scorer.dropout = 0.0;
  auto model = f.MakeModel(c);
  auto examples = model::MakeExamples(f.data.train, f.prompts);
  examples.resize(12);
  auto batch_loss = [&](bool accumulate) {
    double total = 0.0;
    for (const auto& e : examples) {
      total += ExampleLoss(*model, e, c.loss, nullptr, accumulate, 1.0 / examples.size()).loss;
    }
    return total / examples.size();
  };
  double previous = batch_loss(false);
  for (int step = 0; step < 10; ++step) {
    for (auto* p : model->Parameters()) p->ZeroGrad();
    batch_loss(true);
    for (auto* p : model->Parameters()) {
      for (size_t i = 0; i < p->value.size(); ++i) p->value.data()[i] -= 1e-3 * p->grad.data()[i];
    }
    const double current = batch_loss(false);
    EXPECT_LE(current, previous + 1e-12) << "step " << step;
    previous = current;
  }
}

TEST(TrainingLogTest, CsvHasOneRowPerEpoch) {
  std::ostringstream out;
  WriteTrainingLog(out, {}, {{1, 0.5, 0.25, 1e-3}, {2, 0.4, 0.5, 1e-3}});
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

}  // namespace
}  // namespace promptex::training
