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

// Minibatch training with AdamW, plateau halving of the learning rate, early
// stopping on dev micro-F1, and a finite-difference gradient checker.

#ifndef PROMPTEX_TRAINING_H_
#define PROMPTEX_TRAINING_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "promptex/autodiff.h"
#include "promptex/corpus.h"
#include "promptex/evaluation.h"
#include "promptex/model.h"
#include "promptex/prompts.h"
#include "promptex/ranker.h"

namespace promptex::training {

struct TrainConfig {
  int batch_size = 16;
  double learning_rate = 1e-3;
  int max_epochs = 25;
  int patience = 5;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  ranker::RankingLossConfig loss;
  ranker::ScorerConfig scorer;
  encoder::EncoderConfig encoder;

  // Throws std::invalid_argument on violated invariants.
  void Validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

std::string TrainConfigToJson(const TrainConfig& config);
// Missing keys keep the values of `defaults`; unknown keys are rejected.
TrainConfig TrainConfigFromJson(const std::string& json_text,
                                const TrainConfig& defaults = {});

// Decoupled weight decay in the style of the common transformer AdamW:
// betas (0.9, 0.999), eps 1e-6, decay applied as p -= lr * wd * p after the
// moment update, to parameters whose weight_decay flag is set.
class AdamW {
 public:
  explicit AdamW(double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-6);
  void Step(const std::vector<ad::Parameter*>& params, double learning_rate);
  int steps() const { return steps_; }

 private:
  double weight_decay_;
  double beta1_;
  double beta2_;
  double eps_;
  int steps_ = 0;
  std::map<std::string, std::pair<ad::Matrix, ad::Matrix>> moments_;
};

// Loss of one example and, when `accumulate_grads` is set, its gradient added
// into the parameter grads scaled by `grad_scale`.
ranker::LossBreakdown ExampleLoss(model::Model& model, const model::Example& example,
                                  const ranker::RankingLossConfig& loss,
                                  std::mt19937_64* dropout_rng, bool accumulate_grads,
                                  double grad_scale = 1.0);

std::vector<evaluation::SlotPrediction> PredictExamples(
    model::Model& model, const std::vector<model::Example>& examples,
    std::vector<ranker::ScoreSheet>* sheets = nullptr);

// JSON Lines {"doc_id","template_type","slot_type","cls_score","spans":[...]}.
void WritePredictions(std::ostream& out, const std::vector<model::Example>& examples,
                      const std::vector<ranker::ScoreSheet>& sheets);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_micro_f1 = 0.0;
  double learning_rate = 0.0;
  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct TrainOptions {
  std::shared_ptr<const encoder::ExternalEmbeddings> external;
  // Skips optimizer updates; the epoch loop, scheduler and early stopping run
  // unchanged.
  bool freeze = false;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  std::unique_ptr<model::Model> model;  // Holds the best-dev parameters.
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_dev_micro_f1 = 0.0;
};

// Throws TrainingDiverged when a loss becomes non-finite and
// std::invalid_argument for an empty training split.
TrainResult Train(const TrainConfig& config, const corpus::DatasetSplit& train,
                  const corpus::DatasetSplit& dev, const prompts::PromptSet& prompts,
                  const corpus::Ontology& ontology, const TrainOptions& options = {});

void WriteTrainingLog(std::ostream& out, const TrainConfig& config,
                      const std::vector<EpochLog>& log);

struct GradientCheckOptions {
  double epsilon = 1e-5;
  int samples_per_tensor = 6;  // Entries checked per tensor; all if smaller.
  double denominator_floor = 1e-6;
  std::uint64_t seed = 0;
};

struct TensorGradientCheck {
  std::string name;
  int checked = 0;
  int skipped_at_kink = 0;
  double max_relative_error = 0.0;
};

struct GradientCheckReport {
  double max_relative_error = 0.0;
  // Set when the example sits on a hinge kink or a perturbation crosses one;
  // the affected entries are excluded from the error.
  bool at_kink = false;
  int checked = 0;
  int skipped_at_kink = 0;
  double loss = 0.0;
  std::vector<TensorGradientCheck> tensors;
};

// Central differences against the analytic gradient of J for sampled entries
// of every trainable tensor. Relative error is |a - n| / max(|a|, |n|, floor).
GradientCheckReport FiniteDifferenceCheck(model::Model& model,
                                          const model::Example& example,
                                          const ranker::RankingLossConfig& loss,
                                          const GradientCheckOptions& options = {});

}  // namespace promptex::training

#endif  // PROMPTEX_TRAINING_H_
