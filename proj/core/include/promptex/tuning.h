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

// Seeded random hyperparameter search, multi-seed final reports with
// standard errors, and few-shot learning curves.

#ifndef PROMPTEX_TUNING_H_
#define PROMPTEX_TUNING_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "promptex/corpus.h"
#include "promptex/evaluation.h"
#include "promptex/prompts.h"
#include "promptex/ranker.h"
#include "promptex/training.h"

namespace promptex::tuning {

using training::TrainConfig;

struct SearchSpace {
  std::vector<int> distance_sizes = {8, 16, 32, 64, 128, 256, 512};
  std::vector<ranker::PriorType> priors = {ranker::PriorType::kNone,
                                           ranker::PriorType::kEmbed,
                                           ranker::PriorType::kLogit};
  double dropout_min = 0.0;
  double dropout_max = 0.8;
  std::vector<int> hidden_units = {32, 64, 128, 256, 512, 1024, 2048};
  int layers_min = 1;
  int layers_max = 4;
  std::vector<int> batch_sizes = {8, 16, 32, 64, 128, 256};
  double lr_min = 1e-6;
  double lr_max = 1e-3;
  double lambda_min = 0.0;
  double lambda_max = 1.0;
  double alpha_min = 1e-2;
  double alpha_max = 0.5;
  double beta_min = 1e-2;
  double beta_max = 0.5;

  // Throws std::invalid_argument for empty sets or inverted intervals.
  void Validate() const;
  bool Contains(const TrainConfig& config) const;
};

std::string SearchSpaceToJson(const SearchSpace& space);
// Missing keys keep the values of `defaults`.
SearchSpace SearchSpaceFromJson(const std::string& json_text,
                                const SearchSpace& defaults = {});

// Uniform over discrete sets and intervals, log-uniform over the learning
// rate. Fields outside the space are copied from `base`.
TrainConfig SampleConfig(const SearchSpace& space, const TrainConfig& base,
                         std::mt19937_64& rng);

// SplitMix64 finalizer over (seed, stream, index).
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// Dev micro-F1 of one training run; config.seed is already set.
using Objective = std::function<double(const TrainConfig& config)>;

Objective TrainingObjective(const corpus::DatasetSplit& train, const corpus::DatasetSplit& dev,
                            const prompts::PromptSet& prompts, const corpus::Ontology& ontology);

struct StudyOptions {
  int trials = 20;
  int seeds_per_trial = 3;
  std::uint64_t seed = 0;
  int jobs = 1;  // Concurrent trials; results are merged by trial index.
};

struct TrialResult {
  int index = 0;
  TrainConfig config;
  std::vector<std::uint64_t> seeds;
  std::vector<double> scores;
  double mean = 0.0;
  bool failed = false;
  std::string error;
};

struct StudyResult {
  std::vector<TrialResult> trials;
  int best_index = 0;
  const TrialResult& best() const { return trials.at(best_index); }
};

// A trial whose run throws TrainingDiverged scores 0 and records the error.
StudyResult RunStudy(const SearchSpace& space, const TrainConfig& base,
                     const Objective& objective, const StudyOptions& options = {});

std::string StudyToJson(const StudyResult& study);

struct Summary {
  double mean = 0.0;
  double standard_error = 0.0;  // Sample std / sqrt(n); 0 for n < 2.
  std::vector<double> values;
};

Summary Summarize(const std::vector<double>& values);

// Metric report of a run trained with `config` on `train`.
using Runner = std::function<evaluation::MetricReport(const TrainConfig& config,
                                                      const corpus::DatasetSplit& train)>;

// Trains on `train`, selects on `dev`, and evaluates on `test`.
Runner TrainAndTest(const corpus::DatasetSplit& dev, const corpus::DatasetSplit& test,
                    const prompts::PromptSet& prompts, const corpus::Ontology& ontology);

struct FinalReport {
  std::vector<std::uint64_t> seeds;
  // micro_precision, micro_recall, micro_f1, macro_precision, macro_recall,
  // macro_f1.
  std::map<std::string, Summary> metrics;
};

FinalReport MakeFinalReport(const TrainConfig& best, const corpus::DatasetSplit& train,
                            const Runner& runner, int seeds, std::uint64_t study_seed);

void WriteFinalReportCsv(std::ostream& out, const FinalReport& report);

struct FewshotPoint {
  int cap = evaluation::kNoCap;
  std::string label;  // "inf" for no cap.
  int train_examples = 0;
  std::vector<double> values;  // Test micro-F1 per seed.
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Per cap: subsample the training split with cap positives and cap negatives
// per slot, train `seeds` runs and record the mean and full range.
std::vector<FewshotPoint> FewshotCurve(const TrainConfig& config,
                                       const corpus::DatasetSplit& train,
                                       const std::vector<int>& caps, const Runner& runner,
                                       int seeds, std::uint64_t seed);

void WriteFewshotCsv(std::ostream& out, const std::vector<FewshotPoint>& points);
std::string FewshotSvg(const std::vector<FewshotPoint>& points);

}  // namespace promptex::tuning

#endif  // PROMPTEX_TUNING_H_
