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

#include "promptex/tuning.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptex/charts.h"
#include "promptex/errors.h"

namespace promptex::tuning {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

enum SeedStream : std::uint64_t {
  kSampling = 0,
  kTrialRuns = 1,
  kFinalRuns = 2,
  kFewshotRuns = 3,
  kFewshotSubsample = 4,
};

template <typename T>
const T& Pick(const std::vector<T>& values, std::mt19937_64& rng) {
  return values[std::uniform_int_distribution<size_t>(0, values.size() - 1)(rng)];
}

double Uniform(double lo, double hi, std::mt19937_64& rng) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

template <typename T>
bool In(const std::vector<T>& values, const T& v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

void CheckInterval(double lo, double hi, const char* name) {
  if (!(lo <= hi)) throw std::invalid_argument(fmt::format("empty interval for {}", name));
}

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void ReadInterval(const json& j, const char* key, double& lo, double& hi) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 2) throw ValidationError(fmt::format("'{}' must be [min, max]", key));
  lo = v[0];
  hi = v[1];
}

}  // namespace

void SearchSpace::Validate() const {
  if (distance_sizes.empty() || priors.empty() || hidden_units.empty() ||
      batch_sizes.empty()) {
    throw std::invalid_argument("search space has an empty choice set");
  }
  CheckInterval(dropout_min, dropout_max, "dropout");
  if (dropout_min < 0.0 || dropout_max > 0.8) {
    throw std::invalid_argument("dropout range must lie in [0, 0.8]");
  }
  if (layers_min < 1 || layers_min > layers_max) {
    throw std::invalid_argument("layer range must satisfy 1 <= min <= max");
  }
  CheckInterval(lr_min, lr_max, "learning rate");
  if (!(lr_min > 0.0)) throw std::invalid_argument("learning rates must be positive");
  CheckInterval(lambda_min, lambda_max, "lambda");
  if (lambda_min < 0.0 || lambda_max > 1.0) {
    throw std::invalid_argument("lambda range must lie in [0, 1]");
  }
  CheckInterval(alpha_min, alpha_max, "alpha");
  CheckInterval(beta_min, beta_max, "beta");
  if (!(alpha_min > 0.0) || !(beta_min > 0.0)) {
    throw std::invalid_argument("margins must be positive");
  }
}

bool SearchSpace::Contains(const TrainConfig& c) const {
  return In(distance_sizes, c.encoder.distance_size) && In(priors, c.scorer.prior) &&
         c.scorer.dropout >= dropout_min && c.scorer.dropout <= dropout_max &&
         In(hidden_units, c.scorer.hidden_units) && c.scorer.layers >= layers_min &&
         c.scorer.layers <= layers_max && In(batch_sizes, c.batch_size) &&
         c.learning_rate >= lr_min && c.learning_rate <= lr_max &&
         c.loss.lambda >= lambda_min && c.loss.lambda <= lambda_max &&
         c.loss.alpha >= alpha_min && c.loss.alpha <= alpha_max && c.loss.beta >= beta_min &&
         c.loss.beta <= beta_max;
}

std::string SearchSpaceToJson(const SearchSpace& s) {
  ordered_json j;
  j["distance_sizes"] = s.distance_sizes;
  std::vector<std::string> priors;
  for (auto p : s.priors) priors.push_back(ranker::PriorTypeName(p));
  j["priors"] = priors;
  j["dropout"] = {s.dropout_min, s.dropout_max};
  j["hidden_units"] = s.hidden_units;
  j["layers"] = {s.layers_min, s.layers_max};
  j["batch_sizes"] = s.batch_sizes;
  j["learning_rate"] = {s.lr_min, s.lr_max};
  j["lambda"] = {s.lambda_min, s.lambda_max};
  j["alpha"] = {s.alpha_min, s.alpha_max};
  j["beta"] = {s.beta_min, s.beta_max};
  return j.dump(2);
}

SearchSpace SearchSpaceFromJson(const std::string& json_text, const SearchSpace& defaults) {
  SearchSpace s = defaults;
  try {
    const json j = json::parse(json_text);
    for (const auto& [key, value] : j.items()) {
      static const std::vector<std::string> kKeys = {
          "distance_sizes", "priors", "dropout", "hidden_units", "layers",
          "batch_sizes",    "learning_rate", "lambda", "alpha", "beta"};
      if (!In(kKeys, key)) throw ValidationError(fmt::format("unknown key '{}' in space", key));
    }
    Read(j, "distance_sizes", s.distance_sizes);
    if (j.contains("priors")) {
      s.priors.clear();
      for (const auto& p : j.at("priors")) {
        s.priors.push_back(ranker::ParsePriorType(p.get<std::string>()));
      }
    }
    ReadInterval(j, "dropout", s.dropout_min, s.dropout_max);
    Read(j, "hidden_units", s.hidden_units);
    if (j.contains("layers")) {
      const auto v = j.at("layers").get<std::vector<int>>();
      if (v.size() != 2) throw ValidationError("'layers' must be [min, max]");
      s.layers_min = v[0];
      s.layers_max = v[1];
    }
    Read(j, "batch_sizes", s.batch_sizes);
    ReadInterval(j, "learning_rate", s.lr_min, s.lr_max);
    ReadInterval(j, "lambda", s.lambda_min, s.lambda_max);
    ReadInterval(j, "alpha", s.alpha_min, s.alpha_max);
    ReadInterval(j, "beta", s.beta_min, s.beta_max);
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed search space: {}", e.what()));
  }
  return s;
}

TrainConfig SampleConfig(const SearchSpace& space, const TrainConfig& base,
                         std::mt19937_64& rng) {
  space.Validate();
  TrainConfig c = base;
  c.encoder.distance_size = Pick(space.distance_sizes, rng);
  c.scorer.prior = Pick(space.priors, rng);
  c.scorer.dropout = Uniform(space.dropout_min, space.dropout_max, rng);
  c.scorer.hidden_units = Pick(space.hidden_units, rng);
  c.scorer.layers = std::uniform_int_distribution<int>(space.layers_min, space.layers_max)(rng);
  c.batch_size = Pick(space.batch_sizes, rng);
  c.learning_rate =
      std::exp(Uniform(std::log(space.lr_min), std::log(space.lr_max), rng));
  c.learning_rate = std::clamp(c.learning_rate, space.lr_min, space.lr_max);
  c.loss.lambda = Uniform(space.lambda_min, space.lambda_max, rng);
  c.loss.alpha = Uniform(space.alpha_min, space.alpha_max, rng);
  c.loss.beta = Uniform(space.beta_min, space.beta_max, rng);
  return c;
}

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ stream) ^ index);
}

Objective TrainingObjective(const corpus::DatasetSplit& train, const corpus::DatasetSplit& dev,
                            const prompts::PromptSet& prompts,
                            const corpus::Ontology& ontology) {
  return [&train, &dev, &prompts, &ontology](const TrainConfig& config) {
    return training::Train(config, train, dev, prompts, ontology).best_dev_micro_f1;
  };
}

StudyResult RunStudy(const SearchSpace& space, const TrainConfig& base,
                     const Objective& objective, const StudyOptions& options) {
  if (options.trials < 1 || options.seeds_per_trial < 1) {
    throw std::invalid_argument("a study needs at least one trial and one seed");
  }
  space.Validate();
  StudyResult study;
  std::mt19937_64 rng(DeriveSeed(options.seed, kSampling, 0));
  for (int t = 0; t < options.trials; ++t) {
    TrialResult trial;
    trial.index = t;
    trial.config = SampleConfig(space, base, rng);
    for (int s = 0; s < options.seeds_per_trial; ++s) {
      trial.seeds.push_back(DeriveSeed(
          options.seed, kTrialRuns, static_cast<std::uint64_t>(t * options.seeds_per_trial + s)));
    }
    study.trials.push_back(std::move(trial));
  }

  auto run_trial = [&](TrialResult& trial) {
    for (std::uint64_t seed : trial.seeds) {
      TrainConfig config = trial.config;
      config.seed = seed;
      double score = 0.0;
      if (!trial.failed) {
        try {
          score = objective(config);
        } catch (const TrainingDiverged& e) {
          trial.failed = true;
          trial.error = e.what();
        }
      }
      trial.scores.push_back(trial.failed ? 0.0 : score);
    }
    if (trial.failed) std::fill(trial.scores.begin(), trial.scores.end(), 0.0);
    double sum = 0.0;
    for (double s : trial.scores) sum += s;
    trial.mean = sum / static_cast<double>(trial.scores.size());
  };

  const int jobs = std::max(1, std::min(options.jobs, options.trials));
  if (jobs == 1) {
    for (auto& trial : study.trials) run_trial(trial);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(study.trials.size());
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (int t; (t = next.fetch_add(1)) < options.trials;) {
          try {
            run_trial(study.trials[t]);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (const auto& trial : study.trials) {
    if (trial.mean > study.trials[study.best_index].mean) study.best_index = trial.index;
  }
  return study;
}

std::string StudyToJson(const StudyResult& study) {
  ordered_json j;
  j["best_trial"] = study.best_index;
  ordered_json trials = ordered_json::array();
  for (const auto& t : study.trials) {
    ordered_json trial;
    trial["index"] = t.index;
    trial["config"] = ordered_json::parse(training::TrainConfigToJson(t.config));
    trial["seeds"] = t.seeds;
    trial["dev_micro_f1"] = t.scores;
    trial["mean"] = t.mean;
    trial["failed"] = t.failed;
    if (t.failed) trial["error"] = t.error;
    trials.push_back(std::move(trial));
  }
  j["trials"] = std::move(trials);
  return j.dump(2);
}

Summary Summarize(const std::vector<double>& values) {
  Summary s;
  s.values = values;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / n;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.standard_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

Runner TrainAndTest(const corpus::DatasetSplit& dev, const corpus::DatasetSplit& test,
                    const prompts::PromptSet& prompts, const corpus::Ontology& ontology) {
  return [&dev, &test, &prompts, &ontology](const TrainConfig& config,
                                            const corpus::DatasetSplit& train) {
    auto result = training::Train(config, train, dev, prompts, ontology);
    const auto examples = model::MakeExamples(test, prompts);
    return evaluation::Evaluate(training::PredictExamples(*result.model, examples));
  };
}

FinalReport MakeFinalReport(const TrainConfig& best, const corpus::DatasetSplit& train,
                            const Runner& runner, int seeds, std::uint64_t study_seed) {
  if (seeds < 1) throw std::invalid_argument("final report needs at least one seed");
  FinalReport report;
  std::map<std::string, std::vector<double>> values;
  for (int k = 0; k < seeds; ++k) {
    TrainConfig config = best;
    config.seed = DeriveSeed(study_seed, kFinalRuns, static_cast<std::uint64_t>(k));
    report.seeds.push_back(config.seed);
    const auto m = runner(config, train);
    values["micro_precision"].push_back(m.micro.precision);
    values["micro_recall"].push_back(m.micro.recall);
    values["micro_f1"].push_back(m.micro.f1);
    values["macro_precision"].push_back(m.macro.precision);
    values["macro_recall"].push_back(m.macro.recall);
    values["macro_f1"].push_back(m.macro.f1);
  }
  for (const auto& [name, v] : values) report.metrics[name] = Summarize(v);
  return report;
}

void WriteFinalReportCsv(std::ostream& out, const FinalReport& report) {
  out << "metric,mean,standard_error,n\n";
  for (const auto& [name, s] : report.metrics) {
    out << fmt::format("{},{:.6f},{:.6f},{}\n", name, s.mean, s.standard_error,
                       s.values.size());
  }
}

std::vector<FewshotPoint> FewshotCurve(const TrainConfig& config,
                                       const corpus::DatasetSplit& train,
                                       const std::vector<int>& caps, const Runner& runner,
                                       int seeds, std::uint64_t seed) {
  if (seeds < 1) throw std::invalid_argument("few-shot curve needs at least one seed");
  std::vector<FewshotPoint> points;
  for (size_t c = 0; c < caps.size(); ++c) {
    if (caps[c] < 1) throw std::invalid_argument("few-shot caps must be positive");
    FewshotPoint point;
    point.cap = caps[c];
    point.label = caps[c] == evaluation::kNoCap ? "inf" : std::to_string(caps[c]);
    const auto subsample = evaluation::SubsampleFewshot(
        train, caps[c], caps[c], DeriveSeed(seed, kFewshotSubsample, c));
    for (const auto& instance : subsample.instances) {
      point.train_examples += static_cast<int>(instance.slots.size());
    }
    for (int k = 0; k < seeds; ++k) {
      TrainConfig run = config;
      run.seed = DeriveSeed(seed, kFewshotRuns, c * static_cast<std::uint64_t>(seeds) + k);
      point.values.push_back(runner(run, subsample).micro.f1);
    }
    point.mean = Summarize(point.values).mean;
    point.min = *std::min_element(point.values.begin(), point.values.end());
    point.max = *std::max_element(point.values.begin(), point.values.end());
    points.push_back(std::move(point));
  }
  return points;
}

void WriteFewshotCsv(std::ostream& out, const std::vector<FewshotPoint>& points) {
  out << "cap,train_examples,mean_micro_f1,min_micro_f1,max_micro_f1,runs\n";
  for (const auto& p : points) {
    out << fmt::format("{},{},{:.6f},{:.6f},{:.6f},{}\n", p.label, p.train_examples, p.mean,
                       p.min, p.max, p.values.size());
  }
}

std::string FewshotSvg(const std::vector<FewshotPoint>& points) {
  charts::LineChart chart;
  chart.title = "Micro F1 by per-slot example cap";
  chart.x_label = "examples per slot (positive and negative cap)";
  chart.y_label = "test micro F1";
  charts::LineSeries series;
  series.name = "mean (band: range)";
  for (const auto& p : points) {
    chart.x_ticks.push_back(p.label);
    series.y.push_back(p.mean);
    series.lower.push_back(p.min);
    series.upper.push_back(p.max);
  }
  chart.series.push_back(std::move(series));
  return charts::RenderSvg(chart);
}

}  // namespace promptex::tuning
