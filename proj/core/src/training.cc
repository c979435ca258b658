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
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptex/errors.h"

namespace promptex {

TrainingDiverged::TrainingDiverged(int epoch, int batch, double loss)
    : std::runtime_error(fmt::format("training diverged at epoch {}, batch {}: loss {}",
                                     epoch, batch, loss)),
      epoch_(epoch),
      batch_(batch),
      loss_(loss) {}

namespace training {
namespace {

using ad::Matrix;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kImprovementTolerance = 1e-6;

// Rejects keys of `j` outside `allowed`.
void CheckKeys(const json& j, std::initializer_list<const char*> allowed,
               const std::string& where) {
  if (!j.is_object()) throw ValidationError(fmt::format("'{}' must be an object", where));
  std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!names.contains(key)) {
      throw ValidationError(fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void TrainConfig::Validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (patience < 1 || patience > max_epochs) {
    throw std::invalid_argument("patience must lie in [1, max_epochs]");
  }
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
  loss.Validate();
  scorer.Validate();
  encoder.Validate();
}

std::string TrainConfigToJson(const TrainConfig& c) {
  ordered_json j;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["weight_decay"] = c.weight_decay;
  j["seed"] = c.seed;
  j["loss"] = {{"lambda", c.loss.lambda}, {"alpha", c.loss.alpha}, {"beta", c.loss.beta}};
  ordered_json scorer;
  scorer["hidden_units"] = c.scorer.hidden_units;
  scorer["layers"] = c.scorer.layers;
  scorer["dropout"] = c.scorer.dropout;
  scorer["prior"] = ranker::PriorTypeName(c.scorer.prior);
  scorer["prior_size"] = c.scorer.prior_size;
  j["scorer"] = std::move(scorer);
  ordered_json enc;
  enc["hidden"] = c.encoder.hidden;
  enc["distance_size"] = c.encoder.distance_size;
  enc["layers"] = c.encoder.layers;
  enc["heads"] = c.encoder.heads;
  enc["ff_multiplier"] = c.encoder.ff_multiplier;
  enc["max_distance"] = c.encoder.max_distance;
  enc["max_length"] = c.encoder.max_length;
  j["encoder"] = std::move(enc);
  return j.dump(2);
}

TrainConfig TrainConfigFromJson(const std::string& json_text, const TrainConfig& defaults) {
  TrainConfig c = defaults;
  try {
    const json j = json::parse(json_text);
    CheckKeys(j,
              {"batch_size", "learning_rate", "max_epochs", "patience", "weight_decay",
               "seed", "loss", "scorer", "encoder"},
              "train config");
    Read(j, "batch_size", c.batch_size);
    Read(j, "learning_rate", c.learning_rate);
    Read(j, "max_epochs", c.max_epochs);
    Read(j, "patience", c.patience);
    Read(j, "weight_decay", c.weight_decay);
    Read(j, "seed", c.seed);
    if (j.contains("loss")) {
      const json& l = j.at("loss");
      CheckKeys(l, {"lambda", "alpha", "beta"}, "loss");
      Read(l, "lambda", c.loss.lambda);
      Read(l, "alpha", c.loss.alpha);
      Read(l, "beta", c.loss.beta);
    }
    if (j.contains("scorer")) {
      const json& s = j.at("scorer");
      CheckKeys(s, {"hidden_units", "layers", "dropout", "prior", "prior_size"}, "scorer");
      Read(s, "hidden_units", c.scorer.hidden_units);
      Read(s, "layers", c.scorer.layers);
      Read(s, "dropout", c.scorer.dropout);
      if (s.contains("prior")) {
        c.scorer.prior = ranker::ParsePriorType(s.at("prior").get<std::string>());
      }
      Read(s, "prior_size", c.scorer.prior_size);
    }
    if (j.contains("encoder")) {
      const json& e = j.at("encoder");
      CheckKeys(e,
                {"hidden", "distance_size", "layers", "heads", "ff_multiplier",
                 "max_distance", "max_length"},
                "encoder");
      Read(e, "hidden", c.encoder.hidden);
      Read(e, "distance_size", c.encoder.distance_size);
      Read(e, "layers", c.encoder.layers);
      Read(e, "heads", c.encoder.heads);
      Read(e, "ff_multiplier", c.encoder.ff_multiplier);
      Read(e, "max_distance", c.encoder.max_distance);
      Read(e, "max_length", c.encoder.max_length);
    }
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed train config: {}", e.what()));
  }
  return c;
}

AdamW::AdamW(double weight_decay, double beta1, double beta2, double eps)
    : weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamW::Step(const std::vector<ad::Parameter*>& params, double learning_rate) {
  ++steps_;
  const double correction1 = 1.0 - std::pow(beta1_, steps_);
  const double correction2 = 1.0 - std::pow(beta2_, steps_);
  const double step_size = learning_rate * std::sqrt(correction2) / correction1;
  for (ad::Parameter* p : params) {
    if (p->grad.size() != p->value.size()) continue;
    auto [it, inserted] = moments_.try_emplace(p->name);
    auto& [m, v] = it->second;
    if (inserted) {
      m = Matrix(p->value.rows(), p->value.cols());
      v = Matrix(p->value.rows(), p->value.cols());
    }
    auto& value = p->value.data();
    const auto& grad = p->grad.data();
    auto& md = m.data();
    auto& vd = v.data();
    for (size_t i = 0; i < value.size(); ++i) {
      md[i] = beta1_ * md[i] + (1.0 - beta1_) * grad[i];
      vd[i] = beta2_ * vd[i] + (1.0 - beta2_) * grad[i] * grad[i];
      value[i] -= step_size * md[i] / (std::sqrt(vd[i]) + eps_);
      if (p->weight_decay && weight_decay_ > 0.0) {
        value[i] -= learning_rate * weight_decay_ * value[i];
      }
    }
  }
}

ranker::LossBreakdown ExampleLoss(model::Model& model, const model::Example& example,
                                  const ranker::RankingLossConfig& loss,
                                  std::mt19937_64* dropout_rng, bool accumulate_grads,
                                  double grad_scale) {
  ad::Graph graph;
  const ad::NodeId scores = model.Forward(graph, example, dropout_rng);
  const ranker::ScoreSheet sheet = ranker::MakeSheet(graph.Value(scores), example.candidates);
  ranker::LossBreakdown out = ranker::RankingLossWithGradient(sheet, example.gold, loss);
  if (accumulate_grads && std::isfinite(out.loss)) {
    Matrix seed(static_cast<int>(example.candidates.size()) + 1, 1);
    seed(0, 0) = out.cls_grad * grad_scale;
    bool any = seed(0, 0) != 0.0;
    for (size_t i = 0; i < out.span_grads.size(); ++i) {
      seed(static_cast<int>(i) + 1, 0) = out.span_grads[i] * grad_scale;
      any = any || out.span_grads[i] != 0.0;
    }
    if (any) graph.Backward(scores, seed);
  }
  return out;
}

std::vector<evaluation::SlotPrediction> PredictExamples(
    model::Model& model, const std::vector<model::Example>& examples,
    std::vector<ranker::ScoreSheet>* sheets) {
  std::vector<evaluation::SlotPrediction> out;
  out.reserve(examples.size());
  if (sheets != nullptr) sheets->clear();
  for (const auto& example : examples) {
    ranker::ScoreSheet sheet = model.Predict(example);
    out.push_back({example.doc_id, example.slot, example.gold, sheet.predicted});
    if (sheets != nullptr) sheets->push_back(std::move(sheet));
  }
  return out;
}

void WritePredictions(std::ostream& out, const std::vector<model::Example>& examples,
                      const std::vector<ranker::ScoreSheet>& sheets) {
  if (examples.size() != sheets.size()) {
    throw std::invalid_argument("examples and score sheets differ in length");
  }
  for (size_t i = 0; i < examples.size(); ++i) {
    const auto& sheet = sheets[i];
    const std::set<corpus::Span> predicted(sheet.predicted.begin(), sheet.predicted.end());
    ordered_json line;
    line["doc_id"] = examples[i].doc_id;
    line["template_type"] = examples[i].slot.template_type;
    line["slot_type"] = examples[i].slot.slot_type;
    line["cls_score"] = sheet.cls_score;
    ordered_json spans = ordered_json::array();
    for (const auto& s : sheet.spans) {
      ordered_json span;
      span["start"] = s.span.start;
      span["end"] = s.span.end;
      span["score"] = s.score;
      span["predicted"] = predicted.contains(s.span);
      spans.push_back(std::move(span));
    }
    line["spans"] = std::move(spans);
    out << line.dump() << '\n';
  }
}

TrainResult Train(const TrainConfig& config, const corpus::DatasetSplit& train,
                  const corpus::DatasetSplit& dev, const prompts::PromptSet& prompts,
                  const corpus::Ontology& ontology, const TrainOptions& options) {
  config.Validate();
  if (train.instances.empty()) throw std::invalid_argument("empty training split");
  prompts.CheckCovers(ontology);

  model::ModelConfig model_config{config.encoder, config.scorer};
  model_config.encoder.seed = config.seed;
  TrainResult result;
  result.model = std::make_unique<model::Model>(
      model_config, model::BuildVocabulary(train, prompts), ontology.SlotKeys(), prompts);
  model::Model& model = *result.model;
  if (options.external != nullptr) model.UseExternalEmbeddings(options.external);

  const auto train_examples = model::MakeExamples(train, prompts);
  const auto dev_examples = model::MakeExamples(dev, prompts);
  if (train_examples.empty()) throw std::invalid_argument("training split has no slots");
  const auto params = model.Parameters();

  AdamW optimizer(config.weight_decay);
  std::mt19937_64 shuffle_rng(config.seed ^ 0x7368756666ULL);
  std::mt19937_64 dropout_rng(config.seed ^ 0x64726f70ULL);
  std::vector<size_t> order(train_examples.size());
  std::iota(order.begin(), order.end(), 0);

  double lr = config.learning_rate;
  double best = -1.0;
  int since_improvement = 0;
  std::map<std::string, Matrix> best_snapshot = model.Snapshot();

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total_loss = 0.0;
    int batch = 0;
    for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      ++batch;
      const size_t end = std::min(order.size(), begin + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (auto* p : params) p->ZeroGrad();
      double batch_loss = 0.0;
      for (size_t i = begin; i < end; ++i) {
        const auto lb = ExampleLoss(model, train_examples[order[i]], config.loss,
                                    &dropout_rng, true, scale);
        if (!std::isfinite(lb.loss)) throw TrainingDiverged(epoch, batch, lb.loss);
        batch_loss += lb.loss;
      }
      total_loss += batch_loss;
      if (!std::isfinite(batch_loss * scale)) {
        throw TrainingDiverged(epoch, batch, batch_loss * scale);
      }
      if (!options.freeze) optimizer.Step(params, lr);
    }

    const auto predictions = PredictExamples(model, dev_examples);
    const double dev_f1 = evaluation::Evaluate(predictions).micro.f1;
    EpochLog entry{epoch, total_loss / static_cast<double>(order.size()), dev_f1, lr};
    result.log.push_back(entry);
    if (options.on_epoch) options.on_epoch(entry);

    if (dev_f1 > best + kImprovementTolerance) {
      best = dev_f1;
      result.best_epoch = epoch;
      best_snapshot = model.Snapshot();
      since_improvement = 0;
    } else {
      ++since_improvement;
      lr *= 0.5;
      if (since_improvement >= config.patience) break;
    }
  }
  model.Restore(best_snapshot);
  result.best_dev_micro_f1 = best;
  return result;
}

void WriteTrainingLog(std::ostream& out, const TrainConfig& config,
                      const std::vector<EpochLog>& log) {
  out << fmt::format(
      "# optimizer=adamw weight_decay={} grad_clipping=none scheduler=plateau_halving "
      "seed={}\n",
      config.weight_decay, config.seed);
  out << "epoch,train_loss,dev_micro_f1,lr\n";
  for (const auto& e : log) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", e.epoch, e.train_loss,
                       e.dev_micro_f1, e.learning_rate);
  }
}

GradientCheckReport FiniteDifferenceCheck(model::Model& model,
                                          const model::Example& example,
                                          const ranker::RankingLossConfig& loss,
                                          const GradientCheckOptions& options) {
  const auto params = model.Parameters();
  for (auto* p : params) p->ZeroGrad();
  const ranker::LossBreakdown base = ExampleLoss(model, example, loss, nullptr, true);

  GradientCheckReport report;
  report.loss = base.loss;
  report.at_kink = base.at_kink;
  std::mt19937_64 rng(options.seed);
  const double eps = options.epsilon;

  for (auto* p : params) {
    TensorGradientCheck tensor;
    tensor.name = p->name;
    const Matrix analytic = p->grad;
    const size_t size = p->value.size();
    std::vector<size_t> entries(size);
    std::iota(entries.begin(), entries.end(), 0);
    if (static_cast<int>(size) > options.samples_per_tensor) {
      std::vector<size_t> chosen;
      std::sample(entries.begin(), entries.end(), std::back_inserter(chosen),
                  options.samples_per_tensor, rng);
      entries = std::move(chosen);
    }
    for (size_t idx : entries) {
      double& value = p->value.data()[idx];
      const double original = value;
      value = original + eps;
      const auto plus = ExampleLoss(model, example, loss, nullptr, false);
      value = original - eps;
      const auto minus = ExampleLoss(model, example, loss, nullptr, false);
      value = original;
      if (plus.active != base.active || minus.active != base.active || plus.at_kink ||
          minus.at_kink) {
        ++tensor.skipped_at_kink;
        report.at_kink = true;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * eps);
      const double a = analytic.data()[idx];
      const double denominator =
          std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
      tensor.max_relative_error =
          std::max(tensor.max_relative_error, std::abs(a - numeric) / denominator);
      ++tensor.checked;
    }
    report.checked += tensor.checked;
    report.skipped_at_kink += tensor.skipped_at_kink;
    report.max_relative_error = std::max(report.max_relative_error, tensor.max_relative_error);
    report.tensors.push_back(std::move(tensor));
  }
  for (auto* p : params) p->ZeroGrad();
  return report;
}

}  // namespace training
}  // namespace promptex
