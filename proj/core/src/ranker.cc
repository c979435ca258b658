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

#include "promptex/ranker.h"

#include <cmath>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "promptex/errors.h"

namespace promptex::ranker {
namespace {

using ad::Matrix;
using ad::NodeId;

std::string LayerName(int layer, const char* part) {
  return fmt::format("scorer.layer{}.{}", layer, part);
}

}  // namespace

void RankingLossConfig::Validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("lambda must lie in [0, 1]");
  }
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("margins alpha and beta must be positive");
  }
}

std::string PriorTypeName(PriorType prior) {
  switch (prior) {
    case PriorType::kNone:
      return "none";
    case PriorType::kEmbed:
      return "embed";
    case PriorType::kLogit:
      return "logit";
  }
  return "none";
}

PriorType ParsePriorType(std::string_view name) {
  if (name == "none") return PriorType::kNone;
  if (name == "embed") return PriorType::kEmbed;
  if (name == "logit") return PriorType::kLogit;
  throw ValidationError(fmt::format("unknown prior type '{}'", name));
}

void ScorerConfig::Validate() const {
  if (layers < 1) throw std::invalid_argument("scorer needs at least one layer");
  if (hidden_units < 1) throw std::invalid_argument("hidden_units must be >= 1");
  if (!(dropout >= 0.0 && dropout <= 0.8)) {
    throw std::invalid_argument("dropout must lie in [0, 0.8]");
  }
  if (prior == PriorType::kEmbed && prior_size < 1) {
    throw std::invalid_argument("prior_size must be >= 1");
  }
}

std::vector<Span> Decode(const ScoreSheet& sheet) {
  std::vector<Span> out;
  for (const auto& scored : sheet.spans) {
    if (scored.score >= sheet.cls_score) out.push_back(scored.span);
  }
  return out;
}

LossBreakdown RankingLossWithGradient(const ScoreSheet& sheet,
                                      const std::vector<Span>& gold,
                                      const RankingLossConfig& config) {
  const std::set<Span> gold_set(gold.begin(), gold.end());
  std::vector<bool> is_gold(sheet.spans.size());
  int num_gold = 0;
  for (size_t i = 0; i < sheet.spans.size(); ++i) {
    is_gold[i] = gold_set.contains(sheet.spans[i].span);
    num_gold += is_gold[i] ? 1 : 0;
  }
  if (num_gold != static_cast<int>(gold_set.size())) {
    throw std::invalid_argument("gold span missing from the candidate set");
  }
  const int num_other = static_cast<int>(sheet.spans.size()) - num_gold;

  LossBreakdown out;
  out.span_grads.assign(sheet.spans.size(), 0.0);
  out.active.assign(sheet.spans.size(), false);
  const double s_cls = sheet.cls_score;
  for (size_t i = 0; i < sheet.spans.size(); ++i) {
    const double s = sheet.spans[i].score;
    double arg;
    double weight;
    double sign;
    if (is_gold[i]) {
      arg = config.alpha - (s - s_cls);
      weight = config.lambda / num_gold;
      sign = -1.0;
    } else {
      arg = config.beta + (s - s_cls);
      weight = (1.0 - config.lambda) / num_other;
      sign = 1.0;
    }
    if (arg == 0.0) out.at_kink = true;
    if (arg <= 0.0) continue;
    out.active[i] = true;
    (is_gold[i] ? out.positive : out.negative) += arg / (is_gold[i] ? num_gold : num_other);
    out.span_grads[i] += sign * weight;
    out.cls_grad -= sign * weight;
  }
  out.loss = config.lambda * out.positive + (1.0 - config.lambda) * out.negative;
  return out;
}

double RankingLoss(const ScoreSheet& sheet, const std::vector<Span>& gold,
                   const RankingLossConfig& config) {
  return RankingLossWithGradient(sheet, gold, config).loss;
}

Scorer::Scorer(const ScorerConfig& config, int hidden, int distance_size,
               int num_slots, std::uint64_t seed)
    : config_(config), input_size_(2 * (hidden + distance_size)), num_slots_(num_slots) {
  config_.Validate();
  std::mt19937_64 rng(seed ^ 0x5c0e5c0e5c0e5c0eULL);
  int fan_in = input_size_;
  if (config_.prior == PriorType::kEmbed) {
    params_.Add("scorer.prior_embedding",
                ad::RandomNormal(num_slots, config_.prior_size, 0.5, rng));
    fan_in += config_.prior_size;
  }
  if (config_.prior == PriorType::kLogit) {
    params_.Add("scorer.prior_logit", Matrix(num_slots, 1), false);
  }
  for (int l = 0; l < config_.layers; ++l) {
    params_.Add(LayerName(l, "w"),
                ad::RandomNormal(fan_in, config_.hidden_units,
                                 1.0 / std::sqrt(static_cast<double>(fan_in)), rng));
    params_.Add(LayerName(l, "b"), Matrix(1, config_.hidden_units), false);
    fan_in = config_.hidden_units;
  }
  params_.Add("scorer.out.w",
              ad::RandomNormal(fan_in, 1, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng));
  params_.Add("scorer.out.b", Matrix(1, 1), false);
}

NodeId Scorer::Forward(ad::Graph& graph, const encoder::EncodedNodes& encoded,
                       const std::vector<Span>& candidates, int slot,
                       std::mt19937_64* rng) {
  if (slot < 0 || slot >= num_slots_) throw std::out_of_range("slot index out of range");
  const Matrix& context = graph.Value(encoded.context);
  if (2 * context.cols() != input_size_) {
    throw std::invalid_argument("encoded context width does not match the scorer");
  }
  const int n = context.rows();
  std::vector<int> starts, ends;
  for (const auto& span : candidates) {
    if (span.start < 1 || span.end > n || span.start > span.end) {
      throw std::out_of_range(
          fmt::format("span out of bounds: ({},{}) in a {}-token context", span.start,
                      span.end, n));
    }
    starts.push_back(span.start - 1);
    ends.push_back(span.end - 1);
  }

  const NodeId cls_parts[] = {encoded.cls, encoded.sentinel_distance, encoded.cls,
                              encoded.sentinel_distance};
  std::vector<NodeId> rows = {graph.ConcatCols(cls_parts)};
  if (!candidates.empty()) {
    const NodeId span_parts[] = {graph.GatherRows(encoded.context, std::move(starts)),
                                 graph.GatherRows(encoded.context, std::move(ends))};
    rows.push_back(graph.ConcatCols(span_parts));
  }
  NodeId x = graph.ConcatRows(rows);
  const int k1 = static_cast<int>(candidates.size()) + 1;

  if (config_.prior == PriorType::kEmbed) {
    NodeId prior = graph.GatherRows(graph.Param(&params_.Get("scorer.prior_embedding")),
                                    std::vector<int>(k1, slot));
    const NodeId parts[] = {x, prior};
    x = graph.ConcatCols(parts);
  }
  for (int l = 0; l < config_.layers; ++l) {
    x = graph.Gelu(graph.AddRow(graph.MatMul(x, graph.Param(&params_.Get(LayerName(l, "w")))),
                                graph.Param(&params_.Get(LayerName(l, "b")))));
    if (rng != nullptr && config_.dropout > 0.0) {
      const Matrix& v = graph.Value(x);
      Matrix mask(v.rows(), v.cols());
      std::bernoulli_distribution keep(1.0 - config_.dropout);
      const double scale = 1.0 / (1.0 - config_.dropout);
      for (auto& m : mask.data()) m = keep(*rng) ? scale : 0.0;
      x = graph.MulConstant(x, std::move(mask));
    }
  }
  NodeId scores = graph.AddRow(graph.MatMul(x, graph.Param(&params_.Get("scorer.out.w"))),
                               graph.Param(&params_.Get("scorer.out.b")));
  if (config_.prior == PriorType::kLogit) {
    NodeId bias = graph.GatherRows(graph.Param(&params_.Get("scorer.prior_logit")), {slot});
    Matrix pattern(k1, 1, 1.0);
    pattern(0, 0) = 0.0;  // CLS is not shifted.
    scores = graph.Add(scores, graph.ScalarTimesConstant(bias, std::move(pattern)));
  }
  return scores;
}

ScoreSheet Scorer::Score(const encoder::EncodedSequence& encoded,
                         const Matrix& sentinel_distance,
                         const std::vector<Span>& candidates, int slot) {
  ad::Graph graph;
  encoder::EncodedNodes nodes;
  nodes.cls = graph.Constant(encoded.cls);
  nodes.context = graph.Constant(encoded.context);
  nodes.sentinel_distance = graph.Constant(sentinel_distance);
  NodeId scores = Forward(graph, nodes, candidates, slot, nullptr);
  return MakeSheet(graph.Value(scores), candidates);
}

ScoreSheet MakeSheet(const Matrix& scores, const std::vector<Span>& candidates) {
  ScoreSheet sheet;
  sheet.cls_score = scores(0, 0);
  sheet.spans.reserve(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    sheet.spans.push_back({candidates[i], scores(static_cast<int>(i) + 1, 0)});
  }
  sheet.predicted = Decode(sheet);
  return sheet;
}

}  // namespace promptex::ranker
