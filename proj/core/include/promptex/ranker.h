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

// Span ranking against a CLS sentinel. Every candidate span and the CLS token
// are scored by the same feed-forward network; the predicted answer set is
// every span scoring at least s(CLS).

#ifndef PROMPTEX_RANKER_H_
#define PROMPTEX_RANKER_H_

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "promptex/autodiff.h"
#include "promptex/corpus.h"
#include "promptex/encoder.h"

namespace promptex::ranker {

using corpus::Span;

struct RankingLossConfig {
  double lambda = 0.5;  // Weight of the positive term.
  double alpha = 0.2;   // Positive margin.
  double beta = 0.2;    // Negative margin.

  void Validate() const;
  friend bool operator==(const RankingLossConfig&, const RankingLossConfig&) = default;
};

enum class PriorType { kNone, kEmbed, kLogit };

std::string PriorTypeName(PriorType prior);
PriorType ParsePriorType(std::string_view name);

struct ScorerConfig {
  int hidden_units = 64;
  int layers = 1;  // Hidden layers before the scalar output.
  double dropout = 0.0;
  PriorType prior = PriorType::kNone;
  int prior_size = 16;  // Width of the slot embedding for PriorType::kEmbed.

  void Validate() const;
  friend bool operator==(const ScorerConfig&, const ScorerConfig&) = default;
};

struct ScoredSpan {
  Span span;
  double score = 0.0;
};

struct ScoreSheet {
  std::vector<ScoredSpan> spans;
  double cls_score = 0.0;
  std::vector<Span> predicted;
};

// Spans scoring >= cls_score, in candidate order. Ties are included.
std::vector<Span> Decode(const ScoreSheet& sheet);

struct LossBreakdown {
  double loss = 0.0;
  double positive = 0.0;  // J_{u > cls}
  double negative = 0.0;  // J_{cls > v}
  // dJ/ds per entry of sheet.spans, and dJ/ds(CLS).
  std::vector<double> span_grads;
  double cls_grad = 0.0;
  // True when some hinge argument is exactly zero (a subgradient point).
  bool at_kink = false;
  // Active pattern of each hinge term, in sheet order; used to detect kink
  // crossings under perturbation.
  std::vector<bool> active;
};

// Mean hinge losses over gold (U) and non-gold (V) candidates; an empty set
// contributes zero. The subgradient at the kink is zero.
LossBreakdown RankingLossWithGradient(const ScoreSheet& sheet,
                                      const std::vector<Span>& gold,
                                      const RankingLossConfig& config);
double RankingLoss(const ScoreSheet& sheet, const std::vector<Span>& gold,
                   const RankingLossConfig& config);

class Scorer {
 public:
  // `hidden` and `distance_size` are d and p of the encoder output.
  Scorer(const ScorerConfig& config, int hidden, int distance_size, int num_slots,
         std::uint64_t seed);

  const ScorerConfig& config() const { return config_; }
  ad::ParameterSet& parameters() { return params_; }
  const ad::ParameterSet& parameters() const { return params_; }

  // Returns a (k + 1) x 1 node: row 0 is s(CLS), row i is s(candidates[i-1]).
  // Dropout is applied only when `rng` is non-null.
  ad::NodeId Forward(ad::Graph& graph, const encoder::EncodedNodes& encoded,
                     const std::vector<Span>& candidates, int slot,
                     std::mt19937_64* rng);

  // Scores from a plain encoded sequence (evaluation only). The sentinel
  // distance feature is supplied explicitly.
  ScoreSheet Score(const encoder::EncodedSequence& encoded,
                   const ad::Matrix& sentinel_distance,
                   const std::vector<Span>& candidates, int slot);

 private:
  ScorerConfig config_;
  int input_size_;
  int num_slots_;
  ad::ParameterSet params_;
};

// Reads row values of a Forward output into a sheet and decodes it.
ScoreSheet MakeSheet(const ad::Matrix& scores, const std::vector<Span>& candidates);

}  // namespace promptex::ranker

#endif  // PROMPTEX_RANKER_H_
