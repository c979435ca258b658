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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "promptex/errors.h"

namespace promptex::ranker {
namespace {

using ad::Matrix;

ScoreSheet Sheet(double cls, const std::vector<double>& scores) {
  ScoreSheet sheet;
  sheet.cls_score = cls;
  for (size_t i = 0; i < scores.size(); ++i) {
    const int start = static_cast<int>(i) + 1;
    sheet.spans.push_back({{start, start}, scores[i]});
  }
  return sheet;
}

RankingLossConfig Loss(double lambda, double alpha, double beta) {
  RankingLossConfig c;
  c.lambda = lambda;
  c.alpha = alpha;
  c.beta = beta;
  return c;
}

TEST(RankingLossTest, SatisfiedMarginsGiveZero) {
  const ScoreSheet sheet = Sheet(0.0, {0.3, -0.2});
  EXPECT_DOUBLE_EQ(RankingLoss(sheet, {{1, 1}}, Loss(0.5, 0.2, 0.1)), 0.0);
}

TEST(RankingLossTest, ViolatedMarginsAreAveragedAndMixed) {
  const ScoreSheet sheet = Sheet(0.0, {0.1, 0.05});
  const auto result = RankingLossWithGradient(sheet, {{1, 1}}, Loss(0.5, 0.2, 0.1));
  EXPECT_NEAR(result.positive, 0.1, 1e-12);
  EXPECT_NEAR(result.negative, 0.15, 1e-12);
  EXPECT_NEAR(result.loss, 0.125, 1e-12);
}

TEST(RankingLossTest, EmptyGoldKeepsOnlyTheNegativeTerm) {
  const ScoreSheet sheet = Sheet(0.0, {0.1, 0.05});
  const auto result = RankingLossWithGradient(sheet, {}, Loss(0.7, 0.2, 0.1));
  EXPECT_DOUBLE_EQ(result.positive, 0.0);
  EXPECT_NEAR(result.loss, 0.3 * result.negative, 1e-12);
  EXPECT_NEAR(result.negative, (0.2 + 0.15) / 2, 1e-12);
}

TEST(RankingLossTest, AllGoldKeepsOnlyThePositiveTerm) {
  const ScoreSheet sheet = Sheet(0.0, {0.1});
  const auto result = RankingLossWithGradient(sheet, {{1, 1}}, Loss(0.5, 0.2, 0.1));
  EXPECT_DOUBLE_EQ(result.negative, 0.0);
  EXPECT_NEAR(result.loss, 0.05, 1e-12);
}

TEST(RankingLossTest, GoldOutsideCandidatesIsRejected) {
  EXPECT_THROW(RankingLoss(Sheet(0.0, {0.1}), {{5, 5}}, Loss(0.5, 0.2, 0.1)),
               std::invalid_argument);
}

TEST(RankingLossTest, KinkUsesZeroSubgradient) {
  const ScoreSheet sheet = Sheet(0.0, {0.2, -0.1});
  const auto result = RankingLossWithGradient(sheet, {{1, 1}}, Loss(0.5, 0.2, 0.1));
  EXPECT_TRUE(result.at_kink);
  EXPECT_DOUBLE_EQ(result.loss, 0.0);
  EXPECT_DOUBLE_EQ(result.span_grads[0], 0.0);
  EXPECT_DOUBLE_EQ(result.cls_grad, 0.0);
}

TEST(LossConfigTest, RejectsOutOfRangeValues) {
  EXPECT_THROW(Loss(1.5, 0.2, 0.2).Validate(), std::invalid_argument);
  EXPECT_THROW(Loss(0.5, 0.0, 0.2).Validate(), std::invalid_argument);
  EXPECT_NO_THROW(Loss(0.0, 0.1, 0.1).Validate());
}

TEST(DecodeTest, KeepsSpansScoringAtLeastCls) {
  const ScoreSheet sheet = Sheet(0.0, {0.3, -0.1, 0.0});
  EXPECT_EQ(Decode(sheet), (std::vector<Span>{{1, 1}, {3, 3}}));
  EXPECT_TRUE(Decode(Sheet(1.0, {0.3, -0.1})).empty());
}

struct RandomCase {
  ScoreSheet sheet;
  std::vector<Span> gold;
  RankingLossConfig config;
};

RandomCase Draw(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> score(-1.0, 1.0);
  std::uniform_real_distribution<double> margin(0.05, 0.5);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  std::uniform_int_distribution<int> size(1, 8);
  RandomCase c;
  std::vector<double> scores(size(rng));
  for (auto& s : scores) s = score(rng);
  c.sheet = Sheet(score(rng), scores);
  for (const auto& scored : c.sheet.spans) {
    if (rng() % 3 == 0) c.gold.push_back(scored.span);
  }
  c.config = Loss(unit(rng), margin(rng), margin(rng));
  return c;
}

TEST(RankingLossProperty, ZeroLossImpliesExactDecode) {
  std::mt19937_64 rng(11);
  int hits = 0;
  for (int round = 0; round < 5000; ++round) {
    RandomCase c = Draw(rng);
    // Push scores toward a separated sheet so zero loss occurs often.
    for (auto& scored : c.sheet.spans) {
      const bool gold = std::find(c.gold.begin(), c.gold.end(), scored.span) != c.gold.end();
      if (rng() % 2 == 0) scored.score = c.sheet.cls_score + (gold ? 1.0 : -1.0);
    }
    if (RankingLoss(c.sheet, c.gold, c.config) != 0.0) continue;
    ++hits;
    EXPECT_EQ(Decode(c.sheet), c.gold);
  }
  EXPECT_GT(hits, 100);
}

TEST(RankingLossProperty, NonNegativeAndMonotoneInEachScore) {
  std::mt19937_64 rng(12);
  for (int round = 0; round < 2000; ++round) {
    RandomCase c = Draw(rng);
    const double base = RankingLoss(c.sheet, c.gold, c.config);
    EXPECT_GE(base, 0.0);
    const size_t i = rng() % c.sheet.spans.size();
    ScoreSheet raised = c.sheet;
    raised.spans[i].score += 0.3;
    const bool gold =
        std::find(c.gold.begin(), c.gold.end(), c.sheet.spans[i].span) != c.gold.end();
    const double after = RankingLoss(raised, c.gold, c.config);
    if (gold) {
      EXPECT_LE(after, base + 1e-12);
    } else {
      EXPECT_GE(after, base - 1e-12);
    }
  }
}

TEST(RankingLossProperty, InvariantToCommonShift) {
  std::mt19937_64 rng(13);
  for (int round = 0; round < 2000; ++round) {
    RandomCase c = Draw(rng);
    ScoreSheet shifted = c.sheet;
    const double delta = std::uniform_real_distribution<double>(-5, 5)(rng);
    shifted.cls_score += delta;
    for (auto& scored : shifted.spans) scored.score += delta;
    EXPECT_NEAR(RankingLoss(shifted, c.gold, c.config), RankingLoss(c.sheet, c.gold, c.config),
                1e-9);
  }
}

TEST(RankingLossProperty, InvariantToCandidateOrder) {
  std::mt19937_64 rng(14);
  for (int round = 0; round < 2000; ++round) {
    RandomCase c = Draw(rng);
    ScoreSheet shuffled = c.sheet;
    std::shuffle(shuffled.spans.begin(), shuffled.spans.end(), rng);
    EXPECT_NEAR(RankingLoss(shuffled, c.gold, c.config),
                RankingLoss(c.sheet, c.gold, c.config), 1e-12);
  }
}

TEST(RankingLossProperty, GradientMatchesFiniteDifferencesAwayFromKinks) {
  std::mt19937_64 rng(15);
  const double eps = 1e-7;
  for (int round = 0; round < 500; ++round) {
    RandomCase c = Draw(rng);
    const auto result = RankingLossWithGradient(c.sheet, c.gold, c.config);
    auto perturbed = [&](int index, double delta) {
      ScoreSheet s = c.sheet;
      if (index < 0) {
        s.cls_score += delta;
      } else {
        s.spans[index].score += delta;
      }
      return RankingLossWithGradient(s, c.gold, c.config);
    };
    for (int i = -1; i < static_cast<int>(c.sheet.spans.size()); ++i) {
      const auto up = perturbed(i, eps);
      const auto down = perturbed(i, -eps);
      if (up.active != result.active || down.active != result.active) continue;
      const double numeric = (up.loss - down.loss) / (2 * eps);
      const double analytic = i < 0 ? result.cls_grad : result.span_grads[i];
      EXPECT_NEAR(numeric, analytic, 1e-6);
    }
  }
}

TEST(PriorTypeTest, NamesRoundTrip) {
  for (auto p : {PriorType::kNone, PriorType::kEmbed, PriorType::kLogit}) {
    EXPECT_EQ(ParsePriorType(PriorTypeName(p)), p);
  }
  EXPECT_THROW(ParsePriorType("bogus"), ValidationError);
}

encoder::EncodedSequence RandomEncoded(int n, int d, int p, std::mt19937_64& rng) {
  return {ad::RandomNormal(1, d, 1.0, rng), Matrix(0, d), ad::RandomNormal(n, d + p, 1.0, rng)};
}

TEST(ScorerTest, ZeroWeightsScoreEverySpanAtTheOutputBias) {
  Scorer scorer({}, 4, 2, 3, 0);
  for (auto* p : scorer.parameters().All()) p->value = Matrix(p->value.rows(), p->value.cols());
  scorer.parameters().Get("scorer.out.b").value(0, 0) = 0.7;
  std::mt19937_64 rng(1);
  const auto sheet =
      scorer.Score(RandomEncoded(5, 4, 2, rng), Matrix(1, 2, 0.3), {{1, 2}, {3, 3}}, 0);
  EXPECT_DOUBLE_EQ(sheet.cls_score, 0.7);
  for (const auto& s : sheet.spans) EXPECT_DOUBLE_EQ(s.score, 0.7);
  EXPECT_EQ(sheet.predicted.size(), 2u);
}

TEST(ScorerProperty, SpanScoresDoNotDependOnCandidateOrder) {
  std::mt19937_64 rng(2);
  for (int round = 0; round < 50; ++round) {
    ScorerConfig config;
    config.hidden_units = 6;
    config.layers = 1 + round % 2;
    Scorer scorer(config, 4, 2, 2, round);
    const auto encoded = RandomEncoded(6, 4, 2, rng);
    const Matrix sentinel = ad::RandomNormal(1, 2, 1.0, rng);
    std::vector<Span> candidates = {{1, 1}, {2, 4}, {5, 6}, {3, 3}};
    const auto a = scorer.Score(encoded, sentinel, candidates, 1);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    const auto b = scorer.Score(encoded, sentinel, candidates, 1);
    EXPECT_DOUBLE_EQ(a.cls_score, b.cls_score);
    for (const auto& sa : a.spans) {
      const auto it = std::find_if(b.spans.begin(), b.spans.end(),
                                   [&](const ScoredSpan& sb) { return sb.span == sa.span; });
      ASSERT_NE(it, b.spans.end());
      EXPECT_DOUBLE_EQ(it->score, sa.score);
    }
  }
}

TEST(ScorerTest, LogitPriorShiftsSpansButNotCls) {
  ScorerConfig config;
  config.prior = PriorType::kLogit;
  Scorer scorer(config, 4, 2, 2, 5);
  std::mt19937_64 rng(3);
  const auto encoded = RandomEncoded(4, 4, 2, rng);
  const Matrix sentinel(1, 2, 0.1);
  const auto before = scorer.Score(encoded, sentinel, {{1, 2}}, 1);
  scorer.parameters().Get("scorer.prior_logit").value(1, 0) = 2.0;
  const auto after = scorer.Score(encoded, sentinel, {{1, 2}}, 1);
  EXPECT_DOUBLE_EQ(after.cls_score, before.cls_score);
  EXPECT_NEAR(after.spans[0].score, before.spans[0].score + 2.0, 1e-12);
  const auto other = scorer.Score(encoded, sentinel, {{1, 2}}, 0);
  EXPECT_DOUBLE_EQ(other.spans[0].score, before.spans[0].score);
}

TEST(ScorerTest, EmbedPriorSeparatesSlots) {
  ScorerConfig config;
  config.prior = PriorType::kEmbed;
  config.prior_size = 3;
  Scorer scorer(config, 4, 2, 2, 6);
  std::mt19937_64 rng(4);
  const auto encoded = RandomEncoded(4, 4, 2, rng);
  const auto a = scorer.Score(encoded, Matrix(1, 2), {{2, 3}}, 0);
  const auto b = scorer.Score(encoded, Matrix(1, 2), {{2, 3}}, 1);
  EXPECT_NE(a.spans[0].score, b.spans[0].score);
}

TEST(ScorerTest, RejectsBadSpansAndSlots) {
  Scorer scorer({}, 4, 2, 2, 0);
  std::mt19937_64 rng(5);
  const auto encoded = RandomEncoded(4, 4, 2, rng);
  EXPECT_THROW(scorer.Score(encoded, Matrix(1, 2), {{3, 5}}, 0), std::out_of_range);
  EXPECT_THROW(scorer.Score(encoded, Matrix(1, 2), {{1, 1}}, 2), std::out_of_range);
  ScorerConfig bad;
  bad.dropout = 0.9;
  EXPECT_THROW(Scorer(bad, 4, 2, 2, 0), std::invalid_argument);
}

TEST(ScorerGradientTest, MatchesFiniteDifferences) {
  for (auto prior : {PriorType::kNone, PriorType::kEmbed, PriorType::kLogit}) {
    ScorerConfig config;
    config.hidden_units = 5;
    config.layers = 2;
    config.prior = prior;
    config.prior_size = 2;
    Scorer scorer(config, 3, 2, 2, 7);
    std::mt19937_64 rng(8);
    const auto encoded = RandomEncoded(5, 3, 2, rng);
    const Matrix sentinel = ad::RandomNormal(1, 2, 1.0, rng);
    const Matrix weights = ad::RandomNormal(4, 1, 1.0, rng);
    const std::vector<Span> candidates = {{1, 2}, {3, 5}, {4, 4}};
    auto loss = [&](bool backward) {
      ad::Graph graph;
      encoder::EncodedNodes nodes;
      nodes.cls = graph.Constant(encoded.cls);
      nodes.context = graph.Constant(encoded.context);
      nodes.sentinel_distance = graph.Constant(sentinel);
      const auto out = scorer.Forward(graph, nodes, candidates, 1, nullptr);
      double total = 0.0;
      for (int i = 0; i < 4; ++i) total += graph.Value(out)(i, 0) * weights(i, 0);
      if (backward) graph.Backward(out, weights);
      return total;
    };
    for (auto* p : scorer.parameters().All()) p->ZeroGrad();
    loss(true);
    for (auto* p : scorer.parameters().All()) {
      for (size_t i = 0; i < p->value.size(); ++i) {
        const double saved = p->value.data()[i];
        p->value.data()[i] = saved + 1e-6;
        const double up = loss(false);
        p->value.data()[i] = saved - 1e-6;
        const double down = loss(false);
        p->value.data()[i] = saved;
        EXPECT_NEAR((up - down) / 2e-6, p->grad.data()[i], 1e-5) << p->name;
      }
    }
  }
}

}  // namespace
}  // namespace promptex::ranker
