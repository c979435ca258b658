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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "promptex/ranker.h"

namespace promptex::ranker {
namespace {

ScoreSheet RandomSheet(int candidates, std::vector<Span>* gold) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  ScoreSheet sheet;
  sheet.cls_score = normal(rng);
  for (int i = 0; i < candidates; ++i) {
    sheet.spans.push_back({{i + 1, i + 2}, normal(rng)});
    if (i % 7 == 0) gold->push_back({i + 1, i + 2});
  }
  return sheet;
}

void BM_Decode(benchmark::State& state) {
  std::vector<Span> gold;
  const ScoreSheet sheet = RandomSheet(static_cast<int>(state.range(0)), &gold);
  for (auto _ : state) benchmark::DoNotOptimize(Decode(sheet));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Decode)->Arg(16)->Arg(256)->Arg(4096);

void BM_RankingLossWithGradient(benchmark::State& state) {
  std::vector<Span> gold;
  const ScoreSheet sheet = RandomSheet(static_cast<int>(state.range(0)), &gold);
  const RankingLossConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(RankingLossWithGradient(sheet, gold, config));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RankingLossWithGradient)->Arg(16)->Arg(256)->Arg(4096);

void BM_ScorerScore(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  ScorerConfig config;
  config.hidden_units = 64;
  Scorer scorer(config, 16, 8, 4, 0);
  std::mt19937_64 rng(2);
  const encoder::EncodedSequence encoded{ad::RandomNormal(1, 16, 1.0, rng), ad::Matrix(0, 16),
                                         ad::RandomNormal(n, 24, 1.0, rng)};
  const ad::Matrix sentinel = ad::RandomNormal(1, 8, 1.0, rng);
  std::vector<Span> candidates;
  for (int i = 1; i + 2 <= n; i += 2) candidates.push_back({i, i + 2});
  for (auto _ : state) {
    benchmark::DoNotOptimize(scorer.Score(encoded, sentinel, candidates, 1));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(candidates.size()));
}
BENCHMARK(BM_ScorerScore)->Arg(32)->Arg(128);

}  // namespace
}  // namespace promptex::ranker
