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
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "promptex/corpus.h"
#include "promptex/evaluation.h"

namespace promptex::evaluation {
namespace {

std::vector<SlotPrediction> RandomPredictions(int count) {
  std::mt19937_64 rng(3);
  std::vector<SlotPrediction> out;
  for (int i = 0; i < count; ++i) {
    SlotPrediction p{"d" + std::to_string(i), {"T", "S" + std::to_string(i % 12)}, {}, {}};
    for (int k = 0; k < 3; ++k) {
      const int start = 1 + static_cast<int>(rng() % 40);
      if (rng() % 2) p.gold.push_back({start, start + 1});
      if (rng() % 2) p.predicted.push_back({start, start + static_cast<int>(rng() % 2)});
    }
    out.push_back(std::move(p));
  }
  return out;
}

void BM_Evaluate(benchmark::State& state) {
  const auto predictions = RandomPredictions(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Evaluate(predictions));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Evaluate)->Arg(1000)->Arg(100000);

void BM_SubsampleFewshot(benchmark::State& state) {
  corpus::SyntheticConfig config;
  config.train_instances = static_cast<int>(state.range(0));
  const auto data = corpus::GenerateSyntheticCorpus(config, 4);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(SubsampleFewshot(data.train, 4, 4, seed++));
}
BENCHMARK(BM_SubsampleFewshot)->Arg(400);

}  // namespace
}  // namespace promptex::evaluation
