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

#include "promptex/autodiff.h"
#include "promptex/encoder.h"

namespace promptex::encoder {
namespace {

EncoderInput MakeInput(int context_length) {
  std::vector<int> context(context_length);
  for (int i = 0; i < context_length; ++i) context[i] = 3 + i % 50;
  return {std::vector<int>{3, 4, 5, 6, 7}, std::move(context), {4, 5}};
}

EncoderConfig Config(int hidden, int layers) {
  EncoderConfig c;
  c.hidden = hidden;
  c.layers = layers;
  c.heads = 2;
  c.max_length = 512;
  return c;
}

void BM_EncoderForward(benchmark::State& state) {
  Encoder encoder(Config(static_cast<int>(state.range(1)), 2), 64, 4);
  const EncoderInput input = MakeInput(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(encoder.Encode(input));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncoderForward)->Args({32, 16})->Args({128, 16})->Args({128, 32});

void BM_EncoderForwardBackward(benchmark::State& state) {
  Encoder encoder(Config(static_cast<int>(state.range(1)), 2), 64, 4);
  const EncoderInput input = MakeInput(static_cast<int>(state.range(0)));
  ad::Graph probe;
  const auto shape = probe.Value(encoder.Forward(probe, input).context);
  const ad::Matrix seed(shape.rows(), shape.cols(), 1.0);
  for (auto _ : state) {
    for (auto* p : encoder.parameters().All()) p->ZeroGrad();
    ad::Graph graph;
    const auto nodes = encoder.Forward(graph, input);
    graph.Backward(nodes.context, seed);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncoderForwardBackward)->Args({32, 16})->Args({128, 16});

}  // namespace
}  // namespace promptex::encoder
