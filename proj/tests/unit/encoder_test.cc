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

#include "promptex/encoder.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "promptex/errors.h"

namespace promptex::encoder {
namespace {

using ad::Matrix;

TEST(DistanceBucketTest, WorkedExamples) {
  EXPECT_EQ(DistanceBucket(4, {4, 5}, 32), 0);
  EXPECT_EQ(DistanceBucket(5, {4, 5}, 32), 0);
  EXPECT_EQ(DistanceBucket(2, {4, 5}, 32), 2);
  EXPECT_EQ(DistanceBucket(900, {4, 5}, 512), 511);
}

TEST(DistanceBucketProperty, SymmetricInEqualOffsets) {
  std::mt19937_64 rng(2);
  for (int round = 0; round < 1000; ++round) {
    const int start = 1 + static_cast<int>(rng() % 50);
    const int end = start + static_cast<int>(rng() % 4);
    const int k = 1 + static_cast<int>(rng() % 40);
    if (start - k < 1) continue;
    EXPECT_EQ(DistanceBucket(start - k, {start, end}, 1000),
              DistanceBucket(end + k, {start, end}, 1000));
  }
}

TEST(VocabularyTest, ReservedIdsAndUnknownWords) {
  Vocabulary vocab;
  EXPECT_EQ(vocab.Id("[CLS]"), Vocabulary::kCls);
  EXPECT_EQ(vocab.Id("[SEP]"), Vocabulary::kSep);
  const int id = vocab.Add("Outbreak");
  EXPECT_EQ(vocab.Id("outbreak"), id);
  EXPECT_EQ(vocab.Id("never-seen"), Vocabulary::kUnk);
  EXPECT_EQ(Vocabulary(vocab.tokens()).tokens(), vocab.tokens());
  EXPECT_THROW(Vocabulary(std::vector<std::string>{"a", "b", "c"}), ValidationError);
}

EncoderConfig Small(int layers, std::uint64_t seed) {
  EncoderConfig c;
  c.hidden = 8;
  c.heads = 2;
  c.layers = layers;
  c.distance_size = 3;
  c.max_distance = 6;
  c.max_length = 32;
  c.seed = seed;
  return c;
}

EncoderInput Input() {
  return {std::vector<int>{3, 4}, {5, 6, 7, 8, 9}, {2, 3}};
}

TEST(EncoderTest, ConfigValidation) {
  EncoderConfig c = Small(1, 0);
  c.heads = 3;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = Small(1, 0);
  c.max_distance = 0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
}

TEST(EncoderTest, OutputShapes) {
  Encoder encoder(Small(2, 1), 12, 2);
  const auto out = encoder.Encode(Input());
  EXPECT_EQ(out.cls.rows(), 1);
  EXPECT_EQ(out.cls.cols(), 8);
  EXPECT_EQ(out.prompt.rows(), 2);
  EXPECT_EQ(out.context.rows(), 5);
  EXPECT_EQ(out.context.cols(), 8 + 3);
}

TEST(EncoderTest, ZeroLayersIsTokenPlusPositionWithDistanceAppended) {
  Encoder encoder(Small(0, 4), 12, 2);
  const EncoderInput input = Input();
  const auto out = encoder.Encode(input);
  const auto& params = encoder.parameters();
  const Matrix& tokens = params.Get("encoder.token_embedding").value;
  const Matrix& positions = params.Get("encoder.position_embedding").value;
  const Matrix& distances = params.Get("encoder.distance_embedding").value;
  const int m = 2;
  for (int i = 0; i < 5; ++i) {
    const int position = m + 2 + i;  // [CLS] prompt [SEP] context
    for (int j = 0; j < 8; ++j) {
      EXPECT_DOUBLE_EQ(out.context(i, j),
                       tokens(input.context[i], j) + positions(position, j));
    }
    const int bucket = DistanceBucket(i + 1, input.trigger, 6);
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(out.context(i, 8 + j), distances(bucket, j));
  }
}

TEST(EncoderTest, DeterministicForSameParametersAndInput) {
  Encoder a(Small(2, 9), 12, 2);
  Encoder b(Small(2, 9), 12, 2);
  EXPECT_EQ(a.Encode(Input()).context, b.Encode(Input()).context);
  EXPECT_EQ(a.Encode(Input()).context, a.Encode(Input()).context);
}

TEST(EncoderProperty, PromptTokensInfluenceContextVectors) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Encoder encoder(Small(1 + static_cast<int>(seed % 2), seed), 12, 2);
    EncoderInput input = Input();
    const auto before = encoder.Encode(input).context;
    input.prompt = std::vector<int>{3, 10};
    const auto after = encoder.Encode(input).context;
    double change = 0.0;
    for (size_t i = 0; i < before.size(); ++i) {
      change = std::max(change, std::abs(before.data()[i] - after.data()[i]));
    }
    EXPECT_GT(change, 0.0) << "seed " << seed;
  }
}

TEST(EncoderTest, SpecialTokenPromptUsesSlotTable) {
  Encoder encoder(Small(1, 3), 12, 2);
  EncoderInput input = Input();
  input.prompt = 1;
  const auto a = encoder.Encode(input);
  input.prompt = 0;
  const auto b = encoder.Encode(input);
  EXPECT_EQ(a.prompt.rows(), 1);
  EXPECT_NE(a.context, b.context);
  input.prompt = 2;
  EXPECT_THROW(encoder.Encode(input), std::out_of_range);
}

TEST(EncoderTest, OverlongSequenceIsRejected) {
  Encoder encoder(Small(1, 3), 12, 2);
  EncoderInput input = Input();
  input.context.assign(40, 5);
  EXPECT_THROW(encoder.Encode(input), std::invalid_argument);
}

// Central differences over every encoder parameter entry for small configs.
TEST(EncoderGradientTest, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Encoder encoder(Small(1 + static_cast<int>(seed % 2), seed), 12, 2);
    std::mt19937_64 rng(seed + 100);
    const Matrix weights = ad::RandomNormal(5, 11, 1.0, rng);
    auto loss = [&](bool backward) {
      ad::Graph graph;
      const auto nodes = encoder.Forward(graph, Input());
      const Matrix& value = graph.Value(nodes.context);
      double total = 0.0;
      for (size_t i = 0; i < value.size(); ++i) total += value.data()[i] * weights.data()[i];
      if (backward) graph.Backward(nodes.context, weights);
      return total;
    };
    for (auto* p : encoder.parameters().All()) p->ZeroGrad();
    loss(true);
    double worst = 0.0;
    for (auto* p : encoder.parameters().All()) {
      const size_t stride = std::max<size_t>(1, p->value.size() / 24);
      for (size_t i = 0; i < p->value.size(); i += stride) {
        const double saved = p->value.data()[i];
        p->value.data()[i] = saved + 1e-5;
        const double up = loss(false);
        p->value.data()[i] = saved - 1e-5;
        const double down = loss(false);
        p->value.data()[i] = saved;
        const double numeric = (up - down) / 2e-5;
        const double analytic = p->grad.data()[i];
        const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        worst = std::max(worst, std::abs(numeric - analytic) / denom);
      }
    }
    EXPECT_LT(worst, 1e-3) << "seed " << seed;
  }
}

TEST(ExternalEmbeddingsTest, LookupAndErrors) {
  std::istringstream in(R"({"doc_id":"d1","prompt_id":"T/S","cls":[1,2],"prompt":[[0,1]],)"
                        R"("context":[[1,1],[2,2],[3,3]]})"
                        "\n");
  const auto table = ExternalEmbeddings::Parse(in, 2);
  EXPECT_EQ(table.size(), 1u);
  EXPECT_EQ(table.Lookup("d1", "T/S").context.rows(), 3);
  try {
    table.Lookup("d404", "T/S");
    FAIL() << "expected a missing-document error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("d404"), std::string::npos);
  }
  std::istringstream bad(R"({"doc_id":"d1","prompt_id":"T/S","cls":[1,2,3],"context":[[1,1]]})");
  try {
    ExternalEmbeddings::Parse(bad, 2);
    FAIL() << "expected a dimension error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("dimension mismatch"), std::string::npos);
  }
}

TEST(ExternalEmbeddingsTest, BypassLeavesOnlyDistanceFeaturesTrainable) {
  Encoder encoder(Small(1, 0), 12, 2);
  ExternalEncoding stored{Matrix(1, 8, 0.5), Matrix(0, 8), Matrix(4, 8, 0.25)};
  ad::Graph graph;
  const auto nodes = encoder.ForwardExternal(graph, stored, {2, 2});
  for (auto* p : encoder.parameters().All()) p->ZeroGrad();
  graph.Backward(nodes.context, Matrix(4, 11, 1.0));
  for (auto* p : encoder.parameters().All()) {
    double norm = 0.0;
    for (double g : p->grad.data()) norm += std::abs(g);
    if (p->name == "encoder.distance_embedding") {
      EXPECT_GT(norm, 0.0);
    } else {
      EXPECT_EQ(norm, 0.0) << p->name;
    }
  }
  EXPECT_EQ(graph.Value(nodes.context)(0, 0), 0.25);
}

}  // namespace
}  // namespace promptex::encoder
