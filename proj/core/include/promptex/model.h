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

// A prompt-conditioned extractor: vocabulary, slot index, encoder and span
// scorer bundled together, plus the per-(instance, slot) example view used
// for training and prediction.

#ifndef PROMPTEX_MODEL_H_
#define PROMPTEX_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "promptex/autodiff.h"
#include "promptex/corpus.h"
#include "promptex/encoder.h"
#include "promptex/prompts.h"
#include "promptex/ranker.h"

namespace promptex::model {

using corpus::SlotKey;
using corpus::Span;

struct Example {
  std::string doc_id;
  SlotKey slot;
  std::string prompt;
  bool special_token = false;  // Per-slot embedding stands in for the prompt.
  std::vector<std::string> context;
  Span trigger;
  std::vector<Span> candidates;
  std::vector<Span> gold;
};

// One example per (instance, slot) pair, in corpus order. Throws
// ValidationError when the prompt set lacks a slot that occurs in `split`.
std::vector<Example> MakeExamples(const corpus::DatasetSplit& split,
                                  const prompts::PromptSet& prompts);

// Training tokens plus prompt tokens, in first-seen order.
encoder::Vocabulary BuildVocabulary(const corpus::DatasetSplit& train,
                                    const prompts::PromptSet& prompts);

struct ModelConfig {
  encoder::EncoderConfig encoder;
  ranker::ScorerConfig scorer;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

class Model {
 public:
  Model(const ModelConfig& config, encoder::Vocabulary vocabulary,
        std::vector<SlotKey> slots, prompts::PromptSet prompts);

  const ModelConfig& config() const { return config_; }
  const encoder::Vocabulary& vocabulary() const { return vocabulary_; }
  const std::vector<SlotKey>& slots() const { return slots_; }
  const prompts::PromptSet& prompts() const { return prompts_; }
  encoder::Encoder& encoder() { return encoder_; }
  ranker::Scorer& scorer() { return scorer_; }

  // Swaps the prompt set used when examples are rebuilt from a split; the
  // learned parameters are untouched.
  void set_prompts(prompts::PromptSet prompts) { prompts_ = std::move(prompts); }

  // When set, stored vectors replace the transformer. The prompt id looked
  // up for an example is its slot key, "template/slot".
  void UseExternalEmbeddings(std::shared_ptr<const encoder::ExternalEmbeddings> external);
  bool uses_external() const { return external_ != nullptr; }

  int SlotIndex(const SlotKey& slot) const;

  // Every trainable tensor, encoder first, each in name order. With external
  // embeddings only the distance table remains trainable on the encoder side.
  std::vector<ad::Parameter*> Parameters();
  std::map<std::string, ad::Matrix> Snapshot() const;
  void Restore(const std::map<std::string, ad::Matrix>& snapshot);

  // Scores node of shape (k + 1) x 1, row 0 being CLS. Dropout is active
  // only when `dropout_rng` is non-null.
  ad::NodeId Forward(ad::Graph& graph, const Example& example,
                     std::mt19937_64* dropout_rng);
  ranker::ScoreSheet Predict(const Example& example);

  // JSON checkpoint holding configs, seed, vocabulary, slots, prompts and
  // every named tensor.
  void Save(const std::filesystem::path& path) const;
  void Write(std::ostream& out) const;
  static std::unique_ptr<Model> Load(const std::filesystem::path& path);
  static std::unique_ptr<Model> Read(std::istream& in);

 private:
  encoder::EncoderInput MakeInput(const Example& example) const;

  ModelConfig config_;
  encoder::Vocabulary vocabulary_;
  std::vector<SlotKey> slots_;
  std::map<SlotKey, int> slot_index_;
  prompts::PromptSet prompts_;
  encoder::Encoder encoder_;
  ranker::Scorer scorer_;
  std::shared_ptr<const encoder::ExternalEmbeddings> external_;
};

}  // namespace promptex::model

#endif  // PROMPTEX_MODEL_H_
