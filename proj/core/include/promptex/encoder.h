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

// Joint prompt/context encoder. The sequence [CLS, q..., SEP, c..., SEP] runs
// through a small transformer; each output context vector then gets a learned
// trigger-distance embedding appended.

#ifndef PROMPTEX_ENCODER_H_
#define PROMPTEX_ENCODER_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "promptex/autodiff.h"
#include "promptex/corpus.h"

namespace promptex::encoder {

struct EncoderConfig {
  int hidden = 16;         // d
  int distance_size = 8;   // p
  int layers = 1;
  int heads = 2;
  int ff_multiplier = 2;   // Feed-forward width = ff_multiplier * hidden.
  int max_distance = 32;   // Buckets 0..max_distance-1; max_distance is the sentinel.
  int max_length = 160;    // Longest joint sequence, including CLS and SEPs.
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on violated invariants.
  void Validate() const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// Token to id map. Ids 0..2 are reserved for [CLS], [SEP] and [UNK]; lookups
// are case-insensitive.
class Vocabulary {
 public:
  static constexpr int kCls = 0;
  static constexpr int kSep = 1;
  static constexpr int kUnk = 2;

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& tokens);

  int Add(const std::string& token);
  int Id(const std::string& token) const;
  std::vector<int> Ids(const std::vector<std::string>& tokens) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  // All tokens in id order, reserved ones included.
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Distance in tokens from position i to the trigger, 0 inside it, clipped to
// max_distance - 1.
int DistanceBucket(int i, const corpus::Span& trigger, int max_distance);

struct EncoderInput {
  // Either prompt token ids or, for the SpecialTokens style, the slot index
  // whose trainable embedding stands in for the prompt.
  std::variant<std::vector<int>, int> prompt;
  std::vector<int> context;
  corpus::Span trigger;
};

struct EncodedSequence {
  ad::Matrix cls;       // 1 x d
  ad::Matrix prompt;    // m x d
  ad::Matrix context;   // n x (d + p)
};

// Graph handles produced by a forward pass.
struct EncodedNodes {
  ad::NodeId cls = -1;                // 1 x d
  ad::NodeId prompt = -1;             // m x d, -1 when m = 0
  ad::NodeId context = -1;            // n x (d + p)
  ad::NodeId sentinel_distance = -1;  // 1 x p
};

// Pre-computed token vectors that replace the trainable transformer; the
// distance features are still appended by the Encoder.
struct ExternalEncoding {
  ad::Matrix cls;      // 1 x d
  ad::Matrix prompt;   // m x d
  ad::Matrix context;  // n x d
};

// JSON Lines {"doc_id", "prompt_id", "cls": [...], "prompt": [[...]...],
// "context": [[...]...]} keyed by (doc_id, prompt_id).
class ExternalEmbeddings {
 public:
  static ExternalEmbeddings Load(const std::filesystem::path& path, int hidden);
  static ExternalEmbeddings Parse(std::istream& in, int hidden);

  // Throws ValidationError naming the doc_id when absent.
  const ExternalEncoding& Lookup(const std::string& doc_id,
                                 const std::string& prompt_id) const;
  int hidden() const { return hidden_; }
  size_t size() const { return entries_.size(); }

 private:
  int hidden_ = 0;
  std::map<std::pair<std::string, std::string>, ExternalEncoding> entries_;
};

class Encoder {
 public:
  Encoder(const EncoderConfig& config, int vocab_size, int num_slots);

  const EncoderConfig& config() const { return config_; }
  int vocab_size() const { return vocab_size_; }
  int num_slots() const { return num_slots_; }
  ad::ParameterSet& parameters() { return params_; }
  const ad::ParameterSet& parameters() const { return params_; }

  // Full joint encoding. Throws std::invalid_argument when the sequence is
  // longer than config().max_length.
  EncodedNodes Forward(ad::Graph& graph, const EncoderInput& input);
  // Stored vectors in place of the transformer.
  EncodedNodes ForwardExternal(ad::Graph& graph, const ExternalEncoding& stored,
                               const corpus::Span& trigger);

  EncodedSequence Encode(const EncoderInput& input);

 private:
  ad::NodeId Param(ad::Graph& graph, const std::string& name);
  ad::NodeId Block(ad::Graph& graph, ad::NodeId x, int layer);
  ad::NodeId AppendDistance(ad::Graph& graph, ad::NodeId context,
                            const corpus::Span& trigger, int n);

  EncoderConfig config_;
  int vocab_size_;
  int num_slots_;
  ad::ParameterSet params_;
};

}  // namespace promptex::encoder

#endif  // PROMPTEX_ENCODER_H_
