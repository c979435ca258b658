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
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptex/errors.h"

namespace promptex::encoder {
namespace {

using ad::Matrix;
using ad::NodeId;

std::string Lower(const std::string& text) {
  std::string out = text;
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string LayerName(int layer, const char* part) {
  return fmt::format("encoder.layer{}.{}", layer, part);
}

Matrix ParseRows(const nlohmann::json& value, int hidden, const char* field) {
  if (!value.is_array()) throw ValidationError(fmt::format("'{}' must be a list", field));
  Matrix m(static_cast<int>(value.size()), hidden);
  for (size_t i = 0; i < value.size(); ++i) {
    const auto row = value[i].get<std::vector<double>>();
    if (static_cast<int>(row.size()) != hidden) {
      throw ValidationError(fmt::format("dimension mismatch in '{}': expected {}, got {}",
                                        field, hidden, row.size()));
    }
    std::copy(row.begin(), row.end(), m.row(static_cast<int>(i)).begin());
  }
  return m;
}

}  // namespace

void EncoderConfig::Validate() const {
  if (hidden < 1 || heads < 1 || hidden % heads != 0) {
    throw std::invalid_argument(
        fmt::format("hidden size {} must be divisible by heads {}", hidden, heads));
  }
  if (distance_size < 1) throw std::invalid_argument("distance_size must be >= 1");
  if (max_distance < 1) throw std::invalid_argument("max_distance must be >= 1");
  if (layers < 0) throw std::invalid_argument("layers must be >= 0");
  if (ff_multiplier < 1) throw std::invalid_argument("ff_multiplier must be >= 1");
  if (max_length < 4) throw std::invalid_argument("max_length must be >= 4");
}

Vocabulary::Vocabulary() {
  Add("[CLS]");
  Add("[SEP]");
  Add("[UNK]");
}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) Add(t);
  if (size() < 3 || tokens_[kCls] != "[cls]" || tokens_[kSep] != "[sep]" ||
      tokens_[kUnk] != "[unk]") {
    throw ValidationError("vocabulary must start with [CLS], [SEP], [UNK]");
  }
}

int Vocabulary::Add(const std::string& token) {
  const std::string key = Lower(token);
  auto [it, inserted] = ids_.try_emplace(key, size());
  if (inserted) tokens_.push_back(key);
  return it->second;
}

int Vocabulary::Id(const std::string& token) const {
  auto it = ids_.find(Lower(token));
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::Ids(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(Id(t));
  return out;
}

int DistanceBucket(int i, const corpus::Span& trigger, int max_distance) {
  int distance = 0;
  if (i < trigger.start || i > trigger.end) {
    distance = std::min(std::abs(i - trigger.start), std::abs(i - trigger.end));
  }
  return std::min(distance, max_distance - 1);
}

ExternalEmbeddings ExternalEmbeddings::Parse(std::istream& in, int hidden) {
  ExternalEmbeddings out;
  out.hidden_ = hidden;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto obj = nlohmann::json::parse(line);
      ExternalEncoding entry;
      entry.cls = ParseRows(nlohmann::json::array({obj.at("cls")}), hidden, "cls");
      entry.prompt = ParseRows(obj.value("prompt", nlohmann::json::array()), hidden, "prompt");
      entry.context = ParseRows(obj.at("context"), hidden, "context");
      out.entries_[{obj.at("doc_id").get<std::string>(),
                    obj.at("prompt_id").get<std::string>()}] = std::move(entry);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(fmt::format("embedding line {}: {}", line_number, e.what()));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("embedding line {}: {}", line_number, e.what()));
    }
  }
  return out;
}

ExternalEmbeddings ExternalEmbeddings::Load(const std::filesystem::path& path,
                                            int hidden) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError(fmt::format("cannot open embeddings '{}'", path.string()));
  }
  return Parse(in, hidden);
}

const ExternalEncoding& ExternalEmbeddings::Lookup(const std::string& doc_id,
                                                   const std::string& prompt_id) const {
  auto it = entries_.find({doc_id, prompt_id});
  if (it == entries_.end()) {
    throw ValidationError(fmt::format(
        "no external embedding for doc_id '{}' (prompt '{}')", doc_id, prompt_id));
  }
  return it->second;
}

Encoder::Encoder(const EncoderConfig& config, int vocab_size, int num_slots)
    : config_(config), vocab_size_(vocab_size), num_slots_(num_slots) {
  config_.Validate();
  if (vocab_size < 3) throw std::invalid_argument("vocabulary too small");
  if (num_slots < 1) throw std::invalid_argument("need at least one slot");
  std::mt19937_64 rng(config_.seed);
  const int d = config_.hidden;
  const int ff = config_.ff_multiplier * d;
  const double embed_std = 0.5;
  const double w_std = 1.0 / std::sqrt(static_cast<double>(d));

  params_.Add("encoder.token_embedding", ad::RandomNormal(vocab_size, d, embed_std, rng));
  params_.Add("encoder.position_embedding",
              ad::RandomNormal(config_.max_length, d, 0.1, rng));
  params_.Add("encoder.slot_tokens", ad::RandomNormal(num_slots, d, embed_std, rng));
  params_.Add("encoder.distance_embedding",
              ad::RandomNormal(config_.max_distance + 1, config_.distance_size,
                               embed_std, rng));
  for (int l = 0; l < config_.layers; ++l) {
    for (const char* ln : {"ln1", "ln2"}) {
      params_.Add(LayerName(l, ln) + ".gain", Matrix(1, d, 1.0), false);
      params_.Add(LayerName(l, ln) + ".bias", Matrix(1, d), false);
    }
    for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
      params_.Add(LayerName(l, w), ad::RandomNormal(d, d, w_std, rng));
    }
    for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"}) {
      params_.Add(LayerName(l, b), Matrix(1, d), false);
    }
    params_.Add(LayerName(l, "ff.w1"), ad::RandomNormal(d, ff, w_std, rng));
    params_.Add(LayerName(l, "ff.b1"), Matrix(1, ff), false);
    params_.Add(LayerName(l, "ff.w2"),
                ad::RandomNormal(ff, d, 1.0 / std::sqrt(static_cast<double>(ff)), rng));
    params_.Add(LayerName(l, "ff.b2"), Matrix(1, d), false);
  }
  if (config_.layers > 0) {
    params_.Add("encoder.final_ln.gain", Matrix(1, d, 1.0), false);
    params_.Add("encoder.final_ln.bias", Matrix(1, d), false);
  }
}

NodeId Encoder::Param(ad::Graph& graph, const std::string& name) {
  return graph.Param(&params_.Get(name));
}

NodeId Encoder::Block(ad::Graph& graph, NodeId x, int layer) {
  const int d = config_.hidden;
  const int heads = config_.heads;
  const int head_dim = d / heads;
  auto p = [&](const char* part) { return Param(graph, LayerName(layer, part)); };

  NodeId h = graph.LayerNormRows(x, p("ln1.gain"), p("ln1.bias"));
  NodeId q = graph.AddRow(graph.MatMul(h, p("attn.wq")), p("attn.bq"));
  NodeId k = graph.AddRow(graph.MatMul(h, p("attn.wk")), p("attn.bk"));
  NodeId v = graph.AddRow(graph.MatMul(h, p("attn.wv")), p("attn.bv"));
  std::vector<NodeId> head_outputs;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  for (int i = 0; i < heads; ++i) {
    NodeId qh = graph.SliceCols(q, i * head_dim, head_dim);
    NodeId kh = graph.SliceCols(k, i * head_dim, head_dim);
    NodeId vh = graph.SliceCols(v, i * head_dim, head_dim);
    NodeId weights = graph.SoftmaxRows(graph.Scale(graph.MatMulTransposed(qh, kh), scale));
    head_outputs.push_back(graph.MatMul(weights, vh));
  }
  NodeId attended = heads == 1 ? head_outputs[0] : graph.ConcatCols(head_outputs);
  NodeId attn_out = graph.AddRow(graph.MatMul(attended, p("attn.wo")), p("attn.bo"));
  NodeId x1 = graph.Add(x, attn_out);

  NodeId h2 = graph.LayerNormRows(x1, p("ln2.gain"), p("ln2.bias"));
  NodeId ff = graph.Gelu(graph.AddRow(graph.MatMul(h2, p("ff.w1")), p("ff.b1")));
  NodeId ff_out = graph.AddRow(graph.MatMul(ff, p("ff.w2")), p("ff.b2"));
  return graph.Add(x1, ff_out);
}

NodeId Encoder::AppendDistance(ad::Graph& graph, NodeId context,
                               const corpus::Span& trigger, int n) {
  std::vector<int> buckets(n);
  for (int i = 1; i <= n; ++i) {
    buckets[i - 1] = DistanceBucket(i, trigger, config_.max_distance);
  }
  NodeId table = Param(graph, "encoder.distance_embedding");
  NodeId distance = graph.GatherRows(table, std::move(buckets));
  const NodeId parts[] = {context, distance};
  return graph.ConcatCols(parts);
}

EncodedNodes Encoder::Forward(ad::Graph& graph, const EncoderInput& input) {
  const int n = static_cast<int>(input.context.size());
  const bool special = std::holds_alternative<int>(input.prompt);
  const int m = special ? 1 : static_cast<int>(std::get<std::vector<int>>(input.prompt).size());
  const int length = m + n + 3;
  if (length > config_.max_length) {
    throw std::invalid_argument(fmt::format(
        "sequence of {} tokens exceeds the configured maximum length {}", length,
        config_.max_length));
  }
  if (n == 0) throw std::invalid_argument("empty context");

  NodeId tokens = Param(graph, "encoder.token_embedding");
  std::vector<NodeId> pieces;
  pieces.push_back(graph.GatherRows(tokens, {Vocabulary::kCls}));
  if (special) {
    const int slot = std::get<int>(input.prompt);
    if (slot < 0 || slot >= num_slots_) throw std::out_of_range("slot index out of range");
    pieces.push_back(graph.GatherRows(Param(graph, "encoder.slot_tokens"), {slot}));
  } else if (m > 0) {
    pieces.push_back(graph.GatherRows(tokens, std::get<std::vector<int>>(input.prompt)));
  }
  std::vector<int> tail;
  tail.reserve(n + 2);
  tail.push_back(Vocabulary::kSep);
  tail.insert(tail.end(), input.context.begin(), input.context.end());
  tail.push_back(Vocabulary::kSep);
  pieces.push_back(graph.GatherRows(tokens, std::move(tail)));
  NodeId x = graph.ConcatRows(pieces);

  std::vector<int> positions(length);
  for (int i = 0; i < length; ++i) positions[i] = i;
  x = graph.Add(x, graph.GatherRows(Param(graph, "encoder.position_embedding"),
                                    std::move(positions)));

  for (int l = 0; l < config_.layers; ++l) x = Block(graph, x, l);
  if (config_.layers > 0) {
    x = graph.LayerNormRows(x, Param(graph, "encoder.final_ln.gain"),
                            Param(graph, "encoder.final_ln.bias"));
  }

  EncodedNodes out;
  out.cls = graph.SliceRows(x, 0, 1);
  if (m > 0) out.prompt = graph.SliceRows(x, 1, m);
  out.context = AppendDistance(graph, graph.SliceRows(x, m + 2, n), input.trigger, n);
  out.sentinel_distance =
      graph.GatherRows(Param(graph, "encoder.distance_embedding"), {config_.max_distance});
  return out;
}

EncodedNodes Encoder::ForwardExternal(ad::Graph& graph, const ExternalEncoding& stored,
                                      const corpus::Span& trigger) {
  const int d = config_.hidden;
  if (stored.cls.cols() != d || stored.context.cols() != d ||
      (stored.prompt.rows() > 0 && stored.prompt.cols() != d)) {
    throw ValidationError("dimension mismatch between external embeddings and encoder");
  }
  EncodedNodes out;
  out.cls = graph.Constant(stored.cls);
  if (stored.prompt.rows() > 0) out.prompt = graph.Constant(stored.prompt);
  out.context = AppendDistance(graph, graph.Constant(stored.context), trigger,
                               stored.context.rows());
  out.sentinel_distance =
      graph.GatherRows(Param(graph, "encoder.distance_embedding"), {config_.max_distance});
  return out;
}

EncodedSequence Encoder::Encode(const EncoderInput& input) {
  ad::Graph graph;
  EncodedNodes nodes = Forward(graph, input);
  EncodedSequence out;
  out.cls = graph.Value(nodes.cls);
  out.prompt = nodes.prompt >= 0 ? graph.Value(nodes.prompt) : Matrix(0, config_.hidden);
  out.context = graph.Value(nodes.context);
  return out;
}

}  // namespace promptex::encoder
