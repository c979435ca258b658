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

#include "promptex/model.h"

#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptex/errors.h"

namespace promptex::model {
namespace {

using ad::Matrix;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kFormat = "promptex-checkpoint";
constexpr int kVersion = 1;

std::uint64_t ScorerSeed(std::uint64_t seed) { return seed * 0x9e3779b97f4a7c15ULL + 1; }

ordered_json EncoderConfigJson(const encoder::EncoderConfig& c) {
  ordered_json j;
  j["hidden"] = c.hidden;
  j["distance_size"] = c.distance_size;
  j["layers"] = c.layers;
  j["heads"] = c.heads;
  j["ff_multiplier"] = c.ff_multiplier;
  j["max_distance"] = c.max_distance;
  j["max_length"] = c.max_length;
  j["seed"] = c.seed;
  return j;
}

encoder::EncoderConfig EncoderConfigFrom(const json& j) {
  encoder::EncoderConfig c;
  c.hidden = j.at("hidden").get<int>();
  c.distance_size = j.at("distance_size").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ff_multiplier = j.at("ff_multiplier").get<int>();
  c.max_distance = j.at("max_distance").get<int>();
  c.max_length = j.at("max_length").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

ordered_json ScorerConfigJson(const ranker::ScorerConfig& c) {
  ordered_json j;
  j["hidden_units"] = c.hidden_units;
  j["layers"] = c.layers;
  j["dropout"] = c.dropout;
  j["prior"] = ranker::PriorTypeName(c.prior);
  j["prior_size"] = c.prior_size;
  return j;
}

ranker::ScorerConfig ScorerConfigFrom(const json& j) {
  ranker::ScorerConfig c;
  c.hidden_units = j.at("hidden_units").get<int>();
  c.layers = j.at("layers").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.prior = ranker::ParsePriorType(j.at("prior").get<std::string>());
  c.prior_size = j.at("prior_size").get<int>();
  return c;
}

}  // namespace

std::vector<Example> MakeExamples(const corpus::DatasetSplit& split,
                                  const prompts::PromptSet& prompts) {
  const bool special = prompts.style == prompts::PromptStyle::kSpecialTokens;
  std::vector<Example> out;
  for (const auto& instance : split.instances) {
    for (const auto& slot : instance.slots) {
      Example example;
      example.doc_id = instance.doc_id;
      example.slot = {instance.template_type, slot.slot_type};
      example.prompt = prompts.At(example.slot);
      example.special_token = special;
      example.context = instance.tokens;
      example.trigger = instance.trigger;
      example.candidates = instance.candidates;
      example.gold = slot.gold;
      out.push_back(std::move(example));
    }
  }
  return out;
}

encoder::Vocabulary BuildVocabulary(const corpus::DatasetSplit& train,
                                    const prompts::PromptSet& prompts) {
  encoder::Vocabulary vocabulary;
  for (const auto& instance : train.instances) {
    for (const auto& token : instance.tokens) vocabulary.Add(token);
  }
  for (const auto& [slot, text] : prompts.prompts) {
    for (const auto& token : prompts::TokenizePrompt(text)) vocabulary.Add(token);
  }
  return vocabulary;
}

Model::Model(const ModelConfig& config, encoder::Vocabulary vocabulary,
             std::vector<SlotKey> slots, prompts::PromptSet prompts)
    : config_(config),
      vocabulary_(std::move(vocabulary)),
      slots_(std::move(slots)),
      prompts_(std::move(prompts)),
      encoder_(config.encoder, vocabulary_.size(), static_cast<int>(slots_.size())),
      scorer_(config.scorer, config.encoder.hidden, config.encoder.distance_size,
              static_cast<int>(slots_.size()), ScorerSeed(config.encoder.seed)) {
  for (size_t i = 0; i < slots_.size(); ++i) {
    if (!slot_index_.emplace(slots_[i], static_cast<int>(i)).second) {
      throw ValidationError("duplicate slot " + slots_[i].ToString());
    }
  }
}

void Model::UseExternalEmbeddings(
    std::shared_ptr<const encoder::ExternalEmbeddings> external) {
  if (external != nullptr && external->hidden() != config_.encoder.hidden) {
    throw ValidationError(fmt::format(
        "dimension mismatch: external embeddings have size {}, encoder expects {}",
        external->hidden(), config_.encoder.hidden));
  }
  external_ = std::move(external);
}

int Model::SlotIndex(const SlotKey& slot) const {
  auto it = slot_index_.find(slot);
  if (it == slot_index_.end()) {
    throw ValidationError("unknown slot " + slot.ToString());
  }
  return it->second;
}

std::vector<ad::Parameter*> Model::Parameters() {
  std::vector<ad::Parameter*> out;
  if (external_ != nullptr) {
    out.push_back(&encoder_.parameters().Get("encoder.distance_embedding"));
  } else {
    out = encoder_.parameters().All();
  }
  for (auto* p : scorer_.parameters().All()) out.push_back(p);
  return out;
}

std::map<std::string, Matrix> Model::Snapshot() const {
  std::map<std::string, Matrix> out;
  for (const auto* p : encoder_.parameters().All()) out[p->name] = p->value;
  for (const auto* p : scorer_.parameters().All()) out[p->name] = p->value;
  return out;
}

void Model::Restore(const std::map<std::string, Matrix>& snapshot) {
  auto restore = [&](ad::ParameterSet& set) {
    for (auto* p : set.All()) {
      auto it = snapshot.find(p->name);
      if (it == snapshot.end()) {
        throw ValidationError("snapshot lacks tensor " + p->name);
      }
      if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols()) {
        throw ValidationError("shape mismatch for tensor " + p->name);
      }
      p->value = it->second;
    }
  };
  restore(encoder_.parameters());
  restore(scorer_.parameters());
}

encoder::EncoderInput Model::MakeInput(const Example& example) const {
  encoder::EncoderInput input;
  if (example.special_token) {
    input.prompt = SlotIndex(example.slot);
  } else {
    input.prompt = vocabulary_.Ids(prompts::TokenizePrompt(example.prompt));
  }
  input.context = vocabulary_.Ids(example.context);
  input.trigger = example.trigger;
  return input;
}

ad::NodeId Model::Forward(ad::Graph& graph, const Example& example,
                          std::mt19937_64* dropout_rng) {
  encoder::EncodedNodes nodes;
  if (external_ != nullptr) {
    const auto& stored = external_->Lookup(example.doc_id, example.slot.ToString());
    if (stored.context.rows() != static_cast<int>(example.context.size())) {
      throw ValidationError(fmt::format(
          "external embedding for doc_id '{}' has {} context vectors, expected {}",
          example.doc_id, stored.context.rows(), example.context.size()));
    }
    nodes = encoder_.ForwardExternal(graph, stored, example.trigger);
  } else {
    nodes = encoder_.Forward(graph, MakeInput(example));
  }
  return scorer_.Forward(graph, nodes, example.candidates, SlotIndex(example.slot),
                         dropout_rng);
}

ranker::ScoreSheet Model::Predict(const Example& example) {
  ad::Graph graph;
  const ad::NodeId scores = Forward(graph, example, nullptr);
  return ranker::MakeSheet(graph.Value(scores), example.candidates);
}

void Model::Write(std::ostream& out) const {
  ordered_json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["seed"] = config_.encoder.seed;
  j["encoder_config"] = EncoderConfigJson(config_.encoder);
  j["scorer_config"] = ScorerConfigJson(config_.scorer);
  j["vocabulary"] = vocabulary_.tokens();
  ordered_json slots = ordered_json::array();
  for (const auto& s : slots_) slots.push_back({s.template_type, s.slot_type});
  j["slots"] = slots;
  j["prompts"] = ordered_json::parse(prompts::SerializePromptSet(prompts_));
  ordered_json tensors = ordered_json::object();
  for (const auto& [name, value] : Snapshot()) {
    ordered_json t;
    t["rows"] = value.rows();
    t["cols"] = value.cols();
    t["data"] = value.data();
    tensors[name] = std::move(t);
  }
  j["tensors"] = std::move(tensors);
  out << j.dump() << '\n';
}

void Model::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  Write(out);
}

std::unique_ptr<Model> Model::Read(std::istream& in) {
  try {
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != kFormat) {
      throw ValidationError("not a promptex checkpoint");
    }
    if (j.at("version").get<int>() != kVersion) {
      throw ValidationError(fmt::format("unsupported checkpoint version {}",
                                        j.at("version").get<int>()));
    }
    ModelConfig config{EncoderConfigFrom(j.at("encoder_config")),
                       ScorerConfigFrom(j.at("scorer_config"))};
    encoder::Vocabulary vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
    std::vector<SlotKey> slots;
    for (const auto& s : j.at("slots")) {
      slots.push_back({s.at(0).get<std::string>(), s.at(1).get<std::string>()});
    }
    auto prompts = prompts::ParsePromptSet(j.at("prompts").dump());
    auto model = std::make_unique<Model>(config, std::move(vocabulary), std::move(slots),
                                         std::move(prompts));
    std::map<std::string, Matrix> snapshot;
    for (const auto& [name, t] : j.at("tensors").items()) {
      snapshot[name] = Matrix(t.at("rows").get<int>(), t.at("cols").get<int>(),
                              t.at("data").get<std::vector<double>>());
    }
    model->Restore(snapshot);
    return model;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed checkpoint: {}", e.what()));
  }
}

std::unique_ptr<Model> Model::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  return Read(in);
}

}  // namespace promptex::model
