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

#include "promptex/corpus.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptex/errors.h"

namespace promptex::corpus {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string SpanString(const Span& span) {
  return fmt::format("({},{})", span.start, span.end);
}

Span ParseSpan(const json& value) {
  if (!value.is_array() || value.size() != 2 || !value[0].is_number_integer() ||
      !value[1].is_number_integer()) {
    throw ValidationError("span must be a [start, end] integer pair");
  }
  return Span{value[0].get<int>(), value[1].get<int>()};
}

std::vector<Span> ParseSpans(const json& value) {
  if (!value.is_array()) throw ValidationError("expected a list of spans");
  std::vector<Span> spans;
  spans.reserve(value.size());
  for (const auto& item : value) spans.push_back(ParseSpan(item));
  return spans;
}

// Checks one span against the context; appends violations to `out`.
void CheckSpan(const Span& span, int n, const std::string& what,
               std::vector<std::string>& out) {
  if (span.start > span.end) {
    out.push_back(fmt::format("inverted span: {} {}", what, SpanString(span)));
  }
  if (span.start < 1 || span.end > n || span.end < 1 || span.start > n) {
    out.push_back(
        fmt::format("span out of bounds: {} {} in a {}-token context", what,
                    SpanString(span), n));
  }
}

std::string RequireString(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ValidationError(fmt::format("missing string field '{}'", key));
  }
  return it->get<std::string>();
}

// Parses a line into an instance, resolving slot types against the
// ontology. Structural problems throw; invariant violations do not.
TemplateInstance ParseInstance(const json& obj, const Ontology& ontology) {
  if (!obj.is_object()) throw ValidationError("line is not a JSON object");
  TemplateInstance instance;
  instance.doc_id = RequireString(obj, "doc_id");
  instance.template_type = RequireString(obj, "template_type");
  const TemplateSchema* schema = ontology.FindTemplate(instance.template_type);
  if (schema == nullptr) {
    throw ValidationError(
        fmt::format("unknown template type '{}'", instance.template_type));
  }
  if (!obj.contains("tokens") || !obj["tokens"].is_array()) {
    throw ValidationError("missing token list 'tokens'");
  }
  for (const auto& token : obj["tokens"]) {
    if (!token.is_string()) throw ValidationError("tokens must be strings");
    instance.tokens.push_back(token.get<std::string>());
  }
  if (!obj.contains("trigger")) throw ValidationError("missing 'trigger'");
  instance.trigger = ParseSpan(obj["trigger"]);
  if (!obj.contains("candidates")) throw ValidationError("missing 'candidates'");
  instance.candidates = ParseSpans(obj["candidates"]);
  if (obj.contains("slots")) {
    if (!obj["slots"].is_array()) throw ValidationError("'slots' must be a list");
    for (const auto& slot_obj : obj["slots"]) {
      SlotInstance slot;
      slot.slot_type = RequireString(slot_obj, "slot_type");
      const SlotSchema* slot_schema =
          ontology.FindSlot({instance.template_type, slot.slot_type});
      if (slot_schema == nullptr) {
        throw ValidationError(fmt::format("unknown slot type '{}/{}'",
                                          instance.template_type,
                                          slot.slot_type));
      }
      if (!slot_schema->span_filler) continue;
      if (slot_obj.contains("gold")) slot.gold = ParseSpans(slot_obj["gold"]);
      instance.slots.push_back(std::move(slot));
    }
  }
  return instance;
}

ordered_json SpanJson(const Span& span) {
  return ordered_json::array({span.start, span.end});
}

}  // namespace

Ontology::Ontology(std::vector<TemplateSchema> templates)
    : templates_(std::move(templates)) {
  std::set<std::string> template_names;
  for (const auto& schema : templates_) {
    if (!template_names.insert(schema.name).second) {
      throw ValidationError(
          fmt::format("duplicate template name '{}'", schema.name));
    }
    std::set<std::string> slot_names;
    for (const auto& slot : schema.slots) {
      if (!slot_names.insert(slot.name).second) {
        throw ValidationError(fmt::format("duplicate slot name '{}/{}'",
                                          schema.name, slot.name));
      }
    }
  }
}

const TemplateSchema* Ontology::FindTemplate(const std::string& name) const {
  for (const auto& schema : templates_) {
    if (schema.name == name) return &schema;
  }
  return nullptr;
}

const SlotSchema* Ontology::FindSlot(const SlotKey& key) const {
  const TemplateSchema* schema = FindTemplate(key.template_type);
  if (schema == nullptr) return nullptr;
  for (const auto& slot : schema->slots) {
    if (slot.name == key.slot_type) return &slot;
  }
  return nullptr;
}

std::vector<SlotKey> Ontology::SlotKeys() const {
  std::vector<SlotKey> keys;
  for (const auto& schema : templates_) {
    for (const auto& slot : schema.slots) {
      if (slot.span_filler) keys.push_back({schema.name, slot.name});
    }
  }
  return keys;
}

const char* SplitNameString(SplitName name) {
  switch (name) {
    case SplitName::kTrain:
      return "train";
    case SplitName::kDev:
      return "dev";
    case SplitName::kTest:
      return "test";
  }
  return "unknown";
}

std::vector<std::string> ValidateInstance(const TemplateInstance& instance) {
  std::vector<std::string> violations;
  const int n = instance.context_length();
  if (n == 0) violations.push_back("empty context");
  CheckSpan(instance.trigger, n, "trigger", violations);

  std::set<Span> candidates;
  for (const auto& span : instance.candidates) {
    CheckSpan(span, n, "candidate", violations);
    if (!candidates.insert(span).second) {
      violations.push_back(
          fmt::format("duplicate candidate {}", SpanString(span)));
    }
  }

  std::set<std::string> slot_types;
  for (const auto& slot : instance.slots) {
    if (!slot_types.insert(slot.slot_type).second) {
      violations.push_back(
          fmt::format("duplicate slot type '{}'", slot.slot_type));
    }
    std::set<Span> gold;
    for (const auto& span : slot.gold) {
      CheckSpan(span, n, "gold", violations);
      if (!gold.insert(span).second) {
        violations.push_back(fmt::format("duplicate gold span {} in slot '{}'",
                                         SpanString(span), slot.slot_type));
      }
      if (!candidates.contains(span)) {
        violations.push_back(
            fmt::format("gold not in candidate set: {} in slot '{}'",
                        SpanString(span), slot.slot_type));
      }
    }
  }
  return violations;
}

std::vector<RawLine> ParseCorpusLenient(std::istream& in,
                                        const Ontology& ontology) {
  std::vector<RawLine> lines;
  std::string text;
  int line_number = 0;
  while (std::getline(in, text)) {
    ++line_number;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    RawLine line;
    line.line_number = line_number;
    try {
      json obj = json::parse(text);
      line.instance = ParseInstance(obj, ontology);
      line.errors = ValidateInstance(*line.instance);
    } catch (const json::exception& e) {
      line.errors.push_back(fmt::format("malformed JSON: {}", e.what()));
    } catch (const ValidationError& e) {
      line.errors.push_back(e.what());
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

DatasetSplit ParseCorpus(std::istream& in, const Ontology& ontology,
                         SplitName name) {
  DatasetSplit split;
  split.name = name;
  for (auto& line : ParseCorpusLenient(in, ontology)) {
    if (!line.errors.empty()) {
      throw ValidationError(
          fmt::format("line {}: {}", line.line_number, line.errors.front()));
    }
    split.instances.push_back(std::move(*line.instance));
  }
  return split;
}

DatasetSplit LoadCorpus(const std::filesystem::path& path,
                        const Ontology& ontology, SplitName name) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError(fmt::format("cannot open corpus '{}'", path.string()));
  }
  try {
    return ParseCorpus(in, ontology, name);
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void WriteCorpus(std::ostream& out, const DatasetSplit& split) {
  for (const auto& instance : split.instances) {
    ordered_json obj;
    obj["doc_id"] = instance.doc_id;
    obj["template_type"] = instance.template_type;
    obj["tokens"] = instance.tokens;
    obj["trigger"] = SpanJson(instance.trigger);
    ordered_json candidates = ordered_json::array();
    for (const auto& span : instance.candidates) {
      candidates.push_back(SpanJson(span));
    }
    obj["candidates"] = std::move(candidates);
    ordered_json slots = ordered_json::array();
    for (const auto& slot : instance.slots) {
      ordered_json slot_obj;
      slot_obj["slot_type"] = slot.slot_type;
      ordered_json gold = ordered_json::array();
      for (const auto& span : slot.gold) gold.push_back(SpanJson(span));
      slot_obj["gold"] = std::move(gold);
      slots.push_back(std::move(slot_obj));
    }
    obj["slots"] = std::move(slots);
    out << obj.dump() << '\n';
  }
}

void SaveCorpus(const std::filesystem::path& path, const DatasetSplit& split) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error(
        fmt::format("cannot write corpus '{}'", path.string()));
  }
  WriteCorpus(out, split);
}

Ontology ParseOntology(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed ontology JSON: {}", e.what()));
  }
  if (!root.contains("templates") || !root["templates"].is_array()) {
    throw ValidationError("ontology must contain a 'templates' list");
  }
  std::vector<TemplateSchema> templates;
  for (const auto& t : root["templates"]) {
    TemplateSchema schema;
    schema.name = RequireString(t, "name");
    schema.description = t.value("description", "");
    for (const auto& s : t.value("slots", json::array())) {
      SlotSchema slot;
      slot.name = RequireString(s, "name");
      if (s.contains("description") && s["description"].is_string()) {
        slot.description = s["description"].get<std::string>();
      }
      slot.span_filler = s.value("span_filler", true);
      schema.slots.push_back(std::move(slot));
    }
    templates.push_back(std::move(schema));
  }
  return Ontology(std::move(templates));
}

Ontology LoadOntology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError(
        fmt::format("cannot open ontology '{}'", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseOntology(buffer.str());
}

std::string SerializeOntology(const Ontology& ontology) {
  ordered_json templates = ordered_json::array();
  for (const auto& schema : ontology.templates()) {
    ordered_json t;
    t["name"] = schema.name;
    t["description"] = schema.description;
    ordered_json slots = ordered_json::array();
    for (const auto& slot : schema.slots) {
      ordered_json s;
      s["name"] = slot.name;
      if (!slot.description.empty()) s["description"] = slot.description;
      if (!slot.span_filler) s["span_filler"] = false;
      slots.push_back(std::move(s));
    }
    t["slots"] = std::move(slots);
    templates.push_back(std::move(t));
  }
  ordered_json root;
  root["templates"] = std::move(templates);
  return root.dump(2) + "\n";
}

CorpusStats ComputeCorpusStats(const DatasetSplit& split) {
  CorpusStats stats;
  std::set<std::string> template_types;
  std::set<std::string> slot_types;
  for (const auto& instance : split.instances) {
    ++stats.template_instances;
    template_types.insert(instance.template_type);
    stats.candidate_spans += static_cast<int>(instance.candidates.size());
    for (const auto& slot : instance.slots) {
      ++stats.slot_instances;
      slot_types.insert(slot.slot_type);
      if (!slot.gold.empty()) ++stats.filled_slot_instances;
      stats.gold_spans += static_cast<int>(slot.gold.size());
    }
  }
  stats.template_types = static_cast<int>(template_types.size());
  stats.slot_types = static_cast<int>(slot_types.size());
  return stats;
}

}  // namespace promptex::corpus
