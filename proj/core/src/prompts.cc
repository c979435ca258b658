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

#include "promptex/prompts.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptex/errors.h"

namespace promptex::prompts {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kWordInitialMark = "\xE2\x96\x81";  // U+2581

bool IsPunct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string_view> SplitWhitespace(std::string_view text) {
  std::vector<std::string_view> words;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    size_t j = i;
    while (j < text.size() && !IsSpace(text[j])) ++j;
    if (j > i) words.push_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::string Lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::uint64_t Fnv1a(std::string_view text) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

void Normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) return;
  for (auto& x : v) x /= norm;
}

}  // namespace

void QuestionBank::Add(const SlotKey& slot, Question question) {
  auto& list = entries_[slot];
  for (const auto& existing : list) {
    if (existing.annotator == question.annotator) {
      throw ValidationError(fmt::format(
          "annotator {} appears twice for slot {}", question.annotator,
          slot.ToString()));
    }
  }
  list.push_back(std::move(question));
}

std::vector<Question> QuestionBank::Sorted(const SlotKey& slot,
                                           bool include_expert) const {
  std::vector<Question> out;
  auto it = entries_.find(slot);
  if (it == entries_.end()) return out;
  for (const auto& q : it->second) {
    if (include_expert || !q.expert) out.push_back(q);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.annotator < b.annotator;
  });
  return out;
}

QuestionBank ParseQuestionBank(std::istream& in) {
  QuestionBank bank;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json obj = json::parse(line);
      SlotKey slot{obj.at("template_type").get<std::string>(),
                   obj.at("slot_type").get<std::string>()};
      Question q;
      q.annotator = obj.at("annotator").get<int>();
      q.text = obj.at("text").get<std::string>();
      q.expert = obj.value("expert", false);
      bank.Add(slot, std::move(q));
    } catch (const json::exception& e) {
      throw ValidationError(
          fmt::format("question bank line {}: {}", line_number, e.what()));
    } catch (const ValidationError& e) {
      throw ValidationError(
          fmt::format("question bank line {}: {}", line_number, e.what()));
    }
  }
  return bank;
}

QuestionBank LoadQuestionBank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError(
        fmt::format("cannot open question bank '{}'", path.string()));
  }
  return ParseQuestionBank(in);
}

void PromptSet::CheckCovers(const corpus::Ontology& ontology) const {
  for (const auto& slot : ontology.SlotKeys()) {
    if (!prompts.contains(slot)) {
      throw ValidationError(fmt::format("prompt set '{}' has no prompt for slot {}",
                                        name, slot.ToString()));
    }
  }
}

const std::string& PromptSet::At(const SlotKey& slot) const {
  auto it = prompts.find(slot);
  if (it == prompts.end()) {
    throw ValidationError(fmt::format("prompt set '{}' has no prompt for slot {}",
                                      name, slot.ToString()));
  }
  return it->second;
}

std::string PromptStyleName(PromptStyle style) {
  switch (style) {
    case PromptStyle::kSpecialTokens:
      return "special_tokens";
    case PromptStyle::kName:
      return "name";
    case PromptStyle::kDescription:
      return "description";
    case PromptStyle::kExpert:
      return "expert";
    case PromptStyle::kSeries:
      return "series";
    case PromptStyle::kCustom:
      return "custom";
  }
  return "custom";
}

PromptStyle ParsePromptStyle(std::string_view name) {
  for (auto style : {PromptStyle::kSpecialTokens, PromptStyle::kName,
                     PromptStyle::kDescription, PromptStyle::kExpert,
                     PromptStyle::kSeries, PromptStyle::kCustom}) {
    if (PromptStyleName(style) == name) return style;
  }
  throw ValidationError(fmt::format("unknown prompt style '{}'", name));
}

std::string SerializePromptSet(const PromptSet& prompts) {
  ordered_json root;
  root["style"] = PromptStyleName(prompts.style);
  if (prompts.style == PromptStyle::kSeries) root["index"] = prompts.series_index;
  root["name"] = prompts.name;
  ordered_json list = ordered_json::array();
  for (const auto& [slot, text] : prompts.prompts) {
    ordered_json item;
    item["template_type"] = slot.template_type;
    item["slot_type"] = slot.slot_type;
    item["text"] = text;
    list.push_back(std::move(item));
  }
  root["prompts"] = std::move(list);
  return root.dump(2) + "\n";
}

PromptSet ParsePromptSet(const std::string& json_text) {
  try {
    json root = json::parse(json_text);
    PromptSet set;
    set.style = ParsePromptStyle(root.at("style").get<std::string>());
    set.series_index = root.value("index", 0);
    set.name = root.value("name", PromptStyleName(set.style));
    for (const auto& item : root.at("prompts")) {
      set.prompts[{item.at("template_type").get<std::string>(),
                   item.at("slot_type").get<std::string>()}] =
          item.value("text", "");
    }
    return set;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed prompt set: {}", e.what()));
  }
}

PromptSet LoadPromptSet(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError(
        fmt::format("cannot open prompt set '{}'", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParsePromptSet(buffer.str());
}

std::string BuildNamePrompt(std::string_view template_name,
                            std::string_view slot_name) {
  if (template_name.empty() || slot_name.empty()) {
    throw std::invalid_argument("template and slot names must be nonempty");
  }
  std::string out(template_name);
  out += ' ';
  out += slot_name;
  return out;
}

std::string BuildDescriptionPrompt(const corpus::Ontology& ontology,
                                   const SlotKey& slot) {
  const auto* schema = ontology.FindTemplate(slot.template_type);
  const auto* slot_schema = ontology.FindSlot(slot);
  if (schema == nullptr || slot_schema == nullptr ||
      schema->description.empty() || slot_schema->description.empty()) {
    throw ValidationError("description unavailable for this slot: " +
                          slot.ToString());
  }
  return schema->description + " " + slot_schema->description;
}

PromptSet MakeNamePrompts(const corpus::Ontology& ontology) {
  PromptSet set{PromptStyle::kName, 0, "Name", {}};
  for (const auto& slot : ontology.SlotKeys()) {
    set.prompts[slot] = BuildNamePrompt(slot.template_type, slot.slot_type);
  }
  return set;
}

PromptSet MakeDescriptionPrompts(const corpus::Ontology& ontology) {
  PromptSet set{PromptStyle::kDescription, 0, "Description", {}};
  for (const auto& slot : ontology.SlotKeys()) {
    set.prompts[slot] = BuildDescriptionPrompt(ontology, slot);
  }
  return set;
}

PromptSet MakeSpecialTokenPrompts(const corpus::Ontology& ontology) {
  PromptSet set{PromptStyle::kSpecialTokens, 0, "SpecialTokens", {}};
  for (const auto& slot : ontology.SlotKeys()) set.prompts[slot] = "";
  return set;
}

PromptSet MakeExpertPrompts(const QuestionBank& bank,
                            const corpus::Ontology& ontology) {
  PromptSet set{PromptStyle::kExpert, 0, "Expert", {}};
  for (const auto& slot : ontology.SlotKeys()) {
    bool found = false;
    for (const auto& q : bank.Sorted(slot, /*include_expert=*/true)) {
      if (q.expert) {
        set.prompts[slot] = q.text;
        found = true;
        break;
      }
    }
    if (!found) {
      throw ValidationError("no expert question for slot " + slot.ToString());
    }
  }
  return set;
}

std::vector<PromptSet> AssignSeries(const QuestionBank& bank, int n,
                                    const corpus::Ontology* ontology) {
  if (n < 1) throw std::invalid_argument("series count must be >= 1");
  std::vector<SlotKey> slots;
  if (ontology != nullptr) {
    slots = ontology->SlotKeys();
  } else {
    for (const auto& [slot, questions] : bank.entries()) slots.push_back(slot);
  }

  std::vector<PromptSet> series(n);
  for (int i = 0; i < n; ++i) {
    series[i].style = PromptStyle::kSeries;
    series[i].series_index = i + 1;
    series[i].name = fmt::format("Series-{}", i + 1);
  }
  for (const auto& slot : slots) {
    const auto questions = bank.Sorted(slot, /*include_expert=*/false);
    if (questions.empty()) {
      throw ValidationError("slot with zero questions: " + slot.ToString());
    }
    const int k = static_cast<int>(questions.size());
    for (int i = 0; i < n; ++i) series[i].prompts[slot] = questions[i % k].text;
  }
  return series;
}

HashedBagOfWordsEmbedder::HashedBagOfWordsEmbedder(int dimension)
    : dimension_(dimension) {
  if (dimension < 1) throw std::invalid_argument("embedding dimension must be >= 1");
}

std::vector<double> HashedBagOfWordsEmbedder::Embed(std::string_view text) const {
  std::vector<double> v(dimension_, 0.0);
  bool any = false;
  for (const auto& token : TokenizePrompt(text)) {
    const std::uint64_t h = Fnv1a(token);
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    v[h % static_cast<std::uint64_t>(dimension_)] += sign;
    any = true;
  }
  // Empty text (or cancelling collisions) maps to a fixed basis vector.
  Normalize(v);
  if (!any || std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
    std::fill(v.begin(), v.end(), 0.0);
    v[0] = 1.0;
  }
  return v;
}

ExternalEmbedder ExternalEmbedder::Parse(std::istream& in) {
  ExternalEmbedder embedder;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json obj = json::parse(line);
      auto vec = obj.at("vector").get<std::vector<double>>();
      if (embedder.dimension_ == 0) embedder.dimension_ = static_cast<int>(vec.size());
      if (static_cast<int>(vec.size()) != embedder.dimension_ || vec.empty()) {
        throw ValidationError(fmt::format("embedding line {}: dimension mismatch",
                                          line_number));
      }
      Normalize(vec);
      embedder.vectors_[obj.at("text").get<std::string>()] = std::move(vec);
    } catch (const json::exception& e) {
      throw ValidationError(
          fmt::format("embedding line {}: {}", line_number, e.what()));
    }
  }
  return embedder;
}

ExternalEmbedder ExternalEmbedder::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError(
        fmt::format("cannot open embedding file '{}'", path.string()));
  }
  return Parse(in);
}

std::vector<double> ExternalEmbedder::Embed(std::string_view text) const {
  auto it = vectors_.find(std::string(text));
  if (it == vectors_.end()) {
    throw ValidationError(fmt::format("no embedding for question '{}'", text));
  }
  return it->second;
}

double Cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

MeanStd ComputeMeanStd(const std::vector<double>& values) {
  MeanStd out;
  out.count = static_cast<int>(values.size());
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / out.count;
  if (out.count < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / (out.count - 1));
  return out;
}

SimilarityStats PairwiseSimilarityStats(const QuestionBank& bank,
                                        const Embedder& embedder,
                                        bool include_expert) {
  SimilarityStats stats;
  std::vector<double> pooled;
  for (const auto& [slot, unused] : bank.entries()) {
    const auto questions = bank.Sorted(slot, include_expert);
    if (questions.size() < 2) continue;
    std::vector<std::vector<double>> vectors;
    for (const auto& q : questions) vectors.push_back(embedder.Embed(q.text));
    std::vector<double> sims;
    for (size_t i = 0; i < vectors.size(); ++i) {
      for (size_t j = i + 1; j < vectors.size(); ++j) {
        sims.push_back(Cosine(vectors[i], vectors[j]));
      }
    }
    pooled.insert(pooled.end(), sims.begin(), sims.end());
    stats.per_slot[slot] = ComputeMeanStd(sims);
  }
  if (pooled.empty()) {
    throw std::invalid_argument("no slot has two or more questions");
  }
  stats.pooled = ComputeMeanStd(pooled);
  return stats;
}

int CountWords(std::string_view text) {
  return static_cast<int>(SplitWhitespace(text).size());
}

LengthStats ComputeLengthStats(const std::vector<int>& lengths) {
  LengthStats out;
  if (lengths.empty()) return out;
  std::vector<double> values(lengths.begin(), lengths.end());
  const MeanStd ms = ComputeMeanStd(values);
  out.mean = ms.mean;
  out.std = ms.std;
  out.count = ms.count;
  std::sort(values.begin(), values.end());
  const size_t mid = values.size() / 2;
  out.median = values.size() % 2 == 1 ? values[mid]
                                      : 0.5 * (values[mid - 1] + values[mid]);
  return out;
}

LengthReport QuestionLengthStats(const QuestionBank& bank, bool split_by_expert) {
  if (bank.empty()) throw std::invalid_argument("question bank is empty");
  std::vector<int> all, non_expert, expert;
  for (const auto& [slot, questions] : bank.entries()) {
    for (const auto& q : questions) {
      const int words = CountWords(q.text);
      all.push_back(words);
      (q.expert ? expert : non_expert).push_back(words);
    }
  }
  LengthReport report;
  report.all = ComputeLengthStats(all);
  if (split_by_expert) {
    report.non_expert = ComputeLengthStats(non_expert);
    report.expert = ComputeLengthStats(expert);
  }
  return report;
}

SubwordSegmenter::SubwordSegmenter(std::set<std::string> vocabulary) {
  for (const auto& entry : vocabulary) {
    std::string_view view(entry);
    if (view.starts_with(kWordInitialMark)) {
      view.remove_prefix(kWordInitialMark.size());
      if (view.empty()) continue;
      word_initial_.insert(std::string(view));
    } else {
      anywhere_.insert(entry);
    }
    longest_ = std::max(longest_, view.size());
  }
}

std::vector<std::string> SubwordSegmenter::Segment(std::string_view word) const {
  std::vector<std::string> pieces;
  size_t pos = 0;
  while (pos < word.size()) {
    size_t best = 0;
    const size_t limit = std::min(longest_, word.size() - pos);
    for (size_t len = limit; len > 0; --len) {
      const std::string candidate(word.substr(pos, len));
      if (anywhere_.contains(candidate) ||
          (pos == 0 && word_initial_.contains(candidate))) {
        best = len;
        break;
      }
    }
    if (best == 0) best = 1;
    pieces.emplace_back(word.substr(pos, best));
    pos += best;
  }
  return pieces;
}

std::vector<Fragmentation> FragmentationReport(std::string_view text,
                                               const SubwordSegmenter& segmenter) {
  std::vector<Fragmentation> report;
  for (std::string_view word : SplitWhitespace(text)) {
    while (!word.empty() && IsPunct(word.front())) word.remove_prefix(1);
    while (!word.empty() && IsPunct(word.back())) word.remove_suffix(1);
    if (word.empty()) continue;
    auto pieces = segmenter.Segment(word);
    if (pieces.size() > 1) report.push_back({std::string(word), std::move(pieces)});
  }
  return report;
}

std::vector<std::string> TokenizePrompt(std::string_view text) {
  std::vector<std::string> tokens;
  for (std::string_view word : SplitWhitespace(text)) {
    std::string current;
    for (char c : word) {
      if (IsPunct(c)) {
        if (!current.empty()) tokens.push_back(Lower(current));
        current.clear();
        tokens.emplace_back(1, c);
      } else {
        current += c;
      }
    }
    if (!current.empty()) tokens.push_back(Lower(current));
  }
  return tokens;
}

}  // namespace promptex::prompts
