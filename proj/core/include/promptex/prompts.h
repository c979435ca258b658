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

// Prompt construction and analysis: the Name/Description/Expert/Series/
// SpecialTokens prompt styles, question-bank statistics, and tokenizer
// fragmentation reports.

#ifndef PROMPTEX_PROMPTS_H_
#define PROMPTEX_PROMPTS_H_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "promptex/corpus.h"

namespace promptex::prompts {

using corpus::SlotKey;

struct Question {
  int annotator = 0;
  std::string text;
  bool expert = false;
};

class QuestionBank {
 public:
  // Throws ValidationError when an annotator index repeats within a slot.
  void Add(const SlotKey& slot, Question question);

  const std::map<SlotKey, std::vector<Question>>& entries() const {
    return entries_;
  }
  // Questions of one slot sorted by annotator index.
  std::vector<Question> Sorted(const SlotKey& slot, bool include_expert) const;
  bool empty() const { return entries_.empty(); }

 private:
  std::map<SlotKey, std::vector<Question>> entries_;
};

QuestionBank ParseQuestionBank(std::istream& in);
QuestionBank LoadQuestionBank(const std::filesystem::path& path);

enum class PromptStyle { kSpecialTokens, kName, kDescription, kExpert, kSeries, kCustom };

struct PromptSet {
  PromptStyle style = PromptStyle::kCustom;
  int series_index = 0;  // 1-based; only meaningful for kSeries.
  std::string name;      // Display name, e.g. "Series-2" or "Best".
  std::map<SlotKey, std::string> prompts;

  // Throws ValidationError naming the first uncovered slot.
  void CheckCovers(const corpus::Ontology& ontology) const;
  const std::string& At(const SlotKey& slot) const;
};

std::string PromptStyleName(PromptStyle style);
PromptStyle ParsePromptStyle(std::string_view name);

std::string SerializePromptSet(const PromptSet& prompts);
PromptSet ParsePromptSet(const std::string& json_text);
PromptSet LoadPromptSet(const std::filesystem::path& path);

// "<template> <slot>", names passed through unmodified.
std::string BuildNamePrompt(std::string_view template_name,
                            std::string_view slot_name);
// Template description and slot description joined by one space. Throws
// ValidationError("description unavailable for this slot") when either is
// missing or empty.
std::string BuildDescriptionPrompt(const corpus::Ontology& ontology,
                                   const SlotKey& slot);

PromptSet MakeNamePrompts(const corpus::Ontology& ontology);
PromptSet MakeDescriptionPrompts(const corpus::Ontology& ontology);
PromptSet MakeSpecialTokenPrompts(const corpus::Ontology& ontology);
// Throws ValidationError when a slot has no expert question.
PromptSet MakeExpertPrompts(const QuestionBank& bank,
                            const corpus::Ontology& ontology);

// Groups non-expert questions into n complete prompt sets. Per slot,
// questions are ordered by annotator index and the i-th goes to series i; a
// slot with k < n questions wraps series i > k to question ((i-1) mod k)+1.
// When `ontology` is given every ontology slot must have a question.
std::vector<PromptSet> AssignSeries(const QuestionBank& bank, int n,
                                    const corpus::Ontology* ontology = nullptr);

// Maps a string to a unit-norm vector of fixed dimension.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> Embed(std::string_view text) const = 0;
  virtual int dimension() const = 0;
};

// Hashed bag of lowercased words, L2-normalized. Deterministic and
// dependency-free; stands in for a sentence encoder.
class HashedBagOfWordsEmbedder : public Embedder {
 public:
  explicit HashedBagOfWordsEmbedder(int dimension = 256);
  std::vector<double> Embed(std::string_view text) const override;
  int dimension() const override { return dimension_; }

 private:
  int dimension_;
};

// Precomputed vectors loaded from JSON Lines {"text", "vector": [...]}.
// Vectors are normalized on load.
class ExternalEmbedder : public Embedder {
 public:
  static ExternalEmbedder Load(const std::filesystem::path& path);
  static ExternalEmbedder Parse(std::istream& in);

  std::vector<double> Embed(std::string_view text) const override;
  int dimension() const override { return dimension_; }

 private:
  int dimension_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

double Cosine(const std::vector<double>& a, const std::vector<double>& b);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // Sample standard deviation; 0 for fewer than 2 values.
  int count = 0;
};

MeanStd ComputeMeanStd(const std::vector<double>& values);

struct SimilarityStats {
  std::map<SlotKey, MeanStd> per_slot;  // Only slots with >= 2 questions.
  MeanStd pooled;
};

// Cosine similarity over all unordered within-slot question pairs. Throws
// std::invalid_argument when no slot has two questions.
SimilarityStats PairwiseSimilarityStats(const QuestionBank& bank,
                                        const Embedder& embedder,
                                        bool include_expert);

struct LengthStats {
  double mean = 0.0;
  double std = 0.0;
  double median = 0.0;
  int count = 0;
};

int CountWords(std::string_view text);
LengthStats ComputeLengthStats(const std::vector<int>& lengths);

struct LengthReport {
  LengthStats all;
  std::optional<LengthStats> non_expert;
  std::optional<LengthStats> expert;
};

LengthReport QuestionLengthStats(const QuestionBank& bank, bool split_by_expert);

// Greedy longest-match sub-word segmenter. Vocabulary entries prefixed with
// U+2581 ("▁") may only open a word; other entries may appear anywhere in a
// word. Characters with no matching entry become single-byte pieces.
class SubwordSegmenter {
 public:
  explicit SubwordSegmenter(std::set<std::string> vocabulary);
  std::vector<std::string> Segment(std::string_view word) const;

 private:
  std::set<std::string> word_initial_;
  std::set<std::string> anywhere_;
  size_t longest_ = 1;
};

struct Fragmentation {
  std::string word;
  std::vector<std::string> pieces;
};

// Splits on whitespace, detaches leading/trailing punctuation, and lists
// each remaining word that the segmenter breaks into more than one piece.
std::vector<Fragmentation> FragmentationReport(std::string_view text,
                                               const SubwordSegmenter& segmenter);

// Lowercased tokens with punctuation detached; the tokenization fed to the
// encoder for prompt text.
std::vector<std::string> TokenizePrompt(std::string_view text);

}  // namespace promptex::prompts

#endif  // PROMPTEX_PROMPTS_H_
