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

// Data model for template extraction corpora: documents with a trigger span,
// a given set of candidate spans, and per-slot gold filler sets.
//
// Token indices are 1-based and inclusive everywhere, in memory and on disk.

#ifndef PROMPTEX_CORPUS_H_
#define PROMPTEX_CORPUS_H_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace promptex::corpus {

struct Span {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  friend auto operator<=>(const Span&, const Span&) = default;
};

// Identifies a slot within a template, e.g. {"Epidemiplate", "Disease"}.
struct SlotKey {
  std::string template_type;
  std::string slot_type;

  std::string ToString() const { return template_type + "/" + slot_type; }
  friend auto operator<=>(const SlotKey&, const SlotKey&) = default;
};

struct SlotInstance {
  std::string slot_type;
  std::vector<Span> gold;  // U_y; may be empty.

  friend bool operator==(const SlotInstance&, const SlotInstance&) = default;
};

struct TemplateInstance {
  std::string doc_id;
  std::string template_type;
  std::vector<std::string> tokens;
  Span trigger;
  std::vector<Span> candidates;
  std::vector<SlotInstance> slots;

  int context_length() const { return static_cast<int>(tokens.size()); }
  friend bool operator==(const TemplateInstance&,
                         const TemplateInstance&) = default;
};

struct SlotSchema {
  std::string name;
  std::string description;  // Empty when the ontology has none.
  // Slots whose fillers are not text spans are dropped at ingestion.
  bool span_filler = true;

  friend bool operator==(const SlotSchema&, const SlotSchema&) = default;
};

struct TemplateSchema {
  std::string name;
  std::string description;
  std::vector<SlotSchema> slots;

  friend bool operator==(const TemplateSchema&,
                         const TemplateSchema&) = default;
};

class Ontology {
 public:
  Ontology() = default;
  // Throws ValidationError on duplicate template or slot names.
  explicit Ontology(std::vector<TemplateSchema> templates);

  const std::vector<TemplateSchema>& templates() const { return templates_; }
  const TemplateSchema* FindTemplate(const std::string& name) const;
  const SlotSchema* FindSlot(const SlotKey& key) const;

  // Every (template, slot) pair with span fillers, in declaration order.
  std::vector<SlotKey> SlotKeys() const;

  friend bool operator==(const Ontology&, const Ontology&) = default;

 private:
  std::vector<TemplateSchema> templates_;
};

enum class SplitName { kTrain, kDev, kTest };

const char* SplitNameString(SplitName name);

struct DatasetSplit {
  SplitName name = SplitName::kTrain;
  std::vector<TemplateInstance> instances;
};

// Returns every violated invariant of `instance`; empty means valid.
std::vector<std::string> ValidateInstance(const TemplateInstance& instance);

// Reads a JSON Lines corpus. Each line is validated and resolved against
// `ontology`; errors carry the 1-based line number. Slots the ontology marks
// as non-span are skipped.
DatasetSplit LoadCorpus(const std::filesystem::path& path,
                        const Ontology& ontology,
                        SplitName name = SplitName::kTrain);
DatasetSplit ParseCorpus(std::istream& in, const Ontology& ontology,
                         SplitName name = SplitName::kTrain);

// Unvalidated line-by-line parse, used by `validate` to report every problem.
struct RawLine {
  int line_number = 0;
  std::optional<TemplateInstance> instance;
  std::vector<std::string> errors;
};
std::vector<RawLine> ParseCorpusLenient(std::istream& in,
                                        const Ontology& ontology);

void WriteCorpus(std::ostream& out, const DatasetSplit& split);
void SaveCorpus(const std::filesystem::path& path, const DatasetSplit& split);

Ontology LoadOntology(const std::filesystem::path& path);
Ontology ParseOntology(const std::string& json_text);
std::string SerializeOntology(const Ontology& ontology);

struct CorpusStats {
  int template_types = 0;
  int slot_types = 0;
  int template_instances = 0;
  int slot_instances = 0;
  int filled_slot_instances = 0;  // Slot instances with at least one gold span.
  int gold_spans = 0;
  int candidate_spans = 0;
};

CorpusStats ComputeCorpusStats(const DatasetSplit& split);

// Settings for the deterministic synthetic corpus. Gold fillers of a slot
// always begin with that slot's marker token and sit after the trigger, so
// the task is learnable from the prompt (which names the marker).
struct SyntheticConfig {
  int vocab_size = 60;  // Filler words.
  int num_templates = 4;
  int slots_per_template = 3;
  int context_length = 32;
  int min_multiplicity = 1;
  int max_multiplicity = 3;
  double nil_rate = 0.2;
  int max_span_length = 2;
  int distractors_per_instance = 2;  // Marker spans placed before the trigger.
  int random_negatives = 3;          // Candidate spans of filler words.
  int questions_per_slot = 4;        // Size of the generated question bank.
  int train_instances = 320;
  int dev_instances = 60;
  int test_instances = 100;
};

struct SyntheticCorpus {
  Ontology ontology;
  DatasetSplit train;
  DatasetSplit dev;
  DatasetSplit test;
  // Question bank lines in the prompts module's JSON Lines format.
  std::vector<std::string> question_bank_lines;
};

// Marker token whose presence opens every gold span of the given slot.
std::string SyntheticMarker(int template_index, int slot_index);

// Throws std::invalid_argument when the config cannot be realized.
SyntheticCorpus GenerateSyntheticCorpus(const SyntheticConfig& config,
                                        std::uint64_t seed);

}  // namespace promptex::corpus

#endif  // PROMPTEX_CORPUS_H_
