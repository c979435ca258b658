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

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptex/corpus.h"

namespace promptex::corpus {
namespace {

constexpr int kTriggerLength = 1;

std::string TemplateName(int t) { return fmt::format("Event{}", t); }
std::string SlotName(int s) { return fmt::format("Arg{}", s); }
std::string TriggerWord(int t) { return fmt::format("trig{}", t); }
std::string FillerWord(int w) { return fmt::format("w{}", w); }

int UniformInt(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Lays `lengths` out inside [first, first + width) in random order with
// random gaps; returns span starts in the order of `lengths`.
std::vector<int> PackSpans(std::mt19937_64& rng, const std::vector<int>& lengths,
                           int first, int width) {
  int total = 0;
  for (int len : lengths) total += len;
  const int slack = width - total;
  if (slack < 0) throw std::logic_error("span packing overflow");

  // Random composition of the slack into lengths.size() + 1 gaps.
  std::vector<int> cuts;
  for (size_t i = 0; i < lengths.size(); ++i) cuts.push_back(UniformInt(rng, 0, slack));
  std::sort(cuts.begin(), cuts.end());

  std::vector<size_t> order(lengths.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<int> starts(lengths.size());
  int used = 0;
  for (size_t k = 0; k < order.size(); ++k) {
    starts[order[k]] = first + cuts[k] + used;
    used += lengths[order[k]];
  }
  return starts;
}

void CheckConfig(const SyntheticConfig& config) {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("inconsistent synthetic config: " + what);
  };
  if (config.vocab_size < 1) fail("vocab_size must be >= 1");
  if (config.num_templates < 1) fail("num_templates must be >= 1");
  if (config.slots_per_template < 1) fail("slots_per_template must be >= 1");
  if (config.min_multiplicity < 1 ||
      config.max_multiplicity < config.min_multiplicity) {
    fail("multiplicity range must satisfy 1 <= min <= max");
  }
  if (config.nil_rate < 0.0 || config.nil_rate > 1.0) {
    fail("nil_rate must lie in [0, 1]");
  }
  if (config.max_span_length < 1) fail("max_span_length must be >= 1");
  if (config.distractors_per_instance < 0 || config.random_negatives < 0) {
    fail("negative counts");
  }
  if (config.questions_per_slot < 1) fail("questions_per_slot must be >= 1");
  const int pre = config.distractors_per_instance * config.max_span_length + 1;
  const int post =
      config.slots_per_template * config.max_multiplicity * config.max_span_length;
  if (config.context_length < pre + kTriggerLength + post) {
    fail(fmt::format(
        "context_length {} is shorter than trigger + markers (needs {})",
        config.context_length, pre + kTriggerLength + post));
  }
}

TemplateInstance MakeInstance(const SyntheticConfig& config,
                              std::mt19937_64& rng, const std::string& doc_id) {
  const int n = config.context_length;
  const int t = UniformInt(rng, 0, config.num_templates - 1);

  TemplateInstance instance;
  instance.doc_id = doc_id;
  instance.template_type = TemplateName(t);
  instance.tokens.resize(n);
  for (auto& token : instance.tokens) {
    token = FillerWord(UniformInt(rng, 0, config.vocab_size - 1));
  }

  const int pre_needed =
      config.distractors_per_instance * config.max_span_length + 1;
  const int post_needed = config.slots_per_template * config.max_multiplicity *
                          config.max_span_length;
  const int extra = std::min(2, n - pre_needed - kTriggerLength - post_needed);
  const int pre_len = pre_needed + UniformInt(rng, 0, extra);
  instance.trigger = {pre_len + 1, pre_len + kTriggerLength};
  instance.tokens[pre_len] = TriggerWord(t);
  const int post_first = instance.trigger.end + 1;
  const int post_width = n - instance.trigger.end;

  std::set<Span> candidates;

  // Gold spans after the trigger, each opened by its slot's marker.
  std::vector<int> lengths;
  std::vector<int> owner;
  for (int s = 0; s < config.slots_per_template; ++s) {
    SlotInstance slot;
    slot.slot_type = SlotName(s);
    instance.slots.push_back(std::move(slot));
    const bool nil =
        std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config.nil_rate;
    if (nil) continue;
    const int count =
        UniformInt(rng, config.min_multiplicity, config.max_multiplicity);
    for (int k = 0; k < count; ++k) {
      lengths.push_back(UniformInt(rng, 1, config.max_span_length));
      owner.push_back(s);
    }
  }
  std::vector<int> starts = PackSpans(rng, lengths, post_first, post_width);
  for (size_t k = 0; k < starts.size(); ++k) {
    const Span span{starts[k], starts[k] + lengths[k] - 1};
    instance.tokens[span.start - 1] = SyntheticMarker(t, owner[k]);
    instance.slots[owner[k]].gold.push_back(span);
    candidates.insert(span);
  }
  for (auto& slot : instance.slots) std::sort(slot.gold.begin(), slot.gold.end());

  // Distractor markers before the trigger: right word, wrong side.
  std::vector<int> distractor_lengths;
  std::vector<int> distractor_slots;
  for (int k = 0; k < config.distractors_per_instance; ++k) {
    distractor_lengths.push_back(UniformInt(rng, 1, config.max_span_length));
    distractor_slots.push_back(UniformInt(rng, 0, config.slots_per_template - 1));
  }
  std::vector<int> distractor_starts =
      PackSpans(rng, distractor_lengths, 1, pre_len);
  for (size_t k = 0; k < distractor_starts.size(); ++k) {
    const Span span{distractor_starts[k],
                    distractor_starts[k] + distractor_lengths[k] - 1};
    instance.tokens[span.start - 1] = SyntheticMarker(t, distractor_slots[k]);
    candidates.insert(span);
  }

  // Plain filler spans.
  for (int k = 0; k < config.random_negatives; ++k) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const int start = UniformInt(rng, 1, n);
      const int end = std::min(n, start + UniformInt(rng, 0, config.max_span_length - 1));
      const Span span{start, end};
      if (instance.tokens[start - 1][0] != 'w') continue;
      if (candidates.insert(span).second) break;
    }
  }

  instance.candidates.assign(candidates.begin(), candidates.end());
  return instance;
}

DatasetSplit MakeSplit(const SyntheticConfig& config, std::mt19937_64& rng,
                       SplitName name, int count) {
  DatasetSplit split;
  split.name = name;
  for (int i = 0; i < count; ++i) {
    split.instances.push_back(MakeInstance(
        config, rng, fmt::format("{}-{:05d}", SplitNameString(name), i)));
  }
  return split;
}

// Question phrasings; the marker word is always present so questions carry
// the signal a prompt-conditioned extractor needs.
const std::vector<std::string>& QuestionPatterns() {
  static const std::vector<std::string> kPatterns = {
      "What is the {marker} ?",
      "Which {marker} was involved ?",
      "Who or what is the {marker} in this {trigger} event ?",
      "What {marker} is mentioned after the {trigger} ?",
      "Name the {marker} of the event .",
      "What is the {marker} / argument of the {trigger} ?",
  };
  return kPatterns;
}

}  // namespace

std::string SyntheticMarker(int template_index, int slot_index) {
  return fmt::format("mk{}x{}", template_index, slot_index);
}

SyntheticCorpus GenerateSyntheticCorpus(const SyntheticConfig& config,
                                        std::uint64_t seed) {
  CheckConfig(config);
  std::mt19937_64 rng(seed);

  std::vector<TemplateSchema> templates;
  for (int t = 0; t < config.num_templates; ++t) {
    TemplateSchema schema;
    schema.name = TemplateName(t);
    schema.description = fmt::format(
        "The {} template captures events announced by the word {}.",
        schema.name, TriggerWord(t));
    for (int s = 0; s < config.slots_per_template; ++s) {
      schema.slots.push_back(
          {SlotName(s),
           fmt::format("The argument introduced by the word {}.",
                       SyntheticMarker(t, s)),
           true});
    }
    templates.push_back(std::move(schema));
  }

  SyntheticCorpus corpus;
  corpus.ontology = Ontology(std::move(templates));
  corpus.train = MakeSplit(config, rng, SplitName::kTrain, config.train_instances);
  corpus.dev = MakeSplit(config, rng, SplitName::kDev, config.dev_instances);
  corpus.test = MakeSplit(config, rng, SplitName::kTest, config.test_instances);

  const auto& patterns = QuestionPatterns();
  for (int t = 0; t < config.num_templates; ++t) {
    for (int s = 0; s < config.slots_per_template; ++s) {
      auto fill = [&](const std::string& pattern) {
        std::string text = pattern;
        for (const auto& [key, value] :
             {std::pair<std::string, std::string>{"{marker}", SyntheticMarker(t, s)},
              {"{trigger}", TriggerWord(t)}}) {
          for (size_t pos; (pos = text.find(key)) != std::string::npos;) {
            text.replace(pos, key.size(), value);
          }
        }
        return text;
      };
      for (int a = 1; a <= config.questions_per_slot; ++a) {
        nlohmann::ordered_json line;
        line["template_type"] = TemplateName(t);
        line["slot_type"] = SlotName(s);
        line["annotator"] = a;
        line["text"] = fill(patterns[(a + s + t) % patterns.size()]);
        line["expert"] = false;
        corpus.question_bank_lines.push_back(line.dump());
      }
      nlohmann::ordered_json expert;
      expert["template_type"] = TemplateName(t);
      expert["slot_type"] = SlotName(s);
      expert["annotator"] = 0;
      expert["text"] = fill("What is the {marker} argument of the {trigger} event ?");
      expert["expert"] = true;
      corpus.question_bank_lines.push_back(expert.dump());
    }
  }
  return corpus;
}

}  // namespace promptex::corpus
