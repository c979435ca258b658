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

#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "promptex/errors.h"
#include "test_util.h"

namespace promptex::corpus {
namespace {

Ontology SmallOntology() {
  return Ontology({{"Attack", "An attack.", {{"Target", "Who was hit.", true},
                                             {"Weapon", "", true},
                                             {"Date", "", false}}},
                   {"Protest", "", {{"Place", "", true}}}});
}

std::string Line(const std::string& body) {
  return R"({"doc_id":"d1","template_type":"Attack",)" + body + "}\n";
}

std::vector<std::string> LenientErrors(const std::string& text) {
  std::istringstream in(text);
  auto lines = ParseCorpusLenient(in, SmallOntology());
  EXPECT_EQ(lines.size(), 1u);
  return lines.front().errors;
}

bool AnyContains(const std::vector<std::string>& errors, const std::string& needle) {
  for (const auto& e : errors) {
    if (e.find(needle) != std::string::npos) return true;
  }
  return false;
}

const char* kEightTokens = R"("tokens":["a","b","c","d","e","f","g","h"])";

TEST(OntologyTest, RejectsDuplicateNames) {
  EXPECT_THROW(Ontology({{"A", "", {}}, {"A", "", {}}}), ValidationError);
  EXPECT_THROW(Ontology({{"A", "", {{"x", "", true}, {"x", "", true}}}}), ValidationError);
}

TEST(OntologyTest, SlotKeysSkipNonSpanFillers) {
  const auto keys = SmallOntology().SlotKeys();
  ASSERT_EQ(keys.size(), 3u);
  EXPECT_EQ(keys[0], (SlotKey{"Attack", "Target"}));
  EXPECT_EQ(keys[1], (SlotKey{"Attack", "Weapon"}));
  EXPECT_EQ(keys[2], (SlotKey{"Protest", "Place"}));
}

TEST(OntologyTest, SerializationRoundTrips) {
  const Ontology o = SmallOntology();
  EXPECT_EQ(ParseOntology(SerializeOntology(o)), o);
}

TEST(CorpusTest, TriggerWithinBoundsIsAccepted) {
  const auto errors = LenientErrors(
      Line(std::string(kEightTokens) + R"(,"trigger":[4,5],"candidates":[[1,2]],"slots":[])"));
  EXPECT_TRUE(errors.empty());
}

TEST(CorpusTest, GoldOutOfBoundsIsReported) {
  const auto errors = LenientErrors(Line(
      std::string(kEightTokens) +
      R"(,"trigger":[4,5],"candidates":[[9,9]],"slots":[{"slot_type":"Target","gold":[[9,9]]}])"));
  EXPECT_TRUE(AnyContains(errors, "span out of bounds"));
}

TEST(CorpusTest, GoldOutsideCandidatesIsReported) {
  const auto errors = LenientErrors(Line(
      std::string(kEightTokens) +
      R"(,"trigger":[4,5],"candidates":[[1,1]],"slots":[{"slot_type":"Target","gold":[[2,3]]}])"));
  EXPECT_TRUE(AnyContains(errors, "gold not in candidate set"));
}

TEST(CorpusTest, InvertedAndDuplicateSpansAreReported) {
  const auto errors = LenientErrors(
      Line(std::string(kEightTokens) + R"(,"trigger":[5,4],"candidates":[[1,1],[1,1]])"));
  EXPECT_TRUE(AnyContains(errors, "inverted span"));
  EXPECT_TRUE(AnyContains(errors, "duplicate candidate"));
}

TEST(CorpusTest, UnknownTypesAndMalformedJsonAreReported) {
  std::istringstream in(
      R"({"doc_id":"x","template_type":"Nope","tokens":["a"],"trigger":[1,1],"candidates":[]})"
      "\n{not json\n");
  const auto lines = ParseCorpusLenient(in, SmallOntology());
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_TRUE(AnyContains(lines[0].errors, "unknown template type"));
  EXPECT_TRUE(AnyContains(lines[1].errors, "malformed JSON"));
  EXPECT_EQ(lines[1].line_number, 2);
}

TEST(CorpusTest, StrictParseThrowsWithLineNumber) {
  std::istringstream in("\n" + Line(std::string(kEightTokens) +
                                    R"(,"trigger":[4,5],"candidates":[[1,1],[1,1]])"));
  try {
    ParseCorpus(in, SmallOntology());
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(CorpusTest, NonSpanSlotsAreDroppedAtIngestion) {
  std::istringstream in(Line(std::string(kEightTokens) +
                             R"(,"trigger":[4,5],"candidates":[[1,1]],)"
                             R"("slots":[{"slot_type":"Date"},{"slot_type":"Target","gold":[[1,1]]}])"));
  const auto split = ParseCorpus(in, SmallOntology());
  ASSERT_EQ(split.instances.size(), 1u);
  ASSERT_EQ(split.instances[0].slots.size(), 1u);
  EXPECT_EQ(split.instances[0].slots[0].slot_type, "Target");
}

TEST(CorpusTest, SerializationRoundTrips) {
  const auto generated = GenerateSyntheticCorpus(testing::TinySynthetic(), 5);
  std::ostringstream out;
  WriteCorpus(out, generated.train);
  std::istringstream in(out.str());
  const auto parsed = ParseCorpus(in, generated.ontology);
  EXPECT_EQ(parsed.instances, generated.train.instances);
}

TEST(CorpusStatsTest, EmptySplitIsAllZero) {
  const auto s = ComputeCorpusStats({});
  EXPECT_EQ(s.template_instances, 0);
  EXPECT_EQ(s.slot_instances, 0);
  EXPECT_EQ(s.gold_spans, 0);
  EXPECT_EQ(s.template_types, 0);
}

TEST(CorpusStatsTest, TenInstancesWithTwoSlotsEach) {
  auto config = testing::TinySynthetic();
  config.train_instances = 10;
  config.slots_per_template = 2;
  const auto generated = GenerateSyntheticCorpus(config, 11);
  const auto s = ComputeCorpusStats(generated.train);
  EXPECT_EQ(s.template_instances, 10);
  EXPECT_EQ(s.slot_instances, 20);
}

TEST(SyntheticTest, IsAPureFunctionOfConfigAndSeed) {
  const auto a = GenerateSyntheticCorpus({}, 42);
  const auto b = GenerateSyntheticCorpus({}, 42);
  std::ostringstream sa, sb;
  WriteCorpus(sa, a.train);
  WriteCorpus(sb, b.train);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a.question_bank_lines, b.question_bank_lines);
  EXPECT_EQ(SerializeOntology(a.ontology), SerializeOntology(b.ontology));
  const auto c = GenerateSyntheticCorpus({}, 43);
  EXPECT_NE(a.train.instances, c.train.instances);
}

TEST(SyntheticTest, NilRateOneEmptiesEveryGoldSet) {
  auto config = testing::TinySynthetic();
  config.nil_rate = 1.0;
  const auto generated = GenerateSyntheticCorpus(config, 1);
  for (const auto& instance : generated.train.instances) {
    for (const auto& slot : instance.slots) EXPECT_TRUE(slot.gold.empty());
  }
}

TEST(SyntheticTest, FixedMultiplicityGivesExactSpanCounts) {
  auto config = testing::TinySynthetic();
  config.nil_rate = 0.0;
  config.min_multiplicity = 2;
  config.max_multiplicity = 2;
  config.train_instances = 50;
  const auto generated = GenerateSyntheticCorpus(config, 2);
  std::map<std::string, int> per_slot;
  for (const auto& instance : generated.train.instances) {
    for (const auto& slot : instance.slots) per_slot[slot.slot_type] += slot.gold.size();
  }
  for (const auto& [slot, count] : per_slot) EXPECT_EQ(count, 100) << slot;
}

TEST(SyntheticTest, GoldSpansOpenWithTheirSlotMarkerAndValidate) {
  const auto generated = GenerateSyntheticCorpus({}, 9);
  for (const auto* split : {&generated.train, &generated.dev, &generated.test}) {
    for (const auto& instance : split->instances) {
      EXPECT_TRUE(ValidateInstance(instance).empty()) << instance.doc_id;
      const int t = std::stoi(instance.template_type.substr(5));
      for (const auto& slot : instance.slots) {
        const int s = std::stoi(slot.slot_type.substr(3));
        for (const auto& span : slot.gold) {
          EXPECT_EQ(instance.tokens[span.start - 1], SyntheticMarker(t, s));
          EXPECT_GT(span.start, instance.trigger.end);
        }
      }
    }
  }
}

TEST(SyntheticTest, DefaultsMeetTheLearnabilityCorpusShape) {
  const SyntheticConfig config;
  EXPECT_GE(config.num_templates, 4);
  EXPECT_GE(config.slots_per_template, 3);
  EXPECT_DOUBLE_EQ(config.nil_rate, 0.2);
  EXPECT_EQ(config.max_multiplicity, 3);
  const auto generated = GenerateSyntheticCorpus(config, 0);
  int slots = 0;
  int nil = 0;
  for (const auto& instance : generated.train.instances) {
    for (const auto& slot : instance.slots) {
      ++slots;
      nil += slot.gold.empty();
      EXPECT_LE(slot.gold.size(), 3u);
    }
  }
  const double rate = static_cast<double>(nil) / slots;
  EXPECT_NEAR(rate, 0.2, 0.05);
}

TEST(SyntheticTest, InconsistentConfigIsRejected) {
  auto config = testing::TinySynthetic();
  config.context_length = 4;
  EXPECT_THROW(GenerateSyntheticCorpus(config, 0), std::invalid_argument);
  config = testing::TinySynthetic();
  config.nil_rate = 1.5;
  EXPECT_THROW(GenerateSyntheticCorpus(config, 0), std::invalid_argument);
}

TEST(CorpusFileTest, SaveAndLoadAgree) {
  testing::TempDir dir;
  const auto generated = GenerateSyntheticCorpus(testing::TinySynthetic(), 3);
  SaveCorpus(dir / "dev.jsonl", generated.dev);
  const auto loaded = LoadCorpus(dir / "dev.jsonl", generated.ontology, SplitName::kDev);
  EXPECT_EQ(loaded.instances, generated.dev.instances);
  EXPECT_EQ(loaded.name, SplitName::kDev);
  EXPECT_THROW(LoadCorpus(dir / "missing.jsonl", generated.ontology), ValidationError);
}

}  // namespace
}  // namespace promptex::corpus
