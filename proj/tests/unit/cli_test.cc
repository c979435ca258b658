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

#include "cli.h"

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_util.h"

namespace promptex::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome Invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "promptex");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = Run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json LastErrorRecord(const std::string& err) {
  std::istringstream in(err);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '{') last = line;
  }
  return nlohmann::json::parse(last);
}

std::vector<std::string> Generate(const fs::path& dir) {
  return {"generate", "--output-dir", dir.string(), "--seed", "3",        "--templates",
          "2",        "--slots",      "2",          "--train-size", "24", "--dev-size",
          "8",        "--test-size",  "8"};
}

TEST(CliTest, MissingOrUnknownCommandIsAUsageError) {
  EXPECT_EQ(Invoke({}).code, kExitUsage);
  EXPECT_EQ(Invoke({"bogus"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"generate", "--no-such-flag"}).code, kExitUsage);
  EXPECT_EQ(Invoke({"--help"}).code, kExitOk);
}

TEST(CliTest, GenerateIsIdempotentForAFixedSeed) {
  testing::TempDir a, b;
  ASSERT_EQ(Invoke(Generate(a.path())).code, kExitOk);
  ASSERT_EQ(Invoke(Generate(b.path())).code, kExitOk);
  for (const char* name :
       {"ontology.json", "train.jsonl", "dev.jsonl", "test.jsonl", "questions.jsonl"}) {
    EXPECT_EQ(testing::ReadFile(a / name), testing::ReadFile(b / name)) << name;
    EXPECT_FALSE(testing::ReadFile(a / name).empty()) << name;
  }
}

TEST(CliTest, ValidateReportsCorruptionWithExitTwo) {
  testing::TempDir dir;
  ASSERT_EQ(Invoke(Generate(dir.path())).code, kExitOk);
  const std::string ontology = (dir / "ontology.json").string();
  EXPECT_EQ(Invoke({"validate", "--ontology", ontology, "--corpus",
                    (dir / "dev.jsonl").string(), "--output-dir", dir.path().string()})
                .code,
            kExitOk);

  std::string text = testing::ReadFile(dir / "dev.jsonl");
  text += R"({"doc_id":"bad","template_type":"Event1","tokens":["a"],"trigger":[1,1],)"
          R"("candidates":[[2,2]]})"
          "\n";
  testing::WriteFile(dir / "broken.jsonl", text);
  const Outcome broken = Invoke({"validate", "--ontology", ontology, "--corpus",
                                 (dir / "broken.jsonl").string(), "--output-dir",
                                 (dir / "v").string()});
  EXPECT_EQ(broken.code, kExitValidation);
  const auto record = LastErrorRecord(broken.err);
  EXPECT_EQ(record["status"], "error");
  EXPECT_EQ(record["code"], kExitValidation);
  EXPECT_EQ(record["command"], "validate");
  EXPECT_NE(testing::ReadFile(dir / "v" / "validation.json").find("span out of bounds"),
            std::string::npos);
}

TEST(CliTest, MissingInputFileIsAValidationError) {
  testing::TempDir dir;
  const Outcome o = Invoke({"stats", "--ontology", (dir / "nope.json").string(),
                            "--output-dir", dir.path().string()});
  EXPECT_EQ(o.code, kExitValidation);
  EXPECT_EQ(LastErrorRecord(o.err)["kind"].get<std::string>().empty(), false);
}

TEST(CliTest, RatingsCommandEmitsTheAggregatedTable) {
  testing::TempDir dir;
  const Outcome o = Invoke({"ratings", "--ratings", testing::DataPath("table10_ratings.jsonl"),
                            "--output-dir", dir.path().string()});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const std::string scores = testing::ReadFile(dir / "scores.csv");
  EXPECT_NE(scores.find("What is the disease?,0.750000,0.8,"), std::string::npos)
      << scores;
  EXPECT_NE(scores.find(",2.250000,2.2,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "best_prompts.json"));
  EXPECT_TRUE(fs::exists(dir / "worst_prompts.json"));
  EXPECT_TRUE(fs::exists(dir / "agreement.json"));
  EXPECT_FALSE(fs::exists(dir / "annotators.csv"));
}

TEST(CliTest, TrainThenEvalWritesReports) {
  testing::TempDir dir;
  ASSERT_EQ(Invoke(Generate(dir.path())).code, kExitOk);
  const std::string ontology = (dir / "ontology.json").string();
  const Outcome trained =
      Invoke({"train", "--ontology", ontology, "--train", (dir / "train.jsonl").string(),
              "--dev", (dir / "dev.jsonl").string(), "--epochs", "2", "--batch-size", "8",
              "--output-dir", (dir / "run").string()});
  ASSERT_EQ(trained.code, kExitOk) << trained.err;
  EXPECT_TRUE(fs::exists(dir / "run" / "checkpoint.json"));
  EXPECT_TRUE(fs::exists(dir / "run" / "training_log.csv"));

  const Outcome evaluated =
      Invoke({"eval", "--ontology", ontology, "--test", (dir / "test.jsonl").string(),
              "--train", (dir / "train.jsonl").string(), "--checkpoint",
              (dir / "run" / "checkpoint.json").string(), "--output-dir",
              (dir / "eval").string()});
  ASSERT_EQ(evaluated.code, kExitOk) << evaluated.err;
  const auto metrics =
      nlohmann::json::parse(testing::ReadFile(dir / "eval" / "metrics.json"));
  EXPECT_TRUE(metrics.contains("micro"));
  for (const char* name : {"predictions.jsonl", "breakdown_answers.csv",
                           "breakdown_answers.svg", "breakdown_frequency.csv"}) {
    EXPECT_TRUE(fs::exists(dir / "eval" / name)) << name;
  }
}

TEST(CliTest, OutputDirectoryFallsBackToTheEnvironment) {
  testing::TempDir dir;
  ::setenv(kOutputDirEnv, dir.path().c_str(), 1);
  const Outcome o = Invoke({"ratings", "--ratings", testing::DataPath("table10_ratings.jsonl")});
  ::unsetenv(kOutputDirEnv);
  ASSERT_EQ(o.code, kExitOk) << o.err;
  EXPECT_TRUE(fs::exists(dir / "scores.csv"));
}

}  // namespace
}  // namespace promptex::cli
