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

// Human ratings of prompt questions: tie-aware ranks, reciprocal-rank
// aggregate scores, Best/Worst prompt selection, question-writer scores,
// rater agreement, and correlation of human scores with model F1.

#ifndef PROMPTEX_RATINGS_H_
#define PROMPTEX_RATINGS_H_

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "promptex/corpus.h"
#include "promptex/prompts.h"

namespace promptex::ratings {

using corpus::SlotKey;

// One cell of a rating table. Rating 1 is the best grade and 4 the worst.
struct RatingEntry {
  SlotKey slot;
  std::string question_id;
  int annotator = 0;
  int rating = 0;
  std::string text;             // Question text; optional.
  std::optional<int> author;    // Question writer; optional.
};

struct SlotRatings {
  SlotKey slot;
  std::vector<std::string> questions;     // Ids in first-seen order.
  std::vector<std::string> texts;         // Parallel to questions.
  std::vector<std::optional<int>> authors;
  std::vector<int> annotators;            // Ascending.
  std::vector<std::vector<int>> ratings;  // [annotator][question]
};

struct RatingTable {
  std::vector<SlotRatings> slots;  // Sorted by slot key.
};

// Throws ValidationError on ratings outside 1..4, duplicate cells, or a
// missing (annotator, question) cell.
RatingTable BuildRatingTable(const std::vector<RatingEntry>& entries);

// JSON Lines {"template_type","slot_type","question_id","annotator","rating"}
// with optional "text" and "author".
std::vector<RatingEntry> ParseRatings(std::istream& in);
std::vector<RatingEntry> LoadRatings(const std::filesystem::path& path);

// rank(q) = #{ratings < r_q} + #{ratings == r_q}. Throws ValidationError on
// ratings outside 1..4 and std::invalid_argument on an empty list.
std::vector<int> RanksFromRatings(const std::vector<int>& ratings);

struct QuestionScore {
  std::string question_id;
  std::string text;
  double score = 0.0;       // Sum over annotators of 1 / rank.
  std::vector<int> ranks;   // One per annotator, in annotator order.
};

struct SlotScores {
  SlotKey slot;
  std::vector<QuestionScore> questions;
};

std::vector<SlotScores> AggregateScores(const RatingTable& table);

// One decimal, as shown in rating reports.
std::string FormatScore(double score);

struct BestWorst {
  prompts::PromptSet best;
  prompts::PromptSet worst;
  // Per slot, question indices of the best and worst question.
  std::map<SlotKey, std::pair<int, int>> picks;
};

// Argmax and argmin of the aggregate score per slot; ties go to the lowest
// question index. `exclude` lists question ids kept out of both pools.
BestWorst SelectBestWorst(const std::vector<SlotScores>& scores,
                          const std::vector<std::string>& exclude = {});

// Mean aggregate score of the questions each writer authored. Throws
// ValidationError naming a question with no author.
std::map<int, double> AnnotatorScores(
    const std::vector<SlotScores>& scores,
    const std::map<std::pair<SlotKey, std::string>, int>& authorship);

// Authorship taken from the "author" fields of a rating table.
std::map<std::pair<SlotKey, std::string>, int> AuthorshipFromTable(const RatingTable& table);

// Sample Pearson coefficient. Throws std::invalid_argument for unequal or
// too-short inputs and ZeroVarianceError when either side is constant.
double Pearson(const std::vector<double>& x, const std::vector<double>& y);

// Mean over annotator pairs of the Pearson correlation of their pooled
// 1/rank scores on commonly rated questions. Pairs with a constant side are
// skipped; throws ZeroVarianceError when no pair is defined.
double InterAnnotatorAgreement(const RatingTable& table);

struct SwapQuestion {
  SlotKey slot;
  std::string question_id;
  std::string text;
};

struct SwapPair {
  SlotKey slot;
  std::string question_id;
  double f1 = 0.0;
  double human_score = 0.0;
};

struct SwapModelResult {
  std::string model;
  std::vector<SwapPair> pairs;
  std::optional<double> correlation;  // Empty when undefined.
  std::string note;
};

struct SwapAnalysis {
  std::vector<SwapModelResult> models;
  std::optional<double> mean_correlation;
  std::vector<std::string> excluded;  // Questions without a human score.
};

// F1 of a model on one slot when the given question replaces its prompt.
using SlotF1Evaluator =
    std::function<double(const SlotKey& slot, const std::string& question_text)>;

SwapAnalysis PromptSwapAnalysis(
    const std::vector<std::pair<std::string, SlotF1Evaluator>>& models,
    const std::vector<SwapQuestion>& questions, const std::vector<SlotScores>& scores);

void WriteScoresCsv(std::ostream& out, const std::vector<SlotScores>& scores);

}  // namespace promptex::ratings

#endif  // PROMPTEX_RATINGS_H_
