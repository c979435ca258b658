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

#include "promptex/ratings.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptex/errors.h"

namespace promptex::ratings {
namespace {

void CheckRating(int rating) {
  if (rating < 1 || rating > 4) {
    throw ValidationError(fmt::format("rating {} outside the 1-4 scale", rating));
  }
}

std::string CsvField(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

RatingTable BuildRatingTable(const std::vector<RatingEntry>& entries) {
  struct Builder {
    std::vector<std::string> questions;
    std::map<std::string, size_t> index;
    std::vector<std::string> texts;
    std::vector<std::optional<int>> authors;
    std::map<std::pair<int, size_t>, int> cells;
    std::set<int> annotators;
  };
  std::map<SlotKey, Builder> builders;
  for (const auto& e : entries) {
    CheckRating(e.rating);
    Builder& b = builders[e.slot];
    auto [it, inserted] = b.index.try_emplace(e.question_id, b.questions.size());
    if (inserted) {
      b.questions.push_back(e.question_id);
      b.texts.push_back(e.text);
      b.authors.push_back(e.author);
    } else {
      if (b.texts[it->second].empty()) b.texts[it->second] = e.text;
      if (!b.authors[it->second]) b.authors[it->second] = e.author;
    }
    if (!b.cells.emplace(std::make_pair(e.annotator, it->second), e.rating).second) {
      throw ValidationError(fmt::format("duplicate rating for {} question '{}' by annotator {}",
                                        e.slot.ToString(), e.question_id, e.annotator));
    }
    b.annotators.insert(e.annotator);
  }
  RatingTable table;
  for (auto& [slot, b] : builders) {
    SlotRatings s;
    s.slot = slot;
    s.questions = b.questions;
    s.texts = b.texts;
    s.authors = b.authors;
    s.annotators.assign(b.annotators.begin(), b.annotators.end());
    for (int a : s.annotators) {
      std::vector<int> row;
      for (size_t q = 0; q < s.questions.size(); ++q) {
        auto it = b.cells.find({a, q});
        if (it == b.cells.end()) {
          throw ValidationError(fmt::format("missing rating for {} question '{}' by annotator {}",
                                            slot.ToString(), s.questions[q], a));
        }
        row.push_back(it->second);
      }
      s.ratings.push_back(std::move(row));
    }
    table.slots.push_back(std::move(s));
  }
  return table;
}

std::vector<RatingEntry> ParseRatings(std::istream& in) {
  std::vector<RatingEntry> out;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RatingEntry e;
      e.slot = {j.at("template_type").get<std::string>(), j.at("slot_type").get<std::string>()};
      const auto& qid = j.at("question_id");
      e.question_id = qid.is_string() ? qid.get<std::string>() : qid.dump();
      e.annotator = j.at("annotator").get<int>();
      e.rating = j.at("rating").get<int>();
      if (j.contains("text")) e.text = j.at("text").get<std::string>();
      if (j.contains("author")) e.author = j.at("author").get<int>();
      CheckRating(e.rating);
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(fmt::format("line {}: {}", line_number, e.what()));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("line {}: {}", line_number, e.what()));
    }
  }
  return out;
}

std::vector<RatingEntry> LoadRatings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open ratings " + path.string());
  return ParseRatings(in);
}

std::vector<int> RanksFromRatings(const std::vector<int>& ratings) {
  if (ratings.empty()) throw std::invalid_argument("no ratings to rank");
  for (int r : ratings) CheckRating(r);
  std::vector<int> ranks;
  ranks.reserve(ratings.size());
  for (int r : ratings) {
    int rank = 0;
    for (int other : ratings) rank += other <= r ? 1 : 0;
    ranks.push_back(rank);
  }
  return ranks;
}

std::vector<SlotScores> AggregateScores(const RatingTable& table) {
  std::vector<SlotScores> out;
  for (const auto& s : table.slots) {
    SlotScores scores;
    scores.slot = s.slot;
    for (size_t q = 0; q < s.questions.size(); ++q) {
      scores.questions.push_back({s.questions[q], s.texts[q], 0.0, {}});
    }
    for (const auto& row : s.ratings) {
      const auto ranks = RanksFromRatings(row);
      for (size_t q = 0; q < ranks.size(); ++q) {
        scores.questions[q].score += 1.0 / ranks[q];
        scores.questions[q].ranks.push_back(ranks[q]);
      }
    }
    out.push_back(std::move(scores));
  }
  return out;
}

std::string FormatScore(double score) { return fmt::format("{:.1f}", score); }

BestWorst SelectBestWorst(const std::vector<SlotScores>& scores,
                          const std::vector<std::string>& exclude) {
  const std::set<std::string> skip(exclude.begin(), exclude.end());
  BestWorst out;
  out.best = {prompts::PromptStyle::kCustom, 0, "Best", {}};
  out.worst = {prompts::PromptStyle::kCustom, 0, "Worst", {}};
  for (const auto& slot : scores) {
    int best = -1;
    int worst = -1;
    for (size_t q = 0; q < slot.questions.size(); ++q) {
      if (skip.contains(slot.questions[q].question_id)) continue;
      const int i = static_cast<int>(q);
      if (best < 0 || slot.questions[q].score > slot.questions[best].score) best = i;
      if (worst < 0 || slot.questions[q].score < slot.questions[worst].score) worst = i;
    }
    if (best < 0) continue;
    out.picks[slot.slot] = {best, worst};
    out.best.prompts[slot.slot] = slot.questions[best].text;
    out.worst.prompts[slot.slot] = slot.questions[worst].text;
  }
  return out;
}

std::map<int, double> AnnotatorScores(
    const std::vector<SlotScores>& scores,
    const std::map<std::pair<SlotKey, std::string>, int>& authorship) {
  std::map<int, std::pair<double, int>> sums;
  for (const auto& slot : scores) {
    for (const auto& q : slot.questions) {
      auto it = authorship.find({slot.slot, q.question_id});
      if (it == authorship.end()) {
        throw ValidationError(fmt::format("question '{}' of {} has no author", q.question_id,
                                          slot.slot.ToString()));
      }
      auto& [sum, count] = sums[it->second];
      sum += q.score;
      ++count;
    }
  }
  std::map<int, double> out;
  for (const auto& [author, sc] : sums) out[author] = sc.first / sc.second;
  return out;
}

std::map<std::pair<SlotKey, std::string>, int> AuthorshipFromTable(const RatingTable& table) {
  std::map<std::pair<SlotKey, std::string>, int> out;
  for (const auto& s : table.slots) {
    for (size_t q = 0; q < s.questions.size(); ++q) {
      if (s.authors[q]) out[{s.slot, s.questions[q]}] = *s.authors[q];
    }
  }
  return out;
}

double Pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson inputs differ in length");
  if (x.size() < 2) throw std::invalid_argument("pearson needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw ZeroVarianceError("pearson correlation undefined: zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double InterAnnotatorAgreement(const RatingTable& table) {
  std::set<int> annotators;
  for (const auto& s : table.slots) annotators.insert(s.annotators.begin(), s.annotators.end());
  const std::vector<int> ids(annotators.begin(), annotators.end());
  double sum = 0.0;
  int pairs = 0;
  for (size_t a = 0; a < ids.size(); ++a) {
    for (size_t b = a + 1; b < ids.size(); ++b) {
      std::vector<double> x, y;
      for (const auto& s : table.slots) {
        auto ia = std::find(s.annotators.begin(), s.annotators.end(), ids[a]);
        auto ib = std::find(s.annotators.begin(), s.annotators.end(), ids[b]);
        if (ia == s.annotators.end() || ib == s.annotators.end()) continue;
        const auto ra = RanksFromRatings(s.ratings[ia - s.annotators.begin()]);
        const auto rb = RanksFromRatings(s.ratings[ib - s.annotators.begin()]);
        for (size_t q = 0; q < ra.size(); ++q) {
          x.push_back(1.0 / ra[q]);
          y.push_back(1.0 / rb[q]);
        }
      }
      if (x.size() < 2) continue;
      try {
        sum += Pearson(x, y);
        ++pairs;
      } catch (const ZeroVarianceError&) {
      }
    }
  }
  if (pairs == 0) throw ZeroVarianceError("no annotator pair has a defined correlation");
  return sum / pairs;
}

SwapAnalysis PromptSwapAnalysis(
    const std::vector<std::pair<std::string, SlotF1Evaluator>>& models,
    const std::vector<SwapQuestion>& questions, const std::vector<SlotScores>& scores) {
  std::map<std::pair<SlotKey, std::string>, double> human;
  for (const auto& slot : scores) {
    for (const auto& q : slot.questions) human[{slot.slot, q.question_id}] = q.score;
  }
  SwapAnalysis out;
  std::vector<const SwapQuestion*> usable;
  for (const auto& q : questions) {
    if (human.contains({q.slot, q.question_id})) {
      usable.push_back(&q);
    } else {
      out.excluded.push_back(fmt::format("{}:{}", q.slot.ToString(), q.question_id));
    }
  }
  double sum = 0.0;
  int defined = 0;
  for (const auto& [name, evaluate] : models) {
    SwapModelResult result;
    result.model = name;
    std::vector<double> f1s, hs;
    for (const SwapQuestion* q : usable) {
      const double f1 = evaluate(q->slot, q->text);
      const double h = human.at({q->slot, q->question_id});
      result.pairs.push_back({q->slot, q->question_id, f1, h});
      f1s.push_back(f1);
      hs.push_back(h);
    }
    try {
      result.correlation = Pearson(f1s, hs);
      sum += *result.correlation;
      ++defined;
    } catch (const ZeroVarianceError&) {
      result.note = "undefined: zero variance";
    } catch (const std::invalid_argument&) {
      result.note = "undefined: fewer than two pairs";
    }
    out.models.push_back(std::move(result));
  }
  if (defined > 0) out.mean_correlation = sum / defined;
  return out;
}

void WriteScoresCsv(std::ostream& out, const std::vector<SlotScores>& scores) {
  out << "template_type,slot_type,question_id,text,score,display,ranks\n";
  for (const auto& slot : scores) {
    for (const auto& q : slot.questions) {
      std::string ranks;
      for (size_t i = 0; i < q.ranks.size(); ++i) {
        if (i > 0) ranks += ' ';
        ranks += std::to_string(q.ranks[i]);
      }
      out << CsvField(slot.slot.template_type) << ',' << CsvField(slot.slot.slot_type) << ','
          << CsvField(q.question_id) << ',' << CsvField(q.text) << ','
          << fmt::format("{:.6f}", q.score) << ',' << FormatScore(q.score) << ',' << ranks
          << '\n';
    }
  }
}

}  // namespace promptex::ratings
