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

// Exact-match span metrics with micro and macro aggregation, few-shot
// subsampling of training data, and breakdown tables.

#ifndef PROMPTEX_EVALUATION_H_
#define PROMPTEX_EVALUATION_H_

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "promptex/corpus.h"

namespace promptex::evaluation {

using corpus::SlotKey;
using corpus::Span;

struct Counts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  Counts& operator+=(const Counts& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Exact (start, end) matching; duplicates within either list count once.
Counts SpanCounts(const std::vector<Span>& gold, const std::vector<Span>& predicted);

// A ratio with a zero denominator is 1 when tp = fp = fn = 0 and 0 otherwise.
Metrics MicroMetrics(const Counts& counts);

// Unweighted mean of per-key metrics. Throws std::invalid_argument when
// `per_type` is empty.
Metrics MacroMetrics(const std::map<std::string, Counts>& per_type);

struct SlotPrediction {
  std::string doc_id;
  SlotKey slot;
  std::vector<Span> gold;
  std::vector<Span> predicted;
};

enum class MacroDomain {
  kPresent,      // Slot types with a gold or predicted span in the split.
  kAllOntology,  // Every ontology slot type; absent ones score 0.
};

struct MetricReport {
  Counts total;
  Metrics micro;
  Metrics macro;
  bool macro_defined = false;
  std::map<std::string, Counts> per_type;  // Keyed by slot type name.
  int examples = 0;
};

// `ontology` is required for MacroDomain::kAllOntology.
MetricReport Evaluate(const std::vector<SlotPrediction>& predictions,
                      MacroDomain domain = MacroDomain::kPresent,
                      const corpus::Ontology* ontology = nullptr);

void WriteReportCsv(std::ostream& out, const MetricReport& report);
std::string ReportToJson(const MetricReport& report);

inline constexpr int kNoCap = std::numeric_limits<int>::max();

// Per (template, slot), keeps at most `cap_pos` examples with gold spans and
// `cap_neg` without, chosen uniformly without replacement. Selection is per
// (instance, slot); instances left without slots are dropped. Order is
// preserved. Throws std::invalid_argument on negative caps.
corpus::DatasetSplit SubsampleFewshot(const corpus::DatasetSplit& split, int cap_pos,
                                      int cap_neg, std::uint64_t seed);

// Number of (instance, slot) examples with at least one gold span.
std::map<SlotKey, int> PositiveExampleCounts(const corpus::DatasetSplit& split);

struct BreakdownRow {
  std::string label;
  int key = 0;  // Bucket lower bound or gold answer count.
  int examples = 0;
  Counts counts;
  Metrics micro;
};

// Bucket lower bounds: 0, 1, 2, 4, 8, ...; a slot with training count c lands
// in the largest bound <= c. Empty buckets are omitted.
int FrequencyBucket(int count);
std::vector<BreakdownRow> BreakdownBySlotFrequency(
    const std::vector<SlotPrediction>& predictions,
    const std::map<SlotKey, int>& training_counts);

std::vector<BreakdownRow> BreakdownByAnswerCount(
    const std::vector<SlotPrediction>& predictions);

void WriteBreakdownCsv(std::ostream& out, const std::string& key_name,
                       const std::vector<BreakdownRow>& rows);

}  // namespace promptex::evaluation

#endif  // PROMPTEX_EVALUATION_H_
