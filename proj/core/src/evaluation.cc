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

#include "promptex/evaluation.h"

#include <algorithm>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace promptex::evaluation {
namespace {

double Ratio(std::int64_t num, std::int64_t den, bool vacuous) {
  if (den == 0) return vacuous ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::ordered_json MetricsJson(const Metrics& m) {
  nlohmann::ordered_json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  return j;
}

nlohmann::ordered_json CountsJson(const Counts& c) {
  nlohmann::ordered_json j;
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["fn"] = c.fn;
  return j;
}

std::string BucketLabel(int bound) {
  if (bound <= 1) return fmt::format("{}", bound);
  return fmt::format("{}-{}", bound, 2 * bound - 1);
}

}  // namespace

Counts SpanCounts(const std::vector<Span>& gold, const std::vector<Span>& predicted) {
  const std::set<Span> g(gold.begin(), gold.end());
  const std::set<Span> p(predicted.begin(), predicted.end());
  Counts c;
  for (const auto& span : p) {
    if (g.contains(span)) {
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = static_cast<std::int64_t>(g.size()) - c.tp;
  return c;
}

Metrics MicroMetrics(const Counts& counts) {
  const bool vacuous = counts.tp == 0 && counts.fp == 0 && counts.fn == 0;
  Metrics m;
  m.precision = Ratio(counts.tp, counts.tp + counts.fp, vacuous);
  m.recall = Ratio(counts.tp, counts.tp + counts.fn, vacuous);
  const double sum = m.precision + m.recall;
  m.f1 = sum > 0.0 ? 2.0 * m.precision * m.recall / sum : 0.0;
  return m;
}

Metrics MacroMetrics(const std::map<std::string, Counts>& per_type) {
  if (per_type.empty()) {
    throw std::invalid_argument("no slot types qualify for macro averaging");
  }
  Metrics sum;
  for (const auto& [type, counts] : per_type) {
    const Metrics m = MicroMetrics(counts);
    sum.precision += m.precision;
    sum.recall += m.recall;
    sum.f1 += m.f1;
  }
  const double n = static_cast<double>(per_type.size());
  return {sum.precision / n, sum.recall / n, sum.f1 / n};
}

MetricReport Evaluate(const std::vector<SlotPrediction>& predictions, MacroDomain domain,
                      const corpus::Ontology* ontology) {
  MetricReport report;
  for (const auto& p : predictions) {
    const Counts c = SpanCounts(p.gold, p.predicted);
    report.total += c;
    report.per_type[p.slot.slot_type] += c;
    ++report.examples;
  }
  report.micro = MicroMetrics(report.total);

  std::map<std::string, Counts> macro_domain;
  std::map<std::string, Metrics> zero_scored;
  if (domain == MacroDomain::kPresent) {
    for (const auto& [type, c] : report.per_type) {
      if (c.tp + c.fp + c.fn > 0) macro_domain[type] = c;
    }
  } else {
    if (ontology == nullptr) {
      throw std::invalid_argument("macro over all ontology types needs an ontology");
    }
    for (const auto& key : ontology->SlotKeys()) {
      auto it = report.per_type.find(key.slot_type);
      const Counts c = it == report.per_type.end() ? Counts{} : it->second;
      macro_domain[key.slot_type] = c;
    }
  }
  if (!macro_domain.empty()) {
    Metrics sum;
    for (const auto& [type, c] : macro_domain) {
      if (c.tp + c.fp + c.fn == 0) continue;  // Absent type: scores 0.
      const Metrics m = MicroMetrics(c);
      sum.precision += m.precision;
      sum.recall += m.recall;
      sum.f1 += m.f1;
    }
    const double n = static_cast<double>(macro_domain.size());
    report.macro = {sum.precision / n, sum.recall / n, sum.f1 / n};
    report.macro_defined = true;
  }
  return report;
}

void WriteReportCsv(std::ostream& out, const MetricReport& report) {
  out << "scope,slot_type,tp,fp,fn,precision,recall,f1\n";
  auto row = [&](const std::string& scope, const std::string& type, const Counts& c,
                 const Metrics& m, bool with_counts) {
    out << scope << ',' << type << ',';
    if (with_counts) {
      out << c.tp << ',' << c.fp << ',' << c.fn;
    } else {
      out << ",,";
    }
    out << fmt::format(",{:.6f},{:.6f},{:.6f}\n", m.precision, m.recall, m.f1);
  };
  row("micro", "", report.total, report.micro, true);
  if (report.macro_defined) row("macro", "", {}, report.macro, false);
  for (const auto& [type, c] : report.per_type) {
    row("type", type, c, MicroMetrics(c), true);
  }
}

std::string ReportToJson(const MetricReport& report) {
  nlohmann::ordered_json j;
  j["examples"] = report.examples;
  j["counts"] = CountsJson(report.total);
  j["micro"] = MetricsJson(report.micro);
  j["macro"] = report.macro_defined ? MetricsJson(report.macro) : nlohmann::ordered_json();
  nlohmann::ordered_json types = nlohmann::ordered_json::object();
  for (const auto& [type, c] : report.per_type) {
    nlohmann::ordered_json t = CountsJson(c);
    t["metrics"] = MetricsJson(MicroMetrics(c));
    types[type] = std::move(t);
  }
  j["per_type"] = std::move(types);
  return j.dump(2);
}

corpus::DatasetSplit SubsampleFewshot(const corpus::DatasetSplit& split, int cap_pos,
                                      int cap_neg, std::uint64_t seed) {
  if (cap_pos < 0 || cap_neg < 0) throw std::invalid_argument("caps must be >= 0");
  // (instance, slot) positions grouped by slot and polarity.
  std::map<std::pair<SlotKey, bool>, std::vector<std::pair<size_t, size_t>>> groups;
  for (size_t i = 0; i < split.instances.size(); ++i) {
    const auto& instance = split.instances[i];
    for (size_t s = 0; s < instance.slots.size(); ++s) {
      const SlotKey key{instance.template_type, instance.slots[s].slot_type};
      groups[{key, !instance.slots[s].gold.empty()}].push_back({i, s});
    }
  }
  std::mt19937_64 rng(seed);
  std::set<std::pair<size_t, size_t>> kept;
  for (auto& [group, members] : groups) {
    const size_t cap = static_cast<size_t>(group.second ? cap_pos : cap_neg);
    if (members.size() > cap) {
      std::shuffle(members.begin(), members.end(), rng);
      members.resize(cap);
    }
    kept.insert(members.begin(), members.end());
  }
  corpus::DatasetSplit out;
  out.name = split.name;
  for (size_t i = 0; i < split.instances.size(); ++i) {
    corpus::TemplateInstance instance = split.instances[i];
    instance.slots.clear();
    for (size_t s = 0; s < split.instances[i].slots.size(); ++s) {
      if (kept.contains({i, s})) instance.slots.push_back(split.instances[i].slots[s]);
    }
    if (!instance.slots.empty()) out.instances.push_back(std::move(instance));
  }
  return out;
}

std::map<SlotKey, int> PositiveExampleCounts(const corpus::DatasetSplit& split) {
  std::map<SlotKey, int> counts;
  for (const auto& instance : split.instances) {
    for (const auto& slot : instance.slots) {
      int& c = counts[{instance.template_type, slot.slot_type}];
      if (!slot.gold.empty()) ++c;
    }
  }
  return counts;
}

int FrequencyBucket(int count) {
  if (count <= 0) return 0;
  int bound = 1;
  while (bound <= count / 2) bound *= 2;
  return bound;
}

std::vector<BreakdownRow> BreakdownBySlotFrequency(
    const std::vector<SlotPrediction>& predictions,
    const std::map<SlotKey, int>& training_counts) {
  std::map<int, BreakdownRow> rows;
  for (const auto& p : predictions) {
    auto it = training_counts.find(p.slot);
    const int bucket = FrequencyBucket(it == training_counts.end() ? 0 : it->second);
    BreakdownRow& row = rows[bucket];
    row.key = bucket;
    row.counts += SpanCounts(p.gold, p.predicted);
    ++row.examples;
  }
  std::vector<BreakdownRow> out;
  for (auto& [bucket, row] : rows) {
    row.label = BucketLabel(bucket);
    row.micro = MicroMetrics(row.counts);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<BreakdownRow> BreakdownByAnswerCount(
    const std::vector<SlotPrediction>& predictions) {
  std::map<int, BreakdownRow> rows;
  for (const auto& p : predictions) {
    const int n = static_cast<int>(std::set<Span>(p.gold.begin(), p.gold.end()).size());
    BreakdownRow& row = rows[n];
    row.key = n;
    row.counts += SpanCounts(p.gold, p.predicted);
    ++row.examples;
  }
  std::vector<BreakdownRow> out;
  for (auto& [n, row] : rows) {
    row.label = fmt::format("{}", n);
    row.micro = MicroMetrics(row.counts);
    out.push_back(std::move(row));
  }
  return out;
}

void WriteBreakdownCsv(std::ostream& out, const std::string& key_name,
                       const std::vector<BreakdownRow>& rows) {
  out << key_name << ",examples,tp,fp,fn,precision,recall,f1\n";
  for (const auto& r : rows) {
    out << r.label << ',' << r.examples << ',' << r.counts.tp << ',' << r.counts.fp << ','
        << r.counts.fn
        << fmt::format(",{:.6f},{:.6f},{:.6f}\n", r.micro.precision, r.micro.recall,
                       r.micro.f1);
  }
}

}  // namespace promptex::evaluation
