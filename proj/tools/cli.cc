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

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "promptex/charts.h"
#include "promptex/corpus.h"
#include "promptex/encoder.h"
#include "promptex/errors.h"
#include "promptex/evaluation.h"
#include "promptex/model.h"
#include "promptex/prompts.h"
#include "promptex/ratings.h"
#include "promptex/training.h"
#include "promptex/tuning.h"

namespace promptex::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using corpus::SlotKey;

constexpr const char* kDefaultOutputDir = "promptex-out";

const std::set<std::string> kTopLevelKeys = {
    "seed",     "output_dir", "paths",     "generate",  "train",  "tune",
    "fewshot",  "eval",       "ratings",   "correlate", "series", "similarity"};

const std::set<std::string> kPathKeys = {"ontology", "train",     "dev",        "test",
                                         "corpus",   "questions", "prompts",    "ratings",
                                         "checkpoint", "embeddings", "subword_vocab"};

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("write failed for '{}'", path.string()));
}

template <class Writer>
void WriteWith(const fs::path& path, Writer&& writer) {
  std::ostringstream buffer;
  writer(buffer);
  WriteText(path, buffer.str());
}

void CheckKeys(const json& section, const std::string& name,
               const std::set<std::string>& allowed) {
  if (!section.is_object()) throw ValidationError(fmt::format("'{}' must be an object", name));
  for (const auto& [key, value] : section.items()) {
    if (!allowed.contains(key)) {
      throw ValidationError(fmt::format("unknown key '{}' in '{}'", key, name));
    }
  }
}

// Flag value when given, else the config entry, else the fallback.
template <class T>
T Pick(const std::optional<T>& flag, const json& section, const char* key, T fallback) {
  if (flag) return *flag;
  if (section.contains(key)) return section.at(key).get<T>();
  return fallback;
}

class RunConfig {
 public:
  RunConfig() : root_(json::object()) {}

  static RunConfig Load(const std::string& path) {
    RunConfig config;
    if (path.empty()) return config;
    try {
      config.root_ = json::parse(ReadText(path));
    } catch (const json::parse_error& e) {
      throw ValidationError(fmt::format("malformed config '{}': {}", path, e.what()));
    }
    CheckKeys(config.root_, "config", kTopLevelKeys);
    if (config.root_.contains("paths")) CheckKeys(config.root_["paths"], "paths", kPathKeys);
    config.base_ = fs::path(path).parent_path();
    return config;
  }

  json Section(const std::string& name) const {
    return root_.contains(name) ? root_.at(name) : json::object();
  }

  std::optional<fs::path> ConfiguredPath(const std::string& key) const {
    if (!root_.contains("paths") || !root_["paths"].contains(key)) return std::nullopt;
    fs::path p = root_["paths"][key].get<std::string>();
    if (p.is_relative() && !base_.empty()) p = base_ / p;
    return p;
  }

  std::optional<std::string> OutputDir() const {
    if (!root_.contains("output_dir")) return std::nullopt;
    fs::path p = root_["output_dir"].get<std::string>();
    if (p.is_relative() && !base_.empty()) p = base_ / p;
    return p.string();
  }

  std::optional<std::uint64_t> Seed() const {
    if (!root_.contains("seed")) return std::nullopt;
    return root_["seed"].get<std::uint64_t>();
  }

 private:
  json root_;
  fs::path base_;
};

struct Globals {
  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
};

class Context {
 public:
  Context(const Globals& globals, std::ostream& out)
      : globals_(globals), config_(RunConfig::Load(globals.config_path)), out_(out) {}

  std::ostream& out() { return out_; }
  const RunConfig& config() const { return config_; }

  fs::path OutputDir() const {
    if (globals_.output_dir) return *globals_.output_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
      return env;
    }
    if (auto dir = config_.OutputDir()) return *dir;
    return kDefaultOutputDir;
  }

  fs::path Output(const std::string& name) const { return OutputDir() / name; }

  std::uint64_t Seed() const {
    if (globals_.seed) return *globals_.seed;
    return config_.Seed().value_or(0);
  }

  fs::path Input(const std::optional<std::string>& flag, const std::string& key) const {
    std::optional<fs::path> path;
    if (flag) {
      path = *flag;
    } else {
      path = config_.ConfiguredPath(key);
    }
    if (!path) {
      throw ValidationError(fmt::format("missing input '{}': pass --{} or set paths.{}", key,
                                        key, key));
    }
    if (!fs::exists(*path)) {
      throw ValidationError(fmt::format("{} path does not exist: {}", key, path->string()));
    }
    return *path;
  }

  std::optional<fs::path> OptionalInput(const std::optional<std::string>& flag,
                                        const std::string& key) const {
    if (!flag && !config_.ConfiguredPath(key)) return std::nullopt;
    return Input(flag, key);
  }

  void Wrote(const fs::path& path) { out_ << "wrote " << path.string() << "\n"; }

 private:
  Globals globals_;
  RunConfig config_;
  std::ostream& out_;
};

// Prompt selection shared by the training-style commands.
struct PromptFlags {
  std::optional<std::string> prompts;
  std::optional<std::string> style;
  std::optional<std::string> questions;
};

void AddPromptFlags(CLI::App* cmd, PromptFlags& flags) {
  cmd->add_option("--prompts", flags.prompts, "Prompt set JSON file");
  cmd->add_option("--prompt-style", flags.style,
                  "name | description | special | expert | series-K");
  cmd->add_option("--questions", flags.questions, "Question bank JSON Lines file");
}

prompts::PromptSet ResolvePrompts(const Context& ctx, const PromptFlags& flags,
                                  const corpus::Ontology& ontology) {
  if (flags.prompts) {
    auto set = prompts::LoadPromptSet(ctx.Input(flags.prompts, "prompts"));
    set.CheckCovers(ontology);
    return set;
  }
  const std::string style = flags.style.value_or("name");
  if (style == "name") return prompts::MakeNamePrompts(ontology);
  if (style == "description") return prompts::MakeDescriptionPrompts(ontology);
  if (style == "special" || style == "special_tokens") {
    return prompts::MakeSpecialTokenPrompts(ontology);
  }
  const auto bank = prompts::LoadQuestionBank(ctx.Input(flags.questions, "questions"));
  if (style == "expert") return prompts::MakeExpertPrompts(bank, ontology);
  if (style.rfind("series-", 0) == 0) {
    int index = 0;
    try {
      index = std::stoi(style.substr(7));
    } catch (const std::exception&) {
      index = 0;
    }
    if (index < 1) throw ValidationError(fmt::format("bad series style '{}'", style));
    return prompts::AssignSeries(bank, index, &ontology).back();
  }
  throw ValidationError(fmt::format("unknown prompt style '{}'", style));
}

// Training configuration: config section, then --train-config, then flags.
struct TrainFlags {
  std::optional<std::string> train_config;
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::optional<int> batch_size;
  std::optional<int> patience;
};

void AddTrainFlags(CLI::App* cmd, TrainFlags& flags) {
  cmd->add_option("--train-config", flags.train_config, "Training config JSON file");
  cmd->add_option("--epochs", flags.epochs, "Maximum epochs");
  cmd->add_option("--lr", flags.learning_rate, "Learning rate");
  cmd->add_option("--batch-size", flags.batch_size, "Batch size");
  cmd->add_option("--patience", flags.patience, "Early-stopping patience");
}

training::TrainConfig ResolveTrainConfig(const Context& ctx, const TrainFlags& flags) {
  training::TrainConfig config;
  const json section = ctx.config().Section("train");
  if (!section.empty()) config = training::TrainConfigFromJson(section.dump(), config);
  if (flags.train_config) {
    config = training::TrainConfigFromJson(ReadText(*flags.train_config), config);
  }
  if (flags.epochs) config.max_epochs = *flags.epochs;
  if (flags.learning_rate) config.learning_rate = *flags.learning_rate;
  if (flags.batch_size) config.batch_size = *flags.batch_size;
  if (flags.patience) config.patience = std::min(*flags.patience, config.max_epochs);
  config.patience = std::min(config.patience, config.max_epochs);
  config.seed = ctx.Seed();
  config.Validate();
  return config;
}

struct SplitFlags {
  std::optional<std::string> ontology;
  std::optional<std::string> train;
  std::optional<std::string> dev;
  std::optional<std::string> test;
};

void AddSplitFlags(CLI::App* cmd, SplitFlags& flags, bool train, bool dev, bool test) {
  cmd->add_option("--ontology", flags.ontology, "Ontology JSON file");
  if (train) cmd->add_option("--train", flags.train, "Training split JSON Lines");
  if (dev) cmd->add_option("--dev", flags.dev, "Development split JSON Lines");
  if (test) cmd->add_option("--test", flags.test, "Test split JSON Lines");
}

corpus::DatasetSplit LoadSplit(const Context& ctx, const corpus::Ontology& ontology,
                               const std::optional<std::string>& flag, corpus::SplitName name) {
  const std::string key = corpus::SplitNameString(name);
  return corpus::LoadCorpus(ctx.Input(flag, key), ontology, name);
}

std::shared_ptr<const encoder::ExternalEmbeddings> LoadExternal(
    const std::optional<fs::path>& path, int hidden) {
  if (!path) return nullptr;
  return std::make_shared<const encoder::ExternalEmbeddings>(
      encoder::ExternalEmbeddings::Load(*path, hidden));
}

std::vector<int> ParseCaps(const std::string& text) {
  std::vector<int> caps;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (item == "inf" || item == "all") {
      caps.push_back(evaluation::kNoCap);
      continue;
    }
    try {
      size_t used = 0;
      const int cap = std::stoi(item, &used);
      if (used != item.size() || cap < 1) throw std::invalid_argument(item);
      caps.push_back(cap);
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("bad few-shot cap '{}'", item));
    }
  }
  if (caps.empty()) throw ValidationError("no few-shot caps given");
  return caps;
}

std::string BreakdownSvg(const std::string& title, const std::string& x_label,
                         const std::vector<evaluation::BreakdownRow>& rows) {
  charts::BarChart chart;
  chart.title = title;
  chart.x_label = x_label;
  chart.y_label = "micro F1";
  for (const auto& row : rows) {
    chart.labels.push_back(row.label);
    chart.values.push_back(row.micro.f1);
  }
  return charts::RenderSvg(chart);
}

// ---------------------------------------------------------------------------
// Commands.

struct GenerateFlags {
  std::optional<int> templates;
  std::optional<int> slots;
  std::optional<int> train_size;
  std::optional<int> dev_size;
  std::optional<int> test_size;
};

int RunGenerate(Context& ctx, const GenerateFlags& flags) {
  const json section = ctx.config().Section("generate");
  CheckKeys(section, "generate",
            {"vocab_size", "num_templates", "slots_per_template", "context_length",
             "min_multiplicity", "max_multiplicity", "nil_rate", "max_span_length",
             "distractors_per_instance", "random_negatives", "questions_per_slot",
             "train_instances", "dev_instances", "test_instances"});
  corpus::SyntheticConfig c;
  const std::optional<int> none;
  const std::optional<double> none_d;
  c.vocab_size = Pick(none, section, "vocab_size", c.vocab_size);
  c.num_templates = Pick(flags.templates, section, "num_templates", c.num_templates);
  c.slots_per_template = Pick(flags.slots, section, "slots_per_template", c.slots_per_template);
  c.context_length = Pick(none, section, "context_length", c.context_length);
  c.min_multiplicity = Pick(none, section, "min_multiplicity", c.min_multiplicity);
  c.max_multiplicity = Pick(none, section, "max_multiplicity", c.max_multiplicity);
  c.nil_rate = Pick(none_d, section, "nil_rate", c.nil_rate);
  c.max_span_length = Pick(none, section, "max_span_length", c.max_span_length);
  c.distractors_per_instance =
      Pick(none, section, "distractors_per_instance", c.distractors_per_instance);
  c.random_negatives = Pick(none, section, "random_negatives", c.random_negatives);
  c.questions_per_slot = Pick(none, section, "questions_per_slot", c.questions_per_slot);
  c.train_instances = Pick(flags.train_size, section, "train_instances", c.train_instances);
  c.dev_instances = Pick(flags.dev_size, section, "dev_instances", c.dev_instances);
  c.test_instances = Pick(flags.test_size, section, "test_instances", c.test_instances);

  const auto generated = corpus::GenerateSyntheticCorpus(c, ctx.Seed());
  const auto write_split = [&](const std::string& name, const corpus::DatasetSplit& split) {
    const auto path = ctx.Output(name);
    WriteWith(path, [&](std::ostream& o) { corpus::WriteCorpus(o, split); });
    ctx.Wrote(path);
  };
  const auto ontology_path = ctx.Output("ontology.json");
  WriteText(ontology_path, corpus::SerializeOntology(generated.ontology));
  ctx.Wrote(ontology_path);
  write_split("train.jsonl", generated.train);
  write_split("dev.jsonl", generated.dev);
  write_split("test.jsonl", generated.test);
  std::string bank;
  for (const auto& line : generated.question_bank_lines) bank += line + "\n";
  const auto bank_path = ctx.Output("questions.jsonl");
  WriteText(bank_path, bank);
  ctx.Wrote(bank_path);
  return kExitOk;
}

int RunValidate(Context& ctx, const std::optional<std::string>& ontology_flag,
                const std::optional<std::string>& corpus_flag, std::ostream& err) {
  const auto ontology = corpus::LoadOntology(ctx.Input(ontology_flag, "ontology"));
  const auto corpus_path = ctx.Input(corpus_flag, "corpus");
  std::ifstream in(corpus_path);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", corpus_path.string()));
  const auto lines = corpus::ParseCorpusLenient(in, ontology);

  ordered_json report;
  report["corpus"] = corpus_path.string();
  report["lines"] = lines.size();
  ordered_json violations = ordered_json::array();
  int count = 0;
  for (const auto& line : lines) {
    for (const auto& error : line.errors) {
      ctx.out() << fmt::format("line {}: {}\n", line.line_number, error);
      ordered_json v;
      v["line"] = line.line_number;
      v["message"] = error;
      violations.push_back(std::move(v));
      ++count;
    }
  }
  report["valid"] = count == 0;
  report["violations"] = std::move(violations);
  const auto path = ctx.Output("validation.json");
  WriteText(path, report.dump(2) + "\n");
  ctx.Wrote(path);
  if (count > 0) {
    ordered_json record;
    record["status"] = "error";
    record["code"] = kExitValidation;
    record["kind"] = "validation";
    record["command"] = "validate";
    record["message"] = fmt::format("{} violation(s) in {}", count, corpus_path.string());
    err << record.dump() << "\n";
    return kExitValidation;
  }
  ctx.out() << fmt::format("{}: {} instances, no violations\n", corpus_path.string(),
                           lines.size());
  return kExitOk;
}

int RunStats(Context& ctx, const SplitFlags& flags) {
  const auto ontology = corpus::LoadOntology(ctx.Input(flags.ontology, "ontology"));
  std::ostringstream csv;
  csv << "split,template_types,slot_types,template_instances,slot_instances,"
         "filled_slot_instances,gold_spans,candidate_spans\n";
  const std::pair<corpus::SplitName, const std::optional<std::string>*> splits[] = {
      {corpus::SplitName::kTrain, &flags.train},
      {corpus::SplitName::kDev, &flags.dev},
      {corpus::SplitName::kTest, &flags.test}};
  int found = 0;
  for (const auto& [name, flag] : splits) {
    const auto path = ctx.OptionalInput(*flag, corpus::SplitNameString(name));
    if (!path) continue;
    const auto split = corpus::LoadCorpus(*path, ontology, name);
    const auto s = corpus::ComputeCorpusStats(split);
    csv << fmt::format("{},{},{},{},{},{},{},{}\n", corpus::SplitNameString(name),
                       s.template_types, s.slot_types, s.template_instances, s.slot_instances,
                       s.filled_slot_instances, s.gold_spans, s.candidate_spans);
    ++found;
  }
  if (found == 0) throw ValidationError("stats needs at least one of --train, --dev, --test");
  const auto path = ctx.Output("stats.csv");
  WriteText(path, csv.str());
  ctx.out() << csv.str();
  ctx.Wrote(path);
  return kExitOk;
}

int RunSeries(Context& ctx, const std::optional<std::string>& ontology_flag,
              const std::optional<std::string>& questions_flag, std::optional<int> count) {
  const auto ontology = corpus::LoadOntology(ctx.Input(ontology_flag, "ontology"));
  const auto bank = prompts::LoadQuestionBank(ctx.Input(questions_flag, "questions"));
  const json section = ctx.config().Section("series");
  CheckKeys(section, "series", {"count"});
  int n = Pick(count, section, "count", 0);
  if (n == 0) {
    for (const auto& key : ontology.SlotKeys()) {
      n = std::max(n, static_cast<int>(bank.Sorted(key, false).size()));
    }
  }
  const auto write = [&](const std::string& name, const prompts::PromptSet& set) {
    const auto path = ctx.Output(name);
    WriteText(path, prompts::SerializePromptSet(set));
    ctx.Wrote(path);
  };
  const auto series = prompts::AssignSeries(bank, n, &ontology);
  for (const auto& set : series) write(fmt::format("series-{}.json", set.series_index), set);
  write("name.json", prompts::MakeNamePrompts(ontology));
  write("special_tokens.json", prompts::MakeSpecialTokenPrompts(ontology));
  const auto keys = ontology.SlotKeys();
  const bool described = std::all_of(keys.begin(), keys.end(), [&](const SlotKey& k) {
    return !ontology.FindSlot(k)->description.empty();
  });
  if (described) write("description.json", prompts::MakeDescriptionPrompts(ontology));
  const bool expert = std::all_of(keys.begin(), keys.end(), [&](const SlotKey& k) {
    auto it = bank.entries().find(k);
    if (it == bank.entries().end()) return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [](const prompts::Question& q) { return q.expert; });
  });
  if (expert) write("expert.json", prompts::MakeExpertPrompts(bank, ontology));
  return kExitOk;
}

struct SimilarityFlags {
  std::optional<std::string> questions;
  std::optional<std::string> embeddings;
  std::optional<std::string> subword_vocab;
  bool include_expert = false;
};

std::string MeanStdRow(const std::string& label, const prompts::MeanStd& m) {
  return fmt::format("{},{},{:.6f},{:.6f}\n", label, m.count, m.mean, m.std);
}

std::string LengthRow(const std::string& label, const prompts::LengthStats& s) {
  return fmt::format("{},{},{:.6f},{:.6f},{:.6f}\n", label, s.count, s.mean, s.std, s.median);
}

int RunSimilarity(Context& ctx, const SimilarityFlags& flags) {
  const auto bank = prompts::LoadQuestionBank(ctx.Input(flags.questions, "questions"));
  std::unique_ptr<prompts::Embedder> embedder;
  if (const auto path = ctx.OptionalInput(flags.embeddings, "embeddings")) {
    embedder = std::make_unique<prompts::ExternalEmbedder>(prompts::ExternalEmbedder::Load(*path));
  } else {
    embedder = std::make_unique<prompts::HashedBagOfWordsEmbedder>();
  }
  const auto stats = prompts::PairwiseSimilarityStats(bank, *embedder, flags.include_expert);
  std::string csv = "slot,pairs_from,mean_cosine,std_cosine\n";
  for (const auto& [slot, m] : stats.per_slot) csv += MeanStdRow(slot.ToString(), m);
  csv += MeanStdRow("pooled", stats.pooled);
  const auto sim_path = ctx.Output("similarity.csv");
  WriteText(sim_path, csv);
  ctx.Wrote(sim_path);

  const auto lengths = prompts::QuestionLengthStats(bank, true);
  std::string length_csv = "group,count,mean,std,median\n";
  length_csv += LengthRow("all", lengths.all);
  if (lengths.non_expert) length_csv += LengthRow("non_expert", *lengths.non_expert);
  if (lengths.expert) length_csv += LengthRow("expert", *lengths.expert);
  const auto len_path = ctx.Output("lengths.csv");
  WriteText(len_path, length_csv);
  ctx.Wrote(len_path);

  if (const auto path = ctx.OptionalInput(flags.subword_vocab, "subword_vocab")) {
    std::set<std::string> vocabulary;
    std::istringstream lines(ReadText(*path));
    std::string line;
    while (std::getline(lines, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) vocabulary.insert(line);
    }
    const prompts::SubwordSegmenter segmenter(std::move(vocabulary));
    std::string frag = "slot,annotator,expert,word,pieces,segments\n";
    for (const auto& [slot, questions] : bank.entries()) {
      for (const auto& q : bank.Sorted(slot, true)) {
        for (const auto& f : prompts::FragmentationReport(q.text, segmenter)) {
          std::string joined;
          for (const auto& piece : f.pieces) joined += (joined.empty() ? "" : " ") + piece;
          frag += fmt::format("{},{},{},{},{},{}\n", slot.ToString(), q.annotator,
                              q.expert ? 1 : 0, f.word, f.pieces.size(), joined);
        }
      }
    }
    const auto frag_path = ctx.Output("fragmentation.csv");
    WriteText(frag_path, frag);
    ctx.Wrote(frag_path);
  }
  return kExitOk;
}

int RunTrain(Context& ctx, const SplitFlags& splits, const PromptFlags& prompt_flags,
             const TrainFlags& train_flags, const std::optional<std::string>& embeddings) {
  const auto ontology = corpus::LoadOntology(ctx.Input(splits.ontology, "ontology"));
  const auto train = LoadSplit(ctx, ontology, splits.train, corpus::SplitName::kTrain);
  const auto dev = LoadSplit(ctx, ontology, splits.dev, corpus::SplitName::kDev);
  const auto prompt_set = ResolvePrompts(ctx, prompt_flags, ontology);
  const auto config = ResolveTrainConfig(ctx, train_flags);

  training::TrainOptions options;
  options.external = LoadExternal(ctx.OptionalInput(embeddings, "embeddings"),
                                  config.encoder.hidden);
  options.on_epoch = [&ctx](const training::EpochLog& e) {
    ctx.out() << fmt::format("epoch {:>3}  loss {:.6f}  dev micro-F1 {:.4f}  lr {:.3g}\n",
                             e.epoch, e.train_loss, e.dev_micro_f1, e.learning_rate);
  };
  const auto result = training::Train(config, train, dev, prompt_set, ontology, options);

  const auto checkpoint = ctx.Output("checkpoint.json");
  fs::create_directories(ctx.OutputDir());
  result.model->Save(checkpoint);
  ctx.Wrote(checkpoint);
  const auto log_path = ctx.Output("training_log.csv");
  WriteWith(log_path, [&](std::ostream& o) { training::WriteTrainingLog(o, config, result.log); });
  ctx.Wrote(log_path);
  const auto config_path = ctx.Output("train_config.json");
  WriteText(config_path, training::TrainConfigToJson(config) + "\n");
  ctx.Wrote(config_path);
  ctx.out() << fmt::format("best epoch {} with dev micro-F1 {:.4f}\n", result.best_epoch,
                           result.best_dev_micro_f1);
  return kExitOk;
}

struct EvalFlags {
  std::optional<std::string> checkpoint;
  std::optional<std::string> embeddings;
  bool macro_all = false;
};

int RunEval(Context& ctx, const SplitFlags& splits, const PromptFlags& prompt_flags,
            const EvalFlags& flags) {
  const auto ontology = corpus::LoadOntology(ctx.Input(splits.ontology, "ontology"));
  const auto test = LoadSplit(ctx, ontology, splits.test, corpus::SplitName::kTest);
  auto model = model::Model::Load(ctx.Input(flags.checkpoint, "checkpoint"));
  if (auto external = LoadExternal(ctx.OptionalInput(flags.embeddings, "embeddings"),
                                   model->config().encoder.hidden)) {
    model->UseExternalEmbeddings(std::move(external));
  }
  if (prompt_flags.prompts || prompt_flags.style) {
    model->set_prompts(ResolvePrompts(ctx, prompt_flags, ontology));
  }
  const auto examples = model::MakeExamples(test, model->prompts());
  std::vector<ranker::ScoreSheet> sheets;
  const auto predictions = training::PredictExamples(*model, examples, &sheets);
  const auto report = evaluation::Evaluate(
      predictions,
      flags.macro_all ? evaluation::MacroDomain::kAllOntology : evaluation::MacroDomain::kPresent,
      &ontology);

  const auto json_path = ctx.Output("metrics.json");
  WriteText(json_path, evaluation::ReportToJson(report) + "\n");
  ctx.Wrote(json_path);
  const auto csv_path = ctx.Output("metrics.csv");
  WriteWith(csv_path, [&](std::ostream& o) { evaluation::WriteReportCsv(o, report); });
  ctx.Wrote(csv_path);
  const auto pred_path = ctx.Output("predictions.jsonl");
  WriteWith(pred_path, [&](std::ostream& o) { training::WritePredictions(o, examples, sheets); });
  ctx.Wrote(pred_path);

  const auto by_answers = evaluation::BreakdownByAnswerCount(predictions);
  WriteWith(ctx.Output("breakdown_answers.csv"), [&](std::ostream& o) {
    evaluation::WriteBreakdownCsv(o, "gold_answers", by_answers);
  });
  WriteText(ctx.Output("breakdown_answers.svg"),
            BreakdownSvg("F1 by number of gold answers", "gold answers", by_answers));
  ctx.Wrote(ctx.Output("breakdown_answers.csv"));

  if (const auto train_path = ctx.OptionalInput(splits.train, "train")) {
    const auto train = corpus::LoadCorpus(*train_path, ontology, corpus::SplitName::kTrain);
    const auto by_frequency = evaluation::BreakdownBySlotFrequency(
        predictions, evaluation::PositiveExampleCounts(train));
    WriteWith(ctx.Output("breakdown_frequency.csv"), [&](std::ostream& o) {
      evaluation::WriteBreakdownCsv(o, "training_examples", by_frequency);
    });
    WriteText(ctx.Output("breakdown_frequency.svg"),
              BreakdownSvg("F1 by slot training frequency", "positive training examples",
                           by_frequency));
    ctx.Wrote(ctx.Output("breakdown_frequency.csv"));
  }
  ctx.out() << fmt::format("micro P {:.4f} R {:.4f} F1 {:.4f}", report.micro.precision,
                           report.micro.recall, report.micro.f1);
  if (report.macro_defined) ctx.out() << fmt::format("  macro F1 {:.4f}", report.macro.f1);
  ctx.out() << "\n";
  return kExitOk;
}

struct TuneFlags {
  std::optional<int> trials;
  std::optional<int> seeds;
  std::optional<int> final_seeds;
  std::optional<int> jobs;
  std::optional<std::string> space;
};

int RunTune(Context& ctx, const SplitFlags& splits, const PromptFlags& prompt_flags,
            const TrainFlags& train_flags, const TuneFlags& flags) {
  const auto ontology = corpus::LoadOntology(ctx.Input(splits.ontology, "ontology"));
  const auto train = LoadSplit(ctx, ontology, splits.train, corpus::SplitName::kTrain);
  const auto dev = LoadSplit(ctx, ontology, splits.dev, corpus::SplitName::kDev);
  const auto prompt_set = ResolvePrompts(ctx, prompt_flags, ontology);
  const auto base = ResolveTrainConfig(ctx, train_flags);

  const json section = ctx.config().Section("tune");
  CheckKeys(section, "tune", {"trials", "seeds_per_trial", "final_seeds", "jobs", "space"});
  tuning::SearchSpace space;
  if (section.contains("space")) space = tuning::SearchSpaceFromJson(section["space"].dump());
  if (flags.space) space = tuning::SearchSpaceFromJson(ReadText(*flags.space), space);
  space.Validate();

  tuning::StudyOptions options;
  options.trials = Pick(flags.trials, section, "trials", options.trials);
  options.seeds_per_trial = Pick(flags.seeds, section, "seeds_per_trial", options.seeds_per_trial);
  options.jobs = Pick(flags.jobs, section, "jobs", options.jobs);
  options.seed = ctx.Seed();
  const int final_seeds = Pick(flags.final_seeds, section, "final_seeds", 5);

  const auto objective = tuning::TrainingObjective(train, dev, prompt_set, ontology);
  const auto study = tuning::RunStudy(space, base, objective, options);
  for (const auto& trial : study.trials) {
    ctx.out() << fmt::format("trial {:>2}  mean dev micro-F1 {:.4f}{}\n", trial.index,
                             trial.mean, trial.failed ? "  (diverged)" : "");
  }
  const auto study_path = ctx.Output("study.json");
  WriteText(study_path, tuning::StudyToJson(study) + "\n");
  ctx.Wrote(study_path);
  const auto best_path = ctx.Output("best_config.json");
  WriteText(best_path, training::TrainConfigToJson(study.best().config) + "\n");
  ctx.Wrote(best_path);
  ctx.out() << fmt::format("best trial {} (mean dev micro-F1 {:.4f})\n", study.best_index,
                           study.best().mean);

  if (final_seeds > 0) {
    const auto test = LoadSplit(ctx, ontology, splits.test, corpus::SplitName::kTest);
    const auto runner = tuning::TrainAndTest(dev, test, prompt_set, ontology);
    const auto report =
        tuning::MakeFinalReport(study.best().config, train, runner, final_seeds, options.seed);
    const auto csv_path = ctx.Output("final_report.csv");
    WriteWith(csv_path, [&](std::ostream& o) { tuning::WriteFinalReportCsv(o, report); });
    ctx.Wrote(csv_path);
    ordered_json j;
    j["seeds"] = report.seeds;
    for (const auto& [name, summary] : report.metrics) {
      j["metrics"][name]["mean"] = summary.mean;
      j["metrics"][name]["standard_error"] = summary.standard_error;
      j["metrics"][name]["values"] = summary.values;
    }
    const auto json_path = ctx.Output("final_report.json");
    WriteText(json_path, j.dump(2) + "\n");
    ctx.Wrote(json_path);
    const auto& micro = report.metrics.at("micro_f1");
    ctx.out() << fmt::format("test micro-F1 {:.4f} +/- {:.4f} over {} seeds\n", micro.mean,
                             micro.standard_error, final_seeds);
  }
  return kExitOk;
}

int RunFewshot(Context& ctx, const SplitFlags& splits, const PromptFlags& prompt_flags,
               const TrainFlags& train_flags, const std::optional<std::string>& caps_flag,
               const std::optional<int>& seeds_flag) {
  const auto ontology = corpus::LoadOntology(ctx.Input(splits.ontology, "ontology"));
  const auto train = LoadSplit(ctx, ontology, splits.train, corpus::SplitName::kTrain);
  const auto dev = LoadSplit(ctx, ontology, splits.dev, corpus::SplitName::kDev);
  const auto test = LoadSplit(ctx, ontology, splits.test, corpus::SplitName::kTest);
  const auto prompt_set = ResolvePrompts(ctx, prompt_flags, ontology);
  const auto config = ResolveTrainConfig(ctx, train_flags);

  const json section = ctx.config().Section("fewshot");
  CheckKeys(section, "fewshot", {"caps", "seeds"});
  const auto caps =
      ParseCaps(Pick(caps_flag, section, "caps", std::string("1,2,4,8,inf")));
  const int seeds = Pick(seeds_flag, section, "seeds", 3);

  const auto runner = tuning::TrainAndTest(dev, test, prompt_set, ontology);
  const auto points = tuning::FewshotCurve(config, train, caps, runner, seeds, ctx.Seed());
  for (const auto& p : points) {
    ctx.out() << fmt::format("cap {:>4}  examples {:>5}  micro-F1 {:.4f} [{:.4f}, {:.4f}]\n",
                             p.label, p.train_examples, p.mean, p.min, p.max);
  }
  const auto csv_path = ctx.Output("fewshot.csv");
  WriteWith(csv_path, [&](std::ostream& o) { tuning::WriteFewshotCsv(o, points); });
  ctx.Wrote(csv_path);
  const auto svg_path = ctx.Output("fewshot.svg");
  WriteText(svg_path, tuning::FewshotSvg(points));
  ctx.Wrote(svg_path);
  return kExitOk;
}

int RunRatings(Context& ctx, const std::optional<std::string>& ratings_flag,
               std::vector<std::string> exclude) {
  const json section = ctx.config().Section("ratings");
  CheckKeys(section, "ratings", {"exclude"});
  if (exclude.empty() && section.contains("exclude")) {
    exclude = section["exclude"].get<std::vector<std::string>>();
  }
  const auto table = ratings::BuildRatingTable(
      ratings::LoadRatings(ctx.Input(ratings_flag, "ratings")));
  const auto scores = ratings::AggregateScores(table);

  const auto scores_path = ctx.Output("scores.csv");
  WriteWith(scores_path, [&](std::ostream& o) { ratings::WriteScoresCsv(o, scores); });
  ctx.Wrote(scores_path);

  const auto picks = ratings::SelectBestWorst(scores, exclude);
  WriteText(ctx.Output("best_prompts.json"), prompts::SerializePromptSet(picks.best));
  ctx.Wrote(ctx.Output("best_prompts.json"));
  WriteText(ctx.Output("worst_prompts.json"), prompts::SerializePromptSet(picks.worst));
  ctx.Wrote(ctx.Output("worst_prompts.json"));

  const bool authored = std::all_of(table.slots.begin(), table.slots.end(), [](const auto& s) {
    return std::all_of(s.authors.begin(), s.authors.end(),
                       [](const std::optional<int>& a) { return a.has_value(); });
  });
  if (authored) {
    const auto per_annotator =
        ratings::AnnotatorScores(scores, ratings::AuthorshipFromTable(table));
    std::string csv = "annotator,score\n";
    for (const auto& [annotator, score] : per_annotator) {
      csv += fmt::format("{},{:.6f}\n", annotator, score);
    }
    WriteText(ctx.Output("annotators.csv"), csv);
    ctx.Wrote(ctx.Output("annotators.csv"));
  } else {
    ctx.out() << "question authors missing; annotators.csv skipped\n";
  }

  ordered_json agreement;
  try {
    agreement["mean_pairwise_pearson"] = ratings::InterAnnotatorAgreement(table);
  } catch (const ZeroVarianceError& e) {
    agreement["mean_pairwise_pearson"] = nullptr;
    agreement["note"] = e.what();
  }
  WriteText(ctx.Output("agreement.json"), agreement.dump(2) + "\n");
  ctx.Wrote(ctx.Output("agreement.json"));

  for (const auto& slot : scores) {
    for (const auto& q : slot.questions) {
      ctx.out() << fmt::format("{}  {:<6} {}  {}\n", slot.slot.ToString(), q.question_id,
                               ratings::FormatScore(q.score), q.text);
    }
  }
  return kExitOk;
}

struct CorrelateFlags {
  std::optional<std::string> ratings;
  std::vector<std::string> checkpoints;
  std::optional<std::string> f1_scope;
};

int RunCorrelate(Context& ctx, const SplitFlags& splits, const CorrelateFlags& flags) {
  const json section = ctx.config().Section("correlate");
  CheckKeys(section, "correlate", {"checkpoints", "f1_scope"});
  const std::string scope = Pick(flags.f1_scope, section, "f1_scope", std::string("slot"));
  if (scope != "slot" && scope != "pooled") {
    throw ValidationError(fmt::format("f1 scope must be 'slot' or 'pooled', got '{}'", scope));
  }
  std::vector<std::string> checkpoints = flags.checkpoints;
  if (checkpoints.empty() && section.contains("checkpoints")) {
    checkpoints = section["checkpoints"].get<std::vector<std::string>>();
  }
  if (checkpoints.empty()) {
    if (const auto p = ctx.config().ConfiguredPath("checkpoint")) checkpoints.push_back(p->string());
  }
  if (checkpoints.empty()) throw ValidationError("correlate needs at least one --checkpoint");

  const auto ontology = corpus::LoadOntology(ctx.Input(splits.ontology, "ontology"));
  const auto test = LoadSplit(ctx, ontology, splits.test, corpus::SplitName::kTest);
  const auto table =
      ratings::BuildRatingTable(ratings::LoadRatings(ctx.Input(flags.ratings, "ratings")));
  const auto scores = ratings::AggregateScores(table);
  std::vector<ratings::SwapQuestion> questions;
  for (const auto& slot : table.slots) {
    for (size_t q = 0; q < slot.questions.size(); ++q) {
      questions.push_back({slot.slot, slot.questions[q], slot.texts[q]});
    }
  }

  std::vector<std::unique_ptr<model::Model>> models;
  std::vector<std::pair<std::string, ratings::SlotF1Evaluator>> evaluators;
  for (const auto& path : checkpoints) {
    if (!fs::exists(path)) throw ValidationError("checkpoint path does not exist: " + path);
    models.push_back(model::Model::Load(path));
    model::Model* m = models.back().get();
    evaluators.emplace_back(path, [m, &test, scope](const SlotKey& slot,
                                                    const std::string& text) {
      prompts::PromptSet swapped = m->prompts();
      swapped.prompts[slot] = text;
      auto examples = model::MakeExamples(test, swapped);
      if (scope == "slot") {
        std::erase_if(examples, [&](const model::Example& e) { return e.slot != slot; });
      }
      return evaluation::Evaluate(training::PredictExamples(*m, examples)).micro.f1;
    });
  }
  const auto analysis = ratings::PromptSwapAnalysis(evaluators, questions, scores);

  std::string csv = "model,slot,question_id,f1,human_score\n";
  ordered_json j;
  j["f1_scope"] = scope;
  j["models"] = ordered_json::array();
  for (const auto& result : analysis.models) {
    for (const auto& pair : result.pairs) {
      csv += fmt::format("{},{},{},{:.6f},{:.6f}\n", result.model, pair.slot.ToString(),
                         pair.question_id, pair.f1, pair.human_score);
    }
    ordered_json m;
    m["model"] = result.model;
    m["pairs"] = result.pairs.size();
    m["correlation"] = result.correlation ? ordered_json(*result.correlation) : ordered_json();
    m["note"] = result.note;
    j["models"].push_back(std::move(m));
    ctx.out() << fmt::format(
        "{}: {}\n", result.model,
        result.correlation ? fmt::format("{:.4f}", *result.correlation) : result.note);
  }
  j["mean_correlation"] =
      analysis.mean_correlation ? ordered_json(*analysis.mean_correlation) : ordered_json();
  j["excluded"] = analysis.excluded;
  WriteText(ctx.Output("correlation.csv"), csv);
  ctx.Wrote(ctx.Output("correlation.csv"));
  WriteText(ctx.Output("correlation.json"), j.dump(2) + "\n");
  ctx.Wrote(ctx.Output("correlation.json"));
  return kExitOk;
}

int RunReport(Context& ctx, const std::vector<std::string>& entries) {
  if (entries.empty()) throw ValidationError("report needs at least one --metrics label=path");
  std::string csv =
      "label,micro_precision,micro_recall,micro_f1,macro_precision,macro_recall,macro_f1\n";
  charts::BarChart chart;
  chart.title = "Micro F1 by run";
  chart.x_label = "run";
  chart.y_label = "micro F1";
  for (const auto& entry : entries) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == entry.size()) {
      throw ValidationError(fmt::format("expected label=path, got '{}'", entry));
    }
    const std::string label = entry.substr(0, eq);
    const fs::path path = entry.substr(eq + 1);
    json metrics;
    try {
      metrics = json::parse(ReadText(path));
    } catch (const json::parse_error& e) {
      throw ValidationError(fmt::format("malformed metrics '{}': {}", path.string(), e.what()));
    }
    const auto& micro = metrics.at("micro");
    const auto& macro = metrics.at("macro");
    const auto field = [](const json& j, const char* key) {
      return j.is_null() ? std::string() : fmt::format("{:.6f}", j.at(key).get<double>());
    };
    csv += fmt::format("{},{},{},{},{},{},{}\n", label, field(micro, "precision"),
                       field(micro, "recall"), field(micro, "f1"), field(macro, "precision"),
                       field(macro, "recall"), field(macro, "f1"));
    chart.labels.push_back(label);
    chart.values.push_back(micro.at("f1").get<double>());
  }
  WriteText(ctx.Output("comparison.csv"), csv);
  ctx.Wrote(ctx.Output("comparison.csv"));
  WriteText(ctx.Output("comparison.svg"), charts::RenderSvg(chart));
  ctx.Wrote(ctx.Output("comparison.svg"));
  return kExitOk;
}

void ErrorRecord(std::ostream& err, int code, const std::string& kind,
                 const std::string& command, const std::string& message) {
  ordered_json record;
  record["status"] = "error";
  record["code"] = code;
  record["kind"] = kind;
  record["command"] = command;
  record["message"] = message;
  err << record.dump() << "\n";
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prompt-conditioned template extraction by span ranking", "promptex"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals globals;
  app.add_option("--config", globals.config_path, "Run configuration JSON file");
  app.add_option("--output-dir", globals.output_dir, "Directory for emitted artifacts");
  app.add_option("--seed", globals.seed, "Global seed");

  std::function<int(Context&)> action;
  std::string command;

  GenerateFlags generate_flags;
  auto* generate = app.add_subcommand("generate", "Write a synthetic corpus and question bank");
  generate->add_option("--templates", generate_flags.templates, "Template types");
  generate->add_option("--slots", generate_flags.slots, "Slots per template");
  generate->add_option("--train-size", generate_flags.train_size, "Training instances");
  generate->add_option("--dev-size", generate_flags.dev_size, "Development instances");
  generate->add_option("--test-size", generate_flags.test_size, "Test instances");
  generate->callback([&] { action = [&](Context& c) { return RunGenerate(c, generate_flags); }; });

  std::optional<std::string> validate_ontology, validate_corpus;
  auto* validate = app.add_subcommand("validate", "Check a corpus file against an ontology");
  validate->add_option("--ontology", validate_ontology, "Ontology JSON file");
  validate->add_option("--corpus", validate_corpus, "Corpus JSON Lines file");
  validate->callback([&] {
    action = [&](Context& c) { return RunValidate(c, validate_ontology, validate_corpus, err); };
  });

  SplitFlags stats_splits;
  auto* stats = app.add_subcommand("stats", "Corpus statistics per split");
  AddSplitFlags(stats, stats_splits, true, true, true);
  stats->callback([&] { action = [&](Context& c) { return RunStats(c, stats_splits); }; });

  std::optional<std::string> series_ontology, series_questions;
  std::optional<int> series_count;
  auto* series = app.add_subcommand("series", "Build prompt sets from a question bank");
  series->add_option("--ontology", series_ontology, "Ontology JSON file");
  series->add_option("--questions", series_questions, "Question bank JSON Lines file");
  series->add_option("--count", series_count, "Number of series (default: largest slot bank)");
  series->callback([&] {
    action = [&](Context& c) {
      return RunSeries(c, series_ontology, series_questions, series_count);
    };
  });

  SimilarityFlags similarity_flags;
  auto* similarity = app.add_subcommand("similarity", "Question similarity and length reports");
  similarity->add_option("--questions", similarity_flags.questions, "Question bank file");
  similarity->add_option("--embeddings", similarity_flags.embeddings,
                         "Sentence embeddings JSON Lines file");
  similarity->add_option("--subword-vocab", similarity_flags.subword_vocab,
                         "Subword vocabulary, one piece per line");
  similarity->add_flag("--include-expert", similarity_flags.include_expert,
                       "Include expert questions in similarity");
  similarity->callback(
      [&] { action = [&](Context& c) { return RunSimilarity(c, similarity_flags); }; });

  SplitFlags train_splits;
  PromptFlags train_prompts;
  TrainFlags train_flags;
  std::optional<std::string> train_embeddings;
  auto* train = app.add_subcommand("train", "Train a span ranker");
  AddSplitFlags(train, train_splits, true, true, false);
  AddPromptFlags(train, train_prompts);
  AddTrainFlags(train, train_flags);
  train->add_option("--embeddings", train_embeddings, "Pre-computed token vectors");
  train->callback([&] {
    action = [&](Context& c) {
      return RunTrain(c, train_splits, train_prompts, train_flags, train_embeddings);
    };
  });

  SplitFlags eval_splits;
  PromptFlags eval_prompts;
  EvalFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a test split");
  AddSplitFlags(eval, eval_splits, true, false, true);
  AddPromptFlags(eval, eval_prompts);
  eval->add_option("--checkpoint", eval_flags.checkpoint, "Model checkpoint");
  eval->add_option("--embeddings", eval_flags.embeddings, "Pre-computed token vectors");
  eval->add_flag("--macro-all", eval_flags.macro_all,
                 "Macro-average over every ontology slot type");
  eval->callback([&] {
    action = [&](Context& c) { return RunEval(c, eval_splits, eval_prompts, eval_flags); };
  });

  SplitFlags tune_splits;
  PromptFlags tune_prompts;
  TrainFlags tune_train;
  TuneFlags tune_flags;
  auto* tune = app.add_subcommand("tune", "Random-search study and final report");
  AddSplitFlags(tune, tune_splits, true, true, true);
  AddPromptFlags(tune, tune_prompts);
  AddTrainFlags(tune, tune_train);
  tune->add_option("--trials", tune_flags.trials, "Trials");
  tune->add_option("--seeds", tune_flags.seeds, "Seeds per trial");
  tune->add_option("--final-seeds", tune_flags.final_seeds, "Seeds for the final report");
  tune->add_option("--jobs", tune_flags.jobs, "Concurrent trials");
  tune->add_option("--space", tune_flags.space, "Search space JSON overrides");
  tune->callback([&] {
    action = [&](Context& c) {
      return RunTune(c, tune_splits, tune_prompts, tune_train, tune_flags);
    };
  });

  SplitFlags fewshot_splits;
  PromptFlags fewshot_prompts;
  TrainFlags fewshot_train;
  std::optional<std::string> fewshot_caps;
  std::optional<int> fewshot_seeds;
  auto* fewshot = app.add_subcommand("fewshot", "Learning curve over per-slot example caps");
  AddSplitFlags(fewshot, fewshot_splits, true, true, true);
  AddPromptFlags(fewshot, fewshot_prompts);
  AddTrainFlags(fewshot, fewshot_train);
  fewshot->add_option("--caps", fewshot_caps, "Comma-separated caps, 'inf' for none");
  fewshot->add_option("--seeds", fewshot_seeds, "Runs per cap");
  fewshot->callback([&] {
    action = [&](Context& c) {
      return RunFewshot(c, fewshot_splits, fewshot_prompts, fewshot_train, fewshot_caps,
                        fewshot_seeds);
    };
  });

  std::optional<std::string> ratings_file;
  std::vector<std::string> ratings_exclude;
  auto* ratings_cmd = app.add_subcommand("ratings", "Aggregate human question ratings");
  ratings_cmd->add_option("--ratings", ratings_file, "Ratings JSON Lines file");
  ratings_cmd->add_option("--exclude", ratings_exclude,
                          "Question ids left out of best/worst selection");
  ratings_cmd->callback([&] {
    action = [&](Context& c) { return RunRatings(c, ratings_file, ratings_exclude); };
  });

  SplitFlags correlate_splits;
  CorrelateFlags correlate_flags;
  auto* correlate = app.add_subcommand("correlate", "Correlate swapped-prompt F1 with ratings");
  AddSplitFlags(correlate, correlate_splits, false, false, true);
  correlate->add_option("--ratings", correlate_flags.ratings, "Ratings JSON Lines file");
  correlate->add_option("--checkpoint", correlate_flags.checkpoints, "Model checkpoint(s)");
  correlate->add_option("--f1-scope", correlate_flags.f1_scope, "slot | pooled");
  correlate->callback([&] {
    action = [&](Context& c) { return RunCorrelate(c, correlate_splits, correlate_flags); };
  });

  std::vector<std::string> report_entries;
  auto* report = app.add_subcommand("report", "Compare metric reports");
  report->add_option("--metrics", report_entries, "label=path to a metrics.json");
  report->callback([&] { action = [&](Context& c) { return RunReport(c, report_entries); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    ErrorRecord(err, kExitUsage, "usage", "", e.what());
    return kExitUsage;
  }
  command = app.get_subcommands().front()->get_name();

  try {
    Context context(globals, out);
    return action(context);
  } catch (const ValidationError& e) {
    ErrorRecord(err, kExitValidation, "validation", command, e.what());
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    ErrorRecord(err, kExitValidation, "validation", command, e.what());
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    ErrorRecord(err, kExitValidation, "invalid_argument", command, e.what());
    return kExitValidation;
  } catch (const std::out_of_range& e) {
    ErrorRecord(err, kExitValidation, "out_of_range", command, e.what());
    return kExitValidation;
  } catch (const ZeroVarianceError& e) {
    ErrorRecord(err, kExitRuntime, "zero_variance", command, e.what());
    return kExitRuntime;
  } catch (const TrainingDiverged& e) {
    ErrorRecord(err, kExitRuntime, "diverged", command, e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    ErrorRecord(err, kExitRuntime, "runtime", command, e.what());
    return kExitRuntime;
  }
}

}  // namespace promptex::cli
