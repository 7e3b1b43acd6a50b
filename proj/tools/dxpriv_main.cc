// Copyright 2026 The dxpriv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dxpriv/embedding_table.h"
#include "dxpriv/mlm_objectives.h"
#include "dxpriv/privacy_analysis.h"
#include "dxpriv/privacy_mechanism.h"
#include "dxpriv/report_io.h"
#include "dxpriv/rng.h"
#include "dxpriv/utility_probe.h"
#include "dxpriv/version.h"
#include "dxpriv/wordpiece_tokenizer.h"

namespace {

using dxpriv::CandidateSet;
using dxpriv::EmbeddingTable;
using dxpriv::PrivacyParams;
using dxpriv::PrivatizationMode;
using dxpriv::TableFormat;
using dxpriv::TokenSequence;
using nlohmann::json;

// Removes every registered output file unless the run commits, so failed
// runs never leave partial artifacts behind.
class OutputGuard {
 public:
  ~OutputGuard() {
    if (committed_) return;
    for (const auto& path : paths_) std::remove(path.c_str());
  }
  void Track(const std::string& path) { paths_.push_back(path); }
  void Commit() { committed_ = true; }

 private:
  std::vector<std::string> paths_;
  bool committed_ = false;
};

const std::map<std::string, TableFormat> kFormatNames{
    {"text", TableFormat::kText}, {"binary", TableFormat::kBinary}};
const std::map<std::string, CandidateSet> kCandidateNames{
    {"regular", CandidateSet::kRegularOnly}, {"all", CandidateSet::kAll}};
const std::map<std::string, PrivatizationMode> kModeNames{
    {"none", PrivatizationMode::kNone},
    {"representation", PrivatizationMode::kRepresentation},
    {"text", PrivatizationMode::kText}};

std::string Name(TableFormat format) {
  return format == TableFormat::kText ? "text" : "binary";
}
std::string Name(CandidateSet candidates) {
  return candidates == CandidateSet::kAll ? "all" : "regular";
}

std::vector<std::string> ReadLines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<TokenSequence> TokenizeLines(const std::vector<std::string>& lines,
                                         const EmbeddingTable& table, int max_len) {
  std::vector<TokenSequence> corpus;
  corpus.reserve(lines.size());
  for (const auto& line : lines) {
    corpus.push_back(dxpriv::Tokenize(line, table, max_len));
  }
  return corpus;
}

std::ofstream OpenOutput(const std::string& path, OutputGuard& guard) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  guard.Track(path);
  return out;
}

void WriteJsonFile(const std::string& path, const json& j, OutputGuard& guard) {
  std::ofstream out = OpenOutput(path, guard);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

json ReportEnvelope(const json& config, json body) {
  body["artifact_version"] = dxpriv::kArtifactVersion;
  body["config"] = config;
  return body;
}

// Shared table/randomness/output options.
struct CommonOptions {
  std::string table_path;
  TableFormat format = TableFormat::kText;
  std::vector<double> etas;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 0;

  void Register(CLI::App* cmd, bool multi_eta) {
    cmd->add_option("--table", table_path, "Embedding table file")->required();
    cmd->add_option("--format", format, "Table file format")
        ->transform(CLI::CheckedTransformer(kFormatNames, CLI::ignore_case));
    auto* eta = cmd->add_option("--eta", etas, "Privacy parameter (repeatable)")
                    ->required();
    if (!multi_eta) eta->expected(1);
    cmd->add_option("--seed", seed, "Master seed for all randomness");
    cmd->add_option("--out", out, "Output path")->required();
    cmd->add_option("--workers", workers,
                    "Worker threads (0 = hardware concurrency); never affects results");
  }

  json ConfigJson(const std::string& subcommand) const {
    return json{{"subcommand", subcommand}, {"table", table_path},
                {"format", Name(format)},   {"eta", etas},
                {"seed", seed},             {"out", out},
                {"workers", workers}};
  }

  EmbeddingTable LoadTable() const {
    return EmbeddingTable::Load(table_path, format);
  }

  PrivacyParams Params(const EmbeddingTable& table, double eta) const {
    return PrivacyParams{eta, table.dim(), seed};
  }
};

int RunPrivatize(const CommonOptions& common, const std::string& in_path,
                 CandidateSet candidates, int max_len) {
  const EmbeddingTable table = common.LoadTable();
  const auto lines = ReadLines(in_path);
  const auto corpus = TokenizeLines(lines, table, max_len);
  const auto privatized = dxpriv::PrivatizeCorpusText(
      corpus, table, common.Params(table, common.etas[0]), candidates,
      common.workers);

  OutputGuard guard;
  std::ofstream out = OpenOutput(common.out, guard);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    json line;
    line["original_ids"] = corpus[i];
    line["privatized_ids"] = privatized[i];
    line["privatized_text"] = dxpriv::Detokenize(privatized[i], table);
    out << line.dump() << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + common.out);
  out.close();

  json config = common.ConfigJson("privatize");
  config["in"] = in_path;
  config["candidates"] = Name(candidates);
  config["max_len"] = max_len;
  WriteJsonFile(common.out + ".meta.json",
                json{{"artifact_version", dxpriv::kArtifactVersion}, {"config", config}},
                guard);
  guard.Commit();
  return 0;
}

int RunGeometry(const CommonOptions& common, std::vector<int> ks, int noise_samples,
                int stride) {
  const EmbeddingTable table = common.LoadTable();
  const auto report = dxpriv::GeometryProfile(table, common.seed, common.etas, ks,
                                              noise_samples, stride, common.workers);
  json config = common.ConfigJson("report geometry");
  config["k"] = ks;
  config["noise_samples"] = noise_samples;
  config["stride"] = stride;

  OutputGuard guard;
  WriteJsonFile(common.out + ".json",
                ReportEnvelope(config, json{{"report", dxpriv::ToJson(report)}}), guard);
  std::ofstream csv = OpenOutput(common.out + ".csv", guard);
  dxpriv::WriteGeometryCsv(csv, report);
  if (!csv) throw std::runtime_error("failed writing csv");
  guard.Commit();
  return 0;
}

int RunDeniability(const CommonOptions& common, int trials, int stride,
                   std::size_t max_tokens) {
  const EmbeddingTable table = common.LoadTable();
  std::vector<dxpriv::TokenId> subset;
  const auto& regular = table.regular_ids();
  for (std::size_t i = 0; i < regular.size(); i += static_cast<std::size_t>(stride)) {
    subset.push_back(regular[i]);
    if (max_tokens > 0 && subset.size() >= max_tokens) break;
  }
  std::vector<dxpriv::DeniabilityReport> reports;
  for (double eta : common.etas) {
    reports.push_back(dxpriv::DeniabilityStats(table, common.Params(table, eta), trials,
                                               &subset, CandidateSet::kRegularOnly,
                                               common.workers));
  }
  json config = common.ConfigJson("report deniability");
  config["trials"] = trials;
  config["stride"] = stride;
  config["max_tokens"] = max_tokens;

  json body;
  body["reports"] = json::array();
  for (const auto& r : reports) body["reports"].push_back(dxpriv::ToJson(r, table));

  OutputGuard guard;
  WriteJsonFile(common.out + ".json", ReportEnvelope(config, body), guard);
  std::ofstream csv = OpenOutput(common.out + ".csv", guard);
  dxpriv::WriteDeniabilityCsv(csv, reports, table);
  if (!csv) throw std::runtime_error("failed writing csv");
  guard.Commit();
  return 0;
}

int RunInversion(const CommonOptions& common, const std::string& in_path, int max_len,
                 bool per_token) {
  const EmbeddingTable table = common.LoadTable();
  const auto corpus = TokenizeLines(ReadLines(in_path), table, max_len);
  std::vector<dxpriv::InversionReport> reports;
  for (double eta : common.etas) {
    reports.push_back(dxpriv::InversionAttack(corpus, table, common.Params(table, eta),
                                              per_token, CandidateSet::kRegularOnly,
                                              common.workers));
  }
  json config = common.ConfigJson("report inversion");
  config["in"] = in_path;
  config["max_len"] = max_len;
  config["per_token"] = per_token;

  json body;
  body["reports"] = json::array();
  for (const auto& r : reports) body["reports"].push_back(dxpriv::ToJson(r));

  OutputGuard guard;
  WriteJsonFile(common.out + ".json", ReportEnvelope(config, body), guard);
  std::ofstream csv = OpenOutput(common.out + ".csv", guard);
  dxpriv::WriteInversionCsv(csv, reports);
  if (!csv) throw std::runtime_error("failed writing csv");
  guard.Commit();
  return 0;
}

int RunExamples(const CommonOptions& common, const std::string& text, int trials,
                int top_k, int max_len) {
  const EmbeddingTable table = common.LoadTable();
  const TokenSequence seq = dxpriv::Tokenize(text, table, max_len);
  const auto report = dxpriv::PerturbationExamples(seq, table, common.seed, common.etas,
                                                   trials, top_k,
                                                   CandidateSet::kRegularOnly,
                                                   common.workers);
  json config = common.ConfigJson("report examples");
  config["text"] = text;
  config["trials"] = trials;
  config["top_k"] = top_k;
  config["max_len"] = max_len;

  OutputGuard guard;
  WriteJsonFile(common.out + ".json",
                ReportEnvelope(config, json{{"report", dxpriv::ToJson(report, table)}}),
                guard);
  std::ofstream csv = OpenOutput(common.out + ".csv", guard);
  dxpriv::WriteExamplesCsv(csv, report, table);
  if (!csv) throw std::runtime_error("failed writing csv");
  guard.Commit();
  return 0;
}

int RunGenPretrain(const CommonOptions& common, const std::string& in_path,
                   double mask_rate, int max_predictions, int prob_draws,
                   PrivatizationMode mode, int max_len, std::uint64_t round) {
  const EmbeddingTable table = common.LoadTable();
  const auto corpus = TokenizeLines(ReadLines(in_path), table, max_len);
  dxpriv::PretrainConfig config;
  config.mask_rate = mask_rate;
  config.max_predictions = max_predictions;
  config.prob_draws = prob_draws;
  config.context_mode = mode;
  const auto examples = dxpriv::GeneratePretrainingExamples(
      corpus, table, common.Params(table, common.etas[0]), config, round,
      common.workers);

  OutputGuard guard;
  std::ofstream out = OpenOutput(common.out, guard);
  for (const auto& example : examples) {
    out << dxpriv::ToJson(example).dump() << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + common.out);
  out.close();

  json config_json = common.ConfigJson("gen-pretrain");
  config_json["in"] = in_path;
  config_json["mask_rate"] = mask_rate;
  config_json["max_predictions"] = max_predictions;
  config_json["prob_draws"] = prob_draws;
  config_json["mode"] = dxpriv::PrivatizationModeName(mode);
  config_json["max_len"] = max_len;
  config_json["round"] = round;
  WriteJsonFile(common.out + ".meta.json",
                json{{"artifact_version", dxpriv::kArtifactVersion},
                     {"config", config_json}},
                guard);
  guard.Commit();
  return 0;
}

int RunProbe(const CommonOptions& common, const std::string& train_path,
             const std::string& eval_path, std::vector<PrivatizationMode> modes,
             int seeds, int epochs, double learning_rate, int max_len) {
  const EmbeddingTable table = common.LoadTable();
  const auto train = dxpriv::LoadTsvDataset(train_path, table, max_len);
  const auto eval = eval_path.empty() ? train
                                      : dxpriv::LoadTsvDataset(eval_path, table, max_len);
  dxpriv::ProbeConfig config;
  config.epochs = epochs;
  config.learning_rate = learning_rate;
  const auto result = dxpriv::RunProbeGrid(train, eval, table, modes, common.etas,
                                           common.seed, seeds, config);

  json config_json = common.ConfigJson("probe");
  config_json["train"] = train_path;
  config_json["eval"] = eval_path.empty() ? train_path : eval_path;
  json mode_names = json::array();
  for (auto mode : modes) mode_names.push_back(dxpriv::PrivatizationModeName(mode));
  config_json["modes"] = mode_names;
  config_json["seeds"] = seeds;
  config_json["epochs"] = epochs;
  config_json["learning_rate"] = learning_rate;
  config_json["max_len"] = max_len;

  OutputGuard guard;
  WriteJsonFile(common.out,
                ReportEnvelope(config_json, json{{"results", dxpriv::ToJson(result)}}),
                guard);
  guard.Commit();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dx-privacy token privatization and measurement toolkit"};
  app.require_subcommand(1);

  // privatize
  CommonOptions privatize_common;
  std::string privatize_in;
  CandidateSet privatize_candidates = CandidateSet::kRegularOnly;
  int privatize_max_len = 128;
  auto* privatize = app.add_subcommand(
      "privatize", "Text-to-text privatization of a one-document-per-line corpus");
  privatize_common.Register(privatize, /*multi_eta=*/false);
  privatize->add_option("--in", privatize_in, "Input corpus")->required();
  privatize->add_option("--candidates", privatize_candidates,
                        "Nearest-neighbor candidate pool")
      ->transform(CLI::CheckedTransformer(kCandidateNames, CLI::ignore_case));
  privatize->add_option("--max-len", privatize_max_len, "Token truncation length");

  // report
  auto* report = app.add_subcommand("report", "Privacy measurement reports");
  report->require_subcommand(1);

  CommonOptions geometry_common;
  std::vector<int> geometry_ks{1, 2, 3, 4, 5, 10};
  int geometry_noise_samples = 10000;
  int geometry_stride = 1;
  auto* geometry = report->add_subcommand(
      "geometry", "Noise magnitude vs. neighbor distances in the embedding space");
  geometry_common.Register(geometry, /*multi_eta=*/true);
  geometry->add_option("--k", geometry_ks, "Neighbor ranks (repeatable)");
  geometry->add_option("--noise-samples", geometry_noise_samples,
                       "Noise draws per eta (0 = closed form)");
  geometry->add_option("--stride", geometry_stride, "Regular-token subsampling stride");

  CommonOptions deniability_common;
  int deniability_trials = 100;
  int deniability_stride = 1;
  std::size_t deniability_max_tokens = 0;
  auto* deniability = report->add_subcommand(
      "deniability", "Per-token N_w and S_w statistics over repeated privatization");
  deniability_common.Register(deniability, /*multi_eta=*/true);
  deniability->add_option("--trials", deniability_trials, "Draws per token");
  deniability->add_option("--stride", deniability_stride,
                          "Regular-token subsampling stride");
  deniability->add_option("--max-tokens", deniability_max_tokens,
                          "Cap on subset size (0 = no cap)");

  CommonOptions inversion_common;
  std::string inversion_in;
  int inversion_max_len = 128;
  bool inversion_per_token = false;
  auto* inversion = report->add_subcommand(
      "inversion", "Nearest-neighbor recovery accuracy on a corpus");
  inversion_common.Register(inversion, /*multi_eta=*/true);
  inversion->add_option("--in", inversion_in, "Input corpus")->required();
  inversion->add_option("--max-len", inversion_max_len, "Token truncation length");
  inversion->add_flag("--per-token", inversion_per_token, "Emit per-token breakdown");

  CommonOptions examples_common;
  std::string examples_text;
  int examples_trials = 100;
  int examples_top_k = 10;
  int examples_max_len = 128;
  auto* examples = report->add_subcommand(
      "examples", "Perturbed variants and output histograms for one sentence");
  examples_common.Register(examples, /*multi_eta=*/true);
  examples->add_option("--text", examples_text, "Sentence to perturb")->required();
  examples->add_option("--trials", examples_trials, "Draws per token");
  examples->add_option("--top-k", examples_top_k, "Histogram entries per token");
  examples->add_option("--max-len", examples_max_len, "Token truncation length");

  // gen-pretrain
  CommonOptions pretrain_common;
  std::string pretrain_in;
  double pretrain_mask_rate = 0.15;
  int pretrain_max_predictions = 20;
  int pretrain_prob_draws = 10;
  PrivatizationMode pretrain_mode = PrivatizationMode::kText;
  int pretrain_max_len = 128;
  std::uint64_t pretrain_round = 0;
  auto* pretrain = app.add_subcommand(
      "gen-pretrain", "Generate privatized masked pretraining examples as JSONL");
  pretrain_common.Register(pretrain, /*multi_eta=*/false);
  pretrain->add_option("--in", pretrain_in, "Input corpus")->required();
  pretrain->add_option("--mask-rate", pretrain_mask_rate, "Masking probability");
  pretrain->add_option("--max-predictions", pretrain_max_predictions,
                       "Masked position cap per sequence");
  pretrain->add_option("--prob-draws", pretrain_prob_draws,
                       "Perturbations per masked position");
  pretrain->add_option("--mode", pretrain_mode, "Context privatization mode")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, PrivatizationMode>{
              {"text", PrivatizationMode::kText},
              {"representation", PrivatizationMode::kRepresentation}},
          CLI::ignore_case));
  pretrain->add_option("--max-len", pretrain_max_len, "Token truncation length");
  pretrain->add_option("--round", pretrain_round,
                       "Perturbation round; changes draws but not mask positions");

  // probe
  CommonOptions probe_common;
  std::string probe_train, probe_eval;
  std::vector<PrivatizationMode> probe_modes{PrivatizationMode::kNone,
                                             PrivatizationMode::kRepresentation,
                                             PrivatizationMode::kText};
  int probe_seeds = 3;
  int probe_epochs = 200;
  double probe_lr = 1.0;
  int probe_max_len = 128;
  auto* probe = app.add_subcommand(
      "probe", "Linear-probe utility trends over an (eta x mode x seed) grid");
  probe_common.Register(probe, /*multi_eta=*/true);
  probe->add_option("--train", probe_train, "Training TSV")->required();
  probe->add_option("--eval", probe_eval, "Evaluation TSV (defaults to --train)");
  probe->add_option("--mode", probe_modes, "Privatization modes (repeatable)")
      ->transform(CLI::CheckedTransformer(kModeNames, CLI::ignore_case));
  probe->add_option("--seeds", probe_seeds, "Seeds per grid cell");
  probe->add_option("--epochs", probe_epochs, "Training epochs");
  probe->add_option("--lr", probe_lr, "Learning rate");
  probe->add_option("--max-len", probe_max_len, "Token truncation length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (privatize->parsed()) {
      return RunPrivatize(privatize_common, privatize_in, privatize_candidates,
                          privatize_max_len);
    }
    if (geometry->parsed()) {
      return RunGeometry(geometry_common, geometry_ks, geometry_noise_samples,
                         geometry_stride);
    }
    if (deniability->parsed()) {
      return RunDeniability(deniability_common, deniability_trials, deniability_stride,
                            deniability_max_tokens);
    }
    if (inversion->parsed()) {
      return RunInversion(inversion_common, inversion_in, inversion_max_len,
                          inversion_per_token);
    }
    if (examples->parsed()) {
      return RunExamples(examples_common, examples_text, examples_trials,
                         examples_top_k, examples_max_len);
    }
    if (pretrain->parsed()) {
      return RunGenPretrain(pretrain_common, pretrain_in, pretrain_mask_rate,
                            pretrain_max_predictions, pretrain_prob_draws, pretrain_mode,
                            pretrain_max_len, pretrain_round);
    }
    if (probe->parsed()) {
      return RunProbe(probe_common, probe_train, probe_eval, probe_modes, probe_seeds,
                      probe_epochs, probe_lr, probe_max_len);
    }
  } catch (const std::exception& e) {
    std::cerr << "dxpriv: error: " << e.what() << std::endl;
    return 1;
  }
  std::cerr << "dxpriv: no subcommand selected" << std::endl;
  return 1;
}
