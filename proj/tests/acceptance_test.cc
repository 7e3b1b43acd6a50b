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
//
// End-to-end acceptance checks. Each test is one release criterion; all of
// them must stay green. Statistical checks run against closed-form oracles
// or independently estimated standard errors, never against values produced
// by the code under test.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "json.hpp"

#include "dxpriv/embedding_table.h"
#include "dxpriv/mlm_objectives.h"
#include "dxpriv/parallel.h"
#include "dxpriv/privacy_analysis.h"
#include "dxpriv/privacy_mechanism.h"
#include "dxpriv/rng.h"
#include "dxpriv/utility_probe.h"
#include "test_util.h"

namespace dxpriv {
namespace {

using nlohmann::json;
using testing::MakeGaussianTable;
using testing::MakeProbeTable;
using testing::MakeTwoTokenLine;
using testing::ProbeDataSpec;
using testing::ReadFile;
using testing::ScopedTempDir;
using testing::WriteProbeTsv;

constexpr std::uint64_t kCtx = static_cast<std::uint64_t>(StreamContext::kTesting);
constexpr int kWorkers = 4;

const double kLaplaceFlip = 0.5 * std::exp(-0.5);        // 0.30327
const double kLaplacePreserve = 1.0 - kLaplaceFlip;      // 0.69673

// Shared synthetic fixture for criteria 5 and 6: a 500-token, 32-dim
// Gaussian table and a frequency-skewed corpus over its regular tokens.
EmbeddingTable MakeMonotonicityTable() {
  return MakeGaussianTable(500, 32, 0.03, 424242);
}

std::vector<TokenSequence> MakeSkewedCorpus(const EmbeddingTable& table,
                                            std::size_t occurrences) {
  std::vector<TokenSequence> corpus;
  TokenSequence line;
  StreamRng rng(31337, StreamContext::kTesting, 0);
  const auto& regular = table.regular_ids();
  for (std::size_t i = 0; i < occurrences; ++i) {
    const double u = rng.NextUnit();
    line.push_back(regular[static_cast<std::size_t>(u * u * regular.size())]);
    if (line.size() == 100) {
      corpus.push_back(line);
      line.clear();
    }
  }
  if (!line.empty()) corpus.push_back(line);
  return corpus;
}

int RunCli(const std::string& args, const std::string& silence_path) {
  const std::string command = std::string(DXPRIV_CLI_PATH) + " " + args + " >" +
                              silence_path + " 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Acceptance, Criterion1_NoiseCalibration) {
  struct Config {
    int dim;
    double eta;
  };
  std::vector<Config> grid;
  for (double eta : {50.0, 75.0, 100.0, 125.0, 150.0, 175.0}) grid.push_back({768, eta});
  for (int dim : {1, 2}) {
    for (double eta : {1.0, 10.0}) grid.push_back({dim, eta});
  }
  const int draws = 100000;
  for (const Config& config : grid) {
    const PrivacyParams params{config.eta, config.dim, 20260101};
    std::vector<double> norms(draws);
    ParallelFor(norms.size(), kWorkers, [&](std::size_t i) {
      norms[i] = SampleNoise(params, StreamKey{kCtx, i, 0}).radius;
    });
    double sum = 0.0, sum_sq = 0.0;
    for (double n : norms) {
      sum += n;
      sum_sq += n * n;
    }
    const double mean = sum / draws;
    const double variance = sum_sq / draws - mean * mean;
    const double expected_mean = config.dim / config.eta;
    const double expected_var = config.dim / (config.eta * config.eta);
    EXPECT_NEAR(mean, expected_mean, 0.01 * expected_mean)
        << "n=" << config.dim << " eta=" << config.eta;
    EXPECT_NEAR(variance, expected_var, 0.03 * expected_var)
        << "n=" << config.dim << " eta=" << config.eta;
  }
}

TEST(Acceptance, Criterion2_ClosedFormOracleEquivalence) {
  const auto table = MakeTwoTokenLine();
  const PrivacyParams params{1.0, 1, 796};
  const int draws = 1000000;
  std::vector<std::uint8_t> flipped(draws);
  ParallelFor(flipped.size(), kWorkers, [&](std::size_t i) {
    flipped[i] = PrivatizeToken(0, table, params, StreamKey{kCtx, 0, i}) == 1 ? 1 : 0;
  });
  std::size_t flips = 0;
  for (std::uint8_t f : flipped) flips += f;
  EXPECT_NEAR(static_cast<double>(flips) / draws, kLaplaceFlip, 0.002);

  const std::vector<TokenId> subset{0};
  const auto report = DeniabilityStats(table, params, 10000, &subset,
                                       CandidateSet::kRegularOnly, kWorkers);
  EXPECT_NEAR(static_cast<double>(report.tokens[0].n_w) / report.trials,
              kLaplacePreserve, 0.015);
}

TEST(Acceptance, Criterion3_EmpiricalDxBound) {
  const auto table = MakeTwoTokenLine();
  const PrivacyParams params{1.0, 1, 833};
  const int draws = 1000000;
  std::array<std::vector<std::uint8_t>, 2> outputs{std::vector<std::uint8_t>(draws),
                                                   std::vector<std::uint8_t>(draws)};
  for (TokenId input : {0u, 1u}) {
    ParallelFor(draws, kWorkers, [&](std::size_t i) {
      outputs[input][i] = static_cast<std::uint8_t>(
          PrivatizeToken(input, table, params, StreamKey{kCtx, input, i}));
    });
  }
  const double eta_d = 1.0;  // eta = 1, embedding distance 1
  for (int y = 0; y < 2; ++y) {
    std::size_t c0 = 0, c1 = 0;
    for (int i = 0; i < draws; ++i) {
      c0 += outputs[0][i] == y ? 1 : 0;
      c1 += outputs[1][i] == y ? 1 : 0;
    }
    const double p0 = static_cast<double>(c0) / draws;
    const double p1 = static_cast<double>(c1) / draws;
    ASSERT_GT(p0, 0.0);
    ASSERT_GT(p1, 0.0);
    const double se = std::sqrt((1.0 - p0) / (p0 * draws) + (1.0 - p1) / (p1 * draws));
    EXPECT_LE(std::log(p0 / p1), eta_d + 3.0 * se) << "output " << y;
    EXPECT_LE(std::log(p1 / p0), eta_d + 3.0 * se) << "output " << y;
  }
}

TEST(Acceptance, Criterion4_MlmLossIdentities) {
  // Uniform logits reduce every loss to log |V|.
  const std::vector<double> uniform(100, 1.25);
  PerturbationSet uniform_pset;
  uniform_pset.entries = {{3, 2}, {10, 5}};
  uniform_pset.total = 7;
  EXPECT_NEAR(VanillaMlmLoss(uniform, 42), std::log(100.0), 1e-6);
  EXPECT_NEAR(DenoisingMlmLoss(uniform, 7), std::log(100.0), 1e-6);
  EXPECT_NEAR(ProbMlmLoss(uniform, uniform_pset), std::log(100.0), 1e-6);

  // The (1,2,3)-logit closed forms.
  const std::vector<double> three{1.0, 2.0, 3.0};
  EXPECT_NEAR(VanillaMlmLoss(three, 2), 0.40761, 1e-5);
  EXPECT_NEAR(DenoisingMlmLoss(three, 0), 2.40761, 1e-5);

  // Prob loss equals the count-weighted mean of vanilla losses, and all
  // three losses are invariant to constant logit shifts.
  StreamRng rng(4242, StreamContext::kTesting, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int vocab = 2 + static_cast<int>(rng.NextU64() % 50);
    std::vector<double> logits(vocab), shifted(vocab);
    for (auto& v : logits) v = 12.0 * (rng.NextUnit() - 0.5);
    const double shift = 300.0 * (rng.NextUnit() - 0.5);
    for (int i = 0; i < vocab; ++i) shifted[i] = logits[i] + shift;
    std::vector<TokenId> draws(1 + rng.NextU64() % 10);
    for (auto& d : draws) d = static_cast<TokenId>(rng.NextU64() % vocab);
    const auto pset = PerturbationSet::FromDraws(draws);
    double weighted = 0.0;
    for (const auto& [id, count] : pset.entries) {
      weighted += static_cast<double>(count) / pset.total * VanillaMlmLoss(logits, id);
    }
    ASSERT_NEAR(ProbMlmLoss(logits, pset), weighted, 1e-9);
    ASSERT_NEAR(ProbMlmLoss(shifted, pset), ProbMlmLoss(logits, pset), 1e-9);
    ASSERT_NEAR(VanillaMlmLoss(shifted, draws[0]), VanillaMlmLoss(logits, draws[0]),
                1e-9);
    ASSERT_NEAR(DenoisingMlmLoss(shifted, 0), DenoisingMlmLoss(logits, 0), 1e-9);
  }
}

struct GridPoint {
  double mean = 0.0;
  double se = 0.0;
};

// Checks that means are monotone in eta up to 2-standard-error slack.
void ExpectMonotone(const std::vector<GridPoint>& points, bool non_decreasing,
                    const char* label) {
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double delta = points[i].mean - points[i - 1].mean;
    const double slack =
        2.0 * std::sqrt(points[i].se * points[i].se +
                        points[i - 1].se * points[i - 1].se);
    if (non_decreasing) {
      EXPECT_GE(delta, -slack) << label << " between grid points " << i - 1 << " and "
                               << i;
    } else {
      EXPECT_LE(delta, slack) << label << " between grid points " << i - 1 << " and "
                              << i;
    }
  }
}

TEST(Acceptance, Criterion5_MonotonicitySuite) {
  const auto table = MakeMonotonicityTable();
  const auto corpus = MakeSkewedCorpus(table, 20000);
  const std::vector<double> etas{50, 75, 100, 125, 150, 175};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const int trials = 100;

  std::vector<GridPoint> inversion(etas.size()), n_rate(etas.size()),
      s_mean(etas.size());
  for (std::size_t e = 0; e < etas.size(); ++e) {
    std::vector<double> acc, nw, sw;
    for (std::uint64_t seed : seeds) {
      const PrivacyParams params{etas[e], table.dim(), seed};
      acc.push_back(InversionAttack(corpus, table, params, false,
                                    CandidateSet::kRegularOnly, kWorkers)
                        .accuracy);
      const auto den = DeniabilityStats(table, params, trials, nullptr,
                                        CandidateSet::kRegularOnly, kWorkers);
      nw.push_back(den.mean_n_w_rate);
      sw.push_back(den.mean_s_w);
    }
    auto summarize = [](const std::vector<double>& xs) {
      GridPoint point;
      for (double x : xs) point.mean += x / xs.size();
      double ss = 0.0;
      for (double x : xs) ss += (x - point.mean) * (x - point.mean);
      point.se = std::sqrt(ss / (xs.size() - 1) / xs.size());
      return point;
    };
    inversion[e] = summarize(acc);
    n_rate[e] = summarize(nw);
    s_mean[e] = summarize(sw);
  }
  ExpectMonotone(inversion, /*non_decreasing=*/true, "inversion accuracy");
  ExpectMonotone(n_rate, /*non_decreasing=*/true, "mean N_w/T");
  ExpectMonotone(s_mean, /*non_decreasing=*/false, "mean S_w");
  // The sweep must cover a real range, not a flat line.
  EXPECT_GT(inversion.back().mean - inversion.front().mean, 0.5);
}

TEST(Acceptance, Criterion6_AttackDeniabilityConsistency) {
  const auto table = MakeMonotonicityTable();
  const auto corpus = MakeSkewedCorpus(table, 20000);
  const PrivacyParams params{100.0, table.dim(), 5};
  const int trials = 400;

  const auto inversion = InversionAttack(corpus, table, params, false,
                                         CandidateSet::kRegularOnly, kWorkers);
  const auto deniability = DeniabilityStats(table, params, trials, nullptr,
                                            CandidateSet::kRegularOnly, kWorkers);

  std::vector<std::size_t> occurrences(table.size(), 0);
  std::size_t total = 0;
  for (const auto& line : corpus) {
    for (TokenId id : line) {
      ++occurrences[id];
      ++total;
    }
  }
  double weighted_rate = 0.0;
  double weighted_var = 0.0;
  for (const auto& token : deniability.tokens) {
    const double f = static_cast<double>(occurrences[token.id]) / total;
    const double p = static_cast<double>(token.n_w) / trials;
    weighted_rate += f * p;
    weighted_var += f * f * p * (1.0 - p) / trials;
  }
  const double inv_se =
      std::sqrt(inversion.accuracy * (1.0 - inversion.accuracy) / inversion.total);
  const double bound = 3.0 * std::sqrt(inv_se * inv_se + weighted_var);
  EXPECT_NEAR(inversion.accuracy, weighted_rate, bound);
}

TEST(Acceptance, Criterion7_DeterminismAndParallelInvariance) {
  ScopedTempDir dir;
  const auto table = MakeGaussianTable(60, 8, 0.2, 97);
  table.Save(dir.Path("table.txt"), TableFormat::kText);
  testing::WriteFile(dir.Path("corpus.txt"),
                     "w0001 w0002 w0003 w0004\nw0005 w0006 w0007\n");
  const std::string sink = dir.Path("sink.txt");

  // Identical config + seed reruns are byte-identical.
  const std::string den_args = "report deniability --table " + dir.Path("table.txt") +
                               " --eta 4 --eta 12 --trials 200 --seed 7 --workers 1" +
                               " --out " + dir.Path("den");
  ASSERT_EQ(RunCli(den_args, sink), 0);
  const std::string den_json = ReadFile(dir.Path("den.json"));
  const std::string den_csv_first = ReadFile(dir.Path("den.csv"));
  ASSERT_EQ(RunCli(den_args, sink), 0);
  EXPECT_EQ(ReadFile(dir.Path("den.json")), den_json);
  EXPECT_EQ(ReadFile(dir.Path("den.csv")), den_csv_first);

  const std::string gen_args = "gen-pretrain --table " + dir.Path("table.txt") +
                               " --eta 4 --seed 9 --in " + dir.Path("corpus.txt") +
                               " --out " + dir.Path("gen.jsonl");
  ASSERT_EQ(RunCli(gen_args, sink), 0);
  const std::string gen_jsonl = ReadFile(dir.Path("gen.jsonl"));
  ASSERT_EQ(RunCli(gen_args, sink), 0);
  EXPECT_EQ(ReadFile(dir.Path("gen.jsonl")), gen_jsonl);

  // Worker count never changes results: compare report payloads (the config
  // block records the worker flag itself) and raw CSV bytes.
  json den_reports, geo_reports, inv_reports;
  std::string den_csv, geo_csv, inv_csv;
  for (int workers : {1, 4, 8}) {
    const std::string suffix = "_w" + std::to_string(workers);
    const std::string w = std::to_string(workers);
    ASSERT_EQ(RunCli("report deniability --table " + dir.Path("table.txt") +
                         " --eta 4 --trials 150 --seed 11 --workers " + w + " --out " +
                         dir.Path("den" + suffix),
                     sink),
              0);
    ASSERT_EQ(RunCli("report geometry --table " + dir.Path("table.txt") +
                         " --eta 4 --eta 8 --k 1 --k 3 --noise-samples 4000 --seed 11"
                         " --workers " + w + " --out " + dir.Path("geo" + suffix),
                     sink),
              0);
    ASSERT_EQ(RunCli("report inversion --table " + dir.Path("table.txt") +
                         " --eta 4 --seed 11 --in " + dir.Path("corpus.txt") +
                         " --workers " + w + " --out " + dir.Path("inv" + suffix),
                     sink),
              0);
    const json den = json::parse(ReadFile(dir.Path("den" + suffix + ".json")));
    const json geo = json::parse(ReadFile(dir.Path("geo" + suffix + ".json")));
    const json inv = json::parse(ReadFile(dir.Path("inv" + suffix + ".json")));
    if (workers == 1) {
      den_reports = den["reports"];
      geo_reports = geo["report"];
      inv_reports = inv["reports"];
      den_csv = ReadFile(dir.Path("den" + suffix + ".csv"));
      geo_csv = ReadFile(dir.Path("geo" + suffix + ".csv"));
      inv_csv = ReadFile(dir.Path("inv" + suffix + ".csv"));
    } else {
      EXPECT_EQ(den["reports"], den_reports) << "workers " << workers;
      EXPECT_EQ(geo["report"], geo_reports) << "workers " << workers;
      EXPECT_EQ(inv["reports"], inv_reports) << "workers " << workers;
      EXPECT_EQ(ReadFile(dir.Path("den" + suffix + ".csv")), den_csv);
      EXPECT_EQ(ReadFile(dir.Path("geo" + suffix + ".csv")), geo_csv);
      EXPECT_EQ(ReadFile(dir.Path("inv" + suffix + ".csv")), inv_csv);
    }
  }
}

TEST(Acceptance, Criterion8_ProbeTrends) {
  ScopedTempDir dir;
  const ProbeDataSpec spec;
  const auto table = MakeProbeTable(spec);
  WriteProbeTsv(spec, table, 0, dir.Path("train.tsv"));
  WriteProbeTsv(spec, table, 777, dir.Path("eval.tsv"));
  const auto train = LoadTsvDataset(dir.Path("train.tsv"), table, 64);
  const auto eval = LoadTsvDataset(dir.Path("eval.tsv"), table, 64);
  const ProbeConfig config;
  const std::vector<std::uint64_t> seeds{100, 101, 102};

  auto run = [&](PrivatizationMode train_mode, PrivatizationMode eval_mode, double eta,
                 std::uint64_t seed) {
    const PrivacyParams params{eta, table.dim(), seed};
    const auto model = TrainProbe(train, table, train_mode, params, config);
    return EvalProbe(model, eval, table, eval_mode, params);
  };
  auto mean_over_seeds = [&](PrivatizationMode mode, double eta) {
    double mean = 0.0;
    for (std::uint64_t seed : seeds) mean += run(mode, mode, eta, seed) / seeds.size();
    return mean;
  };

  // (a) Text-mode utility grows with eta: eta = 175 beats eta = 50 by >= 0.1.
  const double text_low = mean_over_seeds(PrivatizationMode::kText, 50.0);
  const double text_high = mean_over_seeds(PrivatizationMode::kText, 175.0);
  EXPECT_GE(text_high - text_low, 0.1)
      << "text@175 = " << text_high << ", text@50 = " << text_low;

  // (b) Text-to-text privatization is at least as good as representation
  // privatization at small noise.
  for (double eta : {150.0, 175.0}) {
    const double text = mean_over_seeds(PrivatizationMode::kText, eta);
    const double repr = mean_over_seeds(PrivatizationMode::kRepresentation, eta);
    EXPECT_GE(text, repr) << "eta " << eta;
  }

  // (c) A probe trained under representation privatization beats one trained
  // clean when both are evaluated under representation privatization.
  std::vector<double> diffs;
  for (std::uint64_t seed : seeds) {
    const double adaptive =
        run(PrivatizationMode::kRepresentation, PrivatizationMode::kRepresentation,
            100.0, seed);
    const double clean = run(PrivatizationMode::kNone,
                             PrivatizationMode::kRepresentation, 100.0, seed);
    diffs.push_back(adaptive - clean);
  }
  double mean_diff = 0.0;
  for (double d : diffs) mean_diff += d / diffs.size();
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean_diff) * (d - mean_diff);
  const double se = std::sqrt(ss / (diffs.size() - 1) / diffs.size());
  EXPECT_GT(mean_diff, 2.0 * se)
      << "adaptive - clean = " << mean_diff << " +- " << se;
}

TEST(Acceptance, Criterion9_AssetDependentBertChecks) {
  const char* table_path = std::getenv("DXPRIV_BERT_TABLE");
  const char* sst_path = std::getenv("DXPRIV_SST_TSV");
  if (table_path == nullptr || sst_path == nullptr ||
      !std::filesystem::exists(table_path) || !std::filesystem::exists(sst_path)) {
    GTEST_SKIP() << "BERT embedding table / SST validation file not provided "
                    "(set DXPRIV_BERT_TABLE and DXPRIV_SST_TSV)";
  }
  const char* format_env = std::getenv("DXPRIV_BERT_TABLE_FORMAT");
  const TableFormat format =
      format_env != nullptr && std::string(format_env) == "binary"
          ? TableFormat::kBinary
          : TableFormat::kText;
  const auto table = EmbeddingTable::Load(table_path, format);
  ASSERT_EQ(table.size(), 30522u);
  ASSERT_EQ(table.dim(), 768);

  const auto dataset = LoadTsvDataset(sst_path, table, 128);
  std::vector<TokenSequence> corpus;
  corpus.reserve(dataset.examples.size());
  for (const auto& example : dataset.examples) corpus.push_back(example.first);

  // Inversion sweep against the published SST accuracies.
  const std::vector<double> etas{50, 75, 100, 125, 150, 175};
  const std::vector<double> expected{0.0154, 0.1084, 0.3402, 0.6354, 0.8500, 0.9511};
  for (std::size_t e = 0; e < etas.size(); ++e) {
    const PrivacyParams params{etas[e], table.dim(), 20260102};
    const auto report = InversionAttack(corpus, table, params, false,
                                        CandidateSet::kRegularOnly, 0);
    EXPECT_NEAR(report.accuracy, expected[e], 0.02) << "eta " << etas[e];
  }

  // Average 1-NN distance over regular tokens is below 2. A deterministic
  // stride sample keeps the quadratic scan tractable.
  const std::vector<double> geo_etas{175.0};
  const std::vector<int> ks{1};
  const auto geometry = GeometryProfile(table, 20260103, geo_etas, ks, 0,
                                        /*token_stride=*/8, 0);
  EXPECT_LT(geometry.avg_knn_distance[0], 2.0);

  // Worst-case deniability at eta = 75 on a 2000-token stratified sample.
  std::vector<TokenId> sample;
  const auto& regular = table.regular_ids();
  const std::size_t stride = regular.size() / 2000;
  for (std::size_t i = 0; i < regular.size() && sample.size() < 2000; i += stride) {
    sample.push_back(regular[i]);
  }
  const PrivacyParams params{75.0, table.dim(), 20260104};
  const auto deniability = DeniabilityStats(table, params, 1000, &sample,
                                            CandidateSet::kRegularOnly, 0);
  EXPECT_LT(deniability.max_n_w, 500);
}

}  // namespace
}  // namespace dxpriv
