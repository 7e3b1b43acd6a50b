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

#include "dxpriv/privacy_analysis.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "dxpriv/parallel.h"
#include "dxpriv/wordpiece_tokenizer.h"

namespace dxpriv {
namespace {

// Largest number of perturbed queries held in memory at once.
constexpr std::size_t kQueryChunk = 4096;

std::vector<std::pair<int, int>> BuildHistogram(const std::vector<int>& values) {
  std::map<int, int> counts;
  for (int v : values) ++counts[v];
  return {counts.begin(), counts.end()};
}

}  // namespace

GeometryReport GeometryProfile(const EmbeddingTable& table, std::uint64_t master_seed,
                               std::span<const double> etas, std::span<const int> ks,
                               int noise_samples, int token_stride, int workers) {
  if (token_stride < 1) throw std::invalid_argument("token stride must be >= 1");
  if (noise_samples < 0) throw std::invalid_argument("noise sample count must be >= 0");
  for (double eta : etas) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
      throw std::invalid_argument("eta must be positive");
    }
  }
  const std::size_t regular = table.regular_count();
  for (int k : ks) {
    if (k < 1 || static_cast<std::size_t>(k) > regular - 1) {
      throw std::invalid_argument("k = " + std::to_string(k) +
                                  " out of range for " + std::to_string(regular) +
                                  " regular tokens");
    }
  }

  GeometryReport report;
  report.etas.assign(etas.begin(), etas.end());
  report.ks.assign(ks.begin(), ks.end());
  report.noise_samples = noise_samples;
  report.noise_closed_form = noise_samples == 0;
  report.token_stride = token_stride;
  report.master_seed = master_seed;
  report.dim = table.dim();

  for (std::size_t e = 0; e < etas.size(); ++e) {
    if (noise_samples == 0) {
      report.avg_noise_norm.push_back(static_cast<double>(table.dim()) / etas[e]);
      continue;
    }
    const PrivacyParams params{etas[e], table.dim(), master_seed};
    std::vector<double> norms(noise_samples);
    ParallelFor(norms.size(), workers, [&](std::size_t i) {
      norms[i] = SampleNoise(params,
                             StreamKey{static_cast<std::uint64_t>(
                                           StreamContext::kGeometryNoise),
                                       PackItem(e, i), 0})
                     .radius;
    });
    double sum = 0.0;  // fixed-order reduction keeps the result worker-independent
    for (double n : norms) sum += n;
    report.avg_noise_norm.push_back(sum / norms.size());
  }

  if (!ks.empty()) {
    std::vector<TokenId> sampled;
    const auto& regular_ids = table.regular_ids();
    for (std::size_t i = 0; i < regular_ids.size();
         i += static_cast<std::size_t>(token_stride)) {
      sampled.push_back(regular_ids[i]);
    }
    report.tokens_used = sampled.size();
    const int max_k = *std::max_element(ks.begin(), ks.end());
    std::vector<double> per_token(sampled.size() * ks.size());
    ParallelFor(sampled.size(), workers, [&](std::size_t t) {
      const auto neighbors = table.Knn(sampled[t], max_k, CandidateSet::kRegularOnly);
      for (std::size_t j = 0; j < ks.size(); ++j) {
        per_token[t * ks.size() + j] = neighbors[ks[j] - 1].distance;
      }
    });
    for (std::size_t j = 0; j < ks.size(); ++j) {
      double sum = 0.0;
      for (std::size_t t = 0; t < sampled.size(); ++t) {
        sum += per_token[t * ks.size() + j];
      }
      report.avg_knn_distance.push_back(sum / sampled.size());
    }
  }
  return report;
}

DeniabilityReport DeniabilityStats(const EmbeddingTable& table,
                                   const PrivacyParams& params, int trials,
                                   const std::vector<TokenId>* subset,
                                   CandidateSet candidates, int workers) {
  ValidatePrivacyParams(params);
  if (params.dim != table.dim()) {
    throw std::invalid_argument("params.dim does not match table dimension");
  }
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  std::vector<TokenId> tokens;
  if (subset != nullptr) {
    for (TokenId id : *subset) {
      if (table.vocab().IsSpecial(id)) {
        throw std::invalid_argument("special token \"" + table.vocab().token(id) +
                                    "\" in deniability subset");
      }
    }
    tokens = *subset;
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  } else {
    tokens = table.regular_ids();
  }
  if (tokens.empty()) throw std::invalid_argument("empty token subset");

  DeniabilityReport report;
  report.eta = params.eta;
  report.master_seed = params.master_seed;
  report.trials = trials;
  report.tokens.resize(tokens.size());

  const std::size_t dim = table.dim();
  ParallelFor(tokens.size(), workers, [&](std::size_t t) {
    const TokenId id = tokens[t];
    std::vector<TokenId> outputs;
    outputs.reserve(trials);
    std::vector<double> queries;
    for (std::size_t begin = 0; begin < static_cast<std::size_t>(trials);
         begin += kQueryChunk) {
      const std::size_t n = std::min(kQueryChunk, trials - begin);
      queries.assign(n * dim, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto perturbed = PerturbEmbedding(
            table.Row(id), params,
            StreamKey{static_cast<std::uint64_t>(StreamContext::kDeniability), id,
                      begin + i});
        std::copy(perturbed.begin(), perturbed.end(), queries.begin() + i * dim);
      }
      const auto nearest = table.BatchedNearest(queries, n, candidates, 1);
      outputs.insert(outputs.end(), nearest.begin(), nearest.end());
    }
    int n_w = 0;
    for (TokenId o : outputs) {
      if (o == id) ++n_w;
    }
    std::sort(outputs.begin(), outputs.end());
    const int s_w = static_cast<int>(
        std::unique(outputs.begin(), outputs.end()) - outputs.begin());
    report.tokens[t] = {id, n_w, s_w};
  });

  std::vector<int> n_ws, s_ws;
  n_ws.reserve(report.tokens.size());
  s_ws.reserve(report.tokens.size());
  double n_sum = 0.0, s_sum = 0.0;
  for (const auto& tk : report.tokens) {
    n_ws.push_back(tk.n_w);
    s_ws.push_back(tk.s_w);
    n_sum += tk.n_w;
    s_sum += tk.s_w;
  }
  report.n_w_histogram = BuildHistogram(n_ws);
  report.s_w_histogram = BuildHistogram(s_ws);
  report.mean_n_w_rate = n_sum / report.tokens.size() / trials;
  report.mean_s_w = s_sum / report.tokens.size();
  report.max_n_w = *std::max_element(n_ws.begin(), n_ws.end());
  report.min_s_w = *std::min_element(s_ws.begin(), s_ws.end());
  return report;
}

InversionReport InversionAttack(const std::vector<TokenSequence>& corpus,
                                const EmbeddingTable& table,
                                const PrivacyParams& params,
                                bool per_token_breakdown, CandidateSet candidates,
                                int workers) {
  ValidatePrivacyParams(params);
  if (params.dim != table.dim()) {
    throw std::invalid_argument("params.dim does not match table dimension");
  }
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  std::vector<TokenId> occurrences;
  for (const auto& seq : corpus) {
    for (TokenId id : seq) {
      if (!table.vocab().IsSpecial(id)) occurrences.push_back(id);
    }
  }
  if (occurrences.empty()) {
    throw std::invalid_argument("corpus contains no regular tokens");
  }

  InversionReport report;
  report.eta = params.eta;
  report.master_seed = params.master_seed;
  report.total = occurrences.size();

  const std::size_t dim = table.dim();
  std::vector<std::uint8_t> recovered(occurrences.size(), 0);
  ParallelForRange(occurrences.size(), workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> queries;
    for (std::size_t chunk = begin; chunk < end; chunk += kQueryChunk) {
      const std::size_t n = std::min(kQueryChunk, end - chunk);
      queries.assign(n * dim, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto perturbed = PerturbEmbedding(
            table.Row(occurrences[chunk + i]), params,
            StreamKey{static_cast<std::uint64_t>(StreamContext::kInversion),
                      chunk + i, 0});
        std::copy(perturbed.begin(), perturbed.end(), queries.begin() + i * dim);
      }
      const auto nearest = table.BatchedNearest(queries, n, candidates, 1);
      for (std::size_t i = 0; i < n; ++i) {
        recovered[chunk + i] = nearest[i] == occurrences[chunk + i] ? 1 : 0;
      }
    }
  });

  std::size_t correct = 0;
  for (std::uint8_t r : recovered) correct += r;
  report.correct = correct;
  report.accuracy = static_cast<double>(correct) / report.total;

  if (per_token_breakdown) {
    std::map<TokenId, InversionTokenStats> stats;
    for (std::size_t i = 0; i < occurrences.size(); ++i) {
      auto& s = stats[occurrences[i]];
      s.id = occurrences[i];
      ++s.occurrences;
      s.correct += recovered[i];
    }
    report.per_token.reserve(stats.size());
    for (const auto& [id, s] : stats) report.per_token.push_back(s);
  }
  return report;
}

PerturbationExamplesReport PerturbationExamples(
    const TokenSequence& seq, const EmbeddingTable& table, std::uint64_t master_seed,
    std::span<const double> etas, int trials, int top_k, CandidateSet candidates,
    int workers) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  for (TokenId id : seq) table.Row(id);  // validates ids

  PerturbationExamplesReport report;
  report.original_ids = seq;
  report.original_text = Detokenize(seq, table);
  report.trials = trials;
  report.top_k = top_k;
  report.master_seed = master_seed;
  report.per_eta.resize(etas.size());

  std::vector<std::size_t> regular_positions;
  for (std::size_t p = 0; p < seq.size(); ++p) {
    if (!table.vocab().IsSpecial(seq[p])) regular_positions.push_back(p);
  }

  const std::size_t dim = table.dim();
  for (std::size_t e = 0; e < etas.size(); ++e) {
    const PrivacyParams params{etas[e], table.dim(), master_seed};
    ValidatePrivacyParams(params);
    auto& entry = report.per_eta[e];
    entry.eta = etas[e];
    entry.privatized_ids = seq;
    entry.histograms.resize(regular_positions.size());
    ParallelFor(regular_positions.size(), workers, [&](std::size_t r) {
      const std::size_t p = regular_positions[r];
      const TokenId original = seq[p];
      std::vector<TokenId> outputs;
      outputs.reserve(trials);
      std::vector<double> queries;
      for (std::size_t begin = 0; begin < static_cast<std::size_t>(trials);
           begin += kQueryChunk) {
        const std::size_t n = std::min(kQueryChunk, trials - begin);
        queries.assign(n * dim, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const auto perturbed = PerturbEmbedding(
              table.Row(original), params,
              StreamKey{static_cast<std::uint64_t>(
                            StreamContext::kPerturbationExamples),
                        PackItem(e, p), begin + i});
          std::copy(perturbed.begin(), perturbed.end(), queries.begin() + i * dim);
        }
        const auto nearest = table.BatchedNearest(queries, n, candidates, 1);
        outputs.insert(outputs.end(), nearest.begin(), nearest.end());
      }
      entry.privatized_ids[p] = outputs[0];
      std::unordered_map<TokenId, int> counts;
      for (TokenId o : outputs) ++counts[o];
      std::vector<PerturbedTokenCount> sorted;
      sorted.reserve(counts.size());
      for (const auto& [id, count] : counts) sorted.push_back({id, count});
      std::sort(sorted.begin(), sorted.end(),
                [](const PerturbedTokenCount& a, const PerturbedTokenCount& b) {
                  if (a.count != b.count) return a.count > b.count;
                  return a.id < b.id;
                });
      auto& hist = entry.histograms[r];
      hist.position = p;
      hist.original = original;
      hist.distinct = static_cast<int>(sorted.size());
      if (sorted.size() > static_cast<std::size_t>(top_k)) sorted.resize(top_k);
      hist.top = std::move(sorted);
    });
    entry.privatized_text = Detokenize(entry.privatized_ids, table);
  }
  return report;
}

}  // namespace dxpriv
