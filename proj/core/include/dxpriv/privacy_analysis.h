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

#ifndef DXPRIV_PRIVACY_ANALYSIS_H_
#define DXPRIV_PRIVACY_ANALYSIS_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dxpriv/embedding_table.h"
#include "dxpriv/privacy_mechanism.h"

namespace dxpriv {

// Embedding-space geometry: average noise magnitude per eta next to the
// average k-th nearest-neighbor distance over regular tokens.
struct GeometryReport {
  std::vector<double> etas;
  std::vector<double> avg_noise_norm;   // aligned with etas
  bool noise_closed_form = false;       // true when reported as dim/eta
  int noise_samples = 0;
  std::vector<int> ks;
  std::vector<double> avg_knn_distance;  // aligned with ks
  int token_stride = 1;
  std::size_t tokens_used = 0;
  std::uint64_t master_seed = 0;
  int dim = 0;
};

// noise_samples == 0 reports the closed-form mean dim/eta; otherwise the
// norm is estimated over that many seeded draws per eta. token_stride > 1
// subsamples the regular vocabulary for the k-NN averages (every stride-th
// token), which keeps full-vocabulary tables tractable.
GeometryReport GeometryProfile(const EmbeddingTable& table, std::uint64_t master_seed,
                               std::span<const double> etas, std::span<const int> ks,
                               int noise_samples, int token_stride = 1,
                               int workers = 0);

struct DeniabilityTokenStats {
  TokenId id;
  int n_w;  // outputs identical to the input token
  int s_w;  // distinct outputs
};

// Plausible-deniability statistics from repeated text-to-text privatization.
struct DeniabilityReport {
  double eta = 0.0;
  std::uint64_t master_seed = 0;
  int trials = 0;
  std::vector<DeniabilityTokenStats> tokens;     // ascending token id
  std::vector<std::pair<int, int>> n_w_histogram;  // (value, token count)
  std::vector<std::pair<int, int>> s_w_histogram;
  double mean_n_w_rate = 0.0;
  double mean_s_w = 0.0;
  int max_n_w = 0;
  int min_s_w = 0;
};

// Monte Carlo over `trials` independent draws per token. The subset must
// contain only regular tokens; nullptr means every regular token. Results
// are keyed by token id, so they are invariant to subset order and to the
// worker count.
DeniabilityReport DeniabilityStats(const EmbeddingTable& table,
                                   const PrivacyParams& params, int trials,
                                   const std::vector<TokenId>* subset = nullptr,
                                   CandidateSet candidates = CandidateSet::kRegularOnly,
                                   int workers = 0);

struct InversionTokenStats {
  TokenId id;
  std::size_t occurrences;
  std::size_t correct;
};

// Nearest-neighbor recovery of original tokens from perturbed embeddings.
struct InversionReport {
  double eta = 0.0;
  std::uint64_t master_seed = 0;
  std::size_t total = 0;    // regular token occurrences evaluated
  std::size_t correct = 0;  // exactly recovered
  double accuracy = 0.0;
  std::vector<InversionTokenStats> per_token;  // filled only when requested
};

// Perturbs each regular corpus occurrence once and recovers it by nearest
// neighbor over the candidate set. Occurrences are weighted by corpus
// frequency, not deduplicated. Throws on an empty corpus.
InversionReport InversionAttack(const std::vector<TokenSequence>& corpus,
                                const EmbeddingTable& table,
                                const PrivacyParams& params,
                                bool per_token_breakdown = false,
                                CandidateSet candidates = CandidateSet::kRegularOnly,
                                int workers = 0);

struct PerturbedTokenCount {
  TokenId id;
  int count;
};

struct PositionHistogram {
  std::size_t position;
  TokenId original;
  int distinct;
  std::vector<PerturbedTokenCount> top;  // count descending, then id ascending
};

struct EtaPerturbationExamples {
  double eta;
  TokenSequence privatized_ids;  // the trial-0 privatized sequence
  std::string privatized_text;
  std::vector<PositionHistogram> histograms;  // regular positions only
};

// Perturbed-sentence examples: one privatized sequence per eta plus
// per-token output histograms over `trials` draws.
struct PerturbationExamplesReport {
  TokenSequence original_ids;
  std::string original_text;
  int trials = 0;
  int top_k = 0;
  std::uint64_t master_seed = 0;
  std::vector<EtaPerturbationExamples> per_eta;
};

PerturbationExamplesReport PerturbationExamples(
    const TokenSequence& seq, const EmbeddingTable& table, std::uint64_t master_seed,
    std::span<const double> etas, int trials, int top_k,
    CandidateSet candidates = CandidateSet::kRegularOnly, int workers = 0);

}  // namespace dxpriv

#endif  // DXPRIV_PRIVACY_ANALYSIS_H_
