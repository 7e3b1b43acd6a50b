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

#ifndef DXPRIV_MLM_OBJECTIVES_H_
#define DXPRIV_MLM_OBJECTIVES_H_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dxpriv/embedding_table.h"
#include "dxpriv/privacy_mechanism.h"

namespace dxpriv {

// Multiset of privatized tokens for one masked position, deduplicated into
// (token, count) entries with ascending token ids.
struct PerturbationSet {
  std::vector<std::pair<TokenId, int>> entries;
  int total = 0;

  static PerturbationSet FromDraws(std::span<const TokenId> draws);
};

// Cross-entropy against a single target token: logsumexp(logits) -
// logits[target], computed with max-shift stabilization.
double VanillaMlmLoss(std::span<const double> logits, TokenId target);

// Count-weighted mean of per-token cross-entropies over the perturbation
// multiset. Throws on an empty set.
double ProbMlmLoss(std::span<const double> logits, const PerturbationSet& pset);

// Same functional form as the vanilla loss with the original (unperturbed)
// token as the target.
double DenoisingMlmLoss(std::span<const double> logits, TokenId original);

// One generated pretraining example. Masked positions are replaced by
// [MASK] in input_ids; per position the original token, one privatized draw,
// and the full draw multiset are recorded as the three prediction targets.
struct MaskedExample {
  TokenSequence input_ids;
  std::vector<std::size_t> masked_positions;
  std::vector<TokenId> original_targets;
  std::vector<TokenId> vanilla_targets;
  std::vector<PerturbationSet> prob_targets;
};

struct PretrainConfig {
  double mask_rate = 0.15;
  int max_predictions = 20;
  int prob_draws = 10;
  // How context (non-masked) tokens are privatized. Text mode rewrites them
  // in input_ids; representation mode leaves the ids unchanged because the
  // perturbed vectors are produced by the training consumer on the fly.
  PrivatizationMode context_mode = PrivatizationMode::kText;
  CandidateSet candidates = CandidateSet::kRegularOnly;
};

// Generates masked examples for the whole corpus. Mask selection draws from
// its own stream context keyed by (sequence, position) only, so re-running
// with a different `round` re-draws every perturbation while keeping the
// mask positions fixed. Deterministic given (params.master_seed, round).
std::vector<MaskedExample> GeneratePretrainingExamples(
    const std::vector<TokenSequence>& corpus, const EmbeddingTable& table,
    const PrivacyParams& params, const PretrainConfig& config,
    std::uint64_t round = 0, int workers = 0);

}  // namespace dxpriv

#endif  // DXPRIV_MLM_OBJECTIVES_H_
