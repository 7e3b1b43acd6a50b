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

#include "dxpriv/mlm_objectives.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "dxpriv/parallel.h"

namespace dxpriv {
namespace {

double LogSumExp(std::span<const double> logits) {
  double max_logit = logits[0];
  for (double v : logits) max_logit = std::max(max_logit, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - max_logit);
  return max_logit + std::log(sum);
}

void CheckTarget(std::span<const double> logits, TokenId target) {
  if (logits.empty()) throw std::invalid_argument("empty logit vector");
  if (target >= logits.size()) {
    throw std::invalid_argument("target id " + std::to_string(target) +
                                " out of range for " + std::to_string(logits.size()) +
                                " logits");
  }
}

}  // namespace

PerturbationSet PerturbationSet::FromDraws(std::span<const TokenId> draws) {
  std::map<TokenId, int> counts;
  for (TokenId id : draws) ++counts[id];
  PerturbationSet pset;
  pset.entries.assign(counts.begin(), counts.end());
  pset.total = static_cast<int>(draws.size());
  return pset;
}

double VanillaMlmLoss(std::span<const double> logits, TokenId target) {
  CheckTarget(logits, target);
  return LogSumExp(logits) - logits[target];
}

double ProbMlmLoss(std::span<const double> logits, const PerturbationSet& pset) {
  if (pset.entries.empty() || pset.total <= 0) {
    throw std::invalid_argument("empty perturbation set");
  }
  const double lse = LogSumExp(logits);
  double weighted_logit = 0.0;
  for (const auto& [id, count] : pset.entries) {
    CheckTarget(logits, id);
    if (count < 1) throw std::invalid_argument("perturbation count must be >= 1");
    weighted_logit += (static_cast<double>(count) / pset.total) * logits[id];
  }
  return lse - weighted_logit;
}

double DenoisingMlmLoss(std::span<const double> logits, TokenId original) {
  return VanillaMlmLoss(logits, original);
}

std::vector<MaskedExample> GeneratePretrainingExamples(
    const std::vector<TokenSequence>& corpus, const EmbeddingTable& table,
    const PrivacyParams& params, const PretrainConfig& config, std::uint64_t round,
    int workers) {
  ValidatePrivacyParams(params);
  if (params.dim != table.dim()) {
    throw std::invalid_argument("params.dim does not match table dimension");
  }
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  if (config.mask_rate < 0.0 || config.mask_rate > 1.0) {
    throw std::invalid_argument("mask_rate must lie in [0, 1]");
  }
  if (config.max_predictions < 0) {
    throw std::invalid_argument("max_predictions must be >= 0");
  }
  if (config.prob_draws < 1) throw std::invalid_argument("prob_draws must be >= 1");
  if (config.context_mode != PrivatizationMode::kText &&
      config.context_mode != PrivatizationMode::kRepresentation) {
    throw std::invalid_argument("context mode must be text or representation");
  }
  std::optional<TokenId> mask_id = table.vocab().Find("[MASK]");
  if (config.mask_rate > 0.0 && config.max_predictions > 0 && !mask_id) {
    throw std::invalid_argument("vocabulary does not contain [MASK]");
  }

  std::vector<MaskedExample> out(corpus.size());
  ParallelFor(corpus.size(), workers, [&](std::size_t s) {
    const TokenSequence& seq = corpus[s];
    MaskedExample& example = out[s];
    example.input_ids = seq;

    // Independent Bernoulli(mask_rate) per regular position; when more
    // positions are selected than max_predictions, the ones with the
    // smallest selection draws win.
    struct Selected {
      double u;
      std::size_t pos;
    };
    std::vector<Selected> selected;
    for (std::size_t p = 0; p < seq.size(); ++p) {
      if (table.vocab().IsSpecial(seq[p])) continue;
      StreamRng rng(params.master_seed, StreamContext::kMaskSelection,
                    PackItem(s, p));
      const double u = rng.NextUnit();
      if (u < config.mask_rate) selected.push_back({u, p});
    }
    if (selected.size() > static_cast<std::size_t>(config.max_predictions)) {
      std::sort(selected.begin(), selected.end(),
                [](const Selected& a, const Selected& b) {
                  if (a.u != b.u) return a.u < b.u;
                  return a.pos < b.pos;
                });
      selected.resize(config.max_predictions);
    }
    std::sort(selected.begin(), selected.end(),
              [](const Selected& a, const Selected& b) { return a.pos < b.pos; });
    std::vector<bool> masked(seq.size(), false);
    for (const Selected& sel : selected) masked[sel.pos] = true;

    if (config.context_mode == PrivatizationMode::kText) {
      for (std::size_t p = 0; p < seq.size(); ++p) {
        if (masked[p] || table.vocab().IsSpecial(seq[p])) continue;
        example.input_ids[p] = PrivatizeToken(
            seq[p], table, params,
            StreamKey{static_cast<std::uint64_t>(StreamContext::kMlmContext),
                      PackItem(s, p), PackItem(round, 0)},
            config.candidates);
      }
    }

    for (const Selected& sel : selected) {
      const std::size_t p = sel.pos;
      example.masked_positions.push_back(p);
      example.original_targets.push_back(seq[p]);
      std::vector<TokenId> draws(config.prob_draws);
      for (int d = 0; d < config.prob_draws; ++d) {
        draws[d] = PrivatizeToken(
            seq[p], table, params,
            StreamKey{static_cast<std::uint64_t>(StreamContext::kMlmTarget),
                      PackItem(s, p), PackItem(round, d)},
            config.candidates);
      }
      example.vanilla_targets.push_back(draws[0]);
      example.prob_targets.push_back(PerturbationSet::FromDraws(draws));
      example.input_ids[p] = *mask_id;
    }
  });
  return out;
}

}  // namespace dxpriv
