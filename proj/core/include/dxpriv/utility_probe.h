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

#ifndef DXPRIV_UTILITY_PROBE_H_
#define DXPRIV_UTILITY_PROBE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dxpriv/embedding_table.h"
#include "dxpriv/privacy_mechanism.h"

namespace dxpriv {

// One labeled classification example: a token sequence, or a sequence pair
// for paraphrase-style tasks.
struct LabeledExample {
  TokenSequence first;
  TokenSequence second;  // empty unless the dataset is a pair task
  int label = 0;         // 0 or 1
};

struct LabeledDataset {
  std::vector<LabeledExample> examples;
  bool is_pair = false;
};

// Reads "label<TAB>text" or "label<TAB>text1<TAB>text2" lines, tokenizing
// against the table. All lines must share the same arity; labels must be 0
// or 1; texts must tokenize to at least one token.
LabeledDataset LoadTsvDataset(const std::string& path, const EmbeddingTable& table,
                              int max_len);

struct ProbeConfig {
  double learning_rate = 1.0;
  int epochs = 200;
};

// Logistic regression over averaged token embeddings; the desk-scale
// stand-in for an encoder fine-tuned under privacy constraints. Features
// are standardized per dimension with statistics fitted on the first
// training pass; evaluation reuses the stored statistics.
struct ProbeModel {
  std::vector<double> weights;
  double bias = 0.0;
  int feature_dim = 0;
  std::vector<double> feature_means;
  std::vector<double> feature_scales;
  double final_train_accuracy = 0.0;
};

// Trains by full-batch gradient descent. Under representation or text
// privatization the training inputs are re-privatized each epoch with fresh
// trial indices, simulating on-the-fly perturbation at the user side.
// Throws if the dataset is empty or single-class.
ProbeModel TrainProbe(const LabeledDataset& data, const EmbeddingTable& table,
                      PrivatizationMode mode, const PrivacyParams& params,
                      const ProbeConfig& config);

// Accuracy on (privatized) evaluation input; deterministic given the seed.
double EvalProbe(const ProbeModel& model, const LabeledDataset& data,
                 const EmbeddingTable& table, PrivatizationMode mode,
                 const PrivacyParams& params);

struct ProbeRunResult {
  PrivatizationMode mode;
  double eta;  // NaN for the no-privatization row
  std::uint64_t seed;
  double train_accuracy;
  double eval_accuracy;
};

struct ProbeAggregate {
  PrivatizationMode mode;
  double eta;  // NaN for the no-privatization row
  double mean_eval_accuracy;
  double stderr_eval_accuracy;
  int seeds;
};

struct ProbeGridResult {
  std::vector<ProbeRunResult> rows;
  std::vector<ProbeAggregate> aggregates;
};

// Runs the (mode x eta x seed) grid with master seeds base_seed + i. The
// no-privatization mode contributes one row per seed independent of eta.
ProbeGridResult RunProbeGrid(const LabeledDataset& train, const LabeledDataset& eval,
                             const EmbeddingTable& table,
                             std::span<const PrivatizationMode> modes,
                             std::span<const double> etas, std::uint64_t base_seed,
                             int seed_count, const ProbeConfig& config);

const char* PrivatizationModeName(PrivatizationMode mode);

}  // namespace dxpriv

#endif  // DXPRIV_UTILITY_PROBE_H_
