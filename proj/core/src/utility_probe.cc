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

#include "dxpriv/utility_probe.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "dxpriv/wordpiece_tokenizer.h"

namespace dxpriv {
namespace {

// Mean of (optionally privatized) token embeddings for one sequence.
// Special tokens contribute their raw embeddings in every mode.
void AccumulateSequenceFeatures(const TokenSequence& seq, const EmbeddingTable& table,
                                PrivatizationMode mode, const PrivacyParams& params,
                                StreamContext context, std::uint64_t item_base,
                                std::uint64_t trial, double* out) {
  const int dim = table.dim();
  std::fill(out, out + dim, 0.0);
  for (std::size_t p = 0; p < seq.size(); ++p) {
    const auto row = table.Row(seq[p]);
    const bool special = table.vocab().IsSpecial(seq[p]);
    if (mode == PrivatizationMode::kNone || special) {
      for (int d = 0; d < dim; ++d) out[d] += static_cast<double>(row[d]);
    } else if (mode == PrivatizationMode::kRepresentation) {
      const auto perturbed =
          PerturbEmbedding(row, params, StreamKey{static_cast<std::uint64_t>(context),
                                                  item_base + p, trial});
      for (int d = 0; d < dim; ++d) out[d] += perturbed[d];
    } else {
      const TokenId mapped = PrivatizeToken(
          seq[p], table, params,
          StreamKey{static_cast<std::uint64_t>(context), item_base + p, trial});
      const auto mapped_row = table.Row(mapped);
      for (int d = 0; d < dim; ++d) out[d] += static_cast<double>(mapped_row[d]);
    }
  }
  for (int d = 0; d < dim; ++d) out[d] /= static_cast<double>(seq.size());
}

// Row-major m x feature_dim matrix of example features.
std::vector<double> ComputeFeatures(const LabeledDataset& data,
                                    const EmbeddingTable& table,
                                    PrivatizationMode mode, const PrivacyParams& params,
                                    StreamContext context, std::uint64_t trial) {
  const int dim = table.dim();
  const int feature_dim = data.is_pair ? 2 * dim : dim;
  std::vector<double> features(data.examples.size() * feature_dim);
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const LabeledExample& ex = data.examples[i];
    double* out = features.data() + i * feature_dim;
    // Disjoint item ranges for the two sequences of a pair.
    AccumulateSequenceFeatures(ex.first, table, mode, params, context,
                               (static_cast<std::uint64_t>(i) << 33), trial, out);
    if (data.is_pair) {
      AccumulateSequenceFeatures(ex.second, table, mode, params, context,
                                 (static_cast<std::uint64_t>(i) << 33) | (1ull << 32),
                                 trial, out + dim);
    }
  }
  return features;
}

double Sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double Accuracy(const LabeledDataset& data, std::span<const double> features,
                int feature_dim, const std::vector<double>& weights, double bias) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const double* x = features.data() + i * feature_dim;
    double z = bias;
    for (int d = 0; d < feature_dim; ++d) z += weights[d] * x[d];
    const int predicted = z > 0.0 ? 1 : 0;
    if (predicted == data.examples[i].label) ++correct;
  }
  return static_cast<double>(correct) / data.examples.size();
}

// Per-dimension mean and standard deviation; zero-variance dimensions keep
// a unit scale so they standardize to zero.
void FitStandardizer(std::span<const double> features, std::size_t rows,
                     int feature_dim, std::vector<double>* means,
                     std::vector<double>* scales) {
  means->assign(feature_dim, 0.0);
  scales->assign(feature_dim, 1.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (int d = 0; d < feature_dim; ++d) {
      (*means)[d] += features[i * feature_dim + d];
    }
  }
  for (int d = 0; d < feature_dim; ++d) (*means)[d] /= static_cast<double>(rows);
  std::vector<double> ss(feature_dim, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (int d = 0; d < feature_dim; ++d) {
      const double c = features[i * feature_dim + d] - (*means)[d];
      ss[d] += c * c;
    }
  }
  for (int d = 0; d < feature_dim; ++d) {
    const double sd = std::sqrt(ss[d] / static_cast<double>(rows));
    if (sd > 0.0) (*scales)[d] = sd;
  }
}

void ApplyStandardizer(std::vector<double>* features, std::size_t rows,
                       int feature_dim, const std::vector<double>& means,
                       const std::vector<double>& scales) {
  if (means.empty()) return;
  for (std::size_t i = 0; i < rows; ++i) {
    for (int d = 0; d < feature_dim; ++d) {
      double& v = (*features)[i * feature_dim + d];
      v = (v - means[d]) / scales[d];
    }
  }
}

void ValidateForPrivatization(PrivatizationMode mode, const PrivacyParams& params,
                              const EmbeddingTable& table) {
  if (mode == PrivatizationMode::kNone) return;
  ValidatePrivacyParams(params);
  if (params.dim != table.dim()) {
    throw std::invalid_argument("params.dim does not match table dimension");
  }
}

}  // namespace

LabeledDataset LoadTsvDataset(const std::string& path, const EmbeddingTable& table,
                              int max_len) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  LabeledDataset data;
  std::string line;
  std::size_t line_no = 0;
  int arity = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (fields.size() != 2 && fields.size() != 3) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 2 or 3 tab-separated fields");
    }
    if (arity == -1) {
      arity = static_cast<int>(fields.size());
      data.is_pair = arity == 3;
    } else if (static_cast<int>(fields.size()) != arity) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": inconsistent field count");
    }
    if (fields[0] != "0" && fields[0] != "1") {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": label must be 0 or 1");
    }
    LabeledExample example;
    example.label = fields[0] == "1" ? 1 : 0;
    example.first = Tokenize(fields[1], table, max_len);
    if (example.first.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty text");
    }
    if (data.is_pair) {
      example.second = Tokenize(fields[2], table, max_len);
      if (example.second.empty()) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": empty second text");
      }
    }
    data.examples.push_back(std::move(example));
  }
  return data;
}

ProbeModel TrainProbe(const LabeledDataset& data, const EmbeddingTable& table,
                      PrivatizationMode mode, const PrivacyParams& params,
                      const ProbeConfig& config) {
  if (data.examples.empty()) throw std::invalid_argument("empty dataset");
  bool has_positive = false, has_negative = false;
  for (const auto& ex : data.examples) {
    (ex.label == 1 ? has_positive : has_negative) = true;
  }
  if (!has_positive || !has_negative) {
    throw std::invalid_argument("dataset contains a single class");
  }
  if (config.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  ValidateForPrivatization(mode, params, table);

  const int feature_dim = data.is_pair ? 2 * table.dim() : table.dim();
  ProbeModel model;
  model.feature_dim = feature_dim;
  model.weights.assign(feature_dim, 0.0);

  const std::size_t m = data.examples.size();
  std::vector<double> features;
  std::vector<double> gradient(feature_dim);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (epoch == 0 || mode != PrivatizationMode::kNone) {
      features = ComputeFeatures(data, table, mode, params,
                                 StreamContext::kProbeTrainNoise,
                                 static_cast<std::uint64_t>(epoch));
      if (epoch == 0) {
        FitStandardizer(features, m, feature_dim, &model.feature_means,
                        &model.feature_scales);
      }
      ApplyStandardizer(&features, m, feature_dim, model.feature_means,
                        model.feature_scales);
    }
    std::fill(gradient.begin(), gradient.end(), 0.0);
    double bias_gradient = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double* x = features.data() + i * feature_dim;
      double z = model.bias;
      for (int d = 0; d < feature_dim; ++d) z += model.weights[d] * x[d];
      const double residual = Sigmoid(z) - data.examples[i].label;
      for (int d = 0; d < feature_dim; ++d) gradient[d] += residual * x[d];
      bias_gradient += residual;
    }
    const double scale = config.learning_rate / static_cast<double>(m);
    for (int d = 0; d < feature_dim; ++d) model.weights[d] -= scale * gradient[d];
    model.bias -= scale * bias_gradient;
  }
  model.final_train_accuracy = Accuracy(data, features, feature_dim, model.weights,
                                        model.bias);
  return model;
}

double EvalProbe(const ProbeModel& model, const LabeledDataset& data,
                 const EmbeddingTable& table, PrivatizationMode mode,
                 const PrivacyParams& params) {
  if (data.examples.empty()) throw std::invalid_argument("empty dataset");
  const int feature_dim = data.is_pair ? 2 * table.dim() : table.dim();
  if (feature_dim != model.feature_dim) {
    throw std::invalid_argument("model feature dimension " +
                                std::to_string(model.feature_dim) +
                                " does not match data dimension " +
                                std::to_string(feature_dim));
  }
  ValidateForPrivatization(mode, params, table);
  std::vector<double> features = ComputeFeatures(
      data, table, mode, params, StreamContext::kProbeEvalNoise, 0);
  ApplyStandardizer(&features, data.examples.size(), feature_dim,
                    model.feature_means, model.feature_scales);
  return Accuracy(data, features, feature_dim, model.weights, model.bias);
}

const char* PrivatizationModeName(PrivatizationMode mode) {
  switch (mode) {
    case PrivatizationMode::kNone: return "none";
    case PrivatizationMode::kRepresentation: return "representation";
    case PrivatizationMode::kText: return "text";
  }
  return "unknown";
}

ProbeGridResult RunProbeGrid(const LabeledDataset& train, const LabeledDataset& eval,
                             const EmbeddingTable& table,
                             std::span<const PrivatizationMode> modes,
                             std::span<const double> etas, std::uint64_t base_seed,
                             int seed_count, const ProbeConfig& config) {
  if (seed_count < 1) throw std::invalid_argument("seed count must be >= 1");
  ProbeGridResult result;
  auto run_cell = [&](PrivatizationMode mode, double eta) {
    std::vector<double> evals;
    for (int s = 0; s < seed_count; ++s) {
      const PrivacyParams params{std::isnan(eta) ? 1.0 : eta, table.dim(),
                                 base_seed + static_cast<std::uint64_t>(s)};
      const ProbeModel model = TrainProbe(train, table, mode, params, config);
      const double acc = EvalProbe(model, eval, table, mode, params);
      result.rows.push_back({mode, eta, params.master_seed,
                             model.final_train_accuracy, acc});
      evals.push_back(acc);
    }
    double mean = 0.0;
    for (double a : evals) mean += a;
    mean /= evals.size();
    double stderr_eval = 0.0;
    if (evals.size() > 1) {
      double ss = 0.0;
      for (double a : evals) ss += (a - mean) * (a - mean);
      stderr_eval = std::sqrt(ss / (evals.size() - 1) / evals.size());
    }
    result.aggregates.push_back({mode, eta, mean, stderr_eval,
                                 static_cast<int>(evals.size())});
  };
  for (PrivatizationMode mode : modes) {
    if (mode == PrivatizationMode::kNone) {
      run_cell(mode, std::numeric_limits<double>::quiet_NaN());
    } else {
      for (double eta : etas) run_cell(mode, eta);
    }
  }
  return result;
}

}  // namespace dxpriv
