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

#include "test_util.h"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dxpriv/rng.h"

namespace dxpriv {
namespace testing {

EmbeddingTable MakeTable(std::vector<std::string> tokens, std::vector<float> data,
                         int dim) {
  return EmbeddingTable(Vocabulary(std::move(tokens)), std::move(data), dim);
}

EmbeddingTable MakeTinyTable() {
  return MakeTable({"a", "b", "c"}, {0, 0, 1, 0, 0, 1}, 2);
}

EmbeddingTable MakeTwoTokenLine() {
  return MakeTable({"a", "b"}, {0.0f, 1.0f}, 1);
}

EmbeddingTable MakeGaussianTable(int words, int dim, double scale,
                                 std::uint64_t seed, bool with_specials) {
  std::vector<std::string> tokens;
  if (with_specials) {
    tokens = {"[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"};
  }
  char name[32];
  for (int w = 0; w < words; ++w) {
    std::snprintf(name, sizeof(name), "w%04d", w);
    tokens.emplace_back(name);
  }
  std::vector<float> data(tokens.size() * static_cast<std::size_t>(dim), 0.0f);
  const std::size_t first_word = with_specials ? 5 : 0;
  for (std::size_t row = first_word; row < tokens.size(); ++row) {
    StreamRng rng(seed, StreamContext::kTesting, row);
    for (int d = 0; d < dim; ++d) {
      data[row * dim + d] = static_cast<float>(scale * rng.NextGaussian());
    }
  }
  return MakeTable(std::move(tokens), std::move(data), dim);
}

double NaiveSquaredDistance(const EmbeddingTable& table, std::span<const double> query,
                            TokenId id) {
  const auto row = table.Row(id);
  double acc = 0.0;
  for (std::size_t d = 0; d < query.size(); ++d) {
    const double diff = query[d] - static_cast<double>(row[d]);
    acc += diff * diff;
  }
  return acc;
}

TokenId NaiveNearest(const EmbeddingTable& table, std::span<const double> query,
                     CandidateSet candidates) {
  double best = std::numeric_limits<double>::infinity();
  TokenId best_id = 0;
  bool found = false;
  for (std::size_t id = 0; id < table.size(); ++id) {
    if (candidates == CandidateSet::kRegularOnly &&
        table.vocab().IsSpecial(static_cast<TokenId>(id))) {
      continue;
    }
    const double d = NaiveSquaredDistance(table, query, static_cast<TokenId>(id));
    if (!found || d < best) {
      best = d;
      best_id = static_cast<TokenId>(id);
      found = true;
    }
  }
  if (!found) throw std::invalid_argument("no candidates");
  return best_id;
}

EmbeddingTable MakeProbeTable(const ProbeDataSpec& spec) {
  std::vector<std::string> tokens{"[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"};
  char name[32];
  for (int w = 0; w < spec.words_per_class; ++w) {
    std::snprintf(name, sizeof(name), "pos%03d", w);
    tokens.emplace_back(name);
  }
  for (int w = 0; w < spec.words_per_class; ++w) {
    std::snprintf(name, sizeof(name), "neg%03d", w);
    tokens.emplace_back(name);
  }
  for (int w = 0; w < spec.filler_words; ++w) {
    std::snprintf(name, sizeof(name), "fil%03d", w);
    tokens.emplace_back(name);
  }
  std::vector<float> data(tokens.size() * static_cast<std::size_t>(spec.dim), 0.0f);
  for (std::size_t row = 5; row < tokens.size(); ++row) {
    StreamRng rng(spec.table_seed, StreamContext::kTesting, row);
    float* out = data.data() + row * spec.dim;
    for (int d = 0; d < spec.dim; ++d) {
      out[d] = static_cast<float>(spec.background_jitter * rng.NextGaussian());
    }
    const std::size_t word = row - 5;
    if (word < static_cast<std::size_t>(spec.words_per_class)) {
      out[0] += static_cast<float>(spec.robust_margin +
                                   spec.robust_jitter * rng.NextGaussian());
      out[1] += static_cast<float>(spec.fragile_margin +
                                   spec.fragile_jitter * rng.NextGaussian());
    } else if (word < static_cast<std::size_t>(2 * spec.words_per_class)) {
      out[0] -= static_cast<float>(spec.robust_margin +
                                   spec.robust_jitter * rng.NextGaussian());
      out[1] -= static_cast<float>(spec.fragile_margin +
                                   spec.fragile_jitter * rng.NextGaussian());
    }
  }
  return MakeTable(std::move(tokens), std::move(data), spec.dim);
}

void WriteProbeTsv(const ProbeDataSpec& spec, const EmbeddingTable& table,
                   std::uint64_t data_salt, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (int label = 0; label < 2; ++label) {
    for (int doc = 0; doc < spec.docs_per_class; ++doc) {
      StreamRng rng(spec.data_seed + data_salt, StreamContext::kTesting,
                    PackItem(label, doc));
      const int signal_pos = static_cast<int>(rng.NextU64() % spec.doc_len);
      out << label << '\t';
      for (int t = 0; t < spec.doc_len; ++t) {
        if (t > 0) out << ' ';
        char word[32];
        if (t == signal_pos) {
          std::snprintf(word, sizeof(word), "%s%03d", label == 1 ? "pos" : "neg",
                        static_cast<int>(rng.NextU64() % spec.words_per_class));
        } else {
          std::snprintf(word, sizeof(word), "fil%03d",
                        static_cast<int>(rng.NextU64() % spec.filler_words));
        }
        out << word;
      }
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing " + path);
  (void)table;
}

ScopedTempDir::ScopedTempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  std::ostringstream name;
  name << "dxpriv_test_" << rd() << "_" << counter++;
  dir_ = std::filesystem::temp_directory_path() / name.str();
  std::filesystem::create_directories(dir_);
}

ScopedTempDir::~ScopedTempDir() {
  std::error_code ec;
  std::filesystem::remove_all(dir_, ec);
}

std::string ScopedTempDir::Path(const std::string& name) const {
  return (dir_ / name).string();
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << contents;
}

}  // namespace testing
}  // namespace dxpriv
