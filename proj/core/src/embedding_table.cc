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

#include "dxpriv/embedding_table.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dxpriv/parallel.h"

namespace dxpriv {
namespace {

constexpr char kBinaryMagic[5] = {'D', 'X', 'P', 'V', '1'};

[[noreturn]] void LoadError(const std::string& path, std::size_t line,
                            const std::string& message) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + message);
}

[[noreturn]] void BinaryError(const std::string& path, std::uint64_t offset,
                              const std::string& message) {
  throw std::runtime_error(path + ": offset " + std::to_string(offset) + ": " +
                           message);
}

bool ParseFloat(std::string_view text, float* out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, *out);
  return ec == std::errc() && ptr == end;
}

std::string FormatFloat(float value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  special_.resize(tokens_.size());
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw std::invalid_argument("duplicate token in vocabulary: " + tokens_[i]);
    }
    special_[i] = IsSpecialToken(tokens_[i]) ? 1 : 0;
  }
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) +
                            " out of range for vocabulary of size " +
                            std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::optional<TokenId> Vocabulary::Find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::IsSpecial(TokenId id) const {
  if (id >= special_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " out of range");
  }
  return special_[id] != 0;
}

bool Vocabulary::IsSpecialToken(std::string_view token) {
  if (token == "[PAD]" || token == "[CLS]" || token == "[SEP]" ||
      token == "[MASK]" || token == "[UNK]") {
    return true;
  }
  constexpr std::string_view kPrefix = "[unused";
  if (token.size() > kPrefix.size() + 1 && token.substr(0, kPrefix.size()) == kPrefix &&
      token.back() == ']') {
    const std::string_view digits = token.substr(kPrefix.size(),
                                                 token.size() - kPrefix.size() - 1);
    return !digits.empty() &&
           std::all_of(digits.begin(), digits.end(),
                       [](char c) { return c >= '0' && c <= '9'; });
  }
  return false;
}

EmbeddingTable::EmbeddingTable(Vocabulary vocab, std::vector<float> row_major, int dim)
    : vocab_(std::move(vocab)), dim_(dim), data_(std::move(row_major)) {
  if (dim_ <= 0) throw std::invalid_argument("embedding dimension must be positive");
  if (data_.size() != vocab_.size() * static_cast<std::size_t>(dim_)) {
    throw std::invalid_argument("embedding matrix size does not match |V| x dim");
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw std::invalid_argument("non-finite embedding component in row " +
                                  std::to_string(i / dim_));
    }
  }
  squared_norms_.resize(vocab_.size());
  for (std::size_t row = 0; row < vocab_.size(); ++row) {
    const float* p = data_.data() + row * dim_;
    double acc = 0.0;
    for (int d = 0; d < dim_; ++d) acc += static_cast<double>(p[d]) * p[d];
    squared_norms_[row] = acc;
  }
  all_ids_.resize(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    all_ids_[i] = static_cast<TokenId>(i);
    if (!vocab_.IsSpecial(static_cast<TokenId>(i))) {
      regular_ids_.push_back(static_cast<TokenId>(i));
    }
  }
}

std::span<const float> EmbeddingTable::Row(TokenId id) const {
  if (id >= vocab_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) +
                            " out of range for table of size " +
                            std::to_string(vocab_.size()));
  }
  return {data_.data() + static_cast<std::size_t>(id) * dim_,
          static_cast<std::size_t>(dim_)};
}

double EmbeddingTable::SquaredNorm(TokenId id) const {
  if (id >= squared_norms_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " out of range");
  }
  return squared_norms_[id];
}

std::span<const TokenId> EmbeddingTable::CandidateIds(CandidateSet candidates) const {
  return candidates == CandidateSet::kAll ? std::span<const TokenId>(all_ids_)
                                          : std::span<const TokenId>(regular_ids_);
}

namespace {

// Scores one query against a block of candidate rows and keeps the running
// argmin. The score is ||c||^2 - 2 q.c, which orders candidates identically
// to the true squared distance (the ||q||^2 term is constant per query).
// Strict less-than on ascending ids keeps the lowest id on exact ties.
void ScanCandidates(const double* query, const float* data, int dim,
                    const double* squared_norms, const TokenId* cand_ids,
                    std::size_t cand_count, double* best_score, TokenId* best_id) {
  for (std::size_t c = 0; c < cand_count; ++c) {
    const TokenId id = cand_ids[c];
    const float* row = data + static_cast<std::size_t>(id) * dim;
    double dot = 0.0;
    for (int d = 0; d < dim; ++d) dot += query[d] * static_cast<double>(row[d]);
    const double score = squared_norms[id] - 2.0 * dot;
    if (score < *best_score) {
      *best_score = score;
      *best_id = id;
    }
  }
}

}  // namespace

TokenId EmbeddingTable::NearestToken(std::span<const double> query,
                                     CandidateSet candidates) const {
  if (query.size() != static_cast<std::size_t>(dim_)) {
    throw std::invalid_argument("query width " + std::to_string(query.size()) +
                                " does not match table dimension " +
                                std::to_string(dim_));
  }
  for (double v : query) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite query component");
  }
  const auto cand = CandidateIds(candidates);
  if (cand.empty()) throw std::invalid_argument("empty candidate set");
  double best_score = std::numeric_limits<double>::infinity();
  TokenId best_id = cand[0];
  ScanCandidates(query.data(), data_.data(), dim_, squared_norms_.data(), cand.data(),
                 cand.size(), &best_score, &best_id);
  return best_id;
}

std::vector<Neighbor> EmbeddingTable::Knn(TokenId id, int k,
                                          CandidateSet candidates) const {
  const auto self_row = Row(id);  // validates id
  const auto cand = CandidateIds(candidates);
  std::size_t others = cand.size();
  for (TokenId c : cand) {
    if (c == id) { others = cand.size() - 1; break; }
  }
  if (k < 1 || static_cast<std::size_t>(k) > others) {
    throw std::invalid_argument("k = " + std::to_string(k) +
                                " out of range; candidate count is " +
                                std::to_string(others));
  }
  std::vector<Neighbor> neighbors;
  neighbors.reserve(cand.size());
  for (TokenId c : cand) {
    if (c == id) continue;
    const float* row = data_.data() + static_cast<std::size_t>(c) * dim_;
    double dot = 0.0;
    for (int d = 0; d < dim_; ++d) {
      dot += static_cast<double>(self_row[d]) * static_cast<double>(row[d]);
    }
    double sq = squared_norms_[id] - 2.0 * dot + squared_norms_[c];
    if (sq < 0.0) sq = 0.0;
    neighbors.push_back({c, std::sqrt(sq)});
  }
  auto by_distance_then_id = [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
  };
  std::nth_element(neighbors.begin(), neighbors.begin() + (k - 1), neighbors.end(),
                   by_distance_then_id);
  neighbors.resize(k);
  std::sort(neighbors.begin(), neighbors.end(), by_distance_then_id);
  return neighbors;
}

std::vector<TokenId> EmbeddingTable::BatchedNearest(std::span<const double> queries,
                                                    std::size_t count,
                                                    CandidateSet candidates,
                                                    int workers) const {
  BatchedNearestOptions options;
  options.workers = workers;
  return BatchedNearest(queries, count, candidates, options);
}

std::vector<TokenId> EmbeddingTable::BatchedNearest(
    std::span<const double> queries, std::size_t count, CandidateSet candidates,
    const BatchedNearestOptions& options) const {
  if (queries.size() != count * static_cast<std::size_t>(dim_)) {
    throw std::invalid_argument("query matrix size does not match count x dim");
  }
  for (double v : queries) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite query component");
  }
  const auto cand = CandidateIds(candidates);
  if (cand.empty() && count > 0) throw std::invalid_argument("empty candidate set");
  std::vector<TokenId> result(count);
  const std::size_t query_block = std::max(1, options.query_block);
  const std::size_t cand_block = std::max(1, options.candidate_block);
  ParallelForRange(count, options.workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> best_scores(query_block);
    std::vector<TokenId> best_ids(query_block);
    for (std::size_t qb = begin; qb < end; qb += query_block) {
      const std::size_t qn = std::min(query_block, end - qb);
      std::fill_n(best_scores.begin(), qn, std::numeric_limits<double>::infinity());
      std::fill_n(best_ids.begin(), qn, cand[0]);
      // Candidate blocks stay cache-resident while each query in the block
      // streams over them.
      for (std::size_t cb = 0; cb < cand.size(); cb += cand_block) {
        const std::size_t cn = std::min(cand_block, cand.size() - cb);
        for (std::size_t qi = 0; qi < qn; ++qi) {
          ScanCandidates(queries.data() + (qb + qi) * dim_, data_.data(), dim_,
                         squared_norms_.data(), cand.data() + cb, cn,
                         &best_scores[qi], &best_ids[qi]);
        }
      }
      std::copy_n(best_ids.begin(), qn, result.begin() + qb);
    }
  });
  return result;
}

EmbeddingTable EmbeddingTable::Load(const std::string& path, TableFormat format) {
  if (format == TableFormat::kText) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open table file: " + path);
    std::string line;
    if (!std::getline(in, line)) LoadError(path, 1, "missing header line");
    std::istringstream header(line);
    long long vocab_size = -1, dim = -1;
    if (!(header >> vocab_size >> dim) || vocab_size < 0 || dim <= 0) {
      LoadError(path, 1, "malformed header; expected \"|V| n\"");
    }
    std::string extra;
    if (header >> extra) LoadError(path, 1, "trailing content in header");
    std::vector<std::string> tokens;
    tokens.reserve(vocab_size);
    std::unordered_map<std::string, std::size_t> seen;
    seen.reserve(vocab_size);
    std::vector<float> data;
    data.reserve(static_cast<std::size_t>(vocab_size) * dim);
    std::size_t line_no = 1;
    std::vector<std::string_view> fields;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() && tokens.size() == static_cast<std::size_t>(vocab_size)) {
        continue;  // tolerate trailing blank lines
      }
      fields.clear();
      std::size_t pos = 0;
      while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' ||
                                     line[pos] == '\r')) {
          ++pos;
        }
        std::size_t start = pos;
        while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' &&
               line[pos] != '\r') {
          ++pos;
        }
        if (pos > start) fields.emplace_back(line.data() + start, pos - start);
      }
      if (fields.empty()) LoadError(path, line_no, "empty row");
      if (tokens.size() >= static_cast<std::size_t>(vocab_size)) {
        LoadError(path, line_no, "more rows than the declared vocabulary size");
      }
      if (fields.size() != static_cast<std::size_t>(dim) + 1) {
        LoadError(path, line_no,
                  "expected " + std::to_string(dim) + " components, got " +
                      std::to_string(fields.size() - 1));
      }
      for (std::size_t f = 1; f < fields.size(); ++f) {
        float value;
        if (!ParseFloat(fields[f], &value)) {
          LoadError(path, line_no, "malformed component \"" + std::string(fields[f]) + "\"");
        }
        if (!std::isfinite(value)) LoadError(path, line_no, "non-finite component");
        data.push_back(value);
      }
      std::string token(fields[0]);
      auto [it, inserted] = seen.emplace(token, line_no);
      if (!inserted) {
        LoadError(path, line_no, "duplicate token \"" + token + "\" (first seen on line " +
                                     std::to_string(it->second) + ")");
      }
      tokens.push_back(std::move(token));
    }
    if (tokens.size() != static_cast<std::size_t>(vocab_size)) {
      LoadError(path, line_no, "expected " + std::to_string(vocab_size) +
                                   " rows, got " + std::to_string(tokens.size()));
    }
    return EmbeddingTable(Vocabulary(std::move(tokens)), std::move(data),
                          static_cast<int>(dim));
  }

  // Binary format: magic "DXPV1", little-endian u32 |V| and u32 n,
  // length-prefixed UTF-8 tokens, then row-major 32-bit floats.
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open table file: " + path);
  auto read_bytes = [&](void* out, std::size_t bytes) {
    in.read(static_cast<char*>(out), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes) {
      BinaryError(path, static_cast<std::uint64_t>(in.tellg()), "unexpected end of file");
    }
  };
  char magic[5];
  read_bytes(magic, 5);
  if (std::memcmp(magic, kBinaryMagic, 5) != 0) {
    BinaryError(path, 0, "bad magic; not a DXPV1 table");
  }
  std::uint32_t vocab_size = 0, dim = 0;
  read_bytes(&vocab_size, 4);
  read_bytes(&dim, 4);
  if (dim == 0) BinaryError(path, 9, "dimension must be positive");
  std::vector<std::string> tokens;
  tokens.reserve(vocab_size);
  for (std::uint32_t i = 0; i < vocab_size; ++i) {
    std::uint32_t length = 0;
    read_bytes(&length, 4);
    if (length > (1u << 20)) {
      BinaryError(path, static_cast<std::uint64_t>(in.tellg()),
                  "implausible token length " + std::to_string(length));
    }
    std::string token(length, '\0');
    if (length > 0) read_bytes(token.data(), length);
    tokens.push_back(std::move(token));
  }
  std::vector<float> data(static_cast<std::size_t>(vocab_size) * dim);
  if (!data.empty()) read_bytes(data.data(), data.size() * sizeof(float));
  char trailing;
  in.read(&trailing, 1);
  if (in.gcount() != 0) {
    BinaryError(path, static_cast<std::uint64_t>(in.tellg()), "trailing bytes");
  }
  try {
    return EmbeddingTable(Vocabulary(std::move(tokens)), std::move(data),
                          static_cast<int>(dim));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void EmbeddingTable::Save(const std::string& path, TableFormat format) const {
  std::ofstream out(path, format == TableFormat::kBinary
                              ? std::ios::binary | std::ios::trunc
                              : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  if (format == TableFormat::kText) {
    out << vocab_.size() << ' ' << dim_ << '\n';
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      out << vocab_.token(static_cast<TokenId>(i));
      const float* row = data_.data() + i * dim_;
      for (int d = 0; d < dim_; ++d) out << ' ' << FormatFloat(row[d]);
      out << '\n';
    }
  } else {
    out.write(kBinaryMagic, 5);
    const std::uint32_t vocab_size = static_cast<std::uint32_t>(vocab_.size());
    const std::uint32_t dim = static_cast<std::uint32_t>(dim_);
    out.write(reinterpret_cast<const char*>(&vocab_size), 4);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      const std::string& token = vocab_.token(static_cast<TokenId>(i));
      const std::uint32_t length = static_cast<std::uint32_t>(token.size());
      out.write(reinterpret_cast<const char*>(&length), 4);
      out.write(token.data(), length);
    }
    out.write(reinterpret_cast<const char*>(data_.data()),
              static_cast<std::streamsize>(data_.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("failed writing table file: " + path);
}

}  // namespace dxpriv
