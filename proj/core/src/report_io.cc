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

#include "dxpriv/report_io.h"

#include <charconv>
#include <cmath>

namespace dxpriv {

using nlohmann::json;

std::string FormatDouble(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

json ToJson(const GeometryReport& report) {
  json j;
  j["dim"] = report.dim;
  j["master_seed"] = report.master_seed;
  j["noise_closed_form"] = report.noise_closed_form;
  j["noise_samples"] = report.noise_samples;
  j["token_stride"] = report.token_stride;
  j["tokens_used"] = report.tokens_used;
  json noise = json::array();
  for (std::size_t e = 0; e < report.etas.size(); ++e) {
    noise.push_back({{"eta", report.etas[e]},
                     {"avg_noise_norm", report.avg_noise_norm[e]}});
  }
  j["noise"] = noise;
  json knn = json::array();
  for (std::size_t k = 0; k < report.ks.size(); ++k) {
    knn.push_back({{"k", report.ks[k]},
                   {"avg_knn_distance", report.avg_knn_distance[k]}});
  }
  j["knn"] = knn;
  return j;
}

json ToJson(const DeniabilityReport& report, const EmbeddingTable& table) {
  json j;
  j["eta"] = report.eta;
  j["master_seed"] = report.master_seed;
  j["trials"] = report.trials;
  j["mean_n_w_rate"] = report.mean_n_w_rate;
  j["mean_s_w"] = report.mean_s_w;
  j["max_n_w"] = report.max_n_w;
  j["min_s_w"] = report.min_s_w;
  json tokens = json::array();
  for (const auto& t : report.tokens) {
    tokens.push_back({{"id", t.id},
                      {"token", table.vocab().token(t.id)},
                      {"n_w", t.n_w},
                      {"s_w", t.s_w}});
  }
  j["tokens"] = tokens;
  auto histogram = [](const std::vector<std::pair<int, int>>& h) {
    json out = json::array();
    for (const auto& [value, count] : h) out.push_back({value, count});
    return out;
  };
  j["n_w_histogram"] = histogram(report.n_w_histogram);
  j["s_w_histogram"] = histogram(report.s_w_histogram);
  return j;
}

json ToJson(const InversionReport& report) {
  json j;
  j["eta"] = report.eta;
  j["master_seed"] = report.master_seed;
  j["total"] = report.total;
  j["correct"] = report.correct;
  j["accuracy"] = report.accuracy;
  if (!report.per_token.empty()) {
    json per_token = json::array();
    for (const auto& t : report.per_token) {
      per_token.push_back({{"id", t.id},
                           {"occurrences", t.occurrences},
                           {"correct", t.correct}});
    }
    j["per_token"] = per_token;
  }
  return j;
}

json ToJson(const PerturbationExamplesReport& report, const EmbeddingTable& table) {
  json j;
  j["original_ids"] = report.original_ids;
  j["original_text"] = report.original_text;
  j["trials"] = report.trials;
  j["top_k"] = report.top_k;
  j["master_seed"] = report.master_seed;
  json per_eta = json::array();
  for (const auto& entry : report.per_eta) {
    json histograms = json::array();
    for (const auto& hist : entry.histograms) {
      json top = json::array();
      for (const auto& t : hist.top) {
        top.push_back({{"token", table.vocab().token(t.id)},
                       {"id", t.id},
                       {"count", t.count}});
      }
      histograms.push_back({{"position", hist.position},
                            {"original", table.vocab().token(hist.original)},
                            {"distinct", hist.distinct},
                            {"top", top}});
    }
    per_eta.push_back({{"eta", entry.eta},
                       {"privatized_ids", entry.privatized_ids},
                       {"privatized_text", entry.privatized_text},
                       {"histograms", histograms}});
  }
  j["per_eta"] = per_eta;
  return j;
}

json ToJson(const ProbeGridResult& result) {
  json rows = json::array();
  for (const auto& row : result.rows) {
    json r;
    r["mode"] = PrivatizationModeName(row.mode);
    if (std::isnan(row.eta)) {
      r["eta"] = nullptr;
    } else {
      r["eta"] = row.eta;
    }
    r["seed"] = row.seed;
    r["train_accuracy"] = row.train_accuracy;
    r["eval_accuracy"] = row.eval_accuracy;
    rows.push_back(r);
  }
  json aggregates = json::array();
  for (const auto& agg : result.aggregates) {
    json a;
    a["mode"] = PrivatizationModeName(agg.mode);
    if (std::isnan(agg.eta)) {
      a["eta"] = nullptr;
    } else {
      a["eta"] = agg.eta;
    }
    a["mean_eval_accuracy"] = agg.mean_eval_accuracy;
    a["stderr_eval_accuracy"] = agg.stderr_eval_accuracy;
    a["seeds"] = agg.seeds;
    aggregates.push_back(a);
  }
  return json{{"rows", rows}, {"aggregates", aggregates}};
}

json ToJson(const MaskedExample& example) {
  json j;
  j["input_ids"] = example.input_ids;
  j["masked_positions"] = example.masked_positions;
  j["original_targets"] = example.original_targets;
  j["vanilla_targets"] = example.vanilla_targets;
  json prob_targets = json::array();
  for (const auto& pset : example.prob_targets) {
    json entries = json::array();
    for (const auto& [id, count] : pset.entries) {
      entries.push_back({{"id", id}, {"count", count}});
    }
    prob_targets.push_back(entries);
  }
  j["prob_targets"] = prob_targets;
  return j;
}

void WriteGeometryCsv(std::ostream& out, const GeometryReport& report) {
  out << "eta,k,avg_noise_norm,avg_knn_distance\n";
  for (std::size_t e = 0; e < report.etas.size(); ++e) {
    for (std::size_t k = 0; k < report.ks.size(); ++k) {
      out << FormatDouble(report.etas[e]) << ',' << report.ks[k] << ','
          << FormatDouble(report.avg_noise_norm[e]) << ','
          << FormatDouble(report.avg_knn_distance[k]) << '\n';
    }
  }
}

void WriteDeniabilityCsv(std::ostream& out, std::span<const DeniabilityReport> reports,
                         const EmbeddingTable& table) {
  out << "eta,id,token,n_w,s_w,trials\n";
  for (const auto& report : reports) {
    for (const auto& t : report.tokens) {
      out << FormatDouble(report.eta) << ',' << t.id << ','
          << table.vocab().token(t.id) << ',' << t.n_w << ',' << t.s_w << ','
          << report.trials << '\n';
    }
  }
}

void WriteInversionCsv(std::ostream& out, std::span<const InversionReport> reports) {
  out << "eta,total,correct,accuracy\n";
  for (const auto& report : reports) {
    out << FormatDouble(report.eta) << ',' << report.total << ',' << report.correct
        << ',' << FormatDouble(report.accuracy) << '\n';
  }
}

void WriteExamplesCsv(std::ostream& out, const PerturbationExamplesReport& report,
                      const EmbeddingTable& table) {
  out << "eta,position,original,output,count,frequency\n";
  for (const auto& entry : report.per_eta) {
    for (const auto& hist : entry.histograms) {
      for (const auto& t : hist.top) {
        out << FormatDouble(entry.eta) << ',' << hist.position << ','
            << table.vocab().token(hist.original) << ',' << table.vocab().token(t.id)
            << ',' << t.count << ','
            << FormatDouble(static_cast<double>(t.count) / report.trials) << '\n';
      }
    }
  }
}

}  // namespace dxpriv
