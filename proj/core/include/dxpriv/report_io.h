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

#ifndef DXPRIV_REPORT_IO_H_
#define DXPRIV_REPORT_IO_H_

#include <ostream>
#include <span>
#include <string>

#include "json.hpp"

#include "dxpriv/mlm_objectives.h"
#include "dxpriv/privacy_analysis.h"
#include "dxpriv/utility_probe.h"

namespace dxpriv {

// JSON forms of the analysis reports. Serialization is deterministic:
// object keys are sorted and doubles use the shortest round-trip encoding,
// so identical reports always produce identical bytes.
nlohmann::json ToJson(const GeometryReport& report);
nlohmann::json ToJson(const DeniabilityReport& report, const EmbeddingTable& table);
nlohmann::json ToJson(const InversionReport& report);
nlohmann::json ToJson(const PerturbationExamplesReport& report,
                      const EmbeddingTable& table);
nlohmann::json ToJson(const ProbeGridResult& result);
nlohmann::json ToJson(const MaskedExample& example);

// CSV plot data: one row per (eta, k) for geometry, one row per token for
// the deniability and example histograms, one row per eta for inversion.
void WriteGeometryCsv(std::ostream& out, const GeometryReport& report);
void WriteDeniabilityCsv(std::ostream& out, std::span<const DeniabilityReport> reports,
                         const EmbeddingTable& table);
void WriteInversionCsv(std::ostream& out, std::span<const InversionReport> reports);
void WriteExamplesCsv(std::ostream& out, const PerturbationExamplesReport& report,
                      const EmbeddingTable& table);

std::string FormatDouble(double value);

}  // namespace dxpriv

#endif  // DXPRIV_REPORT_IO_H_
