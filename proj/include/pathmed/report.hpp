#ifndef PATHMED_REPORT_HPP
#define PATHMED_REPORT_HPP

#include <string>

#include "pathmed/config.hpp"
#include "pathmed/inference.hpp"

namespace pathmed {

struct EffectReportEntry {
  std::string label;
  EffectEstimate estimate;
  std::optional<PooledEstimate> pooled;  // set when inputs were pooled
};

std::string effect_report_json(const std::string& command,
                               const RunConfig& config,
                               const std::vector<EffectReportEntry>& effects,
                               const std::vector<Warning>& run_warnings,
                               double telescope_gap = 0.0);

// Minimal structural validation against the published schema subset
// (type / required / properties / items / enum / additionalProperties).
// Returns an empty string when valid, else the first violation.
std::string validate_schema(const std::string& document_json,
                            const std::string& schema_json);

}  // namespace pathmed

#endif
