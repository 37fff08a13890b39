#pragma once

#include "hymem/certificates.hpp"
#include "hymem/stability_analysis.hpp"
#include "hymem_cli/scenario.hpp"

namespace hymem::cli {

[[nodiscard]] json to_json(const CheckReport& r);
[[nodiscard]] json to_json(const BoundReport& r, const std::vector<std::string>& run_ids);
[[nodiscard]] json to_json(const DetectabilityVerdict& v, const std::vector<std::string>& run_ids);
[[nodiscard]] json to_json(const AuditReport& a);
[[nodiscard]] json to_json(const KLLFn& beta);

/// Runs the scenario's requested checks on records aligned with sc.runs.
/// The report content depends only on the scenario and the records.
struct CheckOutcome {
  json report;
  bool pass = true;
};

[[nodiscard]] CheckOutcome run_checks(const Scenario& sc, const SystemDefinition& sys,
                                      const std::vector<const SolutionRecord*>& records);

}  // namespace hymem::cli
