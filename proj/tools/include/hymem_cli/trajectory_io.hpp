#pragma once

#include <string>
#include <vector>

#include "hymem/certificates.hpp"
#include "hymem/simulator.hpp"
#include "hymem_cli/scenario.hpp"

namespace hymem::cli {

class TrajectoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Column names of the trajectory file for a system.
[[nodiscard]] std::vector<std::string> trajectory_columns(const SolutionRecord& rec);

/// Writes `<stem>.csv` (one row per recorded point, thinned by the record
/// stride) and `<stem>.meta.json` (options, end condition, jump log, initial arc).
void write_trajectory(const std::string& stem, const Scenario& sc, const RunSpec& run, const SolutionRecord& rec);

/// Rebuilds a record from `<stem>.csv` and `<stem>.meta.json`. Derivative
/// samples of the forward solution are recomputed from the flow map.
[[nodiscard]] SolutionRecord read_trajectory(const std::string& stem, const SystemDefinition& sys);

/// Plain table view of a trajectory file, for plotting.
struct TrajectoryTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  [[nodiscard]] int column(const std::string& name) const;
};

[[nodiscard]] TrajectoryTable read_table(const std::string& csv_path);

[[nodiscard]] std::string format_double(double v);

[[nodiscard]] json target_to_json(const TargetSet& w);
[[nodiscard]] TargetSet target_from_json(const json& j);

}  // namespace hymem::cli
