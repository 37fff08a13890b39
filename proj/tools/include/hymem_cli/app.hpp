#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hymem_cli/scenario.hpp"

namespace hymem::cli {

inline constexpr const char* kOutDirEnv = "HYMEM_OUT_DIR";

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitError = 2 };

struct CliOptions {
  std::string command;  ///< simulate | check | plot | all
  std::string scenario;
  std::optional<std::string> out;
  std::optional<double> step;
  std::optional<double> tend;
  std::optional<long long> seed;  ///< reserved; dynamics are deterministic
  unsigned jobs = 0;              ///< 0: hardware concurrency
  std::vector<std::string> files;  ///< trajectory files for plot
};

/// --out, then $HYMEM_OUT_DIR, then the scenario's "output", then ./out.
[[nodiscard]] std::string resolve_output_dir(const CliOptions& opt, const Scenario& sc);

/// Applies --step / --tend overrides.
void apply_overrides(Scenario& sc, const CliOptions& opt);

struct RunOutcome {
  std::string id;
  std::optional<SolutionRecord> record;
  std::string error;
};

/// Simulates every run on a pool of worker threads; results keep scenario order.
[[nodiscard]] std::vector<RunOutcome> simulate_runs(const Scenario& sc, const SystemDefinition& sys, unsigned jobs);

[[nodiscard]] int run_command(const CliOptions& opt, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches; returns the process exit code.
[[nodiscard]] int run_cli(int argc, char** argv);

}  // namespace hymem::cli
