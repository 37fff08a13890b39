#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hymem/certificates.hpp"
#include "hymem/comparison_functions.hpp"
#include "hymem/simulator.hpp"
#include "hymem/system_model.hpp"

namespace hymem::cli {

using json = nlohmann::json;

/// Malformed or invalid scenario; the message names the offending key.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A comparison function referenced by a check: given explicitly, fitted on
/// calibration runs, derived from the certificate, or reused from another check.
struct FnSpec {
  enum class Mode { Explicit, Fit, Certificate, Reference };
  Mode mode = Mode::Explicit;
  ClassKFn fn;
  std::vector<std::string> fit_runs;
  std::string reference;  ///< "<check>.<slot>" for Mode::Reference
  /// Explicit KLL rate for beta (Mode::Explicit).
  double rate = 0.0;
};

struct CheckSpec {
  std::string name;
  json raw;  ///< options as given, echoed into the report
  std::vector<std::string> runs;
  double tol = 0.0;
  bool tol_given = false;
  std::map<std::string, FnSpec> fns;  ///< by slot: alpha, alpha1, alpha2, beta, gamma, rho
  double eps1 = 1.0;
  double eps2 = 1.0;
  double tail_fraction = 0.25;
  double tail_window = 5.0;
  double n_radius = 0.0;  ///< 0: N is the whole state space
};

struct InitialSpec {
  enum class Kind { Quadcopter, State };
  Kind kind = Kind::Quadcopter;
  Vector position;
  Vector velocity;
  int mode = 1;
  Vector state;
};

struct RunSpec {
  std::string id;
  InitialSpec initial;
  InputSignal input = InputSignal::zero(0);
  json input_raw;
};

struct CertificateBlock {
  CertificateSpec spec;
  double eps1 = 1.0;
  double eps2 = 1.0;
};

struct Scenario {
  enum class SystemKind { Quadcopter, LinearDde };

  std::string name;
  std::string source;
  SystemKind kind = SystemKind::Quadcopter;
  QuadcopterParams quad;
  double dde_a = 0.0;
  double dde_b = -1.0;
  double dde_r = 1.0;
  SimOptions options;
  std::optional<CertificateBlock> certificate;
  std::vector<RunSpec> runs;
  std::vector<CheckSpec> checks;
  std::optional<std::string> output;
  json raw;

  [[nodiscard]] const RunSpec* find_run(const std::string& id) const;
  /// Functional used for the trajectory V and Dini columns.
  [[nodiscard]] KrasovskiiFunctional functional() const;
};

/// Check names in execution order.
[[nodiscard]] const std::vector<std::string>& known_checks();

[[nodiscard]] Scenario parse_scenario(const std::string& text, const std::string& source);
[[nodiscard]] Scenario load_scenario(const std::string& path);

/// Runs class-K validation on every referenced comparison function and the
/// K-infinity requirement on certificate alpha1/alpha2.
void validate_scenario(const Scenario& sc);

[[nodiscard]] SystemDefinition build_system(const Scenario& sc);
[[nodiscard]] MemoryArc build_initial_arc(const Scenario& sc, const RunSpec& run);

[[nodiscard]] json class_k_to_json(const ClassKFn& f);
[[nodiscard]] ClassKFn class_k_from_json(const json& j, const std::string& path);
[[nodiscard]] json input_to_json(const InputSignal& u);

}  // namespace hymem::cli
