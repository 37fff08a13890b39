#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hymem/comparison_functions.hpp"
#include "hymem/memory_arc.hpp"
#include "hymem/simulator.hpp"
#include "hymem/system_model.hpp"

namespace hymem {

/// V(phi) = sigma_l |psi(0,0)|^2 + mu_l * int_{-r}^0 e^{eta s} |psi(s, k(s))|^2 ds
/// with psi the leading `continuous_dim` components (all when 0) and l the mode.
struct KrasovskiiFunctional {
  std::vector<double> sigma{1.0};  ///< indexed by mode - 1
  std::vector<double> mu{1.0};
  double eta = 0.0;
  double delay = 0.0;
  std::size_t continuous_dim = 0;

  void validate() const;
  [[nodiscard]] double sigma_for(int mode) const;
  [[nodiscard]] double mu_for(int mode) const;
  [[nodiscard]] double min_sigma() const;
  [[nodiscard]] double max_sigma() const;
  [[nodiscard]] double max_mu() const;
};

[[nodiscard]] double eval_functional(const KrasovskiiFunctional& v, const MemoryArc& arc, int mode);

/// Mode read from the anchor state (1 when the system has no mode component).
[[nodiscard]] int mode_of(const Vector& x, const std::optional<std::size_t>& mode_component);

struct CertificateSpec {
  KrasovskiiFunctional functional;
  ClassKFn alpha1 = ClassKFn::power(1.0, 2.0);
  ClassKFn alpha2 = ClassKFn::power(1.0, 2.0);
  ClassKFn alpha3 = ClassKFn::linear(1.0);
  ClassKFn rho = ClassKFn::linear(1.0);
  std::optional<double> decay_rate;    ///< v of the exponential-decay condition
  std::optional<double> storage_rate;  ///< c in the dissipation rate psi(phi) = c V(phi)
  std::optional<ClassKFn> rho_hat;     ///< storage supply rate (defaults to rho)

  /// Throws std::invalid_argument when alpha1/alpha2 are not K-infinity or a
  /// rate is out of range.
  void validate() const;
};

/// alpha1(s) = min sigma * s^2 and alpha2(s) = (max sigma + max mu * r) s^2,
/// the sandwich bounds implied by the functional's form.
[[nodiscard]] CertificateSpec sandwich_certificate(const KrasovskiiFunctional& v);

class DiniError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// (V(window at t + h) - V(window at t)) / h on the recorded grid.
[[nodiscard]] double numeric_dini(const KrasovskiiFunctional& v, const SolutionRecord& solution,
                                  const HybridTimePoint& at, double h);

/// V along a record, with forward-difference Dini estimates at flow points.
struct FunctionalTrace {
  std::vector<SampleIndex> points;
  std::vector<double> values;
  std::vector<double> dini;  ///< NaN where the point has no successor in its interval
};

[[nodiscard]] FunctionalTrace trace_functional(const KrasovskiiFunctional& v, const SolutionRecord& solution);

/// V(phi+) - V(phi) at every recorded jump.
[[nodiscard]] std::vector<double> jump_increments(const KrasovskiiFunctional& v, const SolutionRecord& solution);

/// Coefficients of the quadcopter flow bound c0 |psi(0)|^2 + c_r |psi(-r)|^2 + c_u |u|^2.
struct FlowBoundCoefficients {
  double c0 = 0.0;
  double c_r = 0.0;
  double c_u = 0.0;
};

[[nodiscard]] double lambda_max_sym(const Matrix& a);
[[nodiscard]] double spectral_norm(const Matrix& a);

[[nodiscard]] FlowBoundCoefficients flow_bound_coefficients(const QuadcopterParams& params,
                                                            const KrasovskiiFunctional& v, int mode,
                                                            double eps1, double eps2);

[[nodiscard]] double analytic_flow_bound(const QuadcopterParams& params, const CertificateSpec& cert,
                                         double eps1, double eps2, const MemoryArc& arc, const Vector& u);

struct Violation {
  std::size_t run = 0;
  HybridTimePoint at;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  ///< rhs - lhs; negative when violated
};

struct ConditionReport {
  std::string name;
  bool pass = true;
  std::size_t checked = 0;
  std::size_t violation_count = 0;
  std::vector<Violation> violations;  ///< first few, in run and time order
  double worst_margin = std::numeric_limits<double>::infinity();
  double tol = 0.0;

  void record(std::size_t run, const HybridTimePoint& at, double lhs, double rhs, double slack = 0.0);
};

struct CheckReport {
  std::string name;
  bool pass = true;
  double tol = 0.0;
  std::vector<ConditionReport> conditions;
  std::map<std::string, double> parameters;  ///< exact values used
  std::map<std::string, double> statistics;

  void finalize();
};

/// Default check tolerance: 1e-3 at h = 0.005, scaled linearly with h.
[[nodiscard]] double default_check_tol(double h) noexcept;

/// Definition conditions (1) sandwich, (2) dissipation, (3) jump non-increase.
[[nodiscard]] CheckReport check_iiss_lkf(const CertificateSpec& cert, const std::vector<const SolutionRecord*>& runs,
                                         double tol);
/// As check_iiss_lkf with flow condition D+V <= -v V + rho(|u|).
[[nodiscard]] CheckReport check_exponential(const CertificateSpec& cert,
                                            const std::vector<const SolutionRecord*>& runs, double tol);
/// Storage functional: sandwich, D+V <= -c V + rho_hat(|u|), jump non-increase.
[[nodiscard]] CheckReport check_storage(const CertificateSpec& cert, const std::vector<const SolutionRecord*>& runs,
                                        double tol);
/// V(phi+) <= V(phi) + tol at every recorded jump (statistic: max |V(phi+) - V(phi)|).
[[nodiscard]] CheckReport check_jump_nonincrease(const KrasovskiiFunctional& v,
                                                 const std::vector<const SolutionRecord*>& runs, double tol);
/// Numeric D+V against the analytic Young's-inequality bound at every flow point,
/// with slack tol + 2 h L (L the local Lipschitz estimate of the Dini sequence).
[[nodiscard]] CheckReport flow_bound_audit(const QuadcopterParams& params, const CertificateSpec& cert, double eps1,
                                           double eps2, const std::vector<const SolutionRecord*>& runs, double tol);

}  // namespace hymem
