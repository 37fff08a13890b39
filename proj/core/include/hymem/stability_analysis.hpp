#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hymem/comparison_functions.hpp"
#include "hymem/simulator.hpp"
#include "hymem/system_model.hpp"

namespace hymem {

/// Cumulative input energy E(t, j) = sum_n int rho(|u(s, n)|) ds up to (t, j),
/// one entry per forward sample of the record.
struct EnergyTrace {
  std::vector<HybridTimePoint> at;
  std::vector<double> energy;

  [[nodiscard]] double total() const noexcept { return energy.empty() ? 0.0 : energy.back(); }
};

/// Trapezoidal cumulative integral over flow intervals, constant across jumps.
[[nodiscard]] EnergyTrace input_energy(const SolutionRecord& solution, const ClassKFn& rho);

/// |x(t, j)|_W at every forward sample.
struct NormSeries {
  std::vector<double> t;
  std::vector<int> j;
  std::vector<double> norm;
};

[[nodiscard]] NormSeries state_norms(const SolutionRecord& solution);

/// ||A^Delta_[0,0] x||_W.
[[nodiscard]] double initial_norm(const SolutionRecord& solution);

struct BoundPoint {
  std::size_t run = 0;
  HybridTimePoint at;
  double value = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
};

/// Pointwise state bound verdict: pass iff value <= bound * (1 + tol) everywhere.
struct BoundReport {
  std::string name;
  bool pass = true;
  double tol = 0.0;
  double max_ratio = 0.0;
  std::size_t checked = 0;
  std::size_t violation_count = 0;
  std::optional<BoundPoint> first_violation;
  std::optional<BoundPoint> worst;
  std::vector<std::vector<double>> ratios;  ///< per run, per checked point
  std::map<std::string, double> parameters;

  void record(std::size_t run, const HybridTimePoint& at, double value, double bound);
};

/// |x|_W <= max{beta(initial_norm, t, j), E_rho(t, j)} (1 + tol).
[[nodiscard]] BoundReport check_iiss_bound(const SolutionRecord& solution, const KLLFn& beta, const ClassKFn& rho,
                                           double initial_norm, double tol);

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exponential KLL bound fitted on 0-input runs: the rate comes from
/// log-linear regression of the decaying envelope over hybrid length t + j,
/// the linear gain is then inflated until every fitting run is majorized.
[[nodiscard]] KLLFn fit_kll_beta(const std::vector<const SolutionRecord*>& zero_input_runs);

/// Smallest linear rho(s) = c s (inflated) for which the iISS bound with the
/// given beta holds on the calibration runs.
[[nodiscard]] ClassKFn fit_iiss_rho(const std::vector<const SolutionRecord*>& calibration, const KLLFn& beta);

/// As above, additionally requiring rho(E) to cover the input-driven part of
/// each calibration run: |x_u - x_0| <= rho(E) pointwise, where x_0 is the
/// 0-input solution from the same initial arc (companions[k] for run k).
/// A pure residual fit degenerates when beta already majorizes the runs.
[[nodiscard]] ClassKFn fit_iiss_rho(const std::vector<const SolutionRecord*>& calibration,
                                    const std::vector<const SolutionRecord*>& companions, const KLLFn& beta);

/// Smallest linear rho(s) = c s (inflated) making the BEBS bound hold on the
/// calibration runs.
[[nodiscard]] ClassKFn fit_bebs_rho(const std::vector<const SolutionRecord*>& calibration, const ClassKFn& alpha1,
                                    const ClassKFn& alpha2);

/// |x|_W <= alpha1^{-1}(alpha2(||phi0||_W) + E_rho(t, j)) (1 + tol).
[[nodiscard]] BoundReport check_bebs(const SolutionRecord& solution, const ClassKFn& alpha1, const ClassKFn& alpha2,
                                     const ClassKFn& rho, double tol);

/// Indices of the points in the final `tail_fraction` of the run's hybrid length.
[[nodiscard]] std::size_t tail_begin(const NormSeries& series, double tail_fraction);

/// Tail max of |x|_W <= max{E_gamma(total), tol} (1 + tol) for each run.
[[nodiscard]] BoundReport check_asymptotic_gain(const std::vector<const SolutionRecord*>& runs, const ClassKFn& gamma,
                                                double tail_fraction, double tol);

/// gamma(s) = c s with c = max tail max / total energy (inflated) over the calibration runs.
[[nodiscard]] ClassKFn fit_asymptotic_gain(const std::vector<const SolutionRecord*>& calibration,
                                           double tail_fraction);

/// |x|_W <= max{alpha(||phi0||_W), E_gamma(t, j)} (1 + tol).
[[nodiscard]] BoundReport check_global_prestability(const std::vector<const SolutionRecord*>& runs,
                                                    const ClassKFn& alpha, const ClassKFn& gamma, double tol);

/// Power law alpha(s) = c s^p majorizing peak |x|_W against initial norm.
[[nodiscard]] ClassKFn fit_prestability_alpha(const std::vector<const SolutionRecord*>& zero_input_runs);

struct DetectabilityVerdict {
  bool pass = true;
  double tol = 0.0;
  double tail_window = 0.0;
  std::vector<std::size_t> qualifying;
  std::vector<std::pair<std::size_t, std::string>> excluded;
  std::vector<double> tail_max;  ///< per qualifying run
};

/// For 0-input runs that stay in N, |x|_W <= tol over the last `tail_window` seconds.
[[nodiscard]] DetectabilityVerdict check_zero_input_detectability(
    const std::vector<const SolutionRecord*>& runs, const std::function<bool(const Vector&)>& in_n, double tail_window,
    double tol);

/// Saturated velocity fixed point per channel for a constant input.
[[nodiscard]] Vector derived_steady_state_v(const QuadcopterParams& params, const Vector& u_const);

struct AffineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

[[nodiscard]] AffineFit fit_affine(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hymem
