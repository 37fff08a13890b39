#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hymem/memory_arc.hpp"

namespace hymem {

/// A hybrid system with memory given by single-valued flow and jump maps.
///
/// The maps and predicates receive the current memory arc phi and the input
/// value u(t). Flow and jump maps need only be defined where the matching
/// predicate holds.
struct SystemDefinition {
  using Map = std::function<Vector(const MemoryArc&, const Vector&)>;
  using Predicate = std::function<bool(const MemoryArc&, const Vector&)>;

  std::string name;
  std::size_t state_dim = 0;
  std::size_t input_dim = 0;
  /// Leading components forming the continuous substate psi.
  std::size_t continuous_dim = 0;
  /// Component holding the discrete mode, if any.
  std::optional<std::size_t> mode_component;
  /// Hybrid-length depth Delta of the memory arcs passed to the maps.
  double delay_depth = 0.0;
  /// Time constants the integrator step must divide (delays, timer bounds).
  std::vector<double> step_divisors;
  TargetSet target;

  Map flow_map;
  Map jump_map;
  Predicate in_flow_set;
  Predicate in_jump_set;
};

/// Translational quadcopter with delayed saturated switching feedback.
struct QuadcopterParams {
  double mass = 1.2;
  double drag = 0.2;
  double u_max = 1.0;
  double delay = 0.05;
  double timer_bound = 0.2;
  double kp1 = 4.8;
  double kd1 = 1.5;
  double kp2 = 3.6;
  double kd2 = 1.3;
  Matrix reset = Matrix::Identity(6, 6);
  /// Jumps of look-back kept in the memory window: Delta = delay + lookback_jumps.
  int lookback_jumps = 8;
  /// Slack on the timer predicates tau in [0, delta] and tau == delta.
  double timer_tol = 1e-9;

  void validate() const;
  [[nodiscard]] double delay_depth() const noexcept { return delay + lookback_jumps; }
};

namespace quadcopter {

inline constexpr std::size_t kPsiDim = 6;
inline constexpr std::size_t kModeIndex = 6;
inline constexpr std::size_t kTimerIndex = 7;
inline constexpr std::size_t kStateDim = 8;
inline constexpr std::size_t kInputDim = 3;

/// A-bar = [0, I; 0, -(d_c/m) I].
[[nodiscard]] Matrix drift_matrix(const QuadcopterParams& p);
/// B-bar = [0; (1/m) I].
[[nodiscard]] Matrix input_matrix(const QuadcopterParams& p);
/// K_mode = [-kp I, -kd I] for mode 1 or 2.
[[nodiscard]] Matrix feedback_gain(const QuadcopterParams& p, int mode);

/// Extended state (p, v, mode, tau).
[[nodiscard]] Vector extended_state(const Vector& position, const Vector& velocity, int mode,
                                    double timer);

/// Constant initial arc for the extended state, covering the system depth.
[[nodiscard]] MemoryArc constant_initial_arc(const QuadcopterParams& p, const Vector& position,
                                             const Vector& velocity, int mode, double step);

}  // namespace quadcopter

/// Component-wise clamp to [-u_max, u_max].
[[nodiscard]] Vector saturate(const Vector& v, double u_max);

/// Builds the closed-loop hybrid system with memory for the quadcopter.
[[nodiscard]] SystemDefinition quadcopter_system(const QuadcopterParams& p);

/// Scalar reference delay equation x' = a x(t) + b x(t - r); flows forever.
[[nodiscard]] SystemDefinition linear_dde_system(double a, double b, double r);

/// External input u(t), constant across jumps.
class InputSignal {
 public:
  enum class Kind { Zero, ExpDecay, Constant, Table };

  [[nodiscard]] static InputSignal zero(std::size_t dim);
  /// u(t) = a * exp(-rate * t).
  [[nodiscard]] static InputSignal exp_decay(Vector amplitude, double rate);
  [[nodiscard]] static InputSignal constant(Vector value);
  /// Piecewise-linear table, held constant outside its time range.
  [[nodiscard]] static InputSignal table(std::vector<double> times, std::vector<Vector> values);

  [[nodiscard]] Vector operator()(double t) const;
  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t dimension() const noexcept { return static_cast<std::size_t>(amplitude_.size()); }
  [[nodiscard]] const Vector& amplitude() const noexcept { return amplitude_; }
  [[nodiscard]] double rate() const noexcept { return rate_; }
  [[nodiscard]] const std::vector<double>& table_times() const noexcept { return times_; }
  [[nodiscard]] const std::vector<Vector>& table_values() const noexcept { return values_; }

 private:
  Kind kind_ = Kind::Zero;
  Vector amplitude_;
  double rate_ = 0.0;
  std::vector<double> times_;
  std::vector<Vector> values_;
};

[[nodiscard]] Vector eval_input(const InputSignal& u, double t);

}  // namespace hymem
