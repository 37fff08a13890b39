#include "hymem/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hymem {

void QuadcopterParams::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("quadcopter: ") + what + " must be positive");
    }
  };
  positive(mass, "mass");
  positive(delay, "delay");
  positive(timer_bound, "timer_bound");
  positive(u_max, "u_max");
  if (!std::isfinite(drag)) {
    throw std::invalid_argument("quadcopter: drag must be finite");
  }
  if (reset.rows() != 6 || reset.cols() != 6) {
    throw std::invalid_argument("quadcopter: reset matrix must be 6x6");
  }
  if (lookback_jumps < 0) {
    throw std::invalid_argument("quadcopter: lookback_jumps must be nonnegative");
  }
}

namespace quadcopter {

Matrix drift_matrix(const QuadcopterParams& p) {
  Matrix a = Matrix::Zero(6, 6);
  a.block(0, 3, 3, 3) = Matrix::Identity(3, 3);
  a.block(3, 3, 3, 3) = -(p.drag / p.mass) * Matrix::Identity(3, 3);
  return a;
}

Matrix input_matrix(const QuadcopterParams& p) {
  Matrix b = Matrix::Zero(6, 3);
  b.block(3, 0, 3, 3) = (1.0 / p.mass) * Matrix::Identity(3, 3);
  return b;
}

Matrix feedback_gain(const QuadcopterParams& p, int mode) {
  if (mode != 1 && mode != 2) {
    throw std::invalid_argument("quadcopter: mode must be 1 or 2");
  }
  const double kp = mode == 1 ? p.kp1 : p.kp2;
  const double kd = mode == 1 ? p.kd1 : p.kd2;
  Matrix k = Matrix::Zero(3, 6);
  k.block(0, 0, 3, 3) = -kp * Matrix::Identity(3, 3);
  k.block(0, 3, 3, 3) = -kd * Matrix::Identity(3, 3);
  return k;
}

Vector extended_state(const Vector& position, const Vector& velocity, int mode, double timer) {
  if (position.size() != 3 || velocity.size() != 3) {
    throw std::invalid_argument("quadcopter: position and velocity must have 3 components");
  }
  Vector x(kStateDim);
  x << position, velocity, static_cast<double>(mode), timer;
  return x;
}

MemoryArc constant_initial_arc(const QuadcopterParams& p, const Vector& position,
                               const Vector& velocity, int mode, double step) {
  return make_constant_arc(extended_state(position, velocity, mode, 0.0), p.delay_depth(), step);
}

}  // namespace quadcopter

Vector saturate(const Vector& v, double u_max) {
  if (!(u_max > 0.0)) {
    throw std::invalid_argument("saturate: u_max must be positive");
  }
  return v.cwiseMax(-u_max).cwiseMin(u_max);
}

SystemDefinition quadcopter_system(const QuadcopterParams& params) {
  params.validate();
  using namespace quadcopter;

  SystemDefinition sys;
  sys.name = "quadcopter";
  sys.state_dim = kStateDim;
  sys.input_dim = kInputDim;
  sys.continuous_dim = kPsiDim;
  sys.mode_component = kModeIndex;
  sys.delay_depth = params.delay_depth();
  sys.step_divisors = {params.delay, params.timer_bound};
  sys.target = TargetSet::origin(kPsiDim);
  sys.target.with_discrete(kModeIndex, {1.0, 2.0}).with_interval(kTimerIndex, 0.0, params.timer_bound);
  sys.target.factors.back().tol = params.timer_tol;

  const Matrix a = drift_matrix(params);
  const Matrix b = input_matrix(params);
  const Matrix k1 = feedback_gain(params, 1);
  const Matrix k2 = feedback_gain(params, 2);
  const Matrix reset = params.reset;
  const double r = params.delay;
  const double u_max = params.u_max;
  const double delta = params.timer_bound;
  const double tol = params.timer_tol;

  auto mode_of = [](const Vector& x) { return static_cast<int>(std::lround(x(kModeIndex))); };

  sys.flow_map = [=](const MemoryArc& arc, const Vector& u) {
    const Vector& x = arc.current();
    const Vector delayed = arc.eval_delayed(-r);
    const Matrix& k = mode_of(x) == 1 ? k1 : k2;
    Vector dx = Vector::Zero(kStateDim);
    dx.head(kPsiDim) = a * x.head(kPsiDim) + b * saturate(k * delayed.head(kPsiDim), u_max) + b * u;
    dx(kModeIndex) = 0.0;
    dx(kTimerIndex) = 1.0;
    return dx;
  };
  sys.jump_map = [=](const MemoryArc& arc, const Vector&) {
    const Vector& x = arc.current();
    Vector next(kStateDim);
    next.head(kPsiDim) = reset * x.head(kPsiDim);
    next(kModeIndex) = mode_of(x) == 1 ? 2.0 : 1.0;
    next(kTimerIndex) = 0.0;
    return next;
  };
  auto mode_ok = [=](const Vector& x) {
    const int m = mode_of(x);
    return (m == 1 || m == 2) && std::abs(x(kModeIndex) - m) <= tol;
  };
  sys.in_flow_set = [=](const MemoryArc& arc, const Vector&) {
    const Vector& x = arc.current();
    const double tau = x(kTimerIndex);
    return mode_ok(x) && tau >= -tol && tau <= delta + tol;
  };
  sys.in_jump_set = [=](const MemoryArc& arc, const Vector&) {
    const Vector& x = arc.current();
    return mode_ok(x) && std::abs(x(kTimerIndex) - delta) <= tol;
  };
  return sys;
}

SystemDefinition linear_dde_system(double a, double b, double r) {
  if (!(r > 0.0)) {
    throw std::invalid_argument("linear_dde_system: delay must be positive");
  }
  SystemDefinition sys;
  sys.name = "linear_dde";
  sys.state_dim = 1;
  sys.input_dim = 1;
  sys.continuous_dim = 1;
  sys.delay_depth = r;
  sys.step_divisors = {r};
  sys.target = TargetSet::origin(1);
  sys.flow_map = [=](const MemoryArc& arc, const Vector& u) {
    Vector dx(1);
    dx(0) = a * arc.current()(0) + b * arc.eval_delayed(-r)(0) + (u.size() > 0 ? u(0) : 0.0);
    return dx;
  };
  sys.jump_map = [](const MemoryArc& arc, const Vector&) { return arc.current(); };
  sys.in_flow_set = [](const MemoryArc&, const Vector&) { return true; };
  sys.in_jump_set = [](const MemoryArc&, const Vector&) { return false; };
  return sys;
}

InputSignal InputSignal::zero(std::size_t dim) {
  InputSignal s;
  s.kind_ = Kind::Zero;
  s.amplitude_ = Vector::Zero(static_cast<Eigen::Index>(dim));
  return s;
}

InputSignal InputSignal::exp_decay(Vector amplitude, double rate) {
  if (!std::isfinite(rate)) {
    throw std::invalid_argument("InputSignal::exp_decay: rate must be finite");
  }
  InputSignal s;
  s.kind_ = Kind::ExpDecay;
  s.amplitude_ = std::move(amplitude);
  s.rate_ = rate;
  return s;
}

InputSignal InputSignal::constant(Vector value) {
  InputSignal s;
  s.kind_ = Kind::Constant;
  s.amplitude_ = std::move(value);
  return s;
}

InputSignal InputSignal::table(std::vector<double> times, std::vector<Vector> values) {
  if (times.empty() || times.size() != values.size()) {
    throw std::invalid_argument("InputSignal::table: times and values must be non-empty and aligned");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw std::invalid_argument("InputSignal::table: times must increase");
    }
    if (values[i].size() != values[0].size()) {
      throw std::invalid_argument("InputSignal::table: inconsistent dimensions");
    }
  }
  InputSignal s;
  s.kind_ = Kind::Table;
  s.amplitude_ = Vector::Zero(values[0].size());
  s.times_ = std::move(times);
  s.values_ = std::move(values);
  return s;
}

Vector InputSignal::operator()(double t) const {
  switch (kind_) {
    case Kind::Zero:
      return amplitude_;
    case Kind::ExpDecay:
      return amplitude_ * std::exp(-rate_ * t);
    case Kind::Constant:
      return amplitude_;
    case Kind::Table: {
      if (t <= times_.front()) {
        return values_.front();
      }
      if (t >= times_.back()) {
        return values_.back();
      }
      auto it = std::upper_bound(times_.begin(), times_.end(), t);
      const auto i = static_cast<std::size_t>(std::distance(times_.begin(), it));
      const double theta = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
      return (1.0 - theta) * values_[i - 1] + theta * values_[i];
    }
  }
  return amplitude_;
}

Vector eval_input(const InputSignal& u, double t) { return u(t); }

}  // namespace hymem
