#include "hymem/comparison_functions.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hymem {

namespace {

double apply(const ClassKFn::Stage& st, double s) {
  switch (st.family) {
    case ClassKFn::Family::Linear:
      return st.c * s;
    case ClassKFn::Family::Power:
      return st.c * std::pow(s, st.p);
    case ClassKFn::Family::Saturating:
      return std::isinf(s) ? st.c : st.c * s / (1.0 + s);
  }
  return 0.0;
}

void check_params(const ClassKFn::Stage& st) {
  if (!(st.c > 0.0) || !std::isfinite(st.c)) {
    throw std::invalid_argument("comparison function: c must be positive and finite");
  }
  if (st.family == ClassKFn::Family::Power && (!(st.p > 0.0) || !std::isfinite(st.p))) {
    throw std::invalid_argument("comparison function: exponent p must be positive and finite");
  }
}

}  // namespace

ClassKFn::ClassKFn(Stage s) : stages_{s} { check_params(s); }

ClassKFn ClassKFn::linear(double c) { return ClassKFn(Stage{Family::Linear, c, 1.0}); }

ClassKFn ClassKFn::power(double c, double p) { return ClassKFn(Stage{Family::Power, c, p}); }

ClassKFn ClassKFn::saturating(double c) { return ClassKFn(Stage{Family::Saturating, c, 1.0}); }

ClassKFn ClassKFn::compose(const ClassKFn& outer, const ClassKFn& inner) {
  ClassKFn out = outer;
  out.stages_.insert(out.stages_.end(), inner.stages_.begin(), inner.stages_.end());
  return out;
}

double ClassKFn::operator()(double s) const {
  if (s < 0.0 || std::isnan(s)) {
    throw std::domain_error("comparison function evaluated at a negative argument");
  }
  double v = s;
  for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) {
    v = apply(*it, v);
  }
  return v;
}

bool ClassKFn::is_k_infinity() const noexcept {
  for (const auto& st : stages_) {
    if (st.family == Family::Saturating) {
      return false;
    }
  }
  return true;
}

double ClassKFn::supremum() const noexcept {
  double v = std::numeric_limits<double>::infinity();
  for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) {
    v = apply(*it, v);
  }
  return v;
}

std::string ClassKFn::describe() const {
  std::ostringstream out;
  for (std::size_t n = 0; n < stages_.size(); ++n) {
    if (n > 0) {
      out << " o ";
    }
    const auto& st = stages_[n];
    switch (st.family) {
      case Family::Linear:
        out << "linear(c=" << st.c << ")";
        break;
      case Family::Power:
        out << "power(c=" << st.c << ", p=" << st.p << ")";
        break;
      case Family::Saturating:
        out << "saturating(c=" << st.c << ")";
        break;
    }
  }
  return out.str();
}

double evaluate(const ClassKFn& f, double s) { return f(s); }

double numeric_inverse(const ClassKFn& f, double y, double tol) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("numeric_inverse: tol must be positive");
  }
  if (y < 0.0 || std::isnan(y)) {
    throw std::domain_error("numeric_inverse: negative target");
  }
  if (y == 0.0) {
    return 0.0;
  }
  if (y >= f.supremum()) {
    std::ostringstream msg;
    msg << "numeric_inverse: " << y << " is not below sup " << f.describe() << " = " << f.supremum();
    throw std::domain_error(msg.str());
  }
  double lo = 0.0;
  double hi = 1.0;
  while (f(hi) < y) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) {
      throw std::domain_error("numeric_inverse: failed to bracket the target");
    }
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm - y) <= tol && (hi - lo) <= tol) {
      break;
    }
    if (fm < y) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) {
      break;
    }
  }
  return mid;
}

double KLLFn::operator()(double r, double s, double t) const {
  if (s < 0.0 || t < 0.0) {
    throw std::domain_error("KLL function evaluated at negative time");
  }
  return gain(r) * std::exp(-rate * (s + t));
}

double eval_kll(const KLLFn& beta, double r, double s, double t) { return beta(r, s, t); }

std::vector<double> uniform_grid(double s_max, std::size_t n) {
  if (n < 2 || !(s_max > 0.0)) {
    throw std::invalid_argument("uniform_grid: need n >= 2 and s_max > 0");
  }
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = s_max * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return g;
}

ClassKValidation validate_class_k(const std::function<double(double)>& f,
                                  const std::vector<double>& grid) {
  ClassKValidation out;
  if (grid.size() < 100) {
    out.reason = "grid must have at least 100 points";
    return out;
  }
  if (grid.front() != 0.0) {
    out.reason = "grid must start at 0";
    return out;
  }
  const double f0 = f(0.0);
  if (f0 != 0.0) {
    out.reason = "f(0) != 0";
    return out;
  }
  double prev = f0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = f(grid[i]);
    if (!(v > prev)) {
      std::ostringstream msg;
      msg << "not strictly increasing at s = " << grid[i];
      out.reason = msg.str();
      return out;
    }
    prev = v;
  }
  out.pass = true;
  return out;
}

ClassKValidation validate_class_k(const ClassKFn& f, const std::vector<double>& grid) {
  auto out = validate_class_k([&](double s) { return f(s); }, grid);
  out.k_infinity = out.pass && f.is_k_infinity();
  return out;
}

}  // namespace hymem
