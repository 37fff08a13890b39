#include <cmath>
#include <stdexcept>

#include "hymem/simulator.hpp"

namespace hymem {

namespace {

using Poly = std::vector<double>;

double horner(const Poly& c, double w) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    v = v * w + *it;
  }
  return v;
}

Poly derivative(const Poly& c) {
  Poly d;
  for (std::size_t i = 1; i < c.size(); ++i) {
    d.push_back(static_cast<double>(i) * c[i]);
  }
  return d;
}

// Antiderivative vanishing at 0.
Poly antiderivative(const Poly& c) {
  Poly a(c.size() + 1, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    a[i + 1] = c[i] / static_cast<double>(i + 1);
  }
  return a;
}

void axpy(Poly& y, double alpha, const Poly& x) {
  if (y.size() < x.size()) {
    y.resize(x.size(), 0.0);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] += alpha * x[i];
  }
}

}  // namespace

DdeReference::DdeReference(double a, double b, double r, double c, double horizon)
    : a_(a), b_(b), r_(r), c_(c) {
  if (!(r > 0.0) || !(horizon >= 0.0)) {
    throw std::invalid_argument("DdeReference: need r > 0 and horizon >= 0");
  }
  const double ratio = horizon / r;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("DdeReference: horizon must be a multiple of r");
  }
  const auto count = static_cast<std::size_t>(std::round(ratio));
  const bool flat = std::abs(a) < 1e-12;

  // Delayed segment: the constant history.
  Poly p_prev;
  Poly q_prev{c};
  double x0 = c;
  for (std::size_t k = 0; k < count; ++k) {
    Segment seg;
    if (flat) {
      Poly sum = p_prev;
      axpy(sum, 1.0, q_prev);
      seg.q = {x0};
      axpy(seg.q, b, antiderivative(sum));
    } else {
      // x = e^{aw} (x0 + b R(w) + b S(0)) - b S(w),  S(w) = sum_i q^{(i)}(w) / a^{i+1}
      Poly s;
      Poly d = q_prev;
      double scale = 1.0 / a;
      while (!d.empty()) {
        axpy(s, scale, d);
        d = derivative(d);
        scale /= a;
      }
      seg.p = {x0 + b * horner(s, 0.0)};
      axpy(seg.p, b, antiderivative(p_prev));
      axpy(seg.q, -b, s);
    }
    x0 = std::exp(a * r) * horner(seg.p, r) + horner(seg.q, r);
    p_prev = seg.p;
    q_prev = seg.q;
    segments_.push_back(std::move(seg));
  }
}

double DdeReference::operator()(double t) const {
  if (t <= 0.0) {
    return c_;
  }
  auto k = static_cast<std::size_t>(std::floor(t / r_));
  if (k >= segments_.size()) {
    if (k == segments_.size() && std::abs(t - static_cast<double>(k) * r_) <= 1e-12 * std::max(1.0, t) &&
        k > 0) {
      k -= 1;
    } else {
      throw std::out_of_range("DdeReference: t beyond the computed horizon");
    }
  }
  const double w = t - static_cast<double>(k) * r_;
  const auto& seg = segments_[k];
  return std::exp(a_ * w) * horner(seg.p, w) + horner(seg.q, w);
}

std::vector<std::pair<double, double>> reference_dde_solution(double a, double b, double r, double c, double T,
                                                              double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("reference_dde_solution: h must be positive");
  }
  const DdeReference ref(a, b, r, c, T);
  const auto n = static_cast<std::size_t>(std::llround(T / h));
  std::vector<std::pair<double, double>> out;
  out.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) * h;
    out.emplace_back(t, ref(t));
  }
  return out;
}

}  // namespace hymem
