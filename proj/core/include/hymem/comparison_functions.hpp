#pragma once

#include <functional>
#include <string>
#include <vector>

namespace hymem {

/// Parametric comparison function alpha: R>=0 -> R>=0.
///
/// A function is a chain of elementary stages applied right to left, so the
/// composition of two class-K functions stays inside the parametric family
/// and keeps a certifiable inverse. A single-stage chain is one of
///   linear      c * s
///   power       c * s^p
///   saturating  c * s / (1 + s)   (class K, bounded by c, not K-infinity)
class ClassKFn {
 public:
  enum class Family { Linear, Power, Saturating };

  struct Stage {
    Family family = Family::Linear;
    double c = 1.0;
    double p = 1.0;

    friend bool operator==(const Stage&, const Stage&) = default;
  };

  ClassKFn() : ClassKFn(Stage{}) {}

  [[nodiscard]] static ClassKFn linear(double c);
  [[nodiscard]] static ClassKFn power(double c, double p);
  [[nodiscard]] static ClassKFn saturating(double c);
  /// (outer o inner)(s) = outer(inner(s)).
  [[nodiscard]] static ClassKFn compose(const ClassKFn& outer, const ClassKFn& inner);

  /// Throws std::domain_error for negative s.
  [[nodiscard]] double operator()(double s) const;

  [[nodiscard]] bool is_k_infinity() const noexcept;
  /// sup over s >= 0 (infinity for K-infinity members).
  [[nodiscard]] double supremum() const noexcept;
  [[nodiscard]] const std::vector<Stage>& stages() const noexcept { return stages_; }
  [[nodiscard]] std::string describe() const;

  friend bool operator==(const ClassKFn&, const ClassKFn&) = default;

 private:
  explicit ClassKFn(Stage s);
  std::vector<Stage> stages_;  // applied from back to front
};

[[nodiscard]] double evaluate(const ClassKFn& f, double s);

/// s with |f(s) - y| <= tol (and bracket width <= tol), by bisection.
/// Throws std::domain_error when y is negative or not below sup f.
[[nodiscard]] double numeric_inverse(const ClassKFn& f, double y, double tol = 1e-10);

/// beta(r, s, t) = gain(r) * exp(-rate * (s + t)).
struct KLLFn {
  ClassKFn gain = ClassKFn::linear(1.0);
  double rate = 1.0;

  [[nodiscard]] double operator()(double r, double s, double t) const;
};

[[nodiscard]] double eval_kll(const KLLFn& beta, double r, double s, double t);

struct ClassKValidation {
  bool pass = false;
  bool k_infinity = false;
  std::string reason;
};

/// Uniform grid 0 = s_0 < ... < s_{n-1} = s_max.
[[nodiscard]] std::vector<double> uniform_grid(double s_max, std::size_t n);

/// Checks f(0) = 0 and strict increase on `grid` (>= 100 points, starting at 0).
[[nodiscard]] ClassKValidation validate_class_k(const std::function<double(double)>& f,
                                                const std::vector<double>& grid);
/// As above; also reports the K-infinity flag of the family.
[[nodiscard]] ClassKValidation validate_class_k(const ClassKFn& f, const std::vector<double>& grid);

}  // namespace hymem
