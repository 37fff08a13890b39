#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hymem {

/// A point (t, j) of a hybrid time domain: continuous time t and jump counter j.
/// Forward points have t >= 0, j >= 0; memory-domain points have t <= 0, j <= 0.
struct HybridTimePoint {
  double t = 0.0;
  int j = 0;

  friend bool operator==(const HybridTimePoint&, const HybridTimePoint&) = default;
};

/// Hybrid preorder: a precedes b iff a.t + a.j <= b.t + b.j.
[[nodiscard]] constexpr bool precedes(const HybridTimePoint& a, const HybridTimePoint& b) noexcept {
  return a.t + a.j <= b.t + b.j;
}

/// Strict version of precedes.
[[nodiscard]] constexpr bool strictly_precedes(const HybridTimePoint& a,
                                               const HybridTimePoint& b) noexcept {
  return a.t + a.j < b.t + b.j;
}

[[nodiscard]] constexpr double hybrid_length(const HybridTimePoint& p) noexcept { return p.t + p.j; }

/// One interval [t_start, t_end] x {j} of a hybrid time domain.
struct TimeInterval {
  double t_start = 0.0;
  double t_end = 0.0;
  int j = 0;

  friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

/// A finite hybrid time domain stored as an ordered interval list.
///
/// Consecutive intervals share an endpoint in t and increment j by one.
/// Degenerate intervals (t_start == t_end) represent several jumps at a
/// single instant. A domain may carry a memory part (j <= 0, t <= 0) that
/// ends at (0,0) and a forward part (j >= 0, t >= 0) that starts there.
struct HybridTimeDomain {
  std::vector<TimeInterval> intervals;

  [[nodiscard]] bool empty() const noexcept { return intervals.empty(); }
  [[nodiscard]] bool contains(const HybridTimePoint& p, double tol = 1e-12) const noexcept;
  [[nodiscard]] HybridTimePoint back() const;
  [[nodiscard]] int jump_count() const noexcept;

  friend bool operator==(const HybridTimeDomain&, const HybridTimeDomain&) = default;
};

struct DomainValidation {
  bool ok = true;
  std::size_t index = 0;  ///< first offending interval when !ok
  std::string reason;

  explicit operator bool() const noexcept { return ok; }
};

/// Checks the structural invariants of a domain and reports the first violation.
[[nodiscard]] DomainValidation validate_domain(const HybridTimeDomain& d, double tol = 1e-12);

}  // namespace hymem
