#include "hymem/hybrid_time.hpp"

#include <cmath>
#include <stdexcept>

namespace hymem {

bool HybridTimeDomain::contains(const HybridTimePoint& p, double tol) const noexcept {
  for (const auto& iv : intervals) {
    if (iv.j == p.j && p.t >= iv.t_start - tol && p.t <= iv.t_end + tol) {
      return true;
    }
  }
  return false;
}

HybridTimePoint HybridTimeDomain::back() const {
  if (intervals.empty()) {
    throw std::out_of_range("HybridTimeDomain::back on empty domain");
  }
  return {intervals.back().t_end, intervals.back().j};
}

int HybridTimeDomain::jump_count() const noexcept {
  int count = 0;
  for (const auto& iv : intervals) {
    if (iv.j > 0) {
      ++count;
    }
  }
  return count;
}

namespace {

DomainValidation fail(std::size_t index, std::string reason) {
  return DomainValidation{false, index, std::move(reason)};
}

}  // namespace

DomainValidation validate_domain(const HybridTimeDomain& d, double tol) {
  if (d.intervals.empty()) {
    return fail(0, "empty domain");
  }
  bool has_origin = false;
  for (std::size_t n = 0; n < d.intervals.size(); ++n) {
    const auto& iv = d.intervals[n];
    if (!std::isfinite(iv.t_start) || !std::isfinite(iv.t_end)) {
      return fail(n, "non-finite endpoint");
    }
    if (iv.t_start > iv.t_end + tol) {
      return fail(n, "t_start > t_end");
    }
    if (n > 0) {
      const auto& prev = d.intervals[n - 1];
      if (std::abs(prev.t_end - iv.t_start) > tol) {
        return fail(n, "gap: t_end of previous interval differs from t_start");
      }
      if (iv.j != prev.j + 1) {
        return fail(n, "j not incremented by 1");
      }
    }
    if (iv.j < 0 && iv.t_end > tol) {
      return fail(n, "memory interval (j < 0) extends past t = 0");
    }
    if (iv.j > 0 && iv.t_start < -tol) {
      return fail(n, "forward interval (j > 0) starts before t = 0");
    }
    if (iv.j == 0 && iv.t_start <= tol && iv.t_end >= -tol) {
      has_origin = true;
    }
  }
  if (!has_origin) {
    return fail(0, "domain does not contain (0,0)");
  }
  return {};
}

}  // namespace hymem
