#include "hymem/memory_arc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hymem {

namespace {

// Snap tolerance for matching a query time against a stored sample time.
double time_tol(double t) { return 1e-9 * std::max(1.0, std::abs(t)); }

Vector hermite(double theta, double span, const Vector& x0, const Vector& d0, const Vector& x1,
               const Vector& d1) {
  const double t2 = theta * theta;
  const double t3 = t2 * theta;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + theta;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * x0 + (h10 * span) * d0 + h01 * x1 + (h11 * span) * d1;
}

}  // namespace

std::size_t History::find_piece(int j) const noexcept {
  if (pieces.empty()) {
    return 0;
  }
  const long idx = static_cast<long>(j) - pieces.front().j;
  if (idx < 0 || idx >= static_cast<long>(pieces.size())) {
    return pieces.size();
  }
  return static_cast<std::size_t>(idx);
}

std::size_t steps_to_cover(double depth, double step) {
  if (!(step > 0.0) || !(depth >= 0.0)) {
    throw std::invalid_argument("steps_to_cover: need step > 0 and depth >= 0");
  }
  return static_cast<std::size_t>(std::ceil(depth / step - 1e-9));
}

MemoryArc::MemoryArc(std::vector<ArcPiece> pieces, double delay_depth) : delay_depth_(delay_depth) {
  if (pieces.empty()) {
    throw std::invalid_argument("MemoryArc: no pieces");
  }
  double min_step = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < pieces.size(); ++q) {
    const auto& p = pieces[q];
    if (p.t.empty() || p.t.size() != p.x.size()) {
      throw std::invalid_argument("MemoryArc: piece with no samples or mismatched sizes");
    }
    if (!p.dx.empty() && p.dx.size() != p.x.size()) {
      throw std::invalid_argument("MemoryArc: derivative samples misaligned");
    }
    if (q > 0 && p.j != pieces[q - 1].j + 1) {
      throw std::invalid_argument("MemoryArc: pieces must carry consecutive k");
    }
    for (std::size_t i = 1; i < p.t.size(); ++i) {
      const double dt = p.t[i] - p.t[i - 1];
      if (!(dt > 0.0)) {
        throw std::invalid_argument("MemoryArc: sample times must increase within a piece");
      }
      min_step = std::min(min_step, dt);
    }
    if (p.x.front().size() != pieces.front().x.front().size()) {
      throw std::invalid_argument("MemoryArc: inconsistent state dimension");
    }
  }
  const auto& last = pieces.back();
  if (last.j != 0 || std::abs(last.t.back()) > time_tol(0.0)) {
    throw std::invalid_argument("MemoryArc: the sample at (0,0) must exist and be last");
  }
  auto history = std::make_shared<History>();
  history->pieces = std::move(pieces);
  history->step = std::isfinite(min_step) ? min_step : 0.0;
  anchor_ = {history->pieces.size() - 1, history->pieces.back().size() - 1};
  history_ = std::move(history);
  build_window();
}

MemoryArc::MemoryArc(std::shared_ptr<const History> history, SampleIndex anchor, double delay_depth)
    : history_(std::move(history)), anchor_(anchor), delay_depth_(delay_depth) {
  if (!history_ || anchor_.piece >= history_->pieces.size() ||
      anchor_.index >= history_->pieces[anchor_.piece].size()) {
    throw ArcRangeError("MemoryArc: anchor outside recorded history");
  }
  build_window();
}

MemoryArc MemoryArc::with_head(double dt, Vector value) const {
  if (dt < 0.0) {
    throw std::invalid_argument("MemoryArc::with_head: dt must be nonnegative");
  }
  MemoryArc out = *this;
  const double base_t = history_->pieces[anchor_.piece].t[anchor_.index];
  out.head_ = std::make_shared<const Head>(Head{base_t + dt, std::move(value)});
  out.build_window();
  return out;
}

void MemoryArc::build_window() {
  if (!(delay_depth_ >= 0.0)) {
    throw std::invalid_argument("MemoryArc: delay depth must be nonnegative");
  }
  const auto& pieces = history_->pieces;
  const auto& anchor_piece = pieces[anchor_.piece];
  anchor_t_ = head_ ? head_->t : anchor_piece.t[anchor_.index];
  anchor_j_ = anchor_piece.j;

  const double eps = time_tol(delay_depth_ + std::abs(anchor_t_));
  // Smallest recorded depth -(s+k) >= Delta. Branches get strictly deeper with
  // b, so the first branch holding a candidate yields the minimum.
  double depth_used = std::numeric_limits<double>::infinity();
  std::size_t stop_branch = 0;
  bool found = false;
  for (std::size_t b = 0; b <= anchor_.piece; ++b) {
    const auto& p = pieces[anchor_.piece - b];
    const std::size_t last = (b == 0) ? anchor_.index : p.size() - 1;
    const int k = -static_cast<int>(b);
    // Largest i with s_i <= -Delta - k + eps.
    const double s_limit = -delay_depth_ - k + eps + anchor_t_;
    auto end_it = p.t.begin() + static_cast<std::ptrdiff_t>(last) + 1;
    auto it = std::upper_bound(p.t.begin(), end_it, s_limit);
    if (it != p.t.begin()) {
      const std::size_t i = static_cast<std::size_t>(std::distance(p.t.begin(), it)) - 1;
      depth_used = -((p.t[i] - anchor_t_) + k);
      stop_branch = b;
      found = true;
      break;
    }
  }
  if (!found) {
    std::ostringstream msg;
    msg << "insufficient history: window of depth " << delay_depth_ << " at (t=" << anchor_t_
        << ", j=" << anchor_j_ << ") reaches before the first recorded sample";
    throw InsufficientHistory(msg.str());
  }
  depth_used_ = std::max(depth_used, delay_depth_);

  branches_.clear();
  for (std::size_t b = 0; b <= stop_branch; ++b) {
    const std::size_t q = anchor_.piece - b;
    const auto& p = pieces[q];
    const std::size_t last = (b == 0) ? anchor_.index : p.size() - 1;
    const int k = -static_cast<int>(b);
    const double s_lo = -depth_used_ - k - eps + anchor_t_;
    auto end_it = p.t.begin() + static_cast<std::ptrdiff_t>(last) + 1;
    auto it = std::lower_bound(p.t.begin(), end_it, s_lo);
    const auto first = static_cast<std::size_t>(std::distance(p.t.begin(), it));
    branches_.push_back(Branch{q, first, last});
  }
}

HybridTimePoint MemoryArc::anchor_time() const noexcept { return {anchor_t_, anchor_j_}; }

const Vector& MemoryArc::current() const noexcept {
  if (head_) {
    return head_->value;
  }
  return history_->pieces[anchor_.piece].x[anchor_.index];
}

std::size_t MemoryArc::branch_size(std::size_t b) const noexcept {
  const auto& br = branches_[b];
  const std::size_t recorded = br.last + 1 - br.first;
  return recorded + ((b == 0 && head_) ? 1 : 0);
}

double MemoryArc::branch_s(std::size_t b, std::size_t i) const noexcept {
  const auto& br = branches_[b];
  if (b == 0 && head_ && i == br.last + 1 - br.first) {
    return 0.0;
  }
  return history_->pieces[br.piece].t[br.first + i] - anchor_t_;
}

const Vector& MemoryArc::branch_value(std::size_t b, std::size_t i) const noexcept {
  const auto& br = branches_[b];
  if (b == 0 && head_ && i == br.last + 1 - br.first) {
    return head_->value;
  }
  return history_->pieces[br.piece].x[br.first + i];
}

const Vector* MemoryArc::branch_derivative(std::size_t b, std::size_t i) const noexcept {
  const auto& br = branches_[b];
  if (b == 0 && head_ && i == br.last + 1 - br.first) {
    return nullptr;
  }
  const auto& p = history_->pieces[br.piece];
  return p.has_derivative(br.first + i) ? &p.dx[br.first + i] : nullptr;
}

Vector MemoryArc::interpolate(std::size_t b, double s) const {
  const auto& br = branches_[b];
  const auto& p = history_->pieces[br.piece];
  const double tau = abs_time(s);
  const double tol = time_tol(tau);

  // Segment between the last recorded sample and a provisional head.
  if (b == 0 && head_ && tau > p.t[br.last] + tol) {
    const double t0 = p.t[br.last];
    const double span = head_->t - t0;
    if (std::abs(tau - head_->t) <= tol || span <= 0.0) {
      return head_->value;
    }
    const double theta = (tau - t0) / span;
    return (1.0 - theta) * p.x[br.last] + theta * head_->value;
  }

  auto begin = p.t.begin() + static_cast<std::ptrdiff_t>(br.first);
  auto end = p.t.begin() + static_cast<std::ptrdiff_t>(br.last) + 1;
  auto it = std::lower_bound(begin, end, tau - tol);
  if (it == end) {
    it = end - 1;
  }
  auto i = static_cast<std::size_t>(std::distance(p.t.begin(), it));
  if (std::abs(p.t[i] - tau) <= tol) {
    return p.x[i];
  }
  if (i == br.first) {
    // tau is below the first window sample but within tolerance of the range check.
    return p.x[i];
  }
  const std::size_t i0 = i - 1;
  const double t0 = p.t[i0];
  const double span = p.t[i] - t0;
  const double theta = (tau - t0) / span;
  if (p.has_derivative(i0) && p.has_derivative(i)) {
    return hermite(theta, span, p.x[i0], p.dx[i0], p.x[i], p.dx[i]);
  }
  return (1.0 - theta) * p.x[i0] + theta * p.x[i];
}

Vector MemoryArc::eval_delayed(double s) const {
  const double tol = time_tol(delay_depth_);
  if (s > tol || s < -delay_depth_ - 1.0 - tol) {
    std::ostringstream msg;
    msg << "eval_delayed: s = " << s << " outside [" << -delay_depth_ - 1.0 << ", 0]";
    throw ArcRangeError(msg.str());
  }
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    const std::size_t n = branch_size(b);
    if (n == 0) {
      continue;
    }
    const double lo = branch_s(b, 0);
    const double hi = branch_s(b, n - 1);
    const double t = time_tol(anchor_t_ + s);
    if (s >= lo - t && s <= hi + t) {
      return interpolate(b, s);
    }
  }
  std::ostringstream msg;
  msg << "eval_delayed: s = " << s << " not covered by the window";
  throw ArcRangeError(msg.str());
}

Vector MemoryArc::sample_at(double s, int k) const {
  if (k > 0 || static_cast<std::size_t>(-k) >= branches_.size()) {
    throw ArcRangeError("sample_at: branch k outside the window");
  }
  const auto b = static_cast<std::size_t>(-k);
  const std::size_t n = branch_size(b);
  const double t = time_tol(anchor_t_ + s);
  if (n == 0 || s < branch_s(b, 0) - t || s > branch_s(b, n - 1) + t) {
    throw ArcRangeError("sample_at: (s, k) outside dom phi");
  }
  return interpolate(b, s);
}

MemoryArc make_constant_arc(const Vector& value, double depth, double step) {
  return make_sampled_arc([&](double) { return value; }, depth, step);
}

TargetSet TargetSet::origin(std::size_t continuous_dim) {
  TargetSet w;
  w.kind = Kind::Origin;
  w.continuous_dim = continuous_dim;
  return w;
}

TargetSet TargetSet::ball(Vector center, double radius) {
  if (radius < 0.0) {
    throw std::invalid_argument("TargetSet::ball: negative radius");
  }
  TargetSet w;
  w.kind = Kind::Ball;
  w.continuous_dim = static_cast<std::size_t>(center.size());
  w.center = std::move(center);
  w.radius = radius;
  return w;
}

TargetSet& TargetSet::with_discrete(std::size_t index, std::vector<double> values) {
  ComponentRange r;
  r.index = index;
  r.discrete = true;
  r.values = std::move(values);
  factors.push_back(std::move(r));
  return *this;
}

TargetSet& TargetSet::with_interval(std::size_t index, double lo, double hi) {
  if (lo > hi) {
    throw std::invalid_argument("TargetSet::with_interval: lo > hi");
  }
  ComponentRange r;
  r.index = index;
  r.lo = lo;
  r.hi = hi;
  factors.push_back(std::move(r));
  return *this;
}

double point_distance(const Vector& x, const TargetSet& w) {
  const auto n = static_cast<Eigen::Index>(w.continuous_dim == 0 ? x.size() : w.continuous_dim);
  if (x.size() < n) {
    throw std::invalid_argument("point_distance: state shorter than the continuous part of W");
  }
  for (const auto& f : w.factors) {
    if (f.index >= static_cast<std::size_t>(x.size())) {
      throw std::invalid_argument("point_distance: factor index out of range");
    }
    const double v = x(static_cast<Eigen::Index>(f.index));
    bool ok = false;
    if (f.discrete) {
      ok = std::any_of(f.values.begin(), f.values.end(),
                       [&](double a) { return std::abs(a - v) <= f.tol; });
    } else {
      ok = v >= f.lo - f.tol && v <= f.hi + f.tol;
    }
    if (!ok) {
      std::ostringstream msg;
      msg << "component " << f.index << " = " << v << " outside its admissible set";
      throw TargetSetError(msg.str());
    }
  }
  const auto head = x.head(n);
  if (w.kind == TargetSet::Kind::Ball) {
    const double d = (w.center.size() == n) ? (head - w.center).norm() : head.norm();
    return std::max(0.0, d - w.radius);
  }
  return head.norm();
}

double sup_norm_to_set(const MemoryArc& arc, const TargetSet& w) {
  double sup = 0.0;
  arc.for_each_sample([&](double, int, const Vector& v) { sup = std::max(sup, point_distance(v, w)); });
  return sup;
}

}  // namespace hymem
