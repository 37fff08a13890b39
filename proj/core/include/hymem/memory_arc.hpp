#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hymem/hybrid_time.hpp"

namespace hymem {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One jump-free piece of a sampled hybrid arc: samples of x(., j) on a grid.
///
/// `dx`, when non-empty, holds derivative samples aligned with `x`; an entry
/// of size zero marks a sample without derivative information.
struct ArcPiece {
  int j = 0;
  std::vector<double> t;
  std::vector<Vector> x;
  std::vector<Vector> dx;

  [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
  [[nodiscard]] double t_begin() const { return t.front(); }
  [[nodiscard]] double t_end() const { return t.back(); }
  [[nodiscard]] bool has_derivative(std::size_t i) const noexcept {
    return i < dx.size() && dx[i].size() > 0;
  }
};

/// A sampled hybrid arc ordered by jump counter; pieces carry consecutive j.
struct History {
  std::vector<ArcPiece> pieces;
  double step = 0.0;  ///< nominal sampling step

  /// Index of the piece with jump counter j, or pieces.size() if absent.
  [[nodiscard]] std::size_t find_piece(int j) const noexcept;
};

class ArcRangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class InsufficientHistory : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Position of a sample inside a History.
struct SampleIndex {
  std::size_t piece = 0;
  std::size_t index = 0;

  friend bool operator==(const SampleIndex&, const SampleIndex&) = default;
};

/// A hybrid memory arc phi in M^Delta: the history window of hybrid length
/// Delta ending at an anchor sample, expressed in relative coordinates (s, k)
/// with s <= 0 and k <= 0.
///
/// The arc shares ownership of the sampled history it was cut from, so a
/// window taken from a solution stays valid after the solution is gone.
/// Copies are cheap. The arc never mutates the history.
///
/// Each jump counter k defines a branch (branch 0 is the current one, branch
/// b has k = -b). Within a branch values are interpolated between samples,
/// never across branches.
class MemoryArc {
 public:
  /// Builds a standalone arc from pieces given directly in (s, k)
  /// coordinates. The last piece must have k == 0 and end at s == 0.
  MemoryArc(std::vector<ArcPiece> pieces, double delay_depth);

  /// View of `history` at `anchor` with the given delay depth.
  /// Throws InsufficientHistory if the history is shallower than delay_depth.
  MemoryArc(std::shared_ptr<const History> history, SampleIndex anchor, double delay_depth);

  /// Same arc advanced to a provisional head sample `dt` after the anchor
  /// (with dt >= 0). Used for Runge-Kutta stages whose state is not recorded;
  /// lookups between the anchor and the head interpolate linearly.
  [[nodiscard]] MemoryArc with_head(double dt, Vector value) const;

  [[nodiscard]] double delay_depth() const noexcept { return delay_depth_; }
  /// The depth actually exposed: smallest recorded hybrid depth >= delay_depth.
  [[nodiscard]] double depth_used() const noexcept { return depth_used_; }
  [[nodiscard]] double grid_step() const noexcept { return history_->step; }
  [[nodiscard]] std::size_t dimension() const noexcept { return current().size(); }

  /// Absolute (t, j) of phi(0,0) in the underlying history.
  [[nodiscard]] HybridTimePoint anchor_time() const noexcept;
  [[nodiscard]] SampleIndex anchor() const noexcept { return anchor_; }
  [[nodiscard]] const std::shared_ptr<const History>& history() const noexcept { return history_; }

  /// phi(0, 0).
  [[nodiscard]] const Vector& current() const noexcept;

  /// phi(s, k(s)) with k(s) the largest jump index whose branch contains s.
  /// Throws ArcRangeError when s lies outside [-Delta-1, 0] or the window.
  [[nodiscard]] Vector eval_delayed(double s) const;

  /// phi(s, k) on branch k. Throws ArcRangeError when (s, k) is not in dom phi.
  [[nodiscard]] Vector sample_at(double s, int k) const;

  // Branch-level access (branch 0 is k = 0, newest first).
  [[nodiscard]] std::size_t branch_count() const noexcept { return branches_.size(); }
  [[nodiscard]] int branch_k(std::size_t b) const noexcept { return -static_cast<int>(b); }
  [[nodiscard]] std::size_t branch_size(std::size_t b) const noexcept;
  [[nodiscard]] double branch_s(std::size_t b, std::size_t i) const noexcept;
  [[nodiscard]] const Vector& branch_value(std::size_t b, std::size_t i) const noexcept;
  /// Recorded derivative of a sample, or nullptr when none is stored.
  [[nodiscard]] const Vector* branch_derivative(std::size_t b, std::size_t i) const noexcept;

  /// Calls fn(s, k, value) for every stored sample in the window.
  template <class Fn>
  void for_each_sample(Fn&& fn) const {
    for (std::size_t b = 0; b < branches_.size(); ++b) {
      const std::size_t n = branch_size(b);
      for (std::size_t i = 0; i < n; ++i) {
        fn(branch_s(b, i), branch_k(b), branch_value(b, i));
      }
    }
  }

 private:
  struct Branch {
    std::size_t piece = 0;
    std::size_t first = 0;  // first sample inside the window
    std::size_t last = 0;   // last recorded sample (inclusive)
  };
  struct Head {
    double t = 0.0;
    Vector value;
  };

  void build_window();
  [[nodiscard]] Vector interpolate(std::size_t b, double s) const;
  [[nodiscard]] double abs_time(double s) const noexcept { return anchor_t_ + s; }

  std::shared_ptr<const History> history_;
  SampleIndex anchor_;
  double delay_depth_ = 0.0;
  double depth_used_ = 0.0;
  double anchor_t_ = 0.0;
  int anchor_j_ = 0;
  std::vector<Branch> branches_;
  std::shared_ptr<const Head> head_;
};

/// Constant arc x(s, 0) = value on s in [-depth, 0] sampled at `step`.
[[nodiscard]] MemoryArc make_constant_arc(const Vector& value, double depth, double step);

/// Number of grid steps needed to cover `depth` at `step`.
[[nodiscard]] std::size_t steps_to_cover(double depth, double step);

/// Jump-free arc x(s, 0) = fn(s) sampled at `step` on s in [-depth, 0].
template <class Fn>
[[nodiscard]] MemoryArc make_sampled_arc(Fn&& fn, double depth, double step) {
  ArcPiece piece;
  const std::size_t n = steps_to_cover(depth, step);
  for (std::size_t i = 0; i <= n; ++i) {
    const double s = -static_cast<double>(n - i) * step;
    piece.t.push_back(s);
    piece.x.push_back(fn(s));
  }
  return MemoryArc({std::move(piece)}, depth);
}

/// As make_sampled_arc, also recording derivative samples dfn(s) so that
/// delayed lookups between grid points use cubic Hermite interpolation.
template <class Fn, class DFn>
[[nodiscard]] MemoryArc make_sampled_arc(Fn&& fn, DFn&& dfn, double depth, double step) {
  ArcPiece piece;
  const std::size_t n = steps_to_cover(depth, step);
  for (std::size_t i = 0; i <= n; ++i) {
    const double s = -static_cast<double>(n - i) * step;
    piece.t.push_back(s);
    piece.x.push_back(fn(s));
    piece.dx.push_back(dfn(s));
  }
  return MemoryArc({std::move(piece)}, depth);
}

/// Admissible set of one trailing (discrete/timer) component of a target set.
struct ComponentRange {
  std::size_t index = 0;
  bool discrete = false;
  std::vector<double> values;  ///< admissible values when discrete
  double lo = 0.0;             ///< interval bounds otherwise
  double hi = 0.0;
  double tol = 1e-9;
};

class TargetSetError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A closed target set W: origin or ball in the continuous substate (the
/// leading `continuous_dim` components), optionally times admissible ranges
/// for trailing discrete/timer components.
struct TargetSet {
  enum class Kind { Origin, Ball };

  Kind kind = Kind::Origin;
  std::size_t continuous_dim = 0;
  Vector center;        ///< ball center (zero when empty)
  double radius = 0.0;  ///< ball radius
  std::vector<ComponentRange> factors;

  [[nodiscard]] static TargetSet origin(std::size_t continuous_dim);
  [[nodiscard]] static TargetSet ball(Vector center, double radius);
  TargetSet& with_discrete(std::size_t index, std::vector<double> values);
  TargetSet& with_interval(std::size_t index, double lo, double hi);
};

/// |x|_W. Throws TargetSetError when a trailing component is outside its range.
[[nodiscard]] double point_distance(const Vector& x, const TargetSet& w);

/// ||phi||_W: maximum distance to W over every stored sample of the window.
[[nodiscard]] double sup_norm_to_set(const MemoryArc& arc, const TargetSet& w);

}  // namespace hymem
