#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hymem/hybrid_time.hpp"
#include "hymem/memory_arc.hpp"
#include "hymem/system_model.hpp"

namespace hymem {

enum class JumpPriority { JumpFirst, FlowFirst };

enum class EndCondition {
  Horizon,              ///< reached the hybrid-length or flow-time horizon
  LeftFlowAndJumpSets,  ///< neither predicate holds: a maximal pre-solution ends
  ZenoGuard,            ///< too many consecutive jumps (only when not throwing)
};

[[nodiscard]] const char* to_string(JumpPriority p) noexcept;
[[nodiscard]] const char* to_string(EndCondition e) noexcept;

struct SimOptions {
  double step = 0.005;
  /// Horizon in hybrid length t + j.
  double t_end = std::numeric_limits<double>::infinity();
  /// Horizon in flow time t; jumps due at this instant are still applied.
  double max_time = std::numeric_limits<double>::infinity();
  JumpPriority priority = JumpPriority::JumpFirst;
  int max_consecutive_jumps = 16;
  bool throw_on_zeno = true;
  /// Output thinning for trajectory files; records always keep every step.
  std::size_t record_stride = 1;
};

class SimulationError : public std::runtime_error {
 public:
  enum class Kind { InvalidOptions, PredicateCoverage, ZenoGuard, HistoryUnderflow };

  SimulationError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct JumpEvent {
  double t = 0.0;
  int j = 0;  ///< jump counter before the jump
  Vector pre;
  Vector post;
  /// Earliest time the guard may have been entered (previous grid time when
  /// the jump follows a flow step); equals t for grid-aligned guards.
  double bracket_lo = 0.0;
};

struct RecordMeta {
  std::string system_name;
  std::size_t state_dim = 0;
  std::size_t input_dim = 0;
  std::size_t continuous_dim = 0;
  std::optional<std::size_t> mode_component;
  double delay_depth = 0.0;
  TargetSet target;
  SimOptions options;
  EndCondition end = EndCondition::Horizon;
  int zeno_trips = 0;
};

/// A computed solution pair (x, u) on the integrator grid.
///
/// The history holds the initial memory arc (t <= 0) followed by the forward
/// solution, one piece per jump counter; the j = 0 piece spans both sides of
/// t = 0. Inputs are recorded at every forward sample.
class SolutionRecord {
 public:
  SolutionRecord(std::shared_ptr<const History> history, std::vector<std::vector<Vector>> inputs,
                 std::vector<JumpEvent> jumps, RecordMeta meta);

  [[nodiscard]] const History& history() const noexcept { return *history_; }
  [[nodiscard]] const std::shared_ptr<const History>& shared_history() const noexcept { return history_; }
  [[nodiscard]] const RecordMeta& meta() const noexcept { return meta_; }
  [[nodiscard]] const std::vector<JumpEvent>& jumps() const noexcept { return jumps_; }
  [[nodiscard]] const std::vector<std::vector<Vector>>& inputs() const noexcept { return inputs_; }

  /// History index of the j = 0 piece.
  [[nodiscard]] std::size_t origin_piece() const noexcept { return origin_piece_; }
  [[nodiscard]] std::size_t piece_count() const noexcept { return history_->pieces.size(); }
  /// First forward sample (t >= 0) of a piece; equals its size for memory pieces.
  [[nodiscard]] std::size_t forward_begin(std::size_t piece) const noexcept;
  [[nodiscard]] bool is_forward(SampleIndex p) const noexcept;

  [[nodiscard]] double time(SampleIndex p) const noexcept { return history_->pieces[p.piece].t[p.index]; }
  [[nodiscard]] int jump_index(SampleIndex p) const noexcept { return history_->pieces[p.piece].j; }
  [[nodiscard]] HybridTimePoint point(SampleIndex p) const noexcept { return {time(p), jump_index(p)}; }
  [[nodiscard]] const Vector& state(SampleIndex p) const noexcept { return history_->pieces[p.piece].x[p.index]; }
  /// Input at a forward sample.
  [[nodiscard]] const Vector& input(SampleIndex p) const noexcept;
  /// Whether the next sample in the same piece exists (p is a flow point).
  [[nodiscard]] bool has_successor(SampleIndex p) const noexcept {
    return p.index + 1 < history_->pieces[p.piece].size();
  }

  [[nodiscard]] SampleIndex first_point() const noexcept { return {origin_piece_, forward_begin(origin_piece_)}; }
  [[nodiscard]] SampleIndex last_point() const noexcept;
  [[nodiscard]] std::size_t point_count() const noexcept;
  [[nodiscard]] int jump_count() const noexcept { return static_cast<int>(jumps_.size()); }

  /// Visits every forward sample in hybrid-time order.
  template <class Fn>
  void for_each_point(Fn&& fn) const {
    for (std::size_t q = origin_piece_; q < history_->pieces.size(); ++q) {
      const std::size_t n = history_->pieces[q].size();
      for (std::size_t i = forward_begin(q); i < n; ++i) {
        fn(SampleIndex{q, i});
      }
    }
  }

  /// The memory arc A^Delta_[t,j] x at a forward sample.
  [[nodiscard]] MemoryArc arc_at(SampleIndex p) const { return MemoryArc(history_, p, meta_.delay_depth); }
  [[nodiscard]] MemoryArc arc_at(SampleIndex p, double depth) const { return MemoryArc(history_, p, depth); }
  [[nodiscard]] MemoryArc initial_arc() const { return arc_at(first_point()); }

  /// Forward sample at (t, j); throws ArcRangeError when not recorded.
  [[nodiscard]] SampleIndex locate(const HybridTimePoint& at) const;
  /// Forward hybrid time domain.
  [[nodiscard]] HybridTimeDomain domain() const;

 private:
  std::shared_ptr<const History> history_;
  std::vector<std::vector<Vector>> inputs_;  // per piece from origin_piece_, aligned with forward samples
  std::vector<JumpEvent> jumps_;
  RecordMeta meta_;
  std::size_t origin_piece_ = 0;
  std::size_t origin_forward_ = 0;
};

/// Memory operator A^Delta_[t,j] x for a recorded solution.
[[nodiscard]] MemoryArc window(const SolutionRecord& solution, const HybridTimePoint& at, double delay_depth);

/// Fixed-step RK4 method-of-steps integration with grid-resolution jump handling.
[[nodiscard]] SolutionRecord simulate(const SystemDefinition& sys, const MemoryArc& initial,
                                      const InputSignal& u, const SimOptions& opt);

struct AuditReport {
  bool pass = true;
  std::size_t flow_points = 0;
  std::size_t jumps = 0;
  std::vector<std::string> failures;
};

/// Re-checks the solution-pair conditions on the recorded grid: domain
/// validity, flow-set membership at flow points, jump-set membership and the
/// jump map at every jump, and that the initial arc lies in C or D.
[[nodiscard]] AuditReport audit_solution_pair(const SystemDefinition& sys, const SolutionRecord& rec,
                                              double jump_tol = 1e-12);

/// Exact solution of x'(t) = a x(t) + b x(t - r) with constant history c on
/// [-r, 0], built segment by segment: on [k r, (k+1) r] with local time
/// w = t - k r, x = e^{a w} P_k(w) + Q_k(w) for polynomials P_k, Q_k.
class DdeReference {
 public:
  DdeReference(double a, double b, double r, double c, double horizon);

  [[nodiscard]] double operator()(double t) const;
  [[nodiscard]] std::size_t segment_count() const noexcept { return segments_.size(); }

 private:
  struct Segment {
    std::vector<double> p;  // coefficients in powers of the local time
    std::vector<double> q;
  };
  double a_, b_, r_, c_;
  std::vector<Segment> segments_;
};

/// Grid of (t, x(t)) from the exact reference at spacing h over [0, T].
/// T must be a multiple of r.
[[nodiscard]] std::vector<std::pair<double, double>> reference_dde_solution(double a, double b, double r,
                                                                            double c, double T, double h);

}  // namespace hymem
