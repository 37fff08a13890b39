#include "hymem/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace hymem {

const char* to_string(JumpPriority p) noexcept {
  return p == JumpPriority::JumpFirst ? "jump-first" : "flow-first";
}

const char* to_string(EndCondition e) noexcept {
  switch (e) {
    case EndCondition::Horizon:
      return "horizon";
    case EndCondition::LeftFlowAndJumpSets:
      return "left-flow-and-jump-sets";
    case EndCondition::ZenoGuard:
      return "zeno-guard";
  }
  return "unknown";
}

SolutionRecord::SolutionRecord(std::shared_ptr<const History> history,
                               std::vector<std::vector<Vector>> inputs, std::vector<JumpEvent> jumps,
                               RecordMeta meta)
    : history_(std::move(history)), inputs_(std::move(inputs)), jumps_(std::move(jumps)), meta_(std::move(meta)) {
  if (!history_ || history_->pieces.empty()) {
    throw std::invalid_argument("SolutionRecord: empty history");
  }
  origin_piece_ = history_->find_piece(0);
  if (origin_piece_ >= history_->pieces.size()) {
    throw std::invalid_argument("SolutionRecord: history has no j = 0 piece");
  }
  const auto& t = history_->pieces[origin_piece_].t;
  const double tol = 1e-12;
  origin_forward_ = static_cast<std::size_t>(
      std::distance(t.begin(), std::lower_bound(t.begin(), t.end(), -tol)));
  if (origin_forward_ >= t.size()) {
    throw std::invalid_argument("SolutionRecord: no sample at t = 0");
  }
  if (inputs_.size() != history_->pieces.size() - origin_piece_) {
    throw std::invalid_argument("SolutionRecord: input trace does not match the forward pieces");
  }
  for (std::size_t q = origin_piece_; q < history_->pieces.size(); ++q) {
    if (inputs_[q - origin_piece_].size() != history_->pieces[q].size() - forward_begin(q)) {
      throw std::invalid_argument("SolutionRecord: input trace misaligned with state samples");
    }
  }
}

std::size_t SolutionRecord::forward_begin(std::size_t piece) const noexcept {
  if (piece < origin_piece_) {
    return history_->pieces[piece].size();
  }
  return piece == origin_piece_ ? origin_forward_ : 0;
}

bool SolutionRecord::is_forward(SampleIndex p) const noexcept {
  return p.piece >= origin_piece_ && p.piece < history_->pieces.size() && p.index >= forward_begin(p.piece) &&
         p.index < history_->pieces[p.piece].size();
}

const Vector& SolutionRecord::input(SampleIndex p) const noexcept {
  return inputs_[p.piece - origin_piece_][p.index - forward_begin(p.piece)];
}

SampleIndex SolutionRecord::last_point() const noexcept {
  const std::size_t q = history_->pieces.size() - 1;
  return {q, history_->pieces[q].size() - 1};
}

std::size_t SolutionRecord::point_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t q = origin_piece_; q < history_->pieces.size(); ++q) {
    n += history_->pieces[q].size() - forward_begin(q);
  }
  return n;
}

SampleIndex SolutionRecord::locate(const HybridTimePoint& at) const {
  const std::size_t q = history_->find_piece(at.j);
  if (at.j < 0 || q >= history_->pieces.size()) {
    throw ArcRangeError("SolutionRecord::locate: jump index not recorded");
  }
  const auto& t = history_->pieces[q].t;
  const double tol = 1e-9 * std::max(1.0, std::abs(at.t));
  auto it = std::lower_bound(t.begin() + static_cast<std::ptrdiff_t>(forward_begin(q)), t.end(), at.t - tol);
  if (it == t.end() || std::abs(*it - at.t) > tol) {
    std::ostringstream msg;
    msg << "SolutionRecord::locate: no sample at (t=" << at.t << ", j=" << at.j << ")";
    throw ArcRangeError(msg.str());
  }
  return {q, static_cast<std::size_t>(std::distance(t.begin(), it))};
}

HybridTimeDomain SolutionRecord::domain() const {
  HybridTimeDomain d;
  for (std::size_t q = origin_piece_; q < history_->pieces.size(); ++q) {
    const auto& p = history_->pieces[q];
    d.intervals.push_back({p.t[forward_begin(q)], p.t.back(), p.j});
  }
  return d;
}

MemoryArc window(const SolutionRecord& solution, const HybridTimePoint& at, double delay_depth) {
  return solution.arc_at(solution.locate(at), delay_depth);
}

namespace {

void validate_options(const SystemDefinition& sys, const MemoryArc& initial, const InputSignal& u,
                      const SimOptions& opt) {
  auto fail = [](const std::string& what) {
    throw SimulationError(SimulationError::Kind::InvalidOptions, "simulate: " + what);
  };
  if (!(opt.step > 0.0) || !std::isfinite(opt.step)) {
    fail("step must be positive and finite");
  }
  if (!std::isfinite(opt.t_end) && !std::isfinite(opt.max_time)) {
    fail("at least one horizon must be finite");
  }
  if (opt.max_consecutive_jumps < 1) {
    fail("max_consecutive_jumps must be at least 1");
  }
  if (opt.record_stride < 1) {
    fail("record_stride must be at least 1");
  }
  for (double d : sys.step_divisors) {
    const double n = d / opt.step;
    if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n) || std::round(n) < 1.0) {
      std::ostringstream msg;
      msg << "step " << opt.step << " does not divide " << d;
      fail(msg.str());
    }
  }
  if (initial.dimension() != sys.state_dim) {
    fail("initial arc dimension does not match the system state dimension");
  }
  if (u.dimension() != sys.input_dim) {
    fail("input dimension does not match the system input dimension");
  }
  if (!sys.flow_map || !sys.jump_map || !sys.in_flow_set || !sys.in_jump_set) {
    fail("system definition is incomplete");
  }
}

// Copies the window of the initial arc into a fresh history in absolute
// coordinates (s, k) -> (t = s, j = k), keeping derivative samples.
std::shared_ptr<History> seed_history(const MemoryArc& initial, double step) {
  auto hist = std::make_shared<History>();
  hist->step = step;
  for (std::size_t b = initial.branch_count(); b-- > 0;) {
    ArcPiece piece;
    piece.j = initial.branch_k(b);
    const std::size_t n = initial.branch_size(b);
    bool any_dx = false;
    for (std::size_t i = 0; i < n; ++i) {
      piece.t.push_back(initial.branch_s(b, i));
      piece.x.push_back(initial.branch_value(b, i));
      const Vector* d = initial.branch_derivative(b, i);
      piece.dx.push_back(d ? *d : Vector());
      any_dx = any_dx || d != nullptr;
    }
    if (!any_dx) {
      piece.dx.clear();
    }
    hist->pieces.push_back(std::move(piece));
  }
  return hist;
}

}  // namespace

SolutionRecord simulate(const SystemDefinition& sys, const MemoryArc& initial, const InputSignal& u,
                        const SimOptions& opt) {
  validate_options(sys, initial, u, opt);
  if (initial.depth_used() + 1e-9 < sys.delay_depth) {
    throw SimulationError(SimulationError::Kind::HistoryUnderflow,
                          "simulate: initial arc is shallower than the system delay depth");
  }
  const double h = opt.step;
  const double hybrid_eps = 1e-9 * std::max(1.0, std::isfinite(opt.t_end) ? opt.t_end : 1.0);
  const double time_eps = 1e-9 * std::max(1.0, std::isfinite(opt.max_time) ? opt.max_time : 1.0);

  auto hist = seed_history(initial, h);
  std::shared_ptr<const History> view = hist;
  std::vector<std::vector<Vector>> inputs(1);
  std::vector<JumpEvent> jumps;
  RecordMeta meta;
  meta.system_name = sys.name;
  meta.state_dim = sys.state_dim;
  meta.input_dim = sys.input_dim;
  meta.continuous_dim = sys.continuous_dim;
  meta.mode_component = sys.mode_component;
  meta.delay_depth = sys.delay_depth;
  meta.target = sys.target;
  meta.options = opt;

  long flow_steps = 0;
  int consecutive_jumps = 0;
  bool last_was_flow = false;
  inputs[0].push_back(u(0.0));

  auto arc_here = [&](std::size_t piece, std::size_t index) {
    try {
      return MemoryArc(view, SampleIndex{piece, index}, sys.delay_depth);
    } catch (const InsufficientHistory& e) {
      throw SimulationError(SimulationError::Kind::HistoryUnderflow, std::string("simulate: ") + e.what());
    }
  };

  for (bool first = true;; first = false) {
    const std::size_t q = hist->pieces.size() - 1;
    const std::size_t i = hist->pieces[q].size() - 1;
    const MemoryArc arc = arc_here(q, i);
    const double t = hist->pieces[q].t[i];
    const int j = hist->pieces[q].j;
    const Vector ut = inputs.back().back();

    const bool in_c = sys.in_flow_set(arc, ut);
    const bool in_d = sys.in_jump_set(arc, ut);
    if (first && !in_c && !in_d) {
      throw SimulationError(SimulationError::Kind::PredicateCoverage,
                            "simulate: initial arc lies in neither the flow set nor the jump set");
    }
    const double t_next = static_cast<double>(flow_steps + 1) * h;
    // Classical RK4; k1 becomes the sample derivative so later delayed
    // lookups can use Hermite interpolation on this panel.
    struct Step {
      Vector k1;
      Vector x_next;
      Vector u_full;
    };
    auto rk4 = [&]() {
      const Vector x = arc.current();
      Step st;
      st.k1 = sys.flow_map(arc, ut);
      if (st.k1.size() != static_cast<Eigen::Index>(sys.state_dim)) {
        throw SimulationError(SimulationError::Kind::InvalidOptions, "simulate: flow map returned wrong dimension");
      }
      const Vector u_half = u(t + 0.5 * h);
      st.u_full = u(t_next);
      const Vector k2 = sys.flow_map(arc.with_head(0.5 * h, x + (0.5 * h) * st.k1), u_half);
      const Vector k3 = sys.flow_map(arc.with_head(0.5 * h, x + (0.5 * h) * k2), u_half);
      const Vector k4 = sys.flow_map(arc.with_head(h, x + h * k3), st.u_full);
      st.x_next = x + (h / 6.0) * (st.k1 + 2.0 * k2 + 2.0 * k3 + k4);
      return st;
    };
    std::optional<Step> step;
    bool do_jump = in_d && (opt.priority == JumpPriority::JumpFirst || !in_c);
    if (in_d && !do_jump) {
      // Flow-first still jumps when flowing cannot continue inside C.
      step = rk4();
      do_jump = !sys.in_flow_set(arc.with_head(h, step->x_next), step->u_full);
    }

    if (do_jump) {
      if (t + j + 1 > opt.t_end + hybrid_eps) {
        meta.end = EndCondition::Horizon;
        break;
      }
      if (++consecutive_jumps > opt.max_consecutive_jumps) {
        ++meta.zeno_trips;
        if (opt.throw_on_zeno) {
          std::ostringstream msg;
          msg << "simulate: Zeno guard tripped, more than " << opt.max_consecutive_jumps
              << " consecutive jumps at t = " << t;
          throw SimulationError(SimulationError::Kind::ZenoGuard, msg.str());
        }
        meta.end = EndCondition::ZenoGuard;
        break;
      }
      ArcPiece next;
      next.j = j + 1;
      next.t.push_back(t);
      next.x.push_back(sys.jump_map(arc, ut));
      if (next.x.back().size() != static_cast<Eigen::Index>(sys.state_dim)) {
        throw SimulationError(SimulationError::Kind::InvalidOptions, "simulate: jump map returned wrong dimension");
      }
      JumpEvent ev;
      ev.t = t;
      ev.j = j;
      ev.pre = arc.current();
      ev.post = next.x.back();
      ev.bracket_lo = last_was_flow ? hist->pieces[q].t[i - 1] : t;
      jumps.push_back(std::move(ev));
      hist->pieces.push_back(std::move(next));
      inputs.emplace_back().push_back(ut);
      last_was_flow = false;
      continue;
    }

    if (!in_c) {
      meta.end = EndCondition::LeftFlowAndJumpSets;
      break;
    }
    if (t_next > opt.max_time + time_eps || t_next + j > opt.t_end + hybrid_eps) {
      meta.end = EndCondition::Horizon;
      break;
    }
    if (!step) {
      step = rk4();
    }
    auto& dx = hist->pieces[q].dx;
    if (dx.size() < hist->pieces[q].size()) {
      dx.resize(hist->pieces[q].size());
    }
    dx[i] = std::move(step->k1);
    Vector x_next = std::move(step->x_next);
    const Vector u_full = std::move(step->u_full);

    auto& piece = hist->pieces[q];
    piece.t.push_back(t_next);
    piece.x.push_back(std::move(x_next));
    inputs.back().push_back(u_full);
    ++flow_steps;
    consecutive_jumps = 0;
    last_was_flow = true;
  }

  // Derivative at the final sample so the record's Hermite panels are complete.
  {
    const std::size_t q = hist->pieces.size() - 1;
    const std::size_t i = hist->pieces[q].size() - 1;
    const MemoryArc arc = arc_here(q, i);
    const Vector& ut = inputs.back().back();
    if (sys.in_flow_set(arc, ut)) {
      auto& dx = hist->pieces[q].dx;
      dx.resize(hist->pieces[q].size());
      dx[i] = sys.flow_map(arc, ut);
    }
  }
  return SolutionRecord(std::move(view), std::move(inputs), std::move(jumps), std::move(meta));
}

AuditReport audit_solution_pair(const SystemDefinition& sys, const SolutionRecord& rec, double jump_tol) {
  AuditReport report;
  auto fail = [&](const std::string& what) {
    report.pass = false;
    if (report.failures.size() < 20) {
      report.failures.push_back(what);
    }
  };
  const auto dv = validate_domain(rec.domain());
  if (!dv.ok) {
    fail("domain: " + dv.reason);
  }
  const SampleIndex first = rec.first_point();
  {
    const MemoryArc arc = rec.arc_at(first);
    if (!sys.in_flow_set(arc, rec.input(first)) && !sys.in_jump_set(arc, rec.input(first))) {
      fail("initial arc lies in neither C nor D");
    }
  }
  rec.for_each_point([&](SampleIndex p) {
    const MemoryArc arc = rec.arc_at(p);
    const Vector& u = rec.input(p);
    if (rec.has_successor(p)) {
      ++report.flow_points;
      if (!sys.in_flow_set(arc, u)) {
        std::ostringstream msg;
        msg << "flow point outside C at (t=" << rec.time(p) << ", j=" << rec.jump_index(p) << ")";
        fail(msg.str());
      }
      return;
    }
    if (p.piece + 1 < rec.piece_count()) {
      ++report.jumps;
      if (!sys.in_jump_set(arc, u)) {
        std::ostringstream msg;
        msg << "jump from outside D at (t=" << rec.time(p) << ", j=" << rec.jump_index(p) << ")";
        fail(msg.str());
      }
      const Vector expected = sys.jump_map(arc, u);
      const Vector& post = rec.state({p.piece + 1, 0});
      const double err = (expected - post).lpNorm<Eigen::Infinity>();
      if (!(err <= jump_tol * std::max(1.0, expected.lpNorm<Eigen::Infinity>()))) {
        std::ostringstream msg;
        msg << "post-jump state differs from g at (t=" << rec.time(p) << ", j=" << rec.jump_index(p)
            << "), error " << err;
        fail(msg.str());
      }
    }
  });
  return report;
}

}  // namespace hymem
