#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hymem/memory_arc.hpp"
#include "hymem/simulator.hpp"
#include "test_support.hpp"

using namespace hymem;
using hymem::test::vec;

namespace {

SystemDefinition ramp_system(double depth) {
  SystemDefinition sys;
  sys.name = "ramp";
  sys.state_dim = 1;
  sys.input_dim = 1;
  sys.continuous_dim = 1;
  sys.delay_depth = depth;
  sys.target = TargetSet::origin(1);
  sys.flow_map = [](const MemoryArc&, const Vector&) { return vec({1.0}); };
  sys.jump_map = [](const MemoryArc& a, const Vector&) { return a.current(); };
  sys.in_flow_set = [](const MemoryArc&, const Vector&) { return true; };
  sys.in_jump_set = [](const MemoryArc&, const Vector&) { return false; };
  return sys;
}

// Branch k = -1 on [-1, -0.5] with value 1, branch 0 on [-0.5, 0] with value 2.
MemoryArc one_jump_arc(double step) {
  ArcPiece before;
  before.j = -1;
  ArcPiece after;
  after.j = 0;
  for (double s = -1.0; s <= -0.5 + 1e-12; s += step) {
    before.t.push_back(s);
    before.x.push_back(vec({1.0}));
  }
  for (double s = -0.5; s <= 1e-12; s += step) {
    after.t.push_back(std::abs(s) < 1e-12 ? 0.0 : s);
    after.x.push_back(vec({2.0}));
  }
  after.t.back() = 0.0;
  return MemoryArc({before, after}, 2.0);
}

}  // namespace

TEST(Window, AtOriginReturnsInitialArc) {
  const auto sys = ramp_system(1.0);
  const auto init = make_sampled_arc([](double s) { return vec({std::sin(3.0 * s)}); }, 1.0, 0.01);
  SimOptions o;
  o.step = 0.01;
  o.max_time = 2.0;
  const auto rec = simulate(sys, init, InputSignal::zero(1), o);
  const MemoryArc w = window(rec, {0.0, 0}, 1.0);
  ASSERT_EQ(w.branch_count(), init.branch_count());
  ASSERT_EQ(w.branch_size(0), init.branch_size(0));
  for (std::size_t i = 0; i < w.branch_size(0); ++i) {
    EXPECT_EQ(w.branch_s(0, i), init.branch_s(0, i));
    EXPECT_EQ(w.branch_value(0, i), init.branch_value(0, i));
  }
}

TEST(Window, ConstantSolutionGivesConstantArc) {
  const auto sys = linear_dde_system(0.0, 0.0, 1.0);
  SimOptions o;
  o.step = 0.01;
  o.max_time = 3.0;
  const auto rec = simulate(sys, make_constant_arc(vec({0.7}), 1.0, 0.01), InputSignal::zero(1), o);
  for (double t : {0.0, 0.5, 1.3, 3.0}) {
    const MemoryArc w = window(rec, {t, 0}, 1.0);
    w.for_each_sample([](double, int, const Vector& x) { EXPECT_DOUBLE_EQ(x(0), 0.7); });
    EXPECT_DOUBLE_EQ(w.eval_delayed(-0.333)(0), 0.7);
  }
}

TEST(Window, RampShiftedArc) {
  const auto sys = ramp_system(1.0);
  SimOptions o;
  o.step = 0.01;
  o.max_time = 2.0;
  const auto rec = simulate(sys, make_constant_arc(vec({0.0}), 1.0, 0.01), InputSignal::zero(1), o);
  const MemoryArc w = window(rec, {2.0, 0}, 1.0);
  for (double s : {0.0, -0.25, -0.5, -0.995, -1.0}) {
    EXPECT_NEAR(w.eval_delayed(s)(0), 2.0 + s, 1e-12);
  }
  EXPECT_THROW((void)w.eval_delayed(-2.5), ArcRangeError);
}

TEST(EvalDelayed, ZeroIsCurrentSample) {
  const auto arc = make_sampled_arc([](double s) { return vec({std::exp(s), s}); }, 1.0, 0.01);
  EXPECT_EQ(arc.eval_delayed(0.0), arc.current());
  EXPECT_DOUBLE_EQ(arc.current()(0), 1.0);
}

TEST(EvalDelayed, JumpInstantTakesPostJumpBranch) {
  const MemoryArc arc = one_jump_arc(0.05);
  EXPECT_EQ(arc.branch_count(), 2u);
  EXPECT_DOUBLE_EQ(arc.eval_delayed(-0.5)(0), 2.0);
  EXPECT_DOUBLE_EQ(arc.sample_at(-0.5, -1)(0), 1.0);
  EXPECT_DOUBLE_EQ(arc.eval_delayed(-0.75)(0), 1.0);
  EXPECT_THROW((void)arc.sample_at(-0.75, 0), ArcRangeError);
}

TEST(EvalDelayed, LinearInterpolationOfExponential) {
  const auto arc = make_sampled_arc([](double s) { return vec({std::exp(s)}); }, 1.0, 0.01);
  EXPECT_NEAR(arc.eval_delayed(-0.305)(0), std::exp(-0.305), 1e-4);
}

TEST(EvalDelayed, HermiteWithDerivativesIsFourthOrder) {
  auto err = [](double h) {
    const auto arc = make_sampled_arc([](double s) { return vec({std::sin(4.0 * s)}); },
                                      [](double s) { return vec({4.0 * std::cos(4.0 * s)}); }, 1.0, h);
    double e = 0.0;
    for (double s = -0.99; s < 0.0; s += 0.0137) {
      e = std::max(e, std::abs(arc.eval_delayed(s)(0) - std::sin(4.0 * s)));
    }
    return e;
  };
  const double e1 = err(0.02);
  const double e2 = err(0.01);
  EXPECT_LT(e1, 1e-6);
  EXPECT_GT(e1 / e2, 12.0);
  EXPECT_LT(e1 / e2, 20.0);
}

TEST(EvalDelayed, OutsideRangeThrows) {
  const auto arc = make_constant_arc(vec({1.0}), 1.0, 0.1);
  EXPECT_THROW((void)arc.eval_delayed(0.1), ArcRangeError);
  EXPECT_THROW((void)arc.eval_delayed(-3.0), ArcRangeError);
}

TEST(MemoryArc, InsufficientHistoryThrows) {
  auto h = std::make_shared<History>();
  h->step = 0.1;
  ArcPiece p;
  p.t = {-0.2, -0.1, 0.0};
  p.x = {vec({0.0}), vec({0.0}), vec({0.0})};
  h->pieces.push_back(p);
  EXPECT_THROW(MemoryArc(h, SampleIndex{0, 2}, 1.0), InsufficientHistory);
}

TEST(MemoryArc, DepthUsedIsSmallestRecordedDepthAtLeastDelta) {
  const auto arc = make_constant_arc(vec({1.0}), 0.05, 0.02);
  EXPECT_GE(arc.depth_used(), 0.05 - 1e-12);
  EXPECT_LT(arc.depth_used(), 0.05 + 0.02);
}

TEST(MemoryArc, WithHeadInterpolatesBetweenAnchorAndHead) {
  const auto arc = make_constant_arc(vec({1.0}), 1.0, 0.1);
  const auto staged = arc.with_head(0.05, vec({2.0}));
  EXPECT_DOUBLE_EQ(staged.current()(0), 2.0);
  EXPECT_NEAR(staged.eval_delayed(-0.025)(0), 1.5, 1e-12);
  EXPECT_NEAR(staged.eval_delayed(-0.5)(0), 1.0, 1e-12);
}

TEST(SupNorm, ArcOnTargetIsZero) {
  const auto arc = make_constant_arc(vec({0.0, 0.0}), 1.0, 0.1);
  EXPECT_DOUBLE_EQ(sup_norm_to_set(arc, TargetSet::origin(2)), 0.0);
}

TEST(SupNorm, ConstantArcAtDistance) {
  const auto arc = make_constant_arc(vec({3.0, 4.0}), 1.0, 0.1);
  EXPECT_DOUBLE_EQ(sup_norm_to_set(arc, TargetSet::origin(2)), 5.0);
  EXPECT_NEAR(sup_norm_to_set(arc, TargetSet::ball(vec({0.0, 0.0}), 1.0)), 4.0, 1e-15);
}

TEST(SupNorm, MonotoneArcAttainsAtZero) {
  const auto arc = make_sampled_arc([](double s) { return vec({1.0 + s, 0.0}); }, 1.0, 0.01);
  EXPECT_DOUBLE_EQ(sup_norm_to_set(arc, TargetSet::origin(2)), 1.0);
}

TEST(PointDistance, Values) {
  EXPECT_DOUBLE_EQ(point_distance(vec({0, 0, 0, 0, 0, 0}), TargetSet::origin(6)), 0.0);
  EXPECT_DOUBLE_EQ(point_distance(vec({3, 4, 0, 0, 0, 0}), TargetSet::origin(6)), 5.0);
}

TEST(PointDistance, QuadcopterProductSetUsesContinuousPart) {
  TargetSet w = TargetSet::origin(6);
  w.with_discrete(6, {1.0, 2.0}).with_interval(7, 0.0, 0.2);
  EXPECT_DOUBLE_EQ(point_distance(vec({3, 4, 0, 0, 0, 0, 1, 0.1}), w), 5.0);
  EXPECT_DOUBLE_EQ(point_distance(vec({0, 0, 0, 1, 0, 0, 2, 0.2}), w), 1.0);
  EXPECT_THROW((void)point_distance(vec({0, 0, 0, 0, 0, 0, 3, 0.1}), w), TargetSetError);
  EXPECT_THROW((void)point_distance(vec({0, 0, 0, 0, 0, 0, 1, 0.5}), w), TargetSetError);
}

TEST(MemoryArcProperty, SampledLookupsMatchSamplesExactly) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> a(-2.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const double c0 = a(rng);
    const double c1 = a(rng);
    const auto arc = make_sampled_arc([&](double s) { return vec({c0 + c1 * s * s}); }, 1.0, 0.01);
    for (std::size_t i = 0; i < arc.branch_size(0); ++i) {
      const double s = arc.branch_s(0, i);
      EXPECT_EQ(arc.eval_delayed(s)(0), arc.branch_value(0, i)(0));
    }
  }
}

TEST(MemoryArcProperty, InterpolantStaysWithinBranch) {
  // Lookups on either side of the jump only see their own branch values.
  const MemoryArc arc = one_jump_arc(0.05);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> s(-1.0, 0.0);
  for (int k = 0; k < 500; ++k) {
    const double q = s(rng);
    EXPECT_DOUBLE_EQ(arc.eval_delayed(q)(0), q >= -0.5 ? 2.0 : 1.0);
  }
}
