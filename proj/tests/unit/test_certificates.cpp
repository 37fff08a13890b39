#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hymem/certificates.hpp"
#include "test_support.hpp"

using namespace hymem;
using namespace hymem::test;

namespace {

KrasovskiiFunctional unit_functional(double eta, double r) {
  KrasovskiiFunctional v;
  v.sigma = {1.0};
  v.mu = {1.0};
  v.eta = eta;
  v.delay = r;
  v.continuous_dim = 2;
  return v;
}

CertificateSpec scalar_certificate() {
  CertificateSpec c;
  c.functional = square_functional();
  c.alpha1 = ClassKFn::power(1.0, 2.0);
  c.alpha2 = ClassKFn::power(1.0, 2.0);
  c.alpha3 = ClassKFn::power(1.0, 2.0);
  return c;
}

}  // namespace

TEST(EvalFunctional, ZeroArc) {
  const auto arc = make_constant_arc(Vector::Zero(2), 0.05, 1e-3);
  EXPECT_EQ(eval_functional(unit_functional(2.0, 0.05), arc, 1), 0.0);
}

TEST(EvalFunctional, ConstantUnitArc) {
  const auto arc = make_constant_arc(vec({0.6, 0.8}), 0.05, 1e-3);
  const double exact = 1.0 + (1.0 - std::exp(-0.1)) / 2.0;
  EXPECT_NEAR(eval_functional(unit_functional(2.0, 0.05), arc, 1), exact, 1e-5);
  EXPECT_NEAR(exact, 1.047581, 1e-6);
}

TEST(EvalFunctional, FlatWeight) {
  const auto arc = make_constant_arc(vec({3.0, 0.0}), 0.05, 1e-3);
  EXPECT_NEAR(eval_functional(unit_functional(0.0, 0.05), arc, 1), 9.0 + 0.05 * 9.0, 1e-12);
}

TEST(EvalFunctional, OnlyContinuousComponentsEnter) {
  KrasovskiiFunctional v = reference_functional();
  const auto a = quadcopter::constant_initial_arc({}, vec({1, 0, 0}), Vector::Zero(3), 1, 0.005);
  const auto b = quadcopter::constant_initial_arc({}, vec({1, 0, 0}), Vector::Zero(3), 2, 0.005);
  EXPECT_DOUBLE_EQ(eval_functional(v, a, 1), eval_functional(v, b, 2));
}

TEST(EvalFunctional, ModeWeights) {
  KrasovskiiFunctional v = unit_functional(0.0, 0.05);
  v.sigma = {1.0, 2.0};
  v.mu = {0.0, 0.0};
  const auto arc = make_constant_arc(vec({1.0, 0.0}), 0.05, 1e-3);
  EXPECT_DOUBLE_EQ(eval_functional(v, arc, 2), 2.0);
  EXPECT_THROW((void)v.sigma_for(3), std::out_of_range);
  v.sigma = {0.0};
  EXPECT_THROW(v.validate(), std::invalid_argument);
}

TEST(NumericDini, EquilibriumIsZero) {
  const auto rec = run_quadcopter(input_zero(), Vector::Zero(3), 1.0);
  EXPECT_EQ(numeric_dini(reference_functional(), rec, {0.1, 0}, 0.005), 0.0);
}

TEST(NumericDini, ScalarDecayOfSquare) {
  const double h = 0.001;
  const auto rec = run_scalar_decay(1.0, 1.0, h);
  EXPECT_NEAR(numeric_dini(square_functional(), rec, {0.0, 0}, h), -2.0, 3.0 * h);
}

TEST(NumericDini, NoSuccessorThrows) {
  const auto rec = run_scalar_decay(1.0, 1.0, 0.01);
  EXPECT_THROW((void)numeric_dini(square_functional(), rec, {1.0, 0}, 0.01), DiniError);
}

TEST(FlowBound, ZeroStateZeroInput) {
  const auto arc = quadcopter::constant_initial_arc({}, Vector::Zero(3), Vector::Zero(3), 1, 0.005);
  EXPECT_EQ(analytic_flow_bound({}, reference_certificate(), 1.0, 1.0, arc, Vector::Zero(3)), 0.0);
}

TEST(FlowBound, DriftEigenvalue) {
  const double expected = (-1.0 / 6.0 + std::sqrt(1.0 / 36.0 + 1.0)) / 2.0;
  EXPECT_NEAR(lambda_max_sym(quadcopter::drift_matrix({})), expected, 1e-12);
  EXPECT_NEAR(expected, 0.4236, 1e-4);
  // Brute-force: maximize the Rayleigh quotient over the (p, v) plane of one axis.
  double best = -1e9;
  const Matrix a = quadcopter::drift_matrix({});
  for (int k = 0; k < 20000; ++k) {
    const double th = M_PI * k / 20000.0;
    Vector x = Vector::Zero(6);
    x(0) = std::cos(th);
    x(3) = std::sin(th);
    best = std::max(best, x.dot(a * x));
  }
  EXPECT_NEAR(best, expected, 1e-8);
}

TEST(FlowBound, SpectralNorms) {
  EXPECT_NEAR(spectral_norm(quadcopter::input_matrix({})), 1.0 / 1.2, 1e-12);
  EXPECT_NEAR(spectral_norm(quadcopter::feedback_gain({}, 1)), std::hypot(4.8, 1.5), 1e-12);
}

TEST(FlowBound, InputTermScalesQuadratically) {
  const auto arc = quadcopter::constant_initial_arc({}, vec({0.3, -0.2, 0.1}), vec({0.1, 0, 0}), 1, 0.005);
  const auto cert = reference_certificate();
  const Vector u = vec({0.5, 0.0, -0.2});
  const auto zero = Vector::Zero(3);
  const double b0 = analytic_flow_bound({}, cert, 1.0, 1.0, arc, zero);
  const double b1 = analytic_flow_bound({}, cert, 1.0, 1.0, arc, u) - b0;
  const double b2 = analytic_flow_bound({}, cert, 1.0, 1.0, arc, Vector(2.0 * u)) - b0;
  EXPECT_NEAR(b2, 4.0 * b1, 1e-12);
  const auto c = flow_bound_coefficients({}, cert.functional, 1, 1.0, 1.0);
  EXPECT_NEAR(b1, c.c_u * u.squaredNorm(), 1e-12);
}

TEST(CheckIissLkf, ZeroTrajectoryPasses) {
  const auto rec = run_quadcopter(input_zero(), Vector::Zero(3), 2.0);
  const auto rep = check_iiss_lkf(reference_certificate(), {&rec}, 1e-3);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.conditions.size(), 3u);
}

TEST(CheckIissLkf, JumpsLeaveFunctionalUnchanged) {
  const auto rec = run_quadcopter(input_u1(), vec({1, 1, 0.5}), 5.0);
  const auto rep = check_jump_nonincrease(reference_functional(), {&rec}, 1e-9);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.statistics.at("max_abs_change"), 0.0);
  for (double d : jump_increments(reference_functional(), rec)) {
    EXPECT_EQ(d, 0.0);
  }
}

TEST(CheckIissLkf, BrokenSandwichIsLocated) {
  auto cert = reference_certificate();
  cert.alpha1 = ClassKFn::power(10.0, 2.0);
  const auto rec = run_quadcopter(input_u1(), vec({1, 1, 0.5}), 1.0);
  const auto rep = check_iiss_lkf(cert, {&rec}, 1e-3);
  EXPECT_FALSE(rep.pass);
  const auto& sw = rep.conditions.front();
  EXPECT_EQ(sw.name, "sandwich");
  EXPECT_FALSE(sw.pass);
  ASSERT_FALSE(sw.violations.empty());
  EXPECT_EQ(sw.violations.front().at, (HybridTimePoint{0.0, 0}));
  EXPECT_LT(sw.violations.front().margin, 0.0);
}

TEST(CheckIissLkf, UnequalModeWeightsBreakJumpInvariance) {
  auto v = reference_functional();
  v.sigma = {1.0, 2.0};
  const auto rec = run_quadcopter(input_u1(), vec({1, 1, 0.5}), 1.0);
  EXPECT_FALSE(check_jump_nonincrease(v, {&rec}, 1e-9).pass);
}

TEST(CheckExponential, ScalarDecayRates) {
  const auto rec = run_scalar_decay(1.0, 3.0, 0.005);
  auto cert = scalar_certificate();
  cert.decay_rate = 1.0;
  EXPECT_TRUE(check_exponential(cert, {&rec}, 1e-3).pass);
  cert.decay_rate = 3.0;
  EXPECT_THROW(cert.validate(), std::invalid_argument);
  // Same comparison with a rate beyond the valid decay range, as a storage rate.
  cert.decay_rate.reset();
  cert.storage_rate = 3.0;
  EXPECT_FALSE(check_storage(cert, {&rec}, 1e-3).pass);
}

TEST(CheckExponential, ZeroTrajectoryPasses) {
  const auto rec = run_scalar_decay(0.0, 1.0, 0.01);
  auto cert = scalar_certificate();
  cert.decay_rate = 1.0;
  EXPECT_TRUE(check_exponential(cert, {&rec}, 1e-6).pass);
}

TEST(CheckStorage, HalfRateMatchesExponential) {
  const auto rec = run_scalar_decay(2.0, 3.0, 0.005);
  for (double v : {0.4, 1.0}) {
    auto e = scalar_certificate();
    e.decay_rate = v / 2.0;
    auto s = scalar_certificate();
    s.storage_rate = v / 2.0;
    const auto re = check_exponential(e, {&rec}, 1e-3);
    const auto rs = check_storage(s, {&rec}, 1e-3);
    EXPECT_EQ(re.pass, rs.pass);
    EXPECT_EQ(re.conditions[1].violation_count, rs.conditions[1].violation_count);
    EXPECT_DOUBLE_EQ(re.conditions[1].worst_margin, rs.conditions[1].worst_margin);
  }
}

TEST(CheckStorage, ZeroRateReducesToSupplyBound) {
  const auto rec = run_scalar_decay(1.0, 1.0, 0.01);
  auto c = scalar_certificate();
  c.storage_rate = 0.0;
  EXPECT_TRUE(check_storage(c, {&rec}, 1e-6).pass);
}

TEST(FlowBoundAudit, ZeroTrajectoryPasses) {
  const auto rec = run_quadcopter(input_zero(), Vector::Zero(3), 1.0);
  EXPECT_TRUE(flow_bound_audit({}, reference_certificate(), 1.0, 1.0, {&rec}, 1e-3).pass);
}

TEST(FlowBoundAudit, VanishingInputRun) {
  const auto rec = run_quadcopter(input_u1());
  const auto rep = flow_bound_audit({}, reference_certificate(), 1.0, 1.0, {&rec}, default_check_tol(0.005));
  EXPECT_TRUE(rep.pass);
  EXPECT_GT(rep.conditions.front().checked, 3900u);
  EXPECT_TRUE(rep.statistics.count("max_discretization_slack"));
}

TEST(SandwichCertificate, BoundsHoldOnRandomArcs) {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  const auto v = reference_functional();
  const auto cert = sandwich_certificate(v);
  const auto w = quadcopter_system({}).target;
  for (int k = 0; k < 100; ++k) {
    const auto arc = make_sampled_arc(
        [&, a = d(rng), b = d(rng)](double s) {
          return quadcopter::extended_state(vec({a * std::cos(s), b, 0.0}), vec({0.0, a * s, b}), 1, 0.0);
        },
        v.delay, 0.005);
    const double val = eval_functional(v, arc, 1);
    EXPECT_LE(cert.alpha1(point_distance(arc.current(), w)), val + 1e-12);
    EXPECT_LE(val, cert.alpha2(sup_norm_to_set(arc, w)) + 1e-12);
  }
}

TEST(FunctionalProperty, QuadratureConvergesSecondOrder) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> d(0.5, 3.0);
  for (int k = 0; k < 20; ++k) {
    const double amp = d(rng);
    const double rate = d(rng);
    const double eta = d(rng);
    const double r = 0.5;
    KrasovskiiFunctional v = unit_functional(eta, r);
    v.continuous_dim = 1;
    const double exact = amp * amp + amp * amp * (1.0 - std::exp(-(eta + 2.0 * rate) * r)) / (eta + 2.0 * rate);
    auto err = [&](double h) {
      const auto arc = make_sampled_arc([&](double s) { return vec({amp * std::exp(rate * s)}); }, r, h);
      return std::abs(eval_functional(v, arc, 1) - exact);
    };
    const double ratio = err(0.01) / err(0.005);
    EXPECT_GT(ratio, 3.5);
    EXPECT_LT(ratio, 4.5);
  }
}
