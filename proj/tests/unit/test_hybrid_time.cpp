#include <gtest/gtest.h>

#include <random>

#include "hymem/hybrid_time.hpp"

using namespace hymem;

TEST(Precedes, EqualLengthPointsAreOrderedBothWays) {
  EXPECT_TRUE(precedes({1.0, 0}, {0.0, 1}));
  EXPECT_TRUE(precedes({0.0, 1}, {1.0, 0}));
  EXPECT_FALSE(strictly_precedes({1.0, 0}, {0.0, 1}));
}

TEST(Precedes, Reflexive) { EXPECT_TRUE(precedes({0.0, 0}, {0.0, 0})); }

TEST(Precedes, LongerDoesNotPrecedeShorter) { EXPECT_FALSE(precedes({2.0, 1}, {1.0, 1})); }

TEST(HybridLength, Values) {
  EXPECT_DOUBLE_EQ(hybrid_length({0.0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(hybrid_length({1.5, 2}), 3.5);
  EXPECT_DOUBLE_EQ(hybrid_length({0.2, 1}), 1.2);
}

TEST(ValidateDomain, WellFormedTwoIntervals) {
  HybridTimeDomain d{{{0, 1, 0}, {1, 3, 1}}};
  EXPECT_TRUE(validate_domain(d).ok);
  EXPECT_EQ(d.jump_count(), 1);
  EXPECT_EQ(d.back(), (HybridTimePoint{3.0, 1}));
}

TEST(ValidateDomain, GapIsReportedAtIndexOne) {
  const auto v = validate_domain(HybridTimeDomain{{{0, 1, 0}, {2, 3, 1}}});
  EXPECT_FALSE(v.ok);
  EXPECT_EQ(v.index, 1u);
  EXPECT_FALSE(v.reason.empty());
}

TEST(ValidateDomain, JumpCounterMustIncrementByOne) {
  const auto v = validate_domain(HybridTimeDomain{{{0, 1, 0}, {1, 3, 5}}});
  EXPECT_FALSE(v.ok);
  EXPECT_EQ(v.index, 1u);
}

TEST(ValidateDomain, DegenerateIntervalsForRepeatedJumps) {
  HybridTimeDomain d{{{0, 1, 0}, {1, 1, 1}, {1, 2, 2}}};
  EXPECT_TRUE(validate_domain(d).ok);
  EXPECT_TRUE(d.contains({1.0, 1}));
  EXPECT_FALSE(d.contains({1.5, 1}));
}

TEST(ValidateDomain, ReversedIntervalFails) {
  EXPECT_FALSE(validate_domain(HybridTimeDomain{{{1, 0, 0}}}).ok);
}

TEST(HybridTimeDomain, ContainsEndpointsAndRejectsOutside) {
  HybridTimeDomain d{{{0, 1, 0}, {1, 3, 1}}};
  EXPECT_TRUE(d.contains({0.0, 0}));
  EXPECT_TRUE(d.contains({1.0, 0}));
  EXPECT_TRUE(d.contains({1.0, 1}));
  EXPECT_FALSE(d.contains({2.0, 0}));
  EXPECT_FALSE(d.contains({3.5, 1}));
  EXPECT_FALSE(d.contains({0.5, 2}));
}

TEST(PrecedesProperty, TotalPreorderOnRandomPoints) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> t(0.0, 10.0);
  std::uniform_int_distribution<int> j(0, 10);
  for (int k = 0; k < 1000; ++k) {
    const HybridTimePoint a{t(rng), j(rng)};
    const HybridTimePoint b{t(rng), j(rng)};
    const HybridTimePoint c{t(rng), j(rng)};
    EXPECT_TRUE(precedes(a, b) || precedes(b, a));
    if (precedes(a, b) && precedes(b, c)) {
      EXPECT_TRUE(precedes(a, c));
    }
    EXPECT_EQ(strictly_precedes(a, b), !precedes(b, a));
  }
}

TEST(ValidateDomainProperty, RandomChainsAreValid) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> len(0.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    HybridTimeDomain d;
    double t = 0.0;
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    for (int j = 0; j < n; ++j) {
      const double e = t + (j % 3 == 2 ? 0.0 : len(rng));
      d.intervals.push_back({t, e, j});
      t = e;
    }
    EXPECT_TRUE(validate_domain(d).ok);
    EXPECT_EQ(d.jump_count(), n - 1);
  }
}
