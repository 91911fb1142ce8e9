#include <cmath>

#include <gtest/gtest.h>

#include "semistable/asymptotics.hpp"

using namespace semistable;

TEST(Tau, ClosedForms) {
  const auto e = estimate_tau(Nonlinearity::exponential());
  EXPECT_EQ(*e.tau_minus, 1.0);
  EXPECT_EQ(*e.tau_plus, 1.0);
  EXPECT_EQ(e.confidence, Confidence::ClosedForm);
  for (double p : {2.0, 3.0, 5.0}) {
    const auto t = estimate_tau(Nonlinearity::power_shifted(p));
    EXPECT_DOUBLE_EQ(*t.tau_minus, (p - 1) / p);
    EXPECT_DOUBLE_EQ(*t.tau_plus, (p - 1) / p);
  }
  const auto l = estimate_tau(Nonlinearity::lin_log());
  EXPECT_EQ(*l.tau_plus, 0.0);
}

TEST(Tau, NumericMatchesClosedForms) {
  const auto e = estimate_tau(Nonlinearity::parse("exp(t)"), {}, true);
  EXPECT_NEAR(*e.tau_minus, 1.0, 1e-3);
  EXPECT_NEAR(*e.tau_plus, 1.0, 1e-3);
  EXPECT_EQ(e.confidence, Confidence::NumericConverged);
  const auto c = estimate_tau(Nonlinearity::parse("(1+t)^3"), {}, true);
  EXPECT_NEAR(*c.tau_minus, 2.0 / 3.0, 1e-3);
  EXPECT_NEAR(*c.tau_plus, 2.0 / 3.0, 1e-3);
}

TEST(Tau, LinLogRatioSampleMatchesFormula) {
  // q = f f'' / f'^2 = ln t / (ln t + 1)^2 for t ln t
  const Nonlinearity f = Nonlinearity::lin_log();
  const Triple v = f.eval(1e6);
  const double L = std::log(1e6);
  EXPECT_NEAR(v.f * v.d2 / (v.d1 * v.d1), L / ((L + 1) * (L + 1)), 1e-14);
}

TEST(Tau, RejectsShortRange) {
  TailOptions opt;
  opt.t_max = 10.0;
  EXPECT_THROW(estimate_tau(Nonlinearity::exponential(), opt), DomainError);
}

TEST(Conditions, ExponentialDerivativeBoundHoldsWithUnitConstant) {
  const auto r = check_condition(Nonlinearity::exponential(), ConditionId::C1_26, {0.0, 1.0, 0.0});
  EXPECT_EQ(r.status, ConditionStatus::Holds);
  EXPECT_NEAR(r.empirical_constant, 1.0, 1e-12);
}

TEST(Conditions, LinLogPowHalf) {
  const Nonlinearity f = Nonlinearity::lin_log_pow(0.5);
  EXPECT_EQ(check_condition(f, ConditionId::C1_30, {0.1, 0.0, 0.0}).status, ConditionStatus::Fails);
  // f''/f ~ a / (t^2 ln t): holds for gamma in [1, 2), not below 1.
  EXPECT_EQ(check_condition(f, ConditionId::C1_32, {0.0, 1.5, 0.0}).status, ConditionStatus::Holds);
  EXPECT_EQ(check_condition(f, ConditionId::C1_32, {0.0, 0.5, 0.0}).status, ConditionStatus::Fails);
  EXPECT_EQ(check_condition(f, ConditionId::C1_31, {0.1, 0.0, 0.0}).status, ConditionStatus::Holds);
}

TEST(Conditions, LinLogPowQuarterFailsFirstAllDimensionCondition) {
  EXPECT_EQ(check_condition(Nonlinearity::lin_log_pow(0.25), ConditionId::C1_31, {0.1, 0.0, 0.0}).status,
            ConditionStatus::Fails);
}

TEST(Conditions, ExponentialGrowthPair) {
  const Nonlinearity e = Nonlinearity::exponential();
  EXPECT_EQ(check_condition(e, ConditionId::C1_6, {0.1, 0.0, 0.0}).status, ConditionStatus::Holds);
  EXPECT_EQ(check_condition(e, ConditionId::C1_7, {0.1, 0.0, 0.0}).status, ConditionStatus::Fails);
}

TEST(Conditions, IdsRoundTrip) {
  EXPECT_EQ(parse_condition_id("1.31"), ConditionId::C1_31);
  EXPECT_STREQ(condition_name(ConditionId::C1_26), "1.26");
  EXPECT_THROW(parse_condition_id("9.99"), DomainError);
}

TEST(ConvexPower, Delta) {
  EXPECT_NEAR(*convex_power_delta(Nonlinearity::exponential()), 1.0 - 1e-6, 1e-12);
  EXPECT_NEAR(*convex_power_delta(Nonlinearity::power_shifted(3)), 2.0 / 3.0 - 1e-6, 1e-12);
  EXPECT_NEAR(*convex_power_delta(Nonlinearity::parse("(1+t)^3")), 2.0 / 3.0, 1e-4);
  EXPECT_FALSE(convex_power_delta(Nonlinearity::lin_log()).has_value());
}

TEST(Profile, Exponential) {
  const AsymptoticProfile p = build_profile(Nonlinearity::exponential());
  EXPECT_TRUE(p.convex && p.superlinear && p.f0_positive);
  EXPECT_EQ(*p.tau_minus, 1.0);
  ASSERT_TRUE(p.cond_1_26.has_value());
  EXPECT_DOUBLE_EQ(p.cond_1_26->first, 1.0);
  EXPECT_DOUBLE_EQ(p.cond_1_26->second, 0.0);
  EXPECT_TRUE(p.cond_1_31.has_value());
}
