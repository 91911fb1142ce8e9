#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "semistable/analysis.hpp"

using namespace semistable;

namespace {

constexpr double kPi = std::numbers::pi;

// u = 1 - r^2 with its derivatives.
RadialProfile paraboloid(int n) {
  return RadialProfile::from_function(n, 1.0, [](double r) {
    return std::array<double, 4>{1 - r * r, -2 * r, -2.0, 0.0};
  });
}

std::vector<double> lambdas_near(double ref, std::size_t count) {
  std::vector<double> l;
  for (std::size_t i = 0; i < count; ++i) l.push_back(ref * (1 - 0.009 * std::pow(0.7, static_cast<double>(i))));
  return l;
}

}  // namespace

TEST(BallIntegral, Paraboloid) {
  const RadialProfile p = paraboloid(2);
  // 2 pi int (1-r^2)^2 r dr = pi/3, 2 pi int 4 r^3 dr = 2 pi
  EXPECT_NEAR(ball_integral(p, [](double, double u, double) { return u * u; }).value, kPi / 3, 1e-13);
  EXPECT_NEAR(ball_integral(p, [](double, double, double du) { return du * du; }).value, 2 * kPi, 1e-13);
}

TEST(BallIntegral, VolumeOfThreeBall) {
  const RadialProfile p = paraboloid(3);
  EXPECT_NEAR(ball_integral(p, [](double, double, double) { return 1.0; }).value, 4 * kPi / 3, 1e-13);
}

TEST(Quantities, Names) {
  EXPECT_EQ(QuantitySpec::lp_norm(INFINITY).name(), "Linf_norm");
  EXPECT_EQ(QuantitySpec::lp_norm(2).name(), "L2_norm");
  EXPECT_EQ(QuantitySpec::grad_lp_norm(2).name(), "grad_L2_norm");
  EXPECT_EQ(QuantitySpec::int_h_f_beta(0.9).name(), "int_H_f_beta(0.9)");
  EXPECT_EQ(QuantitySpec::int_nedev().name(), "int_ftilde2_over_u");
  EXPECT_THROW(QuantitySpec::int_h_f_beta(1.0), DomainError);
  EXPECT_THROW(QuantitySpec::lp_norm(0.5), DomainError);
}

TEST(Track, HfBetaAtLiouvilleFoldMatchesClosedForm) {
  const Nonlinearity e = Nonlinearity::exponential();
  const Branch b = branch_sweep(e, 2, {0.5, 2 * std::numbers::ln2});
  const TrackTable t = track(b, e, {QuantitySpec::int_h_f_beta(0.0), QuantitySpec::lp_norm(INFINITY)});
  const RadialProfile& p = *b.points[1].profile;
  const double exact = ball_integral(p, [](double, double u, double) {
                         return (std::exp(3 * u) - std::exp(u)) / 2;
                       }).value;
  ASSERT_TRUE(t.values[1][0].has_value());
  EXPECT_NEAR(*t.values[1][0], exact, 1e-8 * exact);
  EXPECT_DOUBLE_EQ(*t.values[1][1], 2 * std::numbers::ln2);
}

TEST(Track, EnergyIdentity) {
  // int |grad u|^2 = lambda int u f(u)
  const Nonlinearity e = Nonlinearity::exponential();
  const Branch b = branch_sweep(e, 3, linear_grid(0.2, 3.0, 8));
  const TrackTable t = track(b, e, {QuantitySpec::grad_lp_norm(2), QuantitySpec::int_uf()});
  for (std::size_t i = 0; i < t.m.size(); ++i) {
    const double g = *t.values[i][0];
    EXPECT_NEAR(g * g, t.lambda[i] * *t.values[i][1], 1e-9 * g * g);
  }
}

TEST(Track, Lemma21IntegralNonPositiveOnMinimalBranch) {
  const Nonlinearity e = Nonlinearity::exponential();
  const Branch b = branch_sweep(e, 3, linear_grid(0.1, 3.0, 15));
  const TrackTable t = track(b, e, {QuantitySpec::int_lemma21_h(GChoice::f_tilde()), QuantitySpec::int_f_fprime()});
  for (auto i : b.minimal_indices()) EXPECT_LE(*t.values[i][0], 1e-8 * *t.values[i][1]);
}

TEST(Track, IntegralsVanishWithTheSolution) {
  const Nonlinearity e = Nonlinearity::exponential();
  const Branch b = branch_sweep(e, 3, {1e-8, 1e-6});
  const TrackTable t = track(b, e, {QuantitySpec::int_h_f_beta(0.5), QuantitySpec::int_nedev(), QuantitySpec::lp_norm(2)});
  for (std::size_t k = 0; k < 3; ++k) EXPECT_LT(std::abs(*t.values[0][k]), 1e-6);
}

TEST(Track, ThreadCountInvariant) {
  const Nonlinearity e = Nonlinearity::exponential();
  const Branch b = branch_sweep(e, 3, linear_grid(0.2, 2.0, 6));
  TrackOptions four;
  four.threads = 4;
  const std::vector<QuantitySpec> specs{QuantitySpec::int_h_f_beta(0.9), QuantitySpec::lp_norm(2)};
  EXPECT_EQ(track(b, e, specs).values, track(b, e, specs, four).values);
}

TEST(Diagnose, ConstantSeries) {
  const auto l = lambdas_near(18.0, 20);
  const std::vector<double> v(l.size(), 3.25);
  const BoundednessDiagnosis d = diagnose_boundedness(l, v, 18.0);
  EXPECT_EQ(d.kind, TailKind::ConvergesTo);
  EXPECT_NEAR(d.limit, 3.25, 1e-12);
  EXPECT_EQ(consistency(d, true), "consistent");
  EXPECT_EQ(consistency(d, false), "inconsistent");
}

TEST(Diagnose, SquareRootApproach) {
  const auto l = lambdas_near(18.0, 20);
  std::vector<double> v;
  for (double x : l) v.push_back(5.0 - 2.0 * std::sqrt(18.0 - x));
  const BoundednessDiagnosis d = diagnose_boundedness(l, v, 18.0);
  EXPECT_EQ(d.kind, TailKind::ConvergesTo);
  EXPECT_NEAR(d.limit, 5.0, 1e-6);
}

TEST(Diagnose, LogGrowth) {
  const auto l = lambdas_near(18.0, 20);
  std::vector<double> v;
  for (double x : l) v.push_back(1.0 - 0.7 * std::log(18.0 - x));
  const BoundednessDiagnosis d = diagnose_boundedness(l, v, 18.0);
  EXPECT_EQ(d.kind, TailKind::GrowsLog);
  EXPECT_FALSE(d.bounded());
  EXPECT_STREQ(tail_kind_name(d.kind), "GrowsLike(log)");
}

TEST(Diagnose, PowerGrowth) {
  const auto l = lambdas_near(18.0, 20);
  std::vector<double> v;
  for (double x : l) v.push_back(2.0 + 0.3 * std::pow(18.0 - x, -0.5));
  const BoundednessDiagnosis d = diagnose_boundedness(l, v, 18.0);
  EXPECT_EQ(d.kind, TailKind::GrowsPower);
  EXPECT_NEAR(d.power, 0.5, 1e-3);
}

TEST(Diagnose, TooFewPointsThrow) {
  const auto l = lambdas_near(18.0, 5);
  EXPECT_THROW(diagnose_boundedness(l, std::vector<double>(5, 1.0), 18.0), DomainError);
  EXPECT_THROW(diagnose_boundedness(l, std::vector<double>(4, 1.0), 18.0), DomainError);
}
