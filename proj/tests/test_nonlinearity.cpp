#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "semistable/expression.hpp"
#include "semistable/nonlinearity.hpp"

using namespace semistable;

namespace {

void expect_triple(const Triple& got, double f, double d1, double d2, double tol) {
  EXPECT_NEAR(got.f, f, tol * std::max(1.0, std::abs(f)));
  EXPECT_NEAR(got.d1, d1, tol * std::max(1.0, std::abs(d1)));
  EXPECT_NEAR(got.d2, d2, tol * std::max(1.0, std::abs(d2)));
}

}  // namespace

TEST(Parse, ExpAtOne) {
  const double e = std::numbers::e;
  expect_triple(Nonlinearity::parse("exp(t)").eval(1.0), e, e, e, 1e-15);
}

TEST(Parse, CubicAtOne) { expect_triple(Nonlinearity::parse("(1+t)^3").eval(1.0), 8, 12, 12, 1e-15); }

TEST(Parse, LogAtZeroIsDomainError) { EXPECT_THROW(Nonlinearity::parse("t*ln(t)"), DomainError); }

TEST(Parse, SyntaxErrorCarriesPosition) {
  try {
    Nonlinearity::parse("1 + * t");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
}

TEST(Parse, PrecedenceAndUnaryMinus) {
  const ExprAst a = ExprAst::parse("2^3^2");
  EXPECT_DOUBLE_EQ(a.value(0.0), 512.0);
  EXPECT_DOUBLE_EQ(ExprAst::parse("-t^2").value(3.0), -9.0);
  EXPECT_DOUBLE_EQ(ExprAst::parse("1 + 2*t - t/4").value(4.0), 8.0);
}

TEST(Parse, JetMatchesHandDerivatives) {
  // f = t^2 exp(t) + sqrt(1+t): f' = (2t+t^2)e^t + 1/(2 sqrt(1+t)), f'' = (2+4t+t^2)e^t - (1+t)^(-3/2)/4
  const Jet2 j = ExprAst::parse("t^2*exp(t) + sqrt(1+t)").jet(0.7);
  const double t = 0.7, e = std::exp(t), s = std::sqrt(1 + t);
  EXPECT_NEAR(j.value, t * t * e + s, 1e-14);
  EXPECT_NEAR(j.d1, (2 * t + t * t) * e + 0.5 / s, 1e-14);
  EXPECT_NEAR(j.d2, (2 + 4 * t + t * t) * e - 0.25 / (s * s * s), 1e-13);
}

TEST(Builtin, ExponentialAtZero) { expect_triple(Nonlinearity::exponential().eval(0.0), 1, 1, 1, 0); }

TEST(Builtin, PowerShiftedAtTwo) { expect_triple(Nonlinearity::power_shifted(2).eval(2.0), 9, 6, 2, 1e-15); }

TEST(Builtin, LinLogAtESquared) {
  const double e2 = std::exp(2.0);
  expect_triple(Nonlinearity::lin_log().eval(e2), 2 * e2, 3, 1 / e2, 1e-14);
}

TEST(Builtin, LinLogBlendIsC2AtJoin) {
  const Nonlinearity f = Nonlinearity::lin_log();
  const double t = Nonlinearity::kBlendEnd;
  const Triple below = f.eval(t * (1 - 1e-12)), above = f.eval(t);
  EXPECT_NEAR(below.f, above.f, 1e-9);
  EXPECT_NEAR(below.d1, above.d1, 1e-9);
  EXPECT_NEAR(below.d2, above.d2, 1e-9);
  EXPECT_GT(f.f0(), 0.0);
}

TEST(Builtin, LinLogPowTailDerivatives) {
  // f = t L^a, f' = L^a + a L^(a-1), f'' = a L^(a-2) (L + a - 1) / t
  const Nonlinearity f = Nonlinearity::lin_log_pow(0.5);
  const double t = 1e4, L = std::log(t), a = 0.5;
  expect_triple(f.eval(t), t * std::pow(L, a), std::pow(L, a) + a * std::pow(L, a - 1),
                a * std::pow(L, a - 2) * (L + a - 1) / t, 1e-13);
}

TEST(Builtin, RejectsBadParameters) {
  EXPECT_THROW(Nonlinearity::power_shifted(1.0), DomainError);
  EXPECT_THROW(Nonlinearity::lin_log_pow(1.5), DomainError);
}

TEST(Builtin, TildeVanishesAtZero) {
  const Nonlinearity f = Nonlinearity::power_shifted(3);
  EXPECT_EQ(f.tilde(0.0), 0.0);
  EXPECT_NEAR(f.tilde(1.0), 7.0, 1e-15);
}

TEST(Validate, ExponentialPasses) {
  const ValidationReport r = validate(Nonlinearity::exponential());
  EXPECT_TRUE(r.all_passed());
  EXPECT_GT(r.superlinear_ratio_max, 1e100);
}

TEST(Validate, LinearFailsSuperlinearity) {
  const ValidationReport r = validate(Nonlinearity::parse("1+t"));
  EXPECT_FALSE(r.superlinear());
  EXPECT_TRUE(r.passed("f(0) > 0"));
}

TEST(Validate, NegativeAtZeroFlagged) {
  const ValidationReport r = validate(Nonlinearity::parse("exp(t)-2"));
  EXPECT_FALSE(r.passed("f(0) > 0"));
  ASSERT_NE(r.find("f(0) > 0"), nullptr);
  EXPECT_EQ(*r.find("f(0) > 0")->witness, 0.0);
}

TEST(Validate, NonConvexFlagged) {
  // f'' = e^t - 2.5 (1+t)^(-3/2) < 0 at t = 0, yet f(0) = 1, f' > 0 and f is superlinear.
  const ValidationReport r = validate(Nonlinearity::parse("exp(t) + 10*sqrt(1+t) - 10"));
  EXPECT_FALSE(r.convex());
  EXPECT_TRUE(r.passed("f' >= 0"));
  EXPECT_TRUE(r.superlinear());
  EXPECT_EQ(*r.find("convex")->witness, 0.0);
}
