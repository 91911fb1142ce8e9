#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "semistable/estimates.hpp"
#include "semistable/quadrature.hpp"

using namespace semistable;

TEST(Quadrature, GaussKronrodPolynomialExact) {
  const QuadResult q = gauss_kronrod15([](double x) { return std::pow(x, 20); }, 0.0, 1.0);
  EXPECT_NEAR(q.value, 1.0 / 21.0, 1e-16);
}

TEST(Quadrature, AdaptiveHandlesSqrtEndpoint) {
  const QuadResult q = integrate_adaptive([](double x) { return std::sqrt(x); }, 0.0, 1.0);
  EXPECT_NEAR(q.value, 2.0 / 3.0, 1e-12);
}

TEST(HFBeta, ExponentialClosedForm) {
  const Nonlinearity e = Nonlinearity::exponential();
  EXPECT_NEAR(H_f_beta(e, 0.0, 1.0), (std::exp(3.0) - std::exp(1.0)) / 2.0, 1e-10);
  EXPECT_EQ(H_f_beta(e, 0.5, 0.0), 0.0);
}

TEST(HFBeta, PowerShiftedTwo) {
  // f f'' = 2 (1+t)^2, Phi' = sqrt(2)/(1+t) is irrelevant at beta = 0: I(1) = (2/3)(8-1), H = f(1) I(1)
  EXPECT_NEAR(H_f_beta(Nonlinearity::power_shifted(2), 0.0, 1.0), 56.0 / 3.0, 1e-10);
}

TEST(HFBeta, ClosedFormSweeps) {
  std::vector<double> grid;
  for (int i = 0; i <= 200; ++i) grid.push_back(0.05 * i);
  for (double beta : {0.0, 0.5, 0.9}) {
    EXPECT_LT(theorem11_lhs_closed_form_check(Nonlinearity::exponential(), beta, grid), 1e-8);
    EXPECT_LT(theorem11_lhs_closed_form_check(Nonlinearity::power_shifted(2), beta, grid), 1e-8);
  }
  EXPECT_THROW(theorem11_lhs_closed_form_check(Nonlinearity::lin_log(), 0.0, grid), DomainError);
}

TEST(StabilityIntegrand, PowerShiftedTwoWithGEqualsF) {
  // g = f = (1+s)^2: g^2 f' = 64, G(1) = int_0^1 4(1+t)^2 = 28/3, G f = 112/3, H = 80/3
  EXPECT_NEAR(lemma21_H(Nonlinearity::power_shifted(2), GChoice::equals_f(), 1.0), 80.0 / 3.0, 1e-10);
}

TEST(StabilityIntegrand, VanishesAtZeroForAdmissibleG) {
  const Nonlinearity e = Nonlinearity::exponential();
  EXPECT_EQ(lemma21_H(e, GChoice::f_tilde(), 0.0), 0.0);
  EXPECT_NEAR(lemma21_H(e, GChoice::paper_proof(0.5), 0.0), 0.0, 1e-15);
}

TEST(GChoice, CustomMustVanishAtZero) {
  EXPECT_THROW(GChoice::custom("1+t"), DomainError);
  EXPECT_NO_THROW(GChoice::custom("t^2"));
  EXPECT_THROW(GChoice::paper_proof(1.0), DomainError);
}

TEST(GChoice, ProofBridgeIsC1) {
  EstimateRequest req;
  req.g = GChoice::paper_proof(0.5);
  const CumulativeTable t(Nonlinearity::exponential(), req, 5.0);
  const auto left = t.g(1.0 - 1e-9), right = t.g(1.0 + 1e-9);
  EXPECT_NEAR(left.first, right.first, 1e-7);
  EXPECT_NEAR(left.second, right.second, 1e-6);
  EXPECT_EQ(t.g(0.0).first, 0.0);
}

TEST(Table, RejectsNonConvex) {
  EstimateRequest req;
  req.beta = 0.5;
  EXPECT_THROW(CumulativeTable(Nonlinearity::parse("exp(t) + 10*sqrt(1+t) - 10"), req, 2.0), DomainError);
}

TEST(Table, CsvHasColumns) {
  const CumulativeTable t(Nonlinearity::exponential(), EstimateRequest{}, 1.0);
  std::ostringstream os;
  t.write_csv(os);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "t,Phi,I,G");
  // 1/16 panels on [0, 1]: header + 17 rows
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 18);
}

TEST(RatioBound, ExponentialHoldsWithSlack) {
  std::vector<double> s;
  for (int i = 1; i <= 40; ++i) s.push_back(0.5 * i);
  const RatioBoundReport r = lemma22_ratio_bound(Nonlinearity::exponential(), GChoice::equals_f(), 1.0, s);
  EXPECT_EQ(r.status, RatioStatus::Holds);
  EXPECT_NEAR(r.lhs_limsup, 0.5, 1e-3);
  EXPECT_NEAR(r.rhs_limsup, 1.0, 1e-3);
}

TEST(RatioBound, PowerShifted) {
  std::vector<double> s;
  for (int i = 1; i <= 40; ++i) s.push_back(0.5 * i);
  const RatioBoundReport r = lemma22_ratio_bound(Nonlinearity::power_shifted(2), GChoice::equals_f(), 0.5, s);
  EXPECT_EQ(r.status, RatioStatus::Holds);
}

TEST(RatioBound, PreAsymptoticGridIsInconclusive) {
  std::vector<double> s;
  for (int i = 1; i <= 40; ++i) s.push_back(0.025 * i);
  EXPECT_EQ(lemma22_ratio_bound(Nonlinearity::exponential(), GChoice::equals_f(), 1.0, s).status,
            RatioStatus::Inconclusive);
}
