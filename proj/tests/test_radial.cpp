#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "semistable/radial.hpp"

using namespace semistable;

namespace {

const double kLn2 = std::numbers::ln2;

}  // namespace

TEST(Hermite, ReproducesQuintic) {
  auto p = [](double x) { return 1 - 2 * x + 3 * x * x - x * x * x * x * x; };
  auto dp = [](double x) { return -2 + 6 * x - 5 * x * x * x * x; };
  auto ddp = [](double x) { return 6 - 20 * x * x * x; };
  const double a = 0.3, b = 1.1, x = 0.77;
  const auto v = quintic_hermite(a, b, {p(a), dp(a), ddp(a)}, {p(b), dp(b), ddp(b)}, x);
  EXPECT_NEAR(v[0], p(x), 1e-14);
  EXPECT_NEAR(v[1], dp(x), 1e-13);
  EXPECT_NEAR(v[2], ddp(x), 1e-12);
}

TEST(DormandPrince, ExponentialGrowth) {
  auto dp = make_dormand_prince<1>([](double, const OdeState<1>& y) { return OdeState<1>{y[0]}; });
  OdeState<1> last{};
  dp.run(0.0, {1.0}, 2.0, OdeControls{}, [&](double, auto&, auto&, double, const OdeState<1>& y, auto&) {
    last = y;
    return false;
  });
  EXPECT_NEAR(last[0], std::exp(2.0), 1e-10);
}

TEST(Profile, TrivialAtZero) {
  const RadialProfile p = integrate_profile(Nonlinearity::exponential(), 3, 0.0);
  EXPECT_EQ(p.lambda, 0.0);
  EXPECT_EQ(p.R, 0.0);
}

TEST(Profile, LiouvilleFold) {
  const RadialProfile p = integrate_profile(Nonlinearity::exponential(), 2, 2 * kLn2);
  EXPECT_NEAR(p.lambda, 2.0, 1e-6);
  // u_1(r) = 2 ln(2 / (1 + r^2))
  for (int i = 0; i <= 20; ++i) {
    const double r = 0.05 * i;
    EXPECT_NEAR(p.eval(r)[0], 2 * std::log(2 / (1 + r * r)), 1e-10);
  }
  EXPECT_LE(p.residual, 1e-8);
  EXPECT_GE(p.r.size(), 513u);
}

TEST(Profile, LiouvilleFamily) {
  // u_b(0) = 2 ln(1+b), lambda(b) = 8b/(1+b)^2
  for (double b : {0.3, 2.5}) {
    const RadialProfile p = integrate_profile(Nonlinearity::exponential(), 2, 2 * std::log(1 + b));
    EXPECT_NEAR(p.lambda, 8 * b / ((1 + b) * (1 + b)), 1e-9);
  }
}

TEST(Profile, MonotoneWithZeroBoundary) {
  const RadialProfile p = integrate_profile(Nonlinearity::power_shifted(2), 3, 1.0);
  for (std::size_t i = 1; i < p.u.size(); ++i) EXPECT_LE(p.u[i], p.u[i - 1] + 1e-14);
  EXPECT_NEAR(p.u.back(), 0.0, 1e-12);
  EXPECT_EQ(p.u.front(), 1.0);
}

TEST(Profile, SingularLimit) {
  for (int n : {3, 5, 11}) {
    const RadialProfile p = integrate_profile(Nonlinearity::exponential(), n, 30.0);
    EXPECT_NEAR(p.lambda, 2.0 * (n - 2), 0.01 * 2.0 * (n - 2));
    EXPECT_LE(p.residual, 1e-8);
  }
}

TEST(Profile, IntegratorConvergesWithTolerance) {
  double prev = 0.0;
  for (double rtol : {1e-6, 1e-8, 1e-10}) {
    RadialControls c;
    c.ode.rtol = rtol;
    c.ode.atol = rtol * 1e-2;
    const double err = std::abs(integrate_profile(Nonlinearity::exponential(), 2, 2 * std::log(1.5), c).lambda -
                                8 * 0.5 / 2.25);
    if (prev > 1e-13) {
      EXPECT_LT(err, prev * 1.0001);
    }
    prev = err;
  }
  EXPECT_LT(prev, 1e-9);
}

TEST(Eigen, SmallProfileGivesLaplacianEigenvalue) {
  const Nonlinearity e = Nonlinearity::exponential();
  const EigenResult r = principal_eigenvalue(e, integrate_profile(e, 3, 1e-6));
  EXPECT_NEAR(r.mu1, std::numbers::pi * std::numbers::pi, 1e-4);
  EXPECT_TRUE(r.positive_inside);
}

TEST(Eigen, ZeroAtLiouvilleFold) {
  const Nonlinearity e = Nonlinearity::exponential();
  EXPECT_NEAR(principal_eigenvalue(e, integrate_profile(e, 2, 2 * kLn2)).mu1, 0.0, 1e-3);
}

TEST(Eigen, DecreasesAlongMinimalBranch) {
  const Nonlinearity e = Nonlinearity::exponential();
  BranchOptions bo;
  bo.compute_mu1 = true;
  const Branch b = branch_sweep(e, 3, linear_grid(0.1, 3.0, 15), bo);
  ASSERT_TRUE(b.fold_m.has_value());
  double prev = INFINITY;
  for (auto i : b.minimal_indices()) {
    EXPECT_LT(*b.points[i].mu1, prev);
    EXPECT_GE(*b.points[i].mu1, -1e-6);
    prev = *b.points[i].mu1;
  }
}

TEST(Branch, GelfandTwoDimensional) {
  const Branch b = branch_sweep(Nonlinearity::exponential(), 2, linear_grid(0.1, 10.0, 100));
  EXPECT_NEAR(b.lambda_star, 2.0, 1e-5);
  ASSERT_TRUE(b.fold_m.has_value());
  EXPECT_NEAR(*b.fold_m, 2 * kLn2, 1e-4);
  EXPECT_FALSE(b.monotone_flag);
}

TEST(Branch, SupercriticalIsMonotone) {
  const Branch b = branch_sweep(Nonlinearity::exponential(), 11, linear_grid(0.1, 40.0, 40));
  EXPECT_TRUE(b.monotone_flag);
  EXPECT_FALSE(b.fold_m.has_value());
  EXPECT_NEAR(b.points.back().lambda, 18.0, 0.18);
}

TEST(Branch, PowerShiftedHasFold) {
  const Branch b = branch_sweep(Nonlinearity::power_shifted(2), 3, linear_grid(0.1, 10.0, 40));
  EXPECT_TRUE(b.fold_m.has_value());
  EXPECT_GT(b.lambda_star, 0.0);
  EXPECT_TRUE(std::isfinite(b.lambda_star));
}

TEST(Branch, RejectsBadGrid) {
  EXPECT_THROW(branch_sweep(Nonlinearity::exponential(), 2, {1.0, 0.5}), DomainError);
  EXPECT_THROW(branch_sweep(Nonlinearity::exponential(), 1, {1.0}), DomainError);
}

TEST(Branch, ThreadCountDoesNotChangeResult) {
  BranchOptions one, four;
  four.threads = 4;
  const auto grid = linear_grid(0.1, 5.0, 12);
  const Branch a = branch_sweep(Nonlinearity::exponential(), 3, grid, one);
  const Branch b = branch_sweep(Nonlinearity::exponential(), 3, grid, four);
  for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i].lambda, b.points[i].lambda);
  EXPECT_EQ(a.lambda_star, b.lambda_star);
}

TEST(Stability, MarginFormsAgree) {
  const Nonlinearity e = Nonlinearity::exponential();
  const RadialProfile p = integrate_profile(e, 3, 1.0);
  const StabilityMargin m = verify_stability_inequality(e, p, GChoice::f_tilde());
  EXPECT_NEAR(m.direct, m.lemma_form, 1e-6 * std::abs(m.gradient_term));
  EXPECT_GT(m.direct, 0.0);
  EXPECT_LE(m.int_H, 1e-8 * m.int_positive);
}

TEST(Stability, TrivialProfileHasZeroMargin) {
  const Nonlinearity e = Nonlinearity::exponential();
  const StabilityMargin m = verify_stability_inequality(e, integrate_profile(e, 2, 0.0), GChoice::f_tilde());
  EXPECT_EQ(m.direct, 0.0);
  EXPECT_EQ(m.lemma_form, 0.0);
}

TEST(Stability, EigenfunctionMarginNegativePastFold) {
  const Nonlinearity e = Nonlinearity::exponential();
  const RadialProfile p = integrate_profile(e, 2, 3.0);
  const EigenResult eig = principal_eigenvalue(e, p);
  EXPECT_LT(eig.mu1, 0.0);
  const EigenMargin m = eigen_margin(e, p, eig);
  EXPECT_LT(m.margin, 0.0);
  // Rayleigh quotient of the eigenfunction is mu1.
  EXPECT_NEAR(m.margin / m.norm2, eig.mu1, 1e-6 * std::max(1.0, std::abs(eig.mu1)));
}
