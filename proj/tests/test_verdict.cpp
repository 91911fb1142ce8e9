#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "semistable/verdict.hpp"

using namespace semistable;

namespace {

AsymptoticProfile tau_profile(double tau) {
  AsymptoticProfile p = AsymptoticProfile::unknown();
  p.tau_minus = tau;
  p.tau_plus = tau;
  p.confidence["tau_minus"] = Confidence::ClosedForm;
  p.confidence["tau_plus"] = Confidence::ClosedForm;
  return p;
}

bool has_cert(const CertificateReport& r, CertificateSource s, double alpha, double sigma) {
  for (const auto& c : r.certificates)
    if (c.source == s && std::abs(c.alpha - alpha) < 1e-12 && std::abs(c.sigma - sigma) < 1e-12) return true;
  return false;
}

}  // namespace

TEST(Thresholds, NedevPair) {
  const GuaranteeSet a = theorem12_thresholds(2, 1, 3);
  EXPECT_TRUE(a.linf);
  const GuaranteeSet b = theorem12_thresholds(2, 1, 5);
  EXPECT_FALSE(b.linf);
  EXPECT_TRUE(b.h10);
  EXPECT_EQ(b.h10_reason, "exponent-ratio");
}

TEST(Thresholds, ExponentsAtEight) {
  // alpha=2, sigma=1, n=8: u in L^r for r < 1*8/4 = 2, f(u) for r < 8/6, W^{1,r} for r < 8/5.
  const GuaranteeSet g = theorem12_thresholds(2, 1, 8);
  EXPECT_FALSE(g.linf);
  EXPECT_FALSE(g.h10);
  EXPECT_NEAR(*g.u_lr_sup, 2.0, 1e-15);
  EXPECT_NEAR(*g.f_lr_sup, 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(*g.w1r_sup, 8.0 / 5.0, 1e-15);
}

TEST(Thresholds, OpenAtBoundary) {
  EXPECT_FALSE(theorem12_thresholds(2, 1, 4).linf);
  EXPECT_FALSE(theorem12_thresholds(2, 1, 6).h10);
  EXPECT_TRUE(std::isinf(h10_threshold(4, 1)));
  EXPECT_TRUE(theorem12_thresholds(4, 1, 100).h10);
  EXPECT_EQ(theorem12_thresholds(4, 1, 100).h10_reason, "alpha>=2+sigma");
}

TEST(Certificates, DomainChecks) {
  EXPECT_THROW(EstimateCertificate(0.5, 0, CertificateSource::User, false), DomainError);
  EXPECT_THROW(EstimateCertificate(2, 3, CertificateSource::User, false), DomainError);
}

TEST(Bootstrap, ConvergesToLimit) {
  const BootstrapResult r = bootstrap_exponents(2, 1, 8, 500);
  EXPECT_NEAR(r.limit, 2.0, 1e-15);
  EXPECT_LT(r.error, 1e-12);
  EXPECT_NEAR(r.q.front(), 8.0 / 6.0, 1e-15);
}

TEST(Bootstrap, PreconditionsThrow) {
  EXPECT_THROW(bootstrap_exponents(2, 1, 4, 10), DomainError);   // n = 2 alpha
  EXPECT_THROW(bootstrap_exponents(2, 1.9, 10, 10), DomainError);  // (n-2) sigma / n >= alpha - 1
  // n = 5 > 2 alpha = 4 is admissible: the limit is (2-1)*5/(5-4).
  EXPECT_NEAR(bootstrap_exponents(2, 1, 5, 400).limit, 5.0, 1e-15);
}

TEST(Bootstrap, RandomSamples) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 50; ++k) {
    const double alpha = 1 + 5 * u(rng);
    const int n = static_cast<int>(std::floor(2 * alpha)) + 1 + static_cast<int>(20 * u(rng)) % 20;
    const double sigma = 0.95 * std::min(alpha, (alpha - 1) * n / (n - 2.0)) * u(rng);
    const BootstrapResult r = bootstrap_exponents(alpha, sigma, n, 2000);
    EXPECT_LE(r.error, 1e-9 * std::max(1.0, r.limit));
  }
}

TEST(Generate, ExponentialCertificates) {
  const CertificateReport r = generate_certificates(build_profile(Nonlinearity::exponential()));
  EXPECT_TRUE(has_cert(r, CertificateSource::Nedev, 2, 1));
  EXPECT_TRUE(has_cert(r, CertificateSource::TauMinus, 5, 1));
  EXPECT_TRUE(has_cert(r, CertificateSource::Prop1_2_i, 5, 5));
  EXPECT_TRUE(has_cert(r, CertificateSource::Prop1_2_ii, 5, 4));
  EXPECT_TRUE(has_cert(r, CertificateSource::Cor1_3, 5, 3));
}

TEST(Generate, UnknownProfileOnlyNedev) {
  const CertificateReport r = generate_certificates(AsymptoticProfile::unknown());
  ASSERT_EQ(r.certificates.size(), 1u);
  EXPECT_EQ(r.certificates[0].source, CertificateSource::Nedev);
  EXPECT_TRUE(generate_certificates(AsymptoticProfile::unknown(false)).certificates.empty());
}

TEST(Generate, BoundaryClauses) {
  const double t1 = 2.0 / (9.0 - 2.0 * std::sqrt(14.0));
  for (const auto& c : generate_certificates(tau_profile(t1)).certificates)
    if (c.source == CertificateSource::Prop1_2_ii) {
      EXPECT_NEAR(2 * c.alpha, 9.0, 1e-12);
    }
  for (const auto& c : generate_certificates(tau_profile(16.0 / 9.0)).certificates)
    if (c.source == CertificateSource::Cor1_3) {
      EXPECT_NEAR(2 * c.alpha, 9.0, 1e-12);
    }
}

TEST(Verdict, ExponentialBelowTen) {
  const Verdict v = regularity_verdict(build_profile(Nonlinearity::exponential()), 9);
  EXPECT_NEAR(v.linf.n_sup, 10.0, 1e-9);
  EXPECT_EQ(v.requested.guarantee, Guarantee::Linf);
  bool prop12 = false;
  for (const auto& c : v.requested.clauses) prop12 = prop12 || c.rfind("Prop1.2", 0) == 0;
  EXPECT_TRUE(prop12);
  EXPECT_FALSE(v.linf.grants(10));
}

TEST(Verdict, ExponentialTwelveIsH10) {
  const Verdict v = regularity_verdict(build_profile(Nonlinearity::exponential()), 12);
  EXPECT_EQ(v.requested.guarantee, Guarantee::H10);
  ASSERT_TRUE(v.requested.u_lr_sup.has_value());
  EXPECT_NEAR(*v.requested.u_lr_sup, 24.0, 1e-9);  // best pair (5,1): (5-1)*12/(12-10)
}

TEST(Verdict, PowerThresholds) {
  for (double p : {2.0, 3.0, 5.0}) {
    const Verdict v = regularity_verdict(build_profile(Nonlinearity::power_shifted(p)), 3);
    EXPECT_NEAR(v.linf.n_sup, 2 * (1 + 2 * p / (p - 1) + 2 * std::sqrt(p / (p - 1))), 1e-9);
  }
}

TEST(Verdict, LinLogAllDimensions) {
  const Verdict v = regularity_verdict(build_profile(Nonlinearity::lin_log()), 50);
  EXPECT_EQ(v.requested.guarantee, Guarantee::Linf);
  EXPECT_TRUE(v.linf.all_dimensions());
  EXPECT_EQ(*v.certificates.all_dimensions_linf, "Prop1.2-a");
}

TEST(Verdict, H1AllDimensions) {
  EXPECT_EQ(*h1_all_dimensions(build_profile(Nonlinearity::exponential())), "1.31");
  EXPECT_EQ(*h1_all_dimensions(build_profile(Nonlinearity::lin_log_pow(0.5))), "1.31");
  // a = 1/4 sits below the corrected 1/2 threshold of the first condition.
  EXPECT_EQ(*h1_all_dimensions(build_profile(Nonlinearity::lin_log_pow(0.25))), "1.32");
}

TEST(Verdict, TableCoversTwoToFifteen) {
  const Verdict v = regularity_verdict(build_profile(Nonlinearity::exponential()), 3);
  ASSERT_EQ(v.table.size(), 14u);
  EXPECT_EQ(v.table.front().n, 2);
  EXPECT_EQ(v.table.back().n, 15);
  EXPECT_THROW(regularity_verdict(build_profile(Nonlinearity::exponential()), 1), DomainError);
}
