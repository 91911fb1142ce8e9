#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "semistable/asymptotics.hpp"
#include "semistable/errors.hpp"

namespace semistable {

enum class CertificateSource {
  Nedev,
  TauMinus,
  Prop1_1,       // f^(1-delta) convex on a tail
  Prop1_2_i,
  Prop1_2_ii,
  Cor1_3,
  Cor1_4,
  Prop1_3,
  Prop1_3_FPrime,
  User,
};

inline const char* source_name(CertificateSource s) {
  switch (s) {
    case CertificateSource::Nedev: return "Nedev";
    case CertificateSource::TauMinus: return "CR-tau-minus";
    case CertificateSource::Prop1_1: return "Prop1.1";
    case CertificateSource::Prop1_2_i: return "Prop1.2-c(i)";
    case CertificateSource::Prop1_2_ii: return "Prop1.2-c(ii)";
    case CertificateSource::Cor1_3: return "Cor1.3";
    case CertificateSource::Cor1_4: return "Cor1.4";
    case CertificateSource::Prop1_3: return "Prop1.3";
    case CertificateSource::Prop1_3_FPrime: return "Prop1.3-fprime";
    case CertificateSource::User: return "User";
  }
  return "?";
}

/// A uniform L^1 bound on f~(u)^alpha / u^sigma. With `open_sup` the pair is a
/// supremum over a strict parameter family, so every derived threshold is open.
struct EstimateCertificate {
  double alpha = 1.0;
  double sigma = 0.0;
  CertificateSource source = CertificateSource::User;
  bool open_sup = false;
  std::string parameters;  // human-readable, e.g. "tau=1"

  EstimateCertificate() = default;
  EstimateCertificate(double a, double s, CertificateSource src, bool open, std::string params = {})
      : alpha(a), sigma(s), source(src), open_sup(open), parameters(std::move(params)) {
    if (!(alpha >= 1.0) || !(sigma >= 0.0) || !(sigma <= alpha * (1.0 + 1e-15)))
      throw DomainError("certificate needs alpha >= 1 and 0 <= sigma <= alpha");
  }

  std::string name() const { return source_name(source); }
};

/// Conclusions of the certificate-to-threshold theorem for one (alpha, sigma, n).
struct GuaranteeSet {
  bool linf = false;
  bool h10 = false;
  std::string h10_reason;  // "linf", "alpha>=2+sigma", "exponent-ratio"
  // Exponent suprema, present only when n > 2 alpha and (n-2) sigma / n < alpha - 1.
  std::optional<double> u_lr_sup;   // u in L^r, r < (alpha-sigma) n / (n - 2 alpha)
  std::optional<double> f_lr_sup;   // f(u) in L^r, r < (alpha-sigma) n / (n - 2 sigma)
  std::optional<double> w1r_sup;    // u in W^{1,r}, r < (alpha-sigma) n / (n - alpha - sigma)
};

inline void check_certificate_domain(double alpha, double sigma, double n) {
  if (!(alpha >= 1.0)) throw DomainError("alpha must be >= 1");
  if (!(sigma >= 0.0 && sigma <= alpha)) throw DomainError("sigma must lie in [0, alpha]");
  if (!(n >= 2.0)) throw DomainError("dimension must be >= 2");
}

/// H^1_0 threshold of a single certificate: +inf when alpha >= 2 + sigma.
inline double h10_threshold(double alpha, double sigma) {
  if (alpha >= 2.0 + sigma) return std::numeric_limits<double>::infinity();
  return 2.0 * (alpha + sigma) / (2.0 + sigma - alpha);
}

inline GuaranteeSet theorem12_thresholds(double alpha, double sigma, double n) {
  check_certificate_domain(alpha, sigma, n);
  GuaranteeSet g;
  if (n < 2.0 * alpha) {
    g.linf = true;
    g.h10 = true;
    g.h10_reason = "linf";
    return g;
  }
  if (n > 2.0 * alpha && (n - 2.0) * sigma / n < alpha - 1.0) {
    g.u_lr_sup = (alpha - sigma) * n / (n - 2.0 * alpha);
    g.f_lr_sup = (alpha - sigma) * n / (n - 2.0 * sigma);
    g.w1r_sup = (alpha - sigma) * n / (n - alpha - sigma);
  }
  // Checked first: the ratio below divides by 2 + sigma - alpha.
  if (alpha >= 2.0 + sigma) {
    g.h10 = true;
    g.h10_reason = "alpha>=2+sigma";
  } else if (n < h10_threshold(alpha, sigma)) {
    g.h10 = true;
    g.h10_reason = "exponent-ratio";
  }
  return g;
}

struct BootstrapResult {
  std::vector<double> q;  // q_1, q_2, ..., q_M
  double limit = 0.0;     // (alpha - sigma) n / (n - 2 alpha)
  double error = 0.0;     // |q_M - limit|
};

/// Iterates q_m = alpha n q / ((sigma + q) n - 2 alpha q) from q_1 = n/(n-2).
inline BootstrapResult bootstrap_exponents(double alpha, double sigma, double n, int iterations) {
  check_certificate_domain(alpha, sigma, n);
  if (!(n > 2.0 * alpha)) throw DomainError("bootstrap requires n > 2 alpha");
  if (!((n - 2.0) * sigma / n < alpha - 1.0)) throw DomainError("bootstrap requires (n-2) sigma / n < alpha - 1");
  if (iterations < 1) throw DomainError("bootstrap needs at least one iteration");
  BootstrapResult r;
  double q = n / (n - 2.0);
  r.q.push_back(q);
  for (int m = 1; m < iterations; ++m) {
    q = alpha * n * q / ((sigma + q) * n - 2.0 * alpha * q);
    r.q.push_back(q);
  }
  r.limit = (alpha - sigma) * n / (n - 2.0 * alpha);
  r.error = std::abs(r.q.back() - r.limit);
  return r;
}

// ---------------------------------------------------------------------------
// Certificate generation

struct CertificateReport {
  std::vector<EstimateCertificate> certificates;
  std::optional<std::string> all_dimensions_linf;  // clause granting L^inf in every dimension
  std::vector<std::string> not_fired;              // "clause: reason"
  std::optional<double> fprime_integrability;      // f'(u) in L^p for p < this
};

/// Clauses that need tau_- > 0 fire only when tau_- is known to be >= this.
inline constexpr double kTauMinusFloor = 1e-3;

inline CertificateReport generate_certificates(const AsymptoticProfile& profile) {
  CertificateReport out;
  auto skip = [&](const char* clause, const std::string& why) { out.not_fired.push_back(std::string(clause) + ": " + why); };

  if (!profile.f0_positive || !profile.superlinear) {
    const std::string why = "hypothesis f(0) > 0, f' >= 0, f(s)/s -> inf not verified";
    for (const char* c : {"Nedev", "CR-tau-minus", "Prop1.1", "Prop1.2", "Cor1.3", "Cor1.4", "Prop1.3"}) skip(c, why);
    return out;
  }
  const bool convex = profile.convex;
  const std::string not_convex = "f is not convex";

  if (convex) out.certificates.emplace_back(2.0, 1.0, CertificateSource::Nedev, false);
  else skip("Nedev", not_convex);

  const bool tm_known = profile.tau_minus && profile.usable("tau_minus");
  const bool tp_known = profile.tau_plus && profile.usable("tau_plus") && std::isfinite(*profile.tau_plus);
  const bool tm_positive = tm_known && *profile.tau_minus >= kTauMinusFloor;

  if (!convex) skip("CR-tau-minus", not_convex);
  else if (!tm_positive) skip("CR-tau-minus", "tau_- unknown or below 1e-3");
  else {
    const double tm = std::min(*profile.tau_minus, 1.0);
    out.certificates.emplace_back(3.0 + 2.0 * std::sqrt(tm), 1.0, CertificateSource::TauMinus, true,
                                  "tau_-=" + std::to_string(tm));
  }

  // Only needs f in C^1 with f^(1-delta) convex on a tail.
  if (profile.convex_power_delta && profile.usable("convex_power_delta")) {
    const double d = *profile.convex_power_delta;
    out.certificates.emplace_back(3.0 + 2.0 * std::sqrt(d), 1.0, CertificateSource::Prop1_1, true,
                                  "delta=" + std::to_string(d));
  } else {
    skip("Prop1.1", "no delta with f^(1-delta) convex on the tail");
  }

  if (!convex) skip("Prop1.2", not_convex);
  else if (!tp_known) skip("Prop1.2", "tau_+ unknown or infinite");
  else if (*profile.tau_plus <= 0.0) out.all_dimensions_linf = "Prop1.2-a";
  else {
    const double tp = *profile.tau_plus;
    const double s = std::sqrt(tp);
    const std::string par = "tau_+=" + std::to_string(tp);
    const double a1 = 1.0 + 2.0 / tp + 2.0 / s;
    out.certificates.emplace_back(a1, a1, CertificateSource::Prop1_2_i, true, par);
    out.certificates.emplace_back(2.0 + 1.0 / tp + 2.0 / s, 1.0 + 1.0 / tp + 2.0 / s, CertificateSource::Prop1_2_ii,
                                  true, par);
  }

  if (!convex) skip("Cor1.3", not_convex);
  else if (!tm_positive || !tp_known || !(*profile.tau_plus > 0.0)) skip("Cor1.3", "needs tau_- >= 1e-3 and 0 < tau_+ < inf");
  else {
    const double s = std::sqrt(*profile.tau_plus);
    out.certificates.emplace_back(3.0 + 2.0 / s, 1.0 + 2.0 / s, CertificateSource::Cor1_3, true,
                                  "tau_+=" + std::to_string(*profile.tau_plus));
  }

  if (!convex) skip("Cor1.4", not_convex);
  else if (!profile.cond_1_25 || !profile.usable("cond_1_25")) skip("Cor1.4", "condition 1.25 not established");
  else {
    const auto [gamma, eps] = *profile.cond_1_25;
    if (eps - gamma > 0.5) {
      const double a = 2.0 + eps - gamma;
      out.certificates.emplace_back(a, a, CertificateSource::Cor1_4, false,
                                    "gamma=" + std::to_string(gamma) + ",eps=" + std::to_string(eps));
    } else {
      skip("Cor1.4", "eps - gamma <= 1/2");
    }
  }

  if (!convex) skip("Prop1.3", not_convex);
  else if (!profile.cond_1_26 || !profile.usable("cond_1_26")) skip("Prop1.3", "condition 1.26 not established");
  else {
    const auto [gamma, delta] = *profile.cond_1_26;
    const std::string par = "gamma=" + std::to_string(gamma) + ",delta=" + std::to_string(delta);
    out.certificates.emplace_back(2.0 + 1.0 / gamma, 1.0 + (1.0 + delta) / gamma, CertificateSource::Prop1_3, false,
                                  par);
    const double p = 1.0 + 2.0 / (gamma + delta);
    out.fprime_integrability = p;
    // f'(u) >= f~(u)/u turns the f' record into an alpha = sigma certificate.
    out.certificates.emplace_back(p, p, CertificateSource::Prop1_3_FPrime, false, par);
  }
  return out;
}

/// Id of the first of the two all-dimension H^1_0 conditions that the profile establishes.
inline std::optional<std::string> h1_all_dimensions(const AsymptoticProfile& profile) {
  if (!profile.convex || !profile.f0_positive || !profile.superlinear) return std::nullopt;
  if (profile.cond_1_31 && profile.usable("cond_1_31") && *profile.cond_1_31 > 0.0) return std::string("1.31");
  if (profile.cond_1_32 && profile.usable("cond_1_32")) return std::string("1.32");
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Aggregation

enum class Guarantee { Linf, H10, W1r, L1 };

inline const char* guarantee_name(Guarantee g) {
  switch (g) {
    case Guarantee::Linf: return "Linf";
    case Guarantee::H10: return "H10";
    case Guarantee::W1r: return "W1r";
    case Guarantee::L1: return "L1";
  }
  return "?";
}

struct ClauseThreshold {
  std::string clause;
  double n_sup = 0.0;  // +inf for all dimensions
};

/// Open threshold: the guarantee holds exactly for n < n_sup.
struct Threshold {
  double n_sup = 0.0;  // +inf for all dimensions
  std::vector<ClauseThreshold> clauses;  // every firing clause, best first

  bool all_dimensions() const { return std::isinf(n_sup); }
  bool grants(double n) const { return n < n_sup; }
};

struct DimensionEntry {
  int n = 2;
  Guarantee guarantee = Guarantee::L1;
  std::vector<std::string> clauses;
  std::optional<double> u_lr_sup;
  std::optional<double> f_lr_sup;
  std::optional<double> w1r_sup;
};

struct Verdict {
  AsymptoticProfile profile;
  CertificateReport certificates;
  std::optional<std::string> h1_all_dimensions;
  Threshold linf;
  Threshold h10;
  std::vector<DimensionEntry> table;  // n = 2..table_max
  DimensionEntry requested;
};

namespace detail {

inline void sort_clauses(Threshold& t) {
  std::stable_sort(t.clauses.begin(), t.clauses.end(),
                   [](const ClauseThreshold& a, const ClauseThreshold& b) { return a.n_sup > b.n_sup; });
  t.n_sup = t.clauses.empty() ? 0.0 : t.clauses.front().n_sup;
}

}  // namespace detail

inline DimensionEntry evaluate_dimension(const CertificateReport& certs, const std::optional<std::string>& h1_clause,
                                         int n) {
  DimensionEntry e;
  e.n = n;
  if (certs.all_dimensions_linf) {
    e.guarantee = Guarantee::Linf;
    e.clauses.push_back(*certs.all_dimensions_linf);
  }
  std::vector<std::string> linf, h10, w1r;
  for (const auto& c : certs.certificates) {
    const GuaranteeSet g = theorem12_thresholds(c.alpha, c.sigma, n);
    if (g.linf) linf.push_back(c.name());
    if (g.h10) h10.push_back(c.name());
    if (g.w1r_sup) {
      w1r.push_back(c.name());
      e.u_lr_sup = std::max(e.u_lr_sup.value_or(0.0), *g.u_lr_sup);
      e.f_lr_sup = std::max(e.f_lr_sup.value_or(0.0), *g.f_lr_sup);
      e.w1r_sup = std::max(e.w1r_sup.value_or(0.0), *g.w1r_sup);
    }
  }
  if (e.guarantee == Guarantee::Linf) {
    e.clauses.insert(e.clauses.end(), linf.begin(), linf.end());
    return e;
  }
  if (!linf.empty()) {
    e.guarantee = Guarantee::Linf;
    e.clauses = linf;
  } else if (!h10.empty() || h1_clause) {
    e.guarantee = Guarantee::H10;
    e.clauses = h10;
    if (h1_clause) e.clauses.push_back("Prop1.4(" + *h1_clause + ")");
  } else if (!w1r.empty()) {
    e.guarantee = Guarantee::W1r;
    e.clauses = w1r;
  } else {
    e.guarantee = Guarantee::L1;
  }
  return e;
}

inline Verdict verdict_from_certificates(const AsymptoticProfile& profile, CertificateReport certs,
                                         std::optional<std::string> h1_clause, int n, int table_max = 15) {
  if (n < 2) throw DomainError("dimension must be >= 2");
  Verdict v;
  v.profile = profile;
  v.h1_all_dimensions = std::move(h1_clause);
  const double inf = std::numeric_limits<double>::infinity();

  if (certs.all_dimensions_linf) v.linf.clauses.push_back({*certs.all_dimensions_linf, inf});
  for (const auto& c : certs.certificates) {
    v.linf.clauses.push_back({c.name(), 2.0 * c.alpha});
    // L^inf implies H^1_0.
    v.h10.clauses.push_back({c.name(), std::max(h10_threshold(c.alpha, c.sigma), 2.0 * c.alpha)});
  }
  if (certs.all_dimensions_linf) v.h10.clauses.push_back({*certs.all_dimensions_linf, inf});
  if (v.h1_all_dimensions) v.h10.clauses.push_back({"Prop1.4(" + *v.h1_all_dimensions + ")", inf});
  detail::sort_clauses(v.linf);
  detail::sort_clauses(v.h10);

  v.certificates = std::move(certs);
  for (int k = 2; k <= table_max; ++k) v.table.push_back(evaluate_dimension(v.certificates, v.h1_all_dimensions, k));
  v.requested = evaluate_dimension(v.certificates, v.h1_all_dimensions, n);
  return v;
}

inline Verdict regularity_verdict(const AsymptoticProfile& profile, int n, int table_max = 15) {
  return verdict_from_certificates(profile, generate_certificates(profile), h1_all_dimensions(profile), n, table_max);
}

}  // namespace semistable
