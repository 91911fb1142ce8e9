#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "semistable/analysis.hpp"
#include "semistable/asymptotics.hpp"
#include "semistable/estimates.hpp"
#include "semistable/io.hpp"
#include "semistable/nonlinearity.hpp"
#include "semistable/radial.hpp"
#include "semistable/verdict.hpp"

namespace semistable::acceptance {

struct Config {
  unsigned threads = 1;
  std::uint64_t seed = 20240607;
  std::string filter;  // suite name or criterion id; empty runs everything
};

/// One checked statement inside a criterion. `expected_failure` marks parts
/// whose failure is documented as genuinely unattainable.
struct Part {
  std::string name;
  bool passed = false;
  bool expected_failure = false;
  std::string detail;
};

struct Result {
  int id = 0;
  std::string suite;
  std::string title;
  double budget_seconds = 0.0;
  double seconds = 0.0;  // not serialized: reports must be reproducible
  std::vector<Part> parts;

  bool within_budget() const { return seconds < budget_seconds; }
  bool passed() const {
    for (const auto& p : parts)
      if (!p.passed) return false;
    return within_budget();
  }
  /// Failed with nothing but documented failures.
  bool only_expected_failures() const {
    if (!within_budget()) return false;
    for (const auto& p : parts)
      if (!p.passed && !p.expected_failure) return false;
    return true;
  }
};

namespace detail {

/// Ten significant digits: enough for a report, stable across platforms.
inline std::string fmt(double x) {
  if (!std::isfinite(x)) return io::format_double(x);
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 10);
  return std::string(buf, res.ptr);
}

inline Part check(std::string name, bool ok, std::string detail = {}) {
  Part p;
  p.name = std::move(name);
  p.passed = ok;
  p.detail = std::move(detail);
  return p;
}

inline Result make_result(int id, std::string suite, std::string title, double budget) {
  Result r;
  r.id = id;
  r.suite = std::move(suite);
  r.title = std::move(title);
  r.budget_seconds = budget;
  return r;
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

/// Minimal-branch sub-branch (points up to the fold).
inline Branch minimal_part(const Branch& b) {
  Branch out = b;
  out.points.clear();
  for (auto i : b.minimal_indices()) out.points.push_back(b.points[i]);
  return out;
}

inline bool nondecreasing(const std::vector<double>& v, double rel) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1] - rel * std::abs(v[i - 1])) return false;
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline Result criterion1() {
  Result r = detail::make_result(1, "verdict", "threshold regression table", 1.0);
  using detail::check;
  using detail::fmt;
  const double tol = 1e-9;
  {
    const Verdict v = regularity_verdict(build_profile(Nonlinearity::exponential()), 9);
    r.parts.push_back(check("exp Linf n_sup = 10", detail::close(v.linf.n_sup, 10.0, tol), "n_sup=" + fmt(v.linf.n_sup)));
  }
  for (double p : {2.0, 3.0, 5.0}) {
    const Verdict v = regularity_verdict(build_profile(Nonlinearity::power_shifted(p)), 3);
    const double expect = 2.0 * (1.0 + 2.0 * p / (p - 1.0) + 2.0 * std::sqrt(p / (p - 1.0)));
    const double tau = (p - 1.0) / p;
    const double via_tau = 2.0 + 4.0 / tau + 4.0 / std::sqrt(tau);
    r.parts.push_back(check("power p=" + fmt(p) + " Linf n_sup", detail::close(v.linf.n_sup, expect, tol) &&
                                                                   detail::close(expect, via_tau, tol),
                            "n_sup=" + fmt(v.linf.n_sup) + " expected=" + fmt(expect) + " tau-form=" + fmt(via_tau)));
  }
  auto clause_sup = [](double tau, CertificateSource src) {
    AsymptoticProfile prof = AsymptoticProfile::unknown();
    prof.tau_minus = tau;
    prof.tau_plus = tau;
    prof.confidence["tau_minus"] = Confidence::ClosedForm;
    prof.confidence["tau_plus"] = Confidence::ClosedForm;
    for (const auto& c : generate_certificates(prof).certificates)
      if (c.source == src) return 2.0 * c.alpha;
    return std::numeric_limits<double>::quiet_NaN();
  };
  {
    const double tau = 2.0 / (9.0 - 2.0 * std::sqrt(14.0));
    const double formula = 4.0 + 2.0 / tau + 4.0 / std::sqrt(tau);
    const double engine = clause_sup(tau, CertificateSource::Prop1_2_ii);
    r.parts.push_back(check("4+2/tau+4/sqrt(tau) = 9 boundary", detail::close(formula, 9.0, tol) &&
                                                                   detail::close(engine, 9.0, tol),
                            "formula=" + fmt(formula) + " engine=" + fmt(engine)));
  }
  {
    const double tau = 16.0 / 9.0;
    const double formula = 6.0 + 4.0 / std::sqrt(tau);
    const double engine = clause_sup(tau, CertificateSource::Cor1_3);
    r.parts.push_back(check("6+4/sqrt(tau) = 9 boundary", detail::close(formula, 9.0, tol) &&
                                                             detail::close(engine, 9.0, tol),
                            "formula=" + fmt(formula) + " engine=" + fmt(engine)));
  }
  {
    const GuaranteeSet at3 = theorem12_thresholds(2.0, 1.0, 3.0), at4 = theorem12_thresholds(2.0, 1.0, 4.0);
    const GuaranteeSet at5 = theorem12_thresholds(2.0, 1.0, 5.0), at6 = theorem12_thresholds(2.0, 1.0, 6.0);
    const double h = h10_threshold(2.0, 1.0);
    r.parts.push_back(check("Nedev (2,1): Linf n_sup 4, H10 n_sup 6",
                            at3.linf && !at4.linf && at5.h10 && !at6.h10 && detail::close(h, 6.0, tol),
                            "h10_threshold=" + fmt(h)));
  }
  return r;
}

inline Result criterion2() {
  Result r = detail::make_result(2, "asymptotics", "tau estimation", 5.0);
  using detail::check;
  using detail::fmt;
  {
    const auto t = estimate_tau(Nonlinearity::parse("exp(t)"), {}, true);
    const bool ok = t.tau_minus && t.tau_plus && std::abs(*t.tau_minus - 1.0) < 1e-3 && std::abs(*t.tau_plus - 1.0) < 1e-3;
    r.parts.push_back(check("exp(t) tau = 1", ok,
                            "tau-=" + fmt(t.tau_minus.value_or(NAN)) + " tau+=" + fmt(t.tau_plus.value_or(NAN))));
  }
  {
    const auto t = estimate_tau(Nonlinearity::parse("(1+t)^3"), {}, true);
    const double e = 2.0 / 3.0;
    const bool ok = t.tau_minus && t.tau_plus && std::abs(*t.tau_minus - e) < 1e-3 && std::abs(*t.tau_plus - e) < 1e-3;
    r.parts.push_back(check("(1+t)^3 tau = 2/3", ok,
                            "tau-=" + fmt(t.tau_minus.value_or(NAN)) + " tau+=" + fmt(t.tau_plus.value_or(NAN))));
  }
  {
    // q ~ 1/ln t never reaches 1e-3 in double range; the closed form carries the tail value.
    const Nonlinearity f = Nonlinearity::lin_log();
    const auto t = estimate_tau(f);
    const double q1 = f.eval(1e6).f * f.eval(1e6).d2 / (f.eval(1e6).d1 * f.eval(1e6).d1);
    const double L = std::log(1e6);
    const double q1_exact = L / ((L + 1.0) * (L + 1.0));
    const double q2 = [&] {
      const Triple v = f.eval(1e12);
      return v.f * v.d2 / (v.d1 * v.d1);
    }();
    const bool ok = t.tau_plus && *t.tau_plus <= 1e-3 && detail::close(q1, q1_exact, 1e-12) && q2 < q1;
    r.parts.push_back(check("LinLog tail tau <= 1e-3", ok,
                            "tau+=" + fmt(t.tau_plus.value_or(NAN)) + " q(1e6)=" + fmt(q1) + " q(1e12)=" + fmt(q2)));
  }
  return r;
}

inline Result criterion3() {
  Result r = detail::make_result(3, "estimates", "H_f_beta quadrature vs exponential closed form", 5.0);
  std::vector<double> grid;
  for (int i = 0; i <= 1000; ++i) grid.push_back(0.01 * i);
  for (double beta : {0.0, 0.5, 0.9}) {
    const double err = theorem11_lhs_closed_form_check(Nonlinearity::exponential(), beta, grid);
    r.parts.push_back(detail::check("beta=" + detail::fmt(beta) + " max rel err < 1e-8", err < 1e-8,
                                    "max_rel_err=" + (err < 1e-14 ? std::string("<1e-14") : detail::fmt(err))));
  }
  return r;
}

inline Result criterion4(const Config& cfg) {
  Result r = detail::make_result(4, "radial", "Gelfand n=2 oracle", 10.0);
  BranchOptions bo;
  bo.threads = cfg.threads;
  const Branch b = branch_sweep(Nonlinearity::exponential(), 2, linear_grid(0.1, 10.0, 100), bo);
  const double m_fold = 2.0 * std::numbers::ln2;
  r.parts.push_back(detail::check("lambda* = 2 +- 1e-5", detail::close(b.lambda_star, 2.0, 1e-5),
                                  "lambda*=" + detail::fmt(std::round(b.lambda_star * 1e9) / 1e9)));
  r.parts.push_back(detail::check("fold m = 2 ln 2 +- 1e-4", b.fold_m && detail::close(*b.fold_m, m_fold, 1e-4),
                                  "fold_m=" + detail::fmt(std::round(b.fold_m.value_or(NAN) * 1e7) / 1e7)));
  return r;
}

inline Result criterion5(const Config& cfg) {
  Result r = detail::make_result(5, "radial", "singular-limit check", 60.0);
  const Nonlinearity e = Nonlinearity::exponential();
  RadialControls rc;
  for (int n : {3, 4, 5, 6, 7, 8, 9, 11}) {
    const RadialProfile p = integrate_profile(e, n, 30.0, rc);
    const double target = 2.0 * (n - 2);
    const double rel = std::abs(p.lambda - target) / target;
    r.parts.push_back(detail::check("n=" + std::to_string(n) + " lambda(30) within 1% of " + detail::fmt(target),
                                    rel < 0.01, "rel_dev=" + detail::fmt(std::round(rel * 1e6) / 1e6)));
  }
  BranchOptions bo;
  bo.threads = cfg.threads;
  const Branch b = branch_sweep(e, 11, linear_grid(0.1, 40.0, 80), bo);
  r.parts.push_back(detail::check("n=11 sweep monotone on m <= 40", b.monotone_flag && !b.fold_m,
                                  std::string("monotone_flag=") + (b.monotone_flag ? "true" : "false")));
  return r;
}

inline Result criterion6(const Config& cfg) {
  Result r = detail::make_result(6, "radial", "semistability consistency", 60.0);
  const Nonlinearity e = Nonlinearity::exponential();
  BranchOptions bo;
  bo.threads = cfg.threads;
  bo.compute_mu1 = true;
  for (int n : {2, 3, 9}) {
    const Branch b = branch_sweep(e, n, linear_grid(0.1, 10.0, 60), bo);
    const std::string tag = "n=" + std::to_string(n);
    if (!b.fold_m) {
      r.parts.push_back(detail::check(tag + " fold present", false));
      continue;
    }
    double worst = std::numeric_limits<double>::infinity();
    std::optional<double> past;
    double m_lo = 0.0, m_hi = 0.0;
    for (const auto& p : b.points) {
      if (!p.ok() || !p.mu1) continue;
      if (p.m <= *b.fold_m) {
        worst = std::min(worst, *p.mu1);
        m_lo = p.m;
      } else if (!past) {
        past = p.mu1;
        m_hi = p.m;
      }
    }
    r.parts.push_back(detail::check(tag + " mu1 >= -1e-6 on minimal branch", worst >= -1e-6,
                                    "min_mu1=" + detail::fmt(std::round(worst * 1e6) / 1e6)));
    r.parts.push_back(detail::check(tag + " mu1 < 0 past the fold", past && *past < 0.0,
                                    "mu1=" + detail::fmt(std::round(past.value_or(NAN) * 1e6) / 1e6)));
    // Zero of mu1(m) between the bracketing grid points, by bisection.
    auto mu_at = [&](double m) { return principal_eigenvalue(e, integrate_profile(e, n, m, bo.radial), bo.eigen).mu1; };
    double a = m_lo, c = m_hi;
    double fa = mu_at(a);
    for (int it = 0; it < 40 && c - a > 1e-7; ++it) {
      const double mid = 0.5 * (a + c);
      const double fm = mu_at(mid);
      if ((fm > 0.0) == (fa > 0.0)) {
        a = mid;
        fa = fm;
      } else {
        c = mid;
      }
    }
    const double m_zero = 0.5 * (a + c);
    const double dev = std::abs(m_zero - *b.fold_m);
    r.parts.push_back(detail::check(tag + " mu1 = 0 at the fold within 1e-3 in m", dev < 1e-3,
                                    "|m_zero - fold_m|<" + std::string(dev < 1e-5 ? "1e-5" : dev < 1e-3 ? "1e-3" : "inf")));
  }
  return r;
}

inline Result criterion7(const Config& cfg) {
  Result r = detail::make_result(7, "radial", "stability functional sign", 60.0);
  BranchOptions bo;
  bo.threads = cfg.threads;
  struct Case {
    std::string name;
    Nonlinearity f;
    int n;
    double m_max;
  };
  const std::vector<Case> cases = {{"exp n=3", Nonlinearity::exponential(), 3, 4.0},
                                   {"exp n=9", Nonlinearity::exponential(), 9, 8.0},
                                   {"pow2 n=3", Nonlinearity::power_shifted(2.0), 3, 4.0}};
  for (const auto& cs : cases) {
    const Branch b = detail::minimal_part(branch_sweep(cs.f, cs.n, linear_grid(0.05, cs.m_max, 40), bo));
    struct Row {
      bool sign_ok, agree_ok;
    };
    const auto rows = parallel_map<Row>(b.points.size(), cfg.threads, [&](std::size_t i) {
      const StabilityMargin sm = verify_stability_inequality(cs.f, *b.points[i].profile, GChoice::f_tilde());
      const double scale = std::max(std::abs(sm.gradient_term), std::abs(sm.potential_term));
      return Row{sm.int_H <= 1e-8 * sm.int_positive, std::abs(sm.direct - sm.lemma_form) <= 1e-6 * scale};
    });
    std::size_t sign_bad = 0, agree_bad = 0;
    for (const auto& row : rows) {
      sign_bad += row.sign_ok ? 0 : 1;
      agree_bad += row.agree_ok ? 0 : 1;
    }
    const std::string cnt = "points=" + std::to_string(rows.size());
    r.parts.push_back(detail::check(cs.name + " int H <= 1e-8 positive part", !rows.empty() && sign_bad == 0,
                                    cnt + " violations=" + std::to_string(sign_bad)));
    r.parts.push_back(detail::check(cs.name + " margin forms agree to 1e-6", !rows.empty() && agree_bad == 0,
                                    cnt + " disagreements=" + std::to_string(agree_bad)));
  }
  return r;
}

inline Result criterion8(const Config& cfg) {
  Result r = detail::make_result(8, "analysis", "uniform bound of int H_f_beta (property based)", 120.0);
  const Nonlinearity e = Nonlinearity::exponential();
  BranchOptions bo;
  bo.threads = cfg.threads;
  TrackOptions to;
  to.threads = cfg.threads;
  {
    Branch b = branch_sweep(e, 9, linear_grid(0.1, 10.0, 80), bo);
    refine_tail(b, e, 30, bo);
    const Branch mb = detail::minimal_part(b);
    const TrackTable t = track(mb, e, {QuantitySpec::int_h_f_beta(0.0), QuantitySpec::int_h_f_beta(0.9)}, to);
    for (std::size_t k = 0; k < 2; ++k) {
      std::vector<double> v;
      for (const auto& row : t.values) v.push_back(row[k].value_or(std::numeric_limits<double>::quiet_NaN()));
      const std::string tag = "n=9 " + t.columns[k];
      r.parts.push_back(detail::check(tag + " increasing", detail::nondecreasing(v, 1e-10)));
      try {
        const auto d = diagnose_boundedness(t.lambda, v, b.lambda_star);
        r.parts.push_back(detail::check(tag + " ConvergesTo with finite sup",
                                        d.kind == TailKind::ConvergesTo && std::isfinite(d.empirical_sup),
                                        std::string("tail=") + tail_kind_name(d.kind)));
      } catch (const std::exception& ex) {
        r.parts.push_back(detail::check(tag + " ConvergesTo with finite sup", false, ex.what()));
      }
    }
  }
  {
    const Branch b = branch_sweep(e, 11, linear_grid(0.1, 40.0, 80), bo);
    const TrackTable t = track(b, e, {QuantitySpec::int_h_f_beta(0.9)}, to);
    std::vector<double> v;
    for (const auto& row : t.values) v.push_back(row[0].value_or(std::numeric_limits<double>::quiet_NaN()));
    Part p;
    p.name = "n=11 int_H_f_beta(0.9) tail GrowsLike";
    // The integrand behaves like r^(-9.6) against r^10 dr on the singular
    // profile, so the integral stays bounded; recorded as unattainable.
    p.expected_failure = true;
    try {
      const auto d = diagnose_boundedness(t.lambda, v, b.lambda_sup_estimate);
      p.passed = d.kind != TailKind::ConvergesTo;
      p.detail = std::string("tail=") + tail_kind_name(d.kind);
    } catch (const std::exception& ex) {
      p.detail = ex.what();
    }
    r.parts.push_back(p);
  }
  return r;
}

inline Result criterion9(const Config& cfg) {
  Result r = detail::make_result(9, "verdict", "bootstrap exponent limit", 1.0);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int ok = 0;
  double worst = 0.0;
  const int trials = 50;
  for (int k = 0; k < trials; ++k) {
    const double alpha = 1.0 + 5.0 * unit(rng);
    const int n_min = static_cast<int>(std::floor(2.0 * alpha)) + 1;
    const int n = n_min + static_cast<int>(std::floor(20.0 * unit(rng))) % 20;
    const double sigma_max = std::min(alpha, (alpha - 1.0) * n / (n - 2.0));
    const double sigma = 0.95 * sigma_max * unit(rng);
    const BootstrapResult b = bootstrap_exponents(alpha, sigma, n, 2000);
    const double rel = b.error / std::max(1.0, std::abs(b.limit));
    worst = std::max(worst, rel);
    ok += rel <= 1e-9 ? 1 : 0;
  }
  r.parts.push_back(detail::check("50 random (alpha, sigma, n) converge within 1e-9", ok == trials,
                                  "converged=" + std::to_string(ok) + "/" + std::to_string(trials)));
  return r;
}

// ---------------------------------------------------------------------------

inline io::json to_json(const Result& r) {
  io::json j;
  j["id"] = r.id;
  j["suite"] = r.suite;
  j["title"] = r.title;
  bool checks = true;
  for (const auto& p : r.parts) checks = checks && p.passed;
  j["passed"] = checks;  // the time budget is judged by the caller
  io::json parts = io::json::array();
  for (const auto& p : r.parts)
    parts.push_back(io::json{{"name", p.name},
                             {"passed", p.passed},
                             {"expected_failure", p.expected_failure},
                             {"detail", p.detail}});
  j["parts"] = parts;
  return j;
}

/// One JSON object per line; timings are left out so the text is reproducible.
inline std::string report(const std::vector<Result>& results) {
  std::string out;
  for (const auto& r : results) out += to_json(r).dump() + "\n";
  return out;
}

/// Canonical outputs used by the determinism check: the fast criteria plus a
/// tracked branch, all serialized.
inline std::string deterministic_snapshot(const Config& cfg) {
  std::vector<Result> rs{criterion1(), criterion2(), criterion3(), criterion9(cfg)};
  std::string out = report(rs);
  const Nonlinearity e = Nonlinearity::exponential();
  BranchOptions bo;
  bo.threads = cfg.threads;
  bo.compute_mu1 = true;
  const Branch b = branch_sweep(e, 3, linear_grid(0.1, 6.0, 24), bo);
  TrackOptions to;
  to.threads = cfg.threads;
  const TrackTable t = track(b, e, {QuantitySpec::lp_norm(2.0), QuantitySpec::int_h_f_beta(0.5)}, to);
  std::ostringstream csv;
  io::write_csv(csv, io::branch_csv(b, &t));
  out += io::branch_summary(b).dump() + "\n" + csv.str();
  out += io::to_json(regularity_verdict(build_profile(e), 12)).dump() + "\n";
  return out;
}

inline Result criterion10(const Config& cfg) {
  Result r = detail::make_result(10, "cli", "determinism", 120.0);
  Config a = cfg, b = cfg;
  a.threads = 1;
  b.threads = std::max(2u, cfg.threads);
  const std::string s1 = deterministic_snapshot(a);
  const std::string s2 = deterministic_snapshot(b);
  const std::string s3 = deterministic_snapshot(a);
  r.parts.push_back(detail::check("repeat run byte-identical", s1 == s3, "bytes=" + std::to_string(s1.size())));
  r.parts.push_back(detail::check("thread count does not change output", s1 == s2));
  return r;
}

struct Entry {
  int id;
  std::string suite;
  std::function<Result(const Config&)> run;
};

inline std::vector<Entry> registry() {
  return {
      {1, "verdict", [](const Config&) { return criterion1(); }},
      {2, "asymptotics", [](const Config&) { return criterion2(); }},
      {3, "estimates", [](const Config&) { return criterion3(); }},
      {4, "radial", criterion4},
      {5, "radial", criterion5},
      {6, "radial", criterion6},
      {7, "radial", criterion7},
      {8, "analysis", criterion8},
      {9, "verdict", criterion9},
      {10, "cli", criterion10},
  };
}

inline bool selected(const Entry& e, const std::string& filter) {
  if (filter.empty() || filter == "all") return true;
  return filter == e.suite || filter == std::to_string(e.id);
}

/// Runs the selected criteria in id order. `on_result` sees each result as it completes.
inline std::vector<Result> run(const Config& cfg, const std::function<void(const Result&)>& on_result = {}) {
  std::vector<Result> out;
  bool any = false;
  for (const auto& e : registry()) {
    if (!selected(e, cfg.filter)) continue;
    any = true;
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = e.run(cfg);
    } catch (const std::exception& ex) {
      r.id = e.id;
      r.suite = e.suite;
      r.title = "aborted";
      r.budget_seconds = 1.0;
      r.parts.push_back(detail::check("completed without exception", false, ex.what()));
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  if (!any) throw DomainError("filter '" + cfg.filter + "' matches no criterion");
  return out;
}

}  // namespace semistable::acceptance
