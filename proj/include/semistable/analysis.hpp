#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "semistable/errors.hpp"
#include "semistable/estimates.hpp"
#include "semistable/profile.hpp"
#include "semistable/radial.hpp"

namespace semistable {

struct QuantitySpec {
  enum class Kind { LpNorm, GradLpNorm, IntHfBeta, IntNedev, IntFfPrime, IntLemma21H, IntUf };

  Kind kind = Kind::LpNorm;
  double param = 2.0;  // r for the norms (may be +inf), beta for IntHfBeta
  GChoice g = GChoice::f_tilde();

  static QuantitySpec lp_norm(double r) {
    if (!(r >= 1.0)) throw DomainError("norm exponent must be >= 1");
    return {Kind::LpNorm, r};
  }
  static QuantitySpec grad_lp_norm(double r) {
    if (!(r >= 1.0)) throw DomainError("norm exponent must be >= 1");
    return {Kind::GradLpNorm, r};
  }
  static QuantitySpec int_h_f_beta(double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("beta must lie in [0, 1)");
    return {Kind::IntHfBeta, beta};
  }
  static QuantitySpec int_nedev() { return {Kind::IntNedev, 0.0}; }
  static QuantitySpec int_f_fprime() { return {Kind::IntFfPrime, 0.0}; }
  static QuantitySpec int_lemma21_h(GChoice g) { return {Kind::IntLemma21H, 0.0, std::move(g)}; }
  static QuantitySpec int_uf() { return {Kind::IntUf, 0.0}; }

  std::string name() const {
    char buf[64];
    switch (kind) {
      case Kind::LpNorm:
        if (std::isinf(param)) return "Linf_norm";
        std::snprintf(buf, sizeof buf, "L%g_norm", param);
        return buf;
      case Kind::GradLpNorm:
        if (std::isinf(param)) return "grad_Linf_norm";
        std::snprintf(buf, sizeof buf, "grad_L%g_norm", param);
        return buf;
      case Kind::IntHfBeta:
        std::snprintf(buf, sizeof buf, "int_H_f_beta(%g)", param);
        return buf;
      case Kind::IntNedev: return "int_ftilde2_over_u";
      case Kind::IntFfPrime: return "int_f_fprime";
      case Kind::IntLemma21H: return "int_H(" + g.name() + ")";
      case Kind::IntUf: return "int_u_f";
    }
    return "?";
  }
};

struct TrackTable {
  std::vector<std::string> columns;
  std::vector<double> m, lambda;
  std::vector<std::vector<std::optional<double>>> values;  // [point][spec]
  std::vector<std::vector<std::string>> notes;             // error annotations, same shape
};

struct TrackOptions {
  double tolerance = 1e-10;
  unsigned threads = 1;
};

namespace detail {

/// f~(u)^2 / u with its limit 0 at u = 0.
inline double nedev_density(const Nonlinearity& f, double u) {
  if (u <= 1e-300) return 0.0;
  const double ft = f.tilde(u);
  return ft * ft / u;
}

inline double evaluate_spec(const QuantitySpec& spec, const Nonlinearity& f, const RadialProfile& p,
                            const CumulativeTable* table) {
  auto clamp = [&](double u) { return std::clamp(u, 0.0, p.m); };
  using K = QuantitySpec::Kind;
  switch (spec.kind) {
    case K::LpNorm: {
      if (std::isinf(spec.param)) return p.m;
      const double r = spec.param;
      return std::pow(ball_integral(p, [&](double, double u, double) { return std::pow(std::abs(u), r); }).value, 1.0 / r);
    }
    case K::GradLpNorm: {
      if (std::isinf(spec.param)) {
        double mx = 0.0;
        for (double d : p.du) mx = std::max(mx, std::abs(d));
        return mx;
      }
      const double r = spec.param;
      return std::pow(ball_integral(p, [&](double, double, double du) { return std::pow(std::abs(du), r); }).value,
                      1.0 / r);
    }
    case K::IntHfBeta:
      return ball_integral(p, [&](double, double u, double) { return table->H(clamp(u)); }).value;
    case K::IntNedev:
      return ball_integral(p, [&](double, double u, double) { return nedev_density(f, clamp(u)); }).value;
    case K::IntFfPrime:
      return ball_integral(p, [&](double, double u, double) {
               const Triple y = f.eval(clamp(u));
               return y.f * y.d1;
             }).value;
    case K::IntLemma21H:
      return ball_integral(p, [&](double, double u, double) { return table->lemma21_H(clamp(u)); }).value;
    case K::IntUf:
      return ball_integral(p, [&](double, double u, double) {
               const double v = clamp(u);
               return v * f(v);
             }).value;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Per-point values of every spec along the branch, in branch order.
inline TrackTable track(const Branch& branch, const Nonlinearity& f, const std::vector<QuantitySpec>& specs,
                        const TrackOptions& opt = {}) {
  TrackTable t;
  for (const auto& s : specs) t.columns.push_back(s.name());
  double u_max = 0.0;
  for (const auto& p : branch.points)
    if (p.ok()) u_max = std::max(u_max, p.m);

  // One cumulative table per spec that needs one, shared by all points.
  std::vector<std::unique_ptr<CumulativeTable>> tables(specs.size());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    using K = QuantitySpec::Kind;
    if (specs[k].kind != K::IntHfBeta && specs[k].kind != K::IntLemma21H) continue;
    EstimateRequest req;
    req.tolerance = opt.tolerance;
    if (specs[k].kind == K::IntHfBeta) req.beta = specs[k].param;
    else req.g = specs[k].g;
    tables[k] = std::make_unique<CumulativeTable>(f, req, u_max);
  }

  struct Row {
    std::vector<std::optional<double>> values;
    std::vector<std::string> notes;
  };
  auto rows = parallel_map<Row>(branch.points.size(), opt.threads, [&](std::size_t i) {
    Row row;
    const BranchPoint& bp = branch.points[i];
    for (std::size_t k = 0; k < specs.size(); ++k) {
      if (!bp.ok() || !bp.profile) {
        row.values.emplace_back();
        row.notes.push_back(bp.ok() ? "no profile" : bp.error);
        continue;
      }
      try {
        row.values.emplace_back(detail::evaluate_spec(specs[k], f, *bp.profile, tables[k].get()));
        row.notes.emplace_back();
      } catch (const std::exception& e) {
        row.values.emplace_back();
        row.notes.push_back(e.what());
      }
    }
    return row;
  });
  for (std::size_t i = 0; i < branch.points.size(); ++i) {
    t.m.push_back(branch.points[i].m);
    t.lambda.push_back(branch.points[i].lambda);
    t.values.push_back(std::move(rows[i].values));
    t.notes.push_back(std::move(rows[i].notes));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Tail diagnosis

enum class TailKind { ConvergesTo, GrowsLog, GrowsPower, GrowsUndetermined };

inline const char* tail_kind_name(TailKind k) {
  switch (k) {
    case TailKind::ConvergesTo: return "ConvergesTo";
    case TailKind::GrowsLog: return "GrowsLike(log)";
    case TailKind::GrowsPower: return "GrowsLike(power)";
    case TailKind::GrowsUndetermined: return "GrowsLike(undetermined)";
  }
  return "?";
}

struct ModelFit {
  std::string model;  // constant, log, power
  double a = 0.0, b = 0.0, exponent = 0.0;
  double rss = 0.0;
  double bic = 0.0;
};

struct BoundednessDiagnosis {
  std::vector<double> lambda, values;  // tail points used, in branch order
  double lambda_ref = 0.0;
  TailKind kind = TailKind::GrowsUndetermined;
  double limit = std::numeric_limits<double>::quiet_NaN();  // ConvergesTo
  double power = std::numeric_limits<double>::quiet_NaN();  // GrowsPower: Q ~ (lambda_ref - lambda)^-power
  double empirical_sup = 0.0;
  std::vector<ModelFit> fits;
  std::string verdict_consistency = "n/a";

  bool bounded() const { return kind == TailKind::ConvergesTo; }
};

inline constexpr double kMinPowerExponent = 0.05;

struct DiagnosisOptions {
  double window = 0.99;        // tail: lambda >= window * lambda_ref
  double noise_floor = 1e-11;  // drop points with lambda_ref - lambda below this times lambda_ref
  std::size_t min_points = 10;
};

namespace detail {

/// Least squares of y = a + b z.
inline void linear_fit(const std::vector<double>& z, const std::vector<double>& y, double& a, double& b, double& rss) {
  const double n = static_cast<double>(z.size());
  double sz = 0, sy = 0, szz = 0, szy = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    sz += z[i];
    sy += y[i];
    szz += z[i] * z[i];
    szy += z[i] * y[i];
  }
  const double den = n * szz - sz * sz;
  if (std::abs(den) <= 1e-300 * std::max(1.0, n * szz)) {
    a = sy / n;
    b = 0.0;
  } else {
    b = (n * szy - sz * sy) / den;
    a = (sy - b * sz) / n;
  }
  rss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double r = y[i] - a - b * z[i];
    rss += r * r;
  }
}

inline double bic(double rss, std::size_t n, int k) {
  const double dn = static_cast<double>(n);
  return dn * std::log(std::max(rss / dn, 1e-300)) + k * std::log(dn);
}

}  // namespace detail

/// Fits the tail of Q(lambda) against a constant, a + b ln(x) and a + b x^p
/// with x = lambda_ref - lambda, and picks the model with the smallest BIC.
inline BoundednessDiagnosis diagnose_boundedness(const std::vector<double>& lambda, const std::vector<double>& values,
                                                 double lambda_ref, const DiagnosisOptions& opt = {}) {
  if (lambda.size() != values.size()) throw DomainError("lambda and values differ in length");
  if (!(lambda_ref > 0.0)) throw DomainError("lambda_ref must be positive");
  BoundednessDiagnosis d;
  d.lambda_ref = lambda_ref;
  std::vector<double> x, q;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (!std::isfinite(values[i]) || lambda[i] < opt.window * lambda_ref) continue;
    d.lambda.push_back(lambda[i]);
    d.values.push_back(values[i]);
    const double xi = lambda_ref - lambda[i];
    if (xi <= opt.noise_floor * lambda_ref) continue;
    x.push_back(xi);
    q.push_back(values[i]);
  }
  if (d.values.size() < opt.min_points || x.size() < opt.min_points)
    throw DomainError("insufficient tail points: need " + std::to_string(opt.min_points) + " with lambda >= " +
                      std::to_string(opt.window) + " lambda_ref");
  d.empirical_sup = *std::max_element(d.values.begin(), d.values.end());

  // Work on a normalized copy so the residuals are scale free.
  double scale = 0.0;
  for (double v : q) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  std::vector<double> y(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) y[i] = q[i] / scale;
  const std::size_t n = y.size();

  ModelFit cst{"constant"};
  {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    cst.a = mean;
    for (double v : y) cst.rss += (v - mean) * (v - mean);
    cst.bic = detail::bic(cst.rss, n, 1);
  }
  ModelFit lg{"log"};
  {
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = std::log(x[i]);
    detail::linear_fit(z, y, lg.a, lg.b, lg.rss);
    lg.bic = detail::bic(lg.rss, n, 2);
  }
  ModelFit pw{"power"};
  {
    auto fit_p = [&](double p, ModelFit& out) {
      std::vector<double> z(n);
      for (std::size_t i = 0; i < n; ++i) z[i] = std::pow(x[i] / x.front(), p);
      detail::linear_fit(z, y, out.a, out.b, out.rss);
      out.exponent = p;
    };
    pw.rss = std::numeric_limits<double>::infinity();
    // |p| below kMinPowerExponent is the log model in disguise: a + b x^p = a + b + b p ln x + O(p^2).
    for (int k = -300; k <= 300; ++k) {
      if (std::abs(0.01 * k) < kMinPowerExponent - 1e-12) continue;
      ModelFit t{"power"};
      fit_p(0.01 * k, t);
      if (t.rss < pw.rss) pw = t;
    }
    // Golden refinement around the grid optimum.
    double lo = pw.exponent - 0.01, hi = pw.exponent + 0.01;
    if (pw.exponent > 0.0) lo = std::max(lo, kMinPowerExponent);
    else hi = std::min(hi, -kMinPowerExponent);
    for (int it = 0; it < 40; ++it) {
      const double m1 = lo + 0.382 * (hi - lo), m2 = lo + 0.618 * (hi - lo);
      ModelFit t1{"power"}, t2{"power"};
      fit_p(m1, t1);
      fit_p(m2, t2);
      if (t1.rss < t2.rss) hi = m2;
      else lo = m1;
      if (t1.rss < pw.rss) pw = t1;
      if (t2.rss < pw.rss) pw = t2;
    }
    pw.b /= std::pow(x.front(), pw.exponent);
    pw.bic = detail::bic(pw.rss, n, 3);
  }
  for (ModelFit* f : {&cst, &lg, &pw}) {
    f->a *= scale;
    f->b *= scale;
    f->rss *= scale * scale;
  }
  d.fits = {cst, lg, pw};

  const double flat = 1e-12 * scale;
  if (cst.rss <= flat * flat * static_cast<double>(n)) {
    d.kind = TailKind::ConvergesTo;
    d.limit = cst.a;
    return d;
  }
  const ModelFit* best = &cst;
  for (const ModelFit* f : {&lg, &pw})
    if (f->bic < best->bic) best = f;
  if (best == &cst) {
    d.kind = TailKind::ConvergesTo;
    d.limit = cst.a;
  } else if (best == &lg) {
    d.kind = lg.b < 0.0 ? TailKind::GrowsLog : TailKind::GrowsUndetermined;
  } else if (pw.exponent > 0.0) {
    d.kind = TailKind::ConvergesTo;
    d.limit = pw.a;
  } else if (pw.b > 0.0) {
    d.kind = TailKind::GrowsPower;
    d.power = -pw.exponent;
  } else {
    d.kind = TailKind::GrowsUndetermined;
  }
  return d;
}

/// Compares a diagnosis with an expectation of boundedness.
inline std::string consistency(const BoundednessDiagnosis& d, bool expect_bounded) {
  return d.bounded() == expect_bounded ? "consistent" : "inconsistent";
}

}  // namespace semistable
