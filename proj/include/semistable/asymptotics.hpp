#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semistable/errors.hpp"
#include "semistable/nonlinearity.hpp"

namespace semistable {

enum class Confidence { ClosedForm, NumericConverged, Inconclusive };

inline const char* confidence_name(Confidence c) {
  switch (c) {
    case Confidence::ClosedForm: return "closed_form";
    case Confidence::NumericConverged: return "numeric_converged";
    case Confidence::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct TailOptions {
  double t_max = 1e8;
  double rho = 1.1;   // geometric grid ratio, t_k = rho^k
  int windows = 5;    // dyadic windows [T/2^(j+1), T/2^j] ending at the last evaluable point
  double tolerance = 1e-3;
};

struct TauEstimate {
  std::optional<double> tau_minus;  // +inf allowed
  std::optional<double> tau_plus;
  Confidence confidence = Confidence::Inconclusive;
};

namespace detail {

/// Extrema of a sampled function over consecutive dyadic windows, oldest first.
struct WindowExtrema {
  std::vector<double> min;
  std::vector<double> max;
  double t_end = 0.0;  // last evaluable grid point
};

/// Samples `value` on the geometric grid up to t_max; points where it is not
/// finite are dropped, and the tail ends at the last finite point. Returns
/// nothing when some window has no sample.
inline std::optional<WindowExtrema> window_extrema(const std::function<std::optional<double>(double)>& value,
                                                   const TailOptions& opt) {
  std::vector<std::pair<double, double>> samples;
  for (double t = 1.0; t <= opt.t_max * (1.0 + 1e-12); t *= opt.rho) {
    const auto v = value(t);
    if (v && std::isfinite(*v)) samples.emplace_back(t, *v);
  }
  if (samples.empty()) return std::nullopt;
  const double t_end = samples.back().first;
  WindowExtrema out;
  out.t_end = t_end;
  for (int j = opt.windows - 1; j >= 0; --j) {
    const double hi = t_end / std::ldexp(1.0, j);
    const double lo = hi / 2.0;
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    bool any = false;
    for (const auto& [t, v] : samples) {
      if (t < lo * (1.0 - 1e-12) || t > hi * (1.0 + 1e-12)) continue;
      mn = std::min(mn, v);
      mx = std::max(mx, v);
      any = true;
    }
    if (!any) return std::nullopt;
    out.min.push_back(mn);
    out.max.push_back(mx);
  }
  return out;
}

inline std::optional<double> ratio_q(const Nonlinearity& f, double t) {
  Triple v;
  try {
    v = f.eval(t);
  } catch (const DomainError&) {
    return std::nullopt;
  }
  if (!(v.d1 > 0.0) || !std::isfinite(v.f) || !std::isfinite(v.d1) || !std::isfinite(v.d2))
    return std::nullopt;
  return (v.f / v.d1) * (v.d2 / v.d1);
}

}  // namespace detail

/// Closed-form tau for built-in families (f f''/f'^2 and its limits).
inline std::optional<std::pair<double, double>> closed_form_tau(const Nonlinearity& f) {
  switch (f.family()) {
    case Family::Exponential: return std::pair{1.0, 1.0};
    case Family::PowerShifted: {
      const double p = f.param();
      return std::pair{(p - 1.0) / p, (p - 1.0) / p};
    }
    case Family::LinLog:
    case Family::LinLogPow: return std::pair{0.0, 0.0};
    case Family::Custom: break;
  }
  return std::nullopt;
}

/// Estimates tau_- and tau_+ (liminf / limsup of q = f f''/f'^2). Built-ins
/// return closed forms unless `numeric_only` is set.
inline TauEstimate estimate_tau(const Nonlinearity& f, const TailOptions& opt = {}, bool numeric_only = false) {
  if (opt.t_max < 100.0) throw DomainError("estimate_tau requires t_max >= 100");
  if (!numeric_only) {
    if (auto cf = closed_form_tau(f)) return {cf->first, cf->second, Confidence::ClosedForm};
  }
  // f' must stay positive on the sampled tail.
  bool bad_tail = false;
  const auto q = [&](double t) -> std::optional<double> {
    auto r = detail::ratio_q(f, t);
    if (!r) {
      try {
        const Triple v = f.eval(t);
        if (std::isfinite(v.d1) && v.d1 <= 0.0 && t >= opt.t_max / std::ldexp(1.0, opt.windows))
          bad_tail = true;
      } catch (const DomainError&) {
      }
    }
    return r;
  };
  const auto ext = detail::window_extrema(q, opt);
  if (!ext || bad_tail) return {};
  TauEstimate out;
  out.tau_minus = *std::min_element(ext->min.begin(), ext->min.end());
  out.tau_plus = *std::max_element(ext->max.begin(), ext->max.end());
  bool converged = true;
  for (std::size_t j = 1; j < ext->min.size(); ++j) {
    if (std::abs(ext->min[j] - ext->min[j - 1]) >= opt.tolerance) converged = false;
    if (std::abs(ext->max[j] - ext->max[j - 1]) >= opt.tolerance) converged = false;
  }
  out.confidence = converged ? Confidence::NumericConverged : Confidence::Inconclusive;
  return out;
}

// ---------------------------------------------------------------------------
// Growth conditions

enum class ConditionId { C1_6, C1_7, C1_25, C1_26, C1_29, C1_30, C1_31, C1_32 };

inline const char* condition_name(ConditionId id) {
  switch (id) {
    case ConditionId::C1_6: return "1.6";
    case ConditionId::C1_7: return "1.7";
    case ConditionId::C1_25: return "1.25";
    case ConditionId::C1_26: return "1.26";
    case ConditionId::C1_29: return "1.29";
    case ConditionId::C1_30: return "1.30";
    case ConditionId::C1_31: return "1.31";
    case ConditionId::C1_32: return "1.32";
  }
  return "?";
}

inline ConditionId parse_condition_id(std::string_view text) {
  for (auto id : {ConditionId::C1_6, ConditionId::C1_7, ConditionId::C1_25, ConditionId::C1_26,
                  ConditionId::C1_29, ConditionId::C1_30, ConditionId::C1_31, ConditionId::C1_32})
    if (text == condition_name(id)) return id;
  throw DomainError("invalid condition id '" + std::string(text) + "'");
}

struct ConditionParams {
  double eps = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
};

enum class ConditionStatus { Holds, Fails, Inconclusive };

inline const char* status_name(ConditionStatus s) {
  switch (s) {
    case ConditionStatus::Holds: return "holds";
    case ConditionStatus::Fails: return "fails";
    case ConditionStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct ConditionReport {
  ConditionId id{};
  ConditionParams params;
  ConditionStatus status = ConditionStatus::Inconclusive;
  /// Upper-bound conditions: smallest C on the tail. Lower-bound conditions:
  /// the extrapolated tail infimum of the defining quantity.
  double empirical_constant = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> witness;  // t of a sampled violation
  std::string detail;
};

/// Classification of a sequence of window suprema (oldest first) for an
/// "eventually bounded above" question. Flat or nonincreasing sequences are
/// bounded; increasing sequences are bounded only if their increments shrink
/// geometrically with ratio <= 0.75 (Aitken limit is then reported).
struct BoundedAbove {
  ConditionStatus status = ConditionStatus::Inconclusive;
  double bound = std::numeric_limits<double>::quiet_NaN();
};

inline BoundedAbove classify_bounded_above(const std::vector<double>& s) {
  BoundedAbove out;
  if (s.size() < 3) return out;
  const double scale = std::max(1.0, std::abs(s.back()));
  std::vector<double> d;
  for (std::size_t i = 1; i < s.size(); ++i) {
    double di = s[i] - s[i - 1];
    if (std::abs(di) <= 1e-9 * scale) di = 0.0;
    d.push_back(di);
  }
  const double smax = *std::max_element(s.begin(), s.end());
  if (std::all_of(d.begin(), d.end(), [](double x) { return x <= 0.0; })) {
    out.status = ConditionStatus::Holds;
    out.bound = smax;
    return out;
  }
  if (std::all_of(d.begin(), d.end(), [](double x) { return x > 0.0; })) {
    double ratio = 0.0;
    for (std::size_t i = 1; i < d.size(); ++i) ratio = std::max(ratio, d[i] / d[i - 1]);
    if (ratio <= 0.75) {
      out.status = ConditionStatus::Holds;
      out.bound = s.back() + d.back() * ratio / (1.0 - ratio);
    } else {
      out.status = ConditionStatus::Fails;
      out.bound = std::numeric_limits<double>::infinity();
    }
    return out;
  }
  // Mixed signs: bounded if the later half is nonincreasing and stays below the max.
  const std::size_t half = d.size() / 2;
  if (std::all_of(d.begin() + static_cast<std::ptrdiff_t>(half), d.end(), [](double x) { return x <= 0.0; })) {
    out.status = ConditionStatus::Holds;
    out.bound = smax;
  }
  return out;
}

namespace detail {

inline double log_or_nan(double x) {
  return x > 0.0 ? std::log(x) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Samples the defining inequality of a growth condition on the tail.
inline ConditionReport check_condition(const Nonlinearity& f, ConditionId id, ConditionParams params,
                                       TailOptions opt = {.windows = 8}) {
  using detail::log_or_nan;
  const double eps = params.eps, gamma = params.gamma, delta = params.delta;
  ConditionReport report;
  report.id = id;
  report.params = params;

  switch (id) {
    case ConditionId::C1_6:
    case ConditionId::C1_7:
    case ConditionId::C1_29:
    case ConditionId::C1_30:
    case ConditionId::C1_31:
      if (!(eps > 0.0)) throw DomainError(std::string("condition ") + condition_name(id) + " needs eps > 0");
      break;
    case ConditionId::C1_25:
      if (!(gamma >= 0.0 && gamma <= 2.0) || !(eps > 0.0))
        throw DomainError("condition 1.25 needs gamma in [0,2] and eps > 0");
      if (!(eps - gamma > 0.5)) report.detail = "eps - gamma <= 1/2: holds or not, no certificate follows";
      break;
    case ConditionId::C1_26:
      if (!(gamma > 0.0) || !(delta >= 0.0 && delta <= gamma))
        throw DomainError("condition 1.26 needs gamma > 0 and delta in [0, gamma]");
      break;
    case ConditionId::C1_32:
      if (!(gamma > 0.0 && gamma < 2.0)) throw DomainError("condition 1.32 needs gamma in (0,2)");
      break;
  }

  // Every condition is phrased as a log-quantity that must stay bounded above
  // (upper-bound conditions) or bounded below (positivity conditions).
  const bool upper = id == ConditionId::C1_6 || id == ConditionId::C1_7 || id == ConditionId::C1_26;
  std::optional<double> violation;
  const auto quantity = [&](double t) -> std::optional<double> {
    Triple v;
    try {
      v = f.eval(t);
    } catch (const DomainError&) {
      return std::nullopt;
    }
    if (!std::isfinite(v.f) || !std::isfinite(v.d1) || !std::isfinite(v.d2) || !(v.f > 0.0) || !(v.d1 > 0.0))
      return std::nullopt;
    const double lt = std::log(t);
    switch (id) {
      case ConditionId::C1_6: return std::log(v.d1) - (1.0 + eps) * std::log(v.f);
      case ConditionId::C1_7: return std::log(v.d1) - (1.0 - eps) * std::log(v.f);
      case ConditionId::C1_26: return std::log(v.d1) - delta * lt - gamma * std::log(v.f);
      case ConditionId::C1_25:
        return (2.0 - gamma) * lt + (1.0 + gamma) * std::log(v.f) + log_or_nan(v.d2) - (1.0 + eps) * std::log(v.d1);
      case ConditionId::C1_29: {
        const double q = (t * v.d1 - v.f) / v.f;
        if (q <= 0.0) violation = t;
        return log_or_nan(q);
      }
      case ConditionId::C1_30: {
        const double q = (t * v.d1 - v.f) / t;
        if (q <= 0.0) violation = t;
        return log_or_nan(q);
      }
      case ConditionId::C1_31: {
        const double h = t - v.f / v.d1;
        if (h < 0.0) return std::nullopt;
        double fh;
        try {
          fh = f(h);
        } catch (const DomainError&) {
          return std::nullopt;
        }
        return std::log(v.d1) + log_or_nan(fh) - lt;
      }
      case ConditionId::C1_32:
        if (t <= 1.0) return std::nullopt;
        return log_or_nan(v.d2) + 2.0 * lt + gamma * std::log(lt) - std::log(v.f);
    }
    return std::nullopt;
  };

  // Tail violations of positivity are recorded even though log() drops them.
  const auto ext = detail::window_extrema(quantity, opt);
  if (!ext) {
    report.detail = "no evaluable tail";
    return report;
  }
  if (violation && *violation >= ext->t_end / std::ldexp(1.0, opt.windows)) {
    report.status = ConditionStatus::Fails;
    report.witness = violation;
    report.detail = "defining quantity is not positive on the tail";
    return report;
  }

  if (upper) {
    const auto b = classify_bounded_above(ext->max);
    report.status = b.status;
    report.empirical_constant = std::exp(b.bound);
  } else {
    std::vector<double> neg;
    for (double m : ext->min) neg.push_back(-m);
    const auto b = classify_bounded_above(neg);
    report.status = b.status;
    report.empirical_constant = std::exp(-b.bound);
    const bool threshold = id == ConditionId::C1_29 || id == ConditionId::C1_30 || id == ConditionId::C1_31;
    if (b.status == ConditionStatus::Holds && threshold && report.empirical_constant < eps) {
      report.status = ConditionStatus::Fails;
      report.detail = "tail infimum is below the requested eps";
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// f^(1-delta) convexity

/// Largest delta in (0,1) with (f^(1-delta))'' >= 0 on the sampled tail, i.e.
/// f f'' - delta f'^2 >= 0. Built-ins with closed-form tau_- in (0,1] return
/// tau_- - 1e-6.
inline std::optional<double> convex_power_delta(const Nonlinearity& f, const TailOptions& opt = {},
                                                bool numeric_only = false) {
  constexpr double kEpsHat = 1e-6;
  if (!numeric_only) {
    if (auto cf = closed_form_tau(f)) {
      const double tm = cf->first;
      if (tm > 0.0 && tm <= 1.0) return tm - kEpsHat;
      return std::nullopt;
    }
  }
  // Collect the tail once; the predicate is a sign check per point.
  std::vector<Triple> tail;
  const auto collect = [&](double t) -> std::optional<double> {
    Triple v;
    try {
      v = f.eval(t);
    } catch (const DomainError&) {
      return std::nullopt;
    }
    if (!std::isfinite(v.f) || !std::isfinite(v.d1) || !std::isfinite(v.d2) || !(v.d1 > 0.0)) return std::nullopt;
    return 0.0;
  };
  std::vector<double> ts;
  for (double t = 1.0; t <= opt.t_max * (1.0 + 1e-12); t *= opt.rho)
    if (collect(t)) ts.push_back(t);
  if (ts.empty()) return std::nullopt;
  const double t_start = ts.back() / std::ldexp(1.0, opt.windows);
  for (double t : ts)
    if (t >= t_start) tail.push_back(f.eval(t));

  const auto convex_at = [&](double delta) {
    for (const Triple& v : tail) {
      // Sign of f f'' - delta f'^2, scaled by 1/f'^2.
      if ((v.f / v.d1) * (v.d2 / v.d1) - delta < 0.0) return false;
    }
    return true;
  };
  constexpr double kMinDelta = 1e-3;
  if (!convex_at(kMinDelta)) return std::nullopt;
  double lo = kMinDelta, hi = 1.0;
  if (convex_at(1.0 - 1e-12)) return 1.0 - kEpsHat;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (convex_at(mid) ? lo : hi) = mid;
  }
  return lo;
}

// ---------------------------------------------------------------------------
// Profile

struct AsymptoticProfile {
  std::string nonlinearity;
  bool convex = false;
  bool superlinear = false;
  bool f0_positive = false;

  std::optional<double> tau_minus;
  std::optional<double> tau_plus;
  std::optional<double> convex_power_delta;
  std::optional<bool> cond_1_6;                       // holds for every tested eps
  std::optional<double> cond_1_7;                     // eps
  std::optional<std::pair<double, double>> cond_1_25;  // (gamma, eps)
  std::optional<std::pair<double, double>> cond_1_26;  // (gamma, delta)
  std::optional<double> cond_1_29;                    // eps
  std::optional<double> cond_1_30;                    // eps
  std::optional<double> cond_1_31;                    // eps
  std::optional<double> cond_1_32;                    // gamma

  std::map<std::string, Confidence> confidence;

  Confidence confidence_of(const std::string& field) const {
    auto it = confidence.find(field);
    return it == confidence.end() ? Confidence::Inconclusive : it->second;
  }
  bool usable(const std::string& field) const { return confidence_of(field) != Confidence::Inconclusive; }

  /// A profile where every asymptotic field is unknown.
  static AsymptoticProfile unknown(bool convex = true) {
    AsymptoticProfile p;
    p.convex = convex;
    p.superlinear = true;
    p.f0_positive = true;
    return p;
  }
};

namespace detail {

inline Confidence from_status(ConditionStatus s) {
  return s == ConditionStatus::Inconclusive ? Confidence::Inconclusive : Confidence::NumericConverged;
}

}  // namespace detail

/// Estimates every classifier for f: tau, f^(1-delta) convexity and the
/// growth conditions (the best parameter on a fixed search grid).
inline AsymptoticProfile build_profile(const Nonlinearity& f, const TailOptions& opt = {}) {
  AsymptoticProfile p;
  p.nonlinearity = f.description();
  const ValidationReport validation = validate(f);
  p.convex = validation.convex() && validation.passed("f' >= 0");
  p.superlinear = validation.superlinear();
  p.f0_positive = validation.passed("f(0) > 0");

  const TauEstimate tau = estimate_tau(f, opt);
  p.tau_minus = tau.tau_minus;
  p.tau_plus = tau.tau_plus;
  p.confidence["tau_minus"] = tau.confidence;
  p.confidence["tau_plus"] = tau.confidence;

  p.convex_power_delta = convex_power_delta(f, opt);
  p.confidence["convex_power_delta"] = f.is_builtin() ? Confidence::ClosedForm : Confidence::NumericConverged;

  TailOptions copt = opt;
  copt.windows = 8;
  const auto check = [&](ConditionId id, ConditionParams params) { return check_condition(f, id, params, copt); };

  {
    bool all = true, inconclusive = false;
    for (double eps : {1.0, 0.5, 0.25, 0.1, 0.05, 0.01}) {
      const auto r = check(ConditionId::C1_6, {.eps = eps});
      if (r.status == ConditionStatus::Fails) all = false;
      if (r.status == ConditionStatus::Inconclusive) inconclusive = true;
    }
    if (!all) p.cond_1_6 = false;
    else if (!inconclusive) p.cond_1_6 = true;
    p.confidence["cond_1_6"] = p.cond_1_6 ? Confidence::NumericConverged : Confidence::Inconclusive;
  }
  {
    Confidence c = Confidence::NumericConverged;
    for (double eps : {0.99, 0.9, 0.75, 0.5, 0.25, 0.1, 0.05, 0.01}) {
      const auto r = check(ConditionId::C1_7, {.eps = eps});
      if (r.status == ConditionStatus::Holds) {
        p.cond_1_7 = eps;
        break;
      }
      if (r.status == ConditionStatus::Inconclusive) c = Confidence::Inconclusive;
    }
    p.confidence["cond_1_7"] = p.cond_1_7 ? Confidence::NumericConverged : c;
  }
  {
    Confidence c = Confidence::NumericConverged;
    for (double gap : {3.0, 2.0, 1.5, 1.0, 0.75, 0.51}) {
      for (double gamma : {0.0, 0.5, 1.0, 1.5, 2.0}) {
        const auto r = check(ConditionId::C1_25, {.eps = gamma + gap, .gamma = gamma});
        if (r.status == ConditionStatus::Holds) {
          p.cond_1_25 = std::pair{gamma, gamma + gap};
          break;
        }
        if (r.status == ConditionStatus::Inconclusive) c = Confidence::Inconclusive;
      }
      if (p.cond_1_25) break;
    }
    p.confidence["cond_1_25"] = p.cond_1_25 ? Confidence::NumericConverged : c;
  }
  {
    Confidence c = Confidence::NumericConverged;
    for (double gamma : {0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0}) {
      for (double delta : {0.0, 0.5 * gamma, gamma}) {
        const auto r = check(ConditionId::C1_26, {.gamma = gamma, .delta = delta});
        if (r.status == ConditionStatus::Holds) {
          p.cond_1_26 = std::pair{gamma, delta};
          break;
        }
        if (r.status == ConditionStatus::Inconclusive) c = Confidence::Inconclusive;
      }
      if (p.cond_1_26) break;
    }
    p.confidence["cond_1_26"] = p.cond_1_26 ? Confidence::NumericConverged : c;
  }
  const auto lower = [&](ConditionId id, std::optional<double>& field, const char* name) {
    const auto r = check(id, {.eps = 1e-12});
    if (r.status == ConditionStatus::Holds) field = r.empirical_constant;
    p.confidence[name] = detail::from_status(r.status);
  };
  lower(ConditionId::C1_29, p.cond_1_29, "cond_1_29");
  lower(ConditionId::C1_30, p.cond_1_30, "cond_1_30");
  lower(ConditionId::C1_31, p.cond_1_31, "cond_1_31");
  {
    Confidence c = Confidence::NumericConverged;
    for (double gamma : {0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 1.95}) {
      const auto r = check(ConditionId::C1_32, {.gamma = gamma});
      if (r.status == ConditionStatus::Holds) {
        p.cond_1_32 = gamma;
        break;
      }
      if (r.status == ConditionStatus::Inconclusive) c = Confidence::Inconclusive;
    }
    p.confidence["cond_1_32"] = p.cond_1_32 ? Confidence::NumericConverged : c;
  }
  return p;
}

}  // namespace semistable
