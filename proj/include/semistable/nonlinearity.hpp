#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semistable/errors.hpp"
#include "semistable/expression.hpp"
#include "semistable/jet.hpp"

namespace semistable {

/// (f(t), f'(t), f''(t)).
struct Triple {
  double f = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

enum class Family { Exponential, PowerShifted, LinLog, LinLogPow, Custom };

inline const char* family_name(Family family) {
  switch (family) {
    case Family::Exponential: return "exp";
    case Family::PowerShifted: return "pow";
    case Family::LinLog: return "linlog";
    case Family::LinLogPow: return "linlogpow";
    case Family::Custom: return "custom";
  }
  return "?";
}

/// Quintic Hermite polynomial on [0, t1] matching (f, f', f'') at both ends.
class QuinticBlend {
 public:
  QuinticBlend() = default;

  QuinticBlend(double t1, Triple left, Triple right) : t1_(t1) {
    const double h = t1;
    coeff_[0] = left.f;
    coeff_[1] = left.d1 * h;
    coeff_[2] = 0.5 * left.d2 * h * h;
    const double a = right.f - (coeff_[0] + coeff_[1] + coeff_[2]);
    const double b = right.d1 * h - (coeff_[1] + 2.0 * coeff_[2]);
    const double c = right.d2 * h * h - 2.0 * coeff_[2];
    coeff_[3] = 10.0 * a - 4.0 * b + 0.5 * c;
    coeff_[4] = -15.0 * a + 7.0 * b - c;
    coeff_[5] = 6.0 * a - 3.0 * b + 0.5 * c;
  }

  Triple eval(double t) const {
    const double x = t / t1_;
    double p = 0.0, dp = 0.0, ddp = 0.0;
    for (int k = 5; k >= 0; --k) {
      ddp = ddp * x + 2.0 * dp;
      dp = dp * x + p;
      p = p * x + coeff_[static_cast<std::size_t>(k)];
    }
    return {p, dp / t1_, ddp / (t1_ * t1_)};
  }

  double end() const { return t1_; }

 private:
  double t1_ = 1.0;
  std::array<double, 6> coeff_{};
};

/// A nonlinearity f with exact first and second derivatives.
///
/// Built-in families use closed forms. LinLog and LinLogPow equal t ln t and
/// t (ln t)^a for t >= e^2 and are continued to [0, e^2) by a convex quintic
/// with f(0) = 1, f'(0) = 0 and the smallest admissible f''(0) >= 0. Custom
/// nonlinearities evaluate a parsed expression with second-order jets.
///
/// Values are immutable after construction and safe to share across threads.
class Nonlinearity {
 public:
  static constexpr double kBlendEnd = std::numbers::e * std::numbers::e;

  static Nonlinearity exponential() {
    Nonlinearity f(Family::Exponential, 0.0, "exp(t)");
    f.f0_ = 1.0;
    return f;
  }

  static Nonlinearity power_shifted(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("power_shifted requires p > 1");
    Nonlinearity f(Family::PowerShifted, p, "(1+t)^" + format_number(p));
    f.f0_ = 1.0;
    return f;
  }

  static Nonlinearity lin_log() {
    Nonlinearity f(Family::LinLog, 0.0, "t*ln(t) for t>=e^2, convex quintic blend below");
    f.build_blend();
    return f;
  }

  static Nonlinearity lin_log_pow(double a) {
    if (!(a > 0.0 && a < 1.0)) throw DomainError("lin_log_pow requires a in (0,1)");
    Nonlinearity f(Family::LinLogPow, a,
                   "t*ln(t)^" + format_number(a) + " for t>=e^2, convex quintic blend below");
    f.build_blend();
    return f;
  }

  /// Built-in family by tag; `param` is p for PowerShifted and a for LinLogPow.
  static Nonlinearity builtin(Family family, double param = 0.0) {
    switch (family) {
      case Family::Exponential: return exponential();
      case Family::PowerShifted: return power_shifted(param);
      case Family::LinLog: return lin_log();
      case Family::LinLogPow: return lin_log_pow(param);
      case Family::Custom: break;
    }
    throw DomainError("builtin() does not construct Custom nonlinearities");
  }

  /// Parses an expression in t. Throws ParseError on syntax errors and
  /// DomainError when f, f' or f'' is undefined at t = 0.
  static Nonlinearity parse(std::string_view text) {
    Nonlinearity f(Family::Custom, 0.0, std::string(text));
    f.ast_ = std::make_shared<const ExprAst>(ExprAst::parse(text));
    Jet2 at0;
    try {
      at0 = f.ast_->jet(0.0);
    } catch (const DomainError& e) {
      throw DomainError(std::string("expression undefined at t = 0: ") + e.what());
    }
    if (!std::isfinite(at0.value) || !std::isfinite(at0.d1) || !std::isfinite(at0.d2))
      throw DomainError("expression or its derivatives are not finite at t = 0");
    f.f0_ = at0.value;
    return f;
  }

  Triple eval(double t) const {
    switch (family_) {
      case Family::Exponential: {
        const double e = std::exp(t);
        return {e, e, e};
      }
      case Family::PowerShifted: {
        const double p = param_;
        const double b = 1.0 + t;
        const double bp2 = std::pow(b, p - 2.0);
        return {bp2 * b * b, p * bp2 * b, p * (p - 1.0) * bp2};
      }
      case Family::LinLog: {
        if (t < kBlendEnd) return blend_.eval(t);
        const double l = std::log(t);
        return {t * l, l + 1.0, 1.0 / t};
      }
      case Family::LinLogPow: {
        if (t < kBlendEnd) return blend_.eval(t);
        return lin_log_pow_tail(t, param_);
      }
      case Family::Custom: {
        const Jet2 j = ast_->jet(t);
        return {j.value, j.d1, j.d2};
      }
    }
    return {};
  }

  double operator()(double t) const { return eval(t).f; }
  double f0() const { return f0_; }
  /// f~(t) = f(t) - f(0).
  double tilde(double t) const { return eval(t).f - f0_; }

  Family family() const { return family_; }
  /// p for PowerShifted, a for LinLogPow, 0 otherwise.
  double param() const { return param_; }
  const std::string& description() const { return description_; }
  bool is_builtin() const { return family_ != Family::Custom; }
  const ExprAst* expression() const { return ast_.get(); }
  /// f''(0) of the quintic blend (LinLog families only).
  double blend_curvature_at_zero() const { return blend_c0_; }

 private:
  Nonlinearity(Family family, double param, std::string description)
      : family_(family), param_(param), description_(std::move(description)) {}

  static Triple lin_log_pow_tail(double t, double a) {
    const double l = std::log(t);
    const double la = std::pow(l, a);
    return {t * la, la + a * la / l, a * la / (l * l) * (l + a - 1.0) / t};
  }

  static std::string format_number(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
  }

  // f'' of the blend is affine in c = f''(0): f''(x) = A(x) + c B(x). Pick the
  // smallest c >= 0 keeping f'' >= 0 on a dense sample, then verify.
  void build_blend() {
    const Triple right = family_ == Family::LinLog
                             ? Triple{kBlendEnd * 2.0, 3.0, 1.0 / kBlendEnd}
                             : lin_log_pow_tail(kBlendEnd, param_);
    const QuinticBlend base(kBlendEnd, {1.0, 0.0, 0.0}, right);
    const QuinticBlend unit(kBlendEnd, {1.0, 0.0, 1.0}, right);
    constexpr int kSamples = 20000;
    double c = 0.0;
    for (int i = 0; i <= kSamples; ++i) {
      const double t = kBlendEnd * i / kSamples;
      const double a = base.eval(t).d2;
      const double b = unit.eval(t).d2 - a;
      if (a >= 0.0) continue;
      if (b <= 0.0) throw DomainError("no convex quintic continuation exists for " + description_);
      c = std::max(c, -a / b);
    }
    blend_ = QuinticBlend(kBlendEnd, {1.0, 0.0, c}, right);
    for (int i = 0; i <= kSamples; ++i) {
      const Triple v = blend_.eval(kBlendEnd * i / kSamples);
      if (v.d2 < -1e-12 || v.d1 < -1e-12 || v.f <= 0.0)
        throw DomainError("quintic continuation is not positive, nondecreasing and convex for " +
                          description_);
    }
    blend_c0_ = c;
    f0_ = 1.0;
  }

  Family family_;
  double param_ = 0.0;
  std::string description_;
  double f0_ = 0.0;
  std::shared_ptr<const ExprAst> ast_;
  QuinticBlend blend_;
  double blend_c0_ = 0.0;
};

// ---------------------------------------------------------------------------
// Hypothesis validation

struct HypothesisCheck {
  std::string name;
  bool passed = true;
  std::optional<double> witness;  // t of the first failure
  std::string detail;
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;
  double superlinear_ratio_max = 0.0;  // max f(t)/t over the grid tail
  double evaluable_up_to = 0.0;        // last grid point with finite values

  const HypothesisCheck* find(std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
  bool passed(std::string_view name) const {
    const auto* c = find(name);
    return c != nullptr && c->passed;
  }
  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
  bool convex() const { return passed("convex"); }
  bool superlinear() const { return passed("superlinear"); }
};

/// {0} followed by a geometric grid from t_min to t_max with ratio rho.
inline std::vector<double> geometric_grid(double t_min, double t_max, double rho, bool with_zero) {
  std::vector<double> grid;
  if (with_zero) grid.push_back(0.0);
  for (double t = t_min; t <= t_max * (1.0 + 1e-12); t *= rho) grid.push_back(t);
  return grid;
}

inline std::vector<double> default_validation_grid(double t_max = 1e8) {
  return geometric_grid(1e-3, t_max, 1.1, true);
}

/// Checks f(0) > 0, f' >= 0, f'' >= 0 and superlinearity on `grid`.
/// Grid points where f overflows end the evaluable range; points where the
/// expression is undefined count as failures of "evaluable".
inline ValidationReport validate(const Nonlinearity& f, const std::vector<double>& grid) {
  if (grid.empty()) throw DomainError("validate needs a nonempty grid");
  ValidationReport report;
  HypothesisCheck evaluable;
  evaluable.name = "evaluable";
  HypothesisCheck positive;
  positive.name = "f(0) > 0";
  HypothesisCheck monotone;
  monotone.name = "f' >= 0";
  HypothesisCheck convex;
  convex.name = "convex";
  HypothesisCheck superlinear;
  superlinear.name = "superlinear";

  positive.passed = f.f0() > 0.0;
  if (!positive.passed) {
    positive.witness = 0.0;
    positive.detail = "f(0) = " + std::to_string(f.f0());
  }

  std::vector<std::pair<double, double>> ratios;  // (t, f(t)/t)
  for (double t : grid) {
    Triple v;
    try {
      v = f.eval(t);
    } catch (const DomainError& e) {
      if (evaluable.passed) {
        evaluable.passed = false;
        evaluable.witness = t;
        evaluable.detail = e.what();
      }
      continue;
    }
    if (std::isnan(v.f) || std::isnan(v.d1) || std::isnan(v.d2)) {
      if (evaluable.passed) {
        evaluable.passed = false;
        evaluable.witness = t;
        evaluable.detail = "NaN";
      }
      continue;
    }
    if (std::isinf(v.f) || std::isinf(v.d1) || std::isinf(v.d2)) break;
    report.evaluable_up_to = t;
    const double scale = std::max(1.0, std::abs(v.f));
    if (v.d1 < -1e-14 * scale && monotone.passed) {
      monotone.passed = false;
      monotone.witness = t;
    }
    if (v.d2 < -1e-14 * scale && convex.passed) {
      convex.passed = false;
      convex.witness = t;
    }
    if (t > 0.0) ratios.emplace_back(t, v.f / t);
  }

  // Tail: the upper 40% of the evaluable range on a log scale.
  if (ratios.size() >= 4) {
    const double lo = std::log(ratios.front().first);
    const double hi = std::log(ratios.back().first);
    const double cut = std::exp(lo + 0.6 * (hi - lo));
    std::vector<double> tail;
    for (const auto& [t, r] : ratios)
      if (t >= cut) tail.push_back(r);
    bool increasing = tail.size() >= 2;
    for (std::size_t i = 1; i < tail.size(); ++i)
      if (!(tail[i] >= tail[i - 1])) increasing = false;
    for (double r : tail) report.superlinear_ratio_max = std::max(report.superlinear_ratio_max, r);
    superlinear.passed = increasing && tail.back() > tail.front() * (1.0 + 1e-6);
    if (!superlinear.passed) {
      superlinear.witness = ratios.back().first;
      superlinear.detail = "f(t)/t does not grow along the tail";
    }
  } else {
    superlinear.passed = false;
    superlinear.detail = "too few evaluable grid points";
  }

  report.checks = {evaluable, positive, monotone, convex, superlinear};
  return report;
}

inline ValidationReport validate(const Nonlinearity& f) { return validate(f, default_validation_grid()); }

}  // namespace semistable
