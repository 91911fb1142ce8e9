#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "semistable/errors.hpp"
#include "semistable/expression.hpp"
#include "semistable/nonlinearity.hpp"
#include "semistable/quadrature.hpp"

namespace semistable {

/// The multiplier g in the stability test function eta = g(u).
class GChoice {
 public:
  enum class Kind { GEqualsF, FTilde, GPaperProof, Custom };

  /// g = f. Note g(0) = f(0) != 0.
  static GChoice equals_f() { return GChoice(Kind::GEqualsF); }
  /// g = f - f(0), which vanishes at 0 and has g' = f'.
  static GChoice f_tilde() { return GChoice(Kind::FTilde); }
  /// g = f exp(beta Phi) for s >= 1, joined to g(0) = 0 by the quadratic
  /// A s + B s^2 that matches g and g' at s = 1.
  static GChoice paper_proof(double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("beta must lie in [0, 1)");
    GChoice g(Kind::GPaperProof);
    g.beta_ = beta;
    return g;
  }
  static GChoice custom(std::string_view expr) {
    GChoice g(Kind::Custom);
    g.ast_ = std::make_shared<const ExprAst>(ExprAst::parse(expr));
    g.text_ = std::string(expr);
    const double g0 = g.ast_->value(0.0);
    if (std::abs(g0) > 1e-12) throw DomainError("custom g must vanish at 0");
    return g;
  }

  Kind kind() const { return kind_; }
  double beta() const { return beta_; }
  const ExprAst* expression() const { return ast_.get(); }

  std::string name() const {
    switch (kind_) {
      case Kind::GEqualsF: return "g=f";
      case Kind::FTilde: return "g=f-f(0)";
      case Kind::GPaperProof: {
        char buf[48];
        std::snprintf(buf, sizeof buf, "g=f*exp(beta*Phi),beta=%g", beta_);
        return buf;
      }
      case Kind::Custom: return "g=" + text_;
    }
    return "?";
  }

 private:
  explicit GChoice(Kind k) : kind_(k) {}
  Kind kind_;
  double beta_ = 0.0;
  std::shared_ptr<const ExprAst> ast_;
  std::string text_;
};

struct EstimateRequest {
  double beta = 0.0;
  GChoice g = GChoice::equals_f();
  double tolerance = 1e-10;
  double panel = 1.0 / 16.0;  // breakpoint spacing of the cumulative table
};

/// Phi(t) = int_0^t sqrt(f''/f), I(t) = int_0^t f f'' exp(2 beta Phi),
/// G(t) = int_0^t g'^2, tabulated at equally spaced breakpoints and
/// completed inside a panel by adaptive quadrature from its left breakpoint.
class CumulativeTable {
 public:
  CumulativeTable(Nonlinearity f, EstimateRequest request, double u_max)
      : f_(std::move(f)), req_(std::move(request)) {
    if (!(req_.beta >= 0.0 && req_.beta < 1.0)) throw DomainError("beta must lie in [0, 1)");
    if (!(req_.tolerance > 0.0)) throw DomainError("tolerance must be positive");
    if (!(req_.panel > 0.0)) throw DomainError("panel width must be positive");
    if (!(u_max >= 0.0) || !std::isfinite(u_max)) throw DomainError("u_max must be finite and >= 0");
    if (!(f_.f0() > 0.0)) throw DomainError("H_{f,beta} needs f(0) > 0");
    build(std::max(u_max, 1.0));
  }

  double u_max() const { return t_.back(); }
  const Nonlinearity& nonlinearity() const { return f_; }
  const EstimateRequest& request() const { return req_; }

  double phi(double u) const {
    const std::size_t i = panel_of(u);
    return phi_[i] + tail_phi(t_[i], u);
  }

  double I(double u) const {
    const std::size_t i = panel_of(u);
    return I_[i] + tail_I(i, u);
  }

  double G(double u) const {
    const std::size_t i = panel_of(u);
    return G_[i] + tail_G(i, u);
  }

  /// H_{f,beta}(u) = f(u) I(u).
  double H(double u) const { return f_(u) * I(u); }

  /// (g(s), g'(s)).
  std::pair<double, double> g(double s) const { return g_at(s, needs_phi_for_g() ? phi(s) : 0.0); }

  /// g(s)^2 f'(s) - G(s) f(s).
  double lemma21_H(double s) const {
    const auto [gs, gp] = g(s);
    (void)gp;
    const Triple y = f_.eval(s);
    return gs * gs * y.d1 - G(s) * y.f;
  }

  const std::vector<double>& breakpoints() const { return t_; }
  const std::vector<double>& phi_column() const { return phi_; }
  const std::vector<double>& I_column() const { return I_; }
  const std::vector<double>& G_column() const { return G_; }
  /// Per-panel quadrature error estimates (Phi + I + G).
  const std::vector<double>& panel_errors() const { return err_; }

  void write_csv(std::ostream& os) const {
    os << "t,Phi,I,G\n";
    char buf[128];
    for (std::size_t i = 0; i < t_.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", t_[i], phi_[i], I_[i], G_[i]);
      os << buf;
    }
  }

 private:
  QuadOptions quad_options(double scale_hint = 0.0) const {
    QuadOptions o;
    o.rel_tol = 0.1 * req_.tolerance;
    o.abs_tol = 1e-3 * req_.tolerance * std::max(scale_hint, 1e-300);
    return o;
  }

  /// sqrt(f''/f); f'' = 0 is extended continuously by 0.
  double phi_density(double t) const {
    const Triple y = f_.eval(t);
    if (!(y.f > 0.0)) throw DomainError("f must be positive for H_{f,beta}");
    if (y.d2 < 0.0) {
      if (y.d2 < -1e-12 * (1.0 + std::abs(y.d1))) throw DomainError("non-convexity detected at t = " + std::to_string(t));
      return 0.0;
    }
    return std::sqrt(y.d2 / y.f);
  }

  double tail_phi(double a, double b) const {
    if (a == b) return 0.0;
    return integrate_adaptive([this](double t) { return phi_density(t); }, a, b, quad_options()).value;
  }

  double I_density(double t, double phi_t) const {
    const Triple y = f_.eval(t);
    const double d2 = std::max(y.d2, 0.0);
    return y.f * d2 * (req_.beta == 0.0 ? 1.0 : std::exp(2.0 * req_.beta * phi_t));
  }

  double tail_I(std::size_t i, double u) const {
    const double a = t_[i];
    if (u == a) return 0.0;
    const double phi_a = phi_[i];
    auto density = [&](double t) {
      return I_density(t, req_.beta == 0.0 ? 0.0 : phi_a + tail_phi(a, t));
    };
    return integrate_adaptive(density, a, u, quad_options()).value;
  }

  bool needs_phi_for_g() const { return req_.g.kind() == GChoice::Kind::GPaperProof; }

  std::pair<double, double> g_at(double s, double phi_s) const {
    switch (req_.g.kind()) {
      case GChoice::Kind::GEqualsF: {
        const Triple y = f_.eval(s);
        return {y.f, y.d1};
      }
      case GChoice::Kind::FTilde: {
        const Triple y = f_.eval(s);
        return {y.f - f_.f0(), y.d1};
      }
      case GChoice::Kind::GPaperProof: {
        if (s < 1.0) return {bridge_a_ * s + bridge_b_ * s * s, bridge_a_ + 2.0 * bridge_b_ * s};
        const double beta = req_.g.beta();
        const Triple y = f_.eval(s);
        const double w = std::exp(beta * phi_s);
        return {y.f * w, w * (y.d1 + beta * std::sqrt(y.f * std::max(y.d2, 0.0)))};
      }
      case GChoice::Kind::Custom: {
        const Jet2 j = req_.g.expression()->jet(s);
        return {j.value, j.d1};
      }
    }
    return {0.0, 0.0};
  }

  double tail_G(std::size_t i, double u) const {
    const double a = t_[i];
    if (u == a) return 0.0;
    const double phi_a = phi_[i];
    auto density = [&](double t) {
      const double p = needs_phi_for_g() ? phi_a + tail_phi(a, t) : 0.0;
      const double gp = g_at(t, p).second;
      return gp * gp;
    };
    return integrate_adaptive(density, a, u, quad_options()).value;
  }

  std::size_t panel_of(double u) const {
    if (!(u >= 0.0)) throw DomainError("argument must be >= 0");
    if (u > t_.back() * (1.0 + 1e-14)) throw DomainError("argument beyond the tabulated range");
    auto it = std::upper_bound(t_.begin(), t_.end(), u);
    return static_cast<std::size_t>(std::distance(t_.begin(), it)) - 1;
  }

  void build(double u_max) {
    const auto panels = static_cast<std::size_t>(std::ceil(u_max / req_.panel - 1e-9));
    t_.resize(panels + 1);
    for (std::size_t i = 0; i <= panels; ++i) t_[i] = static_cast<double>(i) * req_.panel;
    phi_.assign(panels + 1, 0.0);
    I_.assign(panels + 1, 0.0);
    G_.assign(panels + 1, 0.0);
    err_.assign(panels, 0.0);

    for (std::size_t i = 0; i < panels; ++i) {
      const auto r = integrate_adaptive([this](double t) { return phi_density(t); }, t_[i], t_[i + 1], quad_options());
      phi_[i + 1] = phi_[i] + r.value;
      err_[i] += r.error;
    }
    if (needs_phi_for_g()) {
      // Bridge through the value and slope of f exp(beta Phi) at s = 1.
      const double beta = req_.g.beta();
      const Triple y = f_.eval(1.0);
      const double w = std::exp(beta * phi(1.0));
      const double g1 = y.f * w;
      const double gp1 = w * (y.d1 + beta * std::sqrt(y.f * std::max(y.d2, 0.0)));
      bridge_b_ = gp1 - g1;
      bridge_a_ = 2.0 * g1 - gp1;
    }
    for (std::size_t i = 0; i < panels; ++i) {
      const double a = t_[i], b = t_[i + 1], phi_a = phi_[i];
      auto i_density = [&](double t) {
        return I_density(t, req_.beta == 0.0 ? 0.0 : phi_a + tail_phi(a, t));
      };
      const auto ri = integrate_adaptive(i_density, a, b, quad_options());
      I_[i + 1] = I_[i] + ri.value;
      auto g_density = [&](double t) {
        const double p = needs_phi_for_g() ? phi_a + tail_phi(a, t) : 0.0;
        const double gp = g_at(t, p).second;
        return gp * gp;
      };
      const auto rg = integrate_adaptive(g_density, a, b, quad_options());
      G_[i + 1] = G_[i] + rg.value;
      err_[i] += ri.error + rg.error;
    }
  }

  Nonlinearity f_;
  EstimateRequest req_;
  std::vector<double> t_, phi_, I_, G_, err_;
  double bridge_a_ = 0.0, bridge_b_ = 0.0;
};

/// H_{f,beta}(u) = f(u) int_0^u f f'' exp(2 beta Phi).
inline double H_f_beta(const Nonlinearity& f, double beta, double u, double tolerance = 1e-10) {
  if (!(u >= 0.0)) throw DomainError("u must be >= 0");
  if (u == 0.0) return 0.0;
  EstimateRequest req;
  req.beta = beta;
  req.tolerance = tolerance;
  return CumulativeTable(f, req, u).H(u);
}

/// g(s)^2 f'(s) - G(s) f(s) with G(s) = int_0^s g'^2.
inline double lemma21_H(const Nonlinearity& f, const GChoice& g, double s, double tolerance = 1e-10) {
  if (!(s >= 0.0)) throw DomainError("s must be >= 0");
  EstimateRequest req;
  req.g = g;
  req.tolerance = tolerance;
  return CumulativeTable(f, req, s).lemma21_H(s);
}

// ---------------------------------------------------------------------------

enum class RatioStatus { Holds, Violated, Inconclusive };

inline const char* ratio_status_name(RatioStatus s) {
  switch (s) {
    case RatioStatus::Holds: return "holds";
    case RatioStatus::Violated: return "violated";
    case RatioStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct RatioSample {
  double s = 0.0;
  double lhs = 0.0;  // G f / (g^2 f')
  double rhs = 0.0;  // g' f / (g f') / (2 - gamma)
};

struct RatioBoundReport {
  std::vector<RatioSample> samples;
  double lhs_limsup = 0.0;  // sup over the tail quarter of the grid
  double rhs_limsup = 0.0;
  double max_violation = 0.0;  // lhs_limsup - rhs_limsup
  bool g_gamma_convex = true;
  RatioStatus status = RatioStatus::Inconclusive;
  std::string detail;
};

/// Compares limsup G f / (g^2 f') against limsup g' f / (g f') / (2 - gamma)
/// on the tail of `s_grid`. The tail is the last quarter of the grid; the
/// result is Inconclusive when either ratio still drifts between the last two
/// quarters or g^gamma is not convex there.
inline RatioBoundReport lemma22_ratio_bound(const Nonlinearity& f, const GChoice& g, double gamma,
                                            const std::vector<double>& s_grid, double drift_tol = 1e-2,
                                            double tolerance = 1e-10) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0, 1]");
  if (s_grid.size() < 8) throw DomainError("s_grid needs at least 8 points");
  if (!std::is_sorted(s_grid.begin(), s_grid.end()) || !(s_grid.front() > 0.0))
    throw DomainError("s_grid must be positive and increasing");
  RatioBoundReport rep;
  EstimateRequest req;
  req.g = g;
  req.tolerance = tolerance;
  const CumulativeTable table(f, req, s_grid.back());

  std::vector<double> gpow;
  for (double s : s_grid) {
    const auto [gs, gp] = table.g(s);
    const Triple y = f.eval(s);
    RatioSample r;
    r.s = s;
    r.lhs = table.G(s) * y.f / (gs * gs * y.d1);
    r.rhs = gp * y.f / (gs * y.d1) / (2.0 - gamma);
    rep.samples.push_back(r);
    gpow.push_back(gs > 0.0 ? std::pow(gs, gamma) : std::numeric_limits<double>::quiet_NaN());
  }
  const std::size_t n = s_grid.size();
  const std::size_t q3 = n - n / 4, q2 = n - n / 2;
  // Sampled convexity of g^gamma on the tail half: secant slopes nondecreasing.
  for (std::size_t i = q2 + 1; i + 1 < n; ++i) {
    const double left = (gpow[i] - gpow[i - 1]) / (s_grid[i] - s_grid[i - 1]);
    const double right = (gpow[i + 1] - gpow[i]) / (s_grid[i + 1] - s_grid[i]);
    if (!(right >= left * (1.0 - 1e-9) - 1e-12 * std::abs(left))) {
      rep.g_gamma_convex = false;
      break;
    }
  }
  auto sup_over = [&](std::size_t from, std::size_t to, bool lhs) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = from; i < to; ++i) m = std::max(m, lhs ? rep.samples[i].lhs : rep.samples[i].rhs);
    return m;
  };
  rep.lhs_limsup = sup_over(q3, n, true);
  rep.rhs_limsup = sup_over(q3, n, false);
  rep.max_violation = rep.lhs_limsup - rep.rhs_limsup;
  const double lhs_prev = sup_over(q2, q3, true), rhs_prev = sup_over(q2, q3, false);
  const bool settled = std::abs(rep.lhs_limsup - lhs_prev) <= drift_tol * std::abs(rep.lhs_limsup) &&
                       std::abs(rep.rhs_limsup - rhs_prev) <= drift_tol * std::abs(rep.rhs_limsup);
  if (!rep.g_gamma_convex) {
    rep.status = RatioStatus::Inconclusive;
    rep.detail = "g^gamma is not convex on the sampled tail";
  } else if (!settled) {
    rep.status = RatioStatus::Inconclusive;
    rep.detail = "ratios still drift on the sampled tail";
  } else {
    rep.status = rep.max_violation <= 1e-6 * std::max(1.0, std::abs(rep.rhs_limsup)) ? RatioStatus::Holds
                                                                                      : RatioStatus::Violated;
  }
  return rep;
}

/// Closed forms of H_{f,beta} for the exponential and shifted-power families.
inline double H_f_beta_closed_form(const Nonlinearity& f, double beta, double u) {
  switch (f.family()) {
    case Family::Exponential:
      return (std::exp((3.0 + 2.0 * beta) * u) - std::exp(u)) / (2.0 + 2.0 * beta);
    case Family::PowerShifted: {
      // f f'' exp(2 beta Phi) = p(p-1)(1+t)^(k-1), Phi = sqrt(p(p-1)) ln(1+t).
      const double p = f.param();
      const double k = 2.0 * p - 1.0 + 2.0 * beta * std::sqrt(p * (p - 1.0));
      return std::pow(1.0 + u, p) * p * (p - 1.0) * (std::pow(1.0 + u, k) - 1.0) / k;
    }
    default:
      throw DomainError("no closed form for family " + std::string(family_name(f.family())));
  }
}

/// Max relative error of the tabulated H_{f,beta} against its closed form.
inline double theorem11_lhs_closed_form_check(const Nonlinearity& f, double beta, const std::vector<double>& u_grid,
                                              double tolerance = 1e-10) {
  if (f.family() != Family::Exponential && f.family() != Family::PowerShifted)
    throw DomainError("closed-form check supports Exponential and PowerShifted only");
  if (u_grid.empty()) return 0.0;
  EstimateRequest req;
  req.beta = beta;
  req.tolerance = tolerance;
  const CumulativeTable table(f, req, *std::max_element(u_grid.begin(), u_grid.end()));
  double worst = 0.0;
  for (double u : u_grid) {
    const double exact = H_f_beta_closed_form(f, beta, u);
    const double got = table.H(u);
    if (exact == 0.0 && got == 0.0) continue;
    worst = std::max(worst, std::abs(got - exact) / std::abs(exact));
  }
  return worst;
}

}  // namespace semistable
