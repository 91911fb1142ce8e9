#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "semistable/errors.hpp"
#include "semistable/estimates.hpp"
#include "semistable/nonlinearity.hpp"
#include "semistable/ode.hpp"
#include "semistable/profile.hpp"

namespace semistable {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Results are
/// stored by index, so the output does not depend on scheduling.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, unsigned threads, Fn&& fn) {
  std::vector<T> out(count);
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned k = std::min<unsigned>(threads, static_cast<unsigned>(count));
  for (unsigned t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

struct RadialControls {
  OdeControls ode{};
  std::size_t dense_points = 512;  // minimum number of profile intervals
  double residual_tol = 1e-8;
};

namespace detail {

/// f extended to t < 0 by its second-order Taylor polynomial at 0, so that
/// trial stages overshooting the zero stay defined.
struct ExtendedF {
  const Nonlinearity* f;
  Triple at0;

  explicit ExtendedF(const Nonlinearity& fn) : f(&fn), at0(fn.eval(0.0)) {}

  double value(double t) const {
    if (t >= 0.0) return f->eval(t).f;
    return at0.f + t * (at0.d1 + 0.5 * t * at0.d2);
  }
  double slope(double t) const {
    if (t >= 0.0) return f->eval(t).d1;
    return at0.d1 + t * at0.d2;
  }
};

}  // namespace detail

/// Integrates v'' + (n-1)/s v' + f(v) = 0, v(0) = m, v'(0) = 0 to its first
/// zero R and returns u(r) = v(R r) with lambda = R^2.
inline RadialProfile integrate_profile(const Nonlinearity& f, int n, double m, const RadialControls& ctl = {}) {
  if (n < 2) throw DomainError("dimension must be >= 2");
  if (!(m >= 0.0) || !std::isfinite(m)) throw DomainError("center value must be finite and >= 0");
  RadialProfile p;
  p.n = n;
  p.m = m;
  if (m == 0.0) {
    p.r = {0.0, 1.0};
    p.u = {0.0, 0.0};
    p.du = {0.0, 0.0};
    p.d2u = {0.0, 0.0};
    return p;
  }
  const detail::ExtendedF F(f);
  const double f0 = F.at0.f;
  if (!(f0 > 0.0)) throw DomainError("integrate_profile needs f(0) > 0");
  const Triple fm = f.eval(m);
  if (!(fm.f > 0.0) || !std::isfinite(fm.f)) throw DomainError("f(m) must be positive and finite");
  const double dn = n;

  auto rhs = [&](double s, const OdeState<2>& y) -> OdeState<2> {
    return {y[1], -(dn - 1.0) / s * y[1] - F.value(y[0])};
  };
  auto second = [&](double s, double v, double dv) { return -(dn - 1.0) / s * dv - F.value(v); };
  auto third = [&](double s, double v, double dv, double d2v) {
    return (dn - 1.0) / (s * s) * dv - (dn - 1.0) / s * d2v - F.slope(v) * dv;
  };

  // Series v = m - f(m) s^2/(2n) + f'(m) f(m) s^4/(8 n (n+2)) near the origin.
  const double s0 = 1e-4 * std::min(1.0, std::sqrt(std::max(m, 1.0) / fm.f));
  const double c2 = -fm.f / (2.0 * dn);
  const double c4 = fm.d1 * fm.f / (8.0 * dn * (dn + 2.0));
  const double v0 = m + c2 * s0 * s0 + c4 * std::pow(s0, 4);
  const double dv0 = 2.0 * c2 * s0 + 4.0 * c4 * std::pow(s0, 3);

  // v <= m - f(0) s^2 / (2n) forces a zero before this bound.
  const double s_bound = 1.05 * std::sqrt(2.0 * dn * m / f0) + 2.0 * s0;
  auto dp = make_dormand_prince<2>(rhs);

  std::vector<double> S, V, DV, D2V;
  auto shoot = [&](const OdeControls& oc) {
    S = {0.0, s0};
    V = {m, v0};
    DV = {0.0, dv0};
    D2V = {2.0 * c2, 2.0 * c2 + 12.0 * c4 * s0 * s0};
    bool crossed = false;
    dp.run(s0, {v0, dv0}, s_bound, oc,
           [&](double, const OdeState<2>&, const OdeState<2>&, double s, const OdeState<2>& y, const OdeState<2>& dy) {
             S.push_back(s);
             V.push_back(y[0]);
             DV.push_back(y[1]);
             D2V.push_back(dy[1]);
             crossed = y[0] <= 0.0;
             return crossed;
           });
    if (!crossed) throw IntegrationError("no zero found before s_max");
  };
  OdeControls oc = ctl.ode;
  if (oc.h_init <= 0.0) oc.h_init = s0;
  shoot(oc);
  if (S.size() < ctl.dense_points + 1) {
    // Too coarse for downstream quadrature: cap the step at R / dense_points.
    const double cap = S.back() / static_cast<double>(ctl.dense_points);
    oc.h_max = oc.h_max > 0.0 ? std::min(oc.h_max, cap) : cap;
    shoot(oc);
  }

  // Locate the zero on the last step: Hermite bracket, then Newton on direct steps.
  const std::size_t k = S.size() - 2;
  const double sa = S[k], sb = S[k + 1];
  const std::array<double, 3> left{V[k], DV[k], D2V[k]}, right{V[k + 1], DV[k + 1], D2V[k + 1]};
  double lo = sa, hi = sb;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (quintic_hermite(sa, sb, left, right, mid)[0] > 0.0) lo = mid;
    else hi = mid;
  }
  double R = 0.5 * (lo + hi);
  OdeState<2> yk{V[k], DV[k]};
  const OdeState<2> k1 = rhs(sa, yk);
  OdeControls loose = ctl.ode;
  OdeState<2> yR{};
  for (int it = 0; it < 4 && R > sa; ++it) {
    yR = dp.step(sa, yk, k1, R - sa, loose).y;
    if (yR[1] == 0.0) break;
    const double next = R - yR[0] / yR[1];
    if (!(next > sa)) break;
    if (std::abs(next - R) <= 1e-16 * R) {
      R = next;
      yR = dp.step(sa, yk, k1, R - sa, loose).y;
      break;
    }
    R = next;
  }
  if (R <= sa) yR = yk;
  S.back() = R;
  V.back() = 0.0;
  DV.back() = yR[1];
  D2V.back() = second(R, 0.0, yR[1]);

  p.R = R;
  p.lambda = R * R;
  for (std::size_t i = 0; i < S.size(); ++i) {
    p.r.push_back(S[i] / R);
    p.u.push_back(V[i]);
    p.du.push_back(R * DV[i]);
    p.d2u.push_back(R * R * D2V[i]);
    // Odd derivative of an even function: zero at the origin; the series at s0.
    const double d3 = i == 0 ? 0.0 : i == 1 ? 24.0 * c4 * s0 : third(S[i], V[i], DV[i], D2V[i]);
    p.d3u.push_back(R * R * R * d3);
  }
  p.r.back() = 1.0;

  // Residual of the scaled equation on interval midpoints.
  const double scale = p.lambda * fm.f;
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < p.r.size(); ++i) {
    const double x = 0.5 * (p.r[i] + p.r[i + 1]);
    const auto e = p.eval(x);
    const double res = e[2] + (dn - 1.0) / x * e[1] + p.lambda * F.value(e[0]);
    worst = std::max(worst, std::abs(res));
  }
  p.residual = worst / scale;
  return p;
}

// ---------------------------------------------------------------------------
// Principal eigenvalue of -Laplacian - lambda f'(u) on the unit ball

struct EigenControls {
  OdeControls ode{1e-10, 1e-13};
  double tolerance = 1e-10;  // bisection width relative to max(1, |mu|)
  double mu_max = 1e8;
};

struct EigenResult {
  double mu1 = 0.0;
  RadialProfile eigenfunction;  // phi with phi(0) = 1, stored in the u/du/d2u slots
  bool positive_inside = true;  // phi > 0 on (0, 1) at the lower bracket
  int iterations = 0;
};

namespace detail {

struct EigenShot {
  bool has_zero = false;  // phi vanishes somewhere in (0, 1]
  std::vector<double> r, phi, dphi, d2phi;
};

inline EigenShot shoot_eigen(const Nonlinearity& f, const RadialProfile& p, double mu, const OdeControls& oc,
                             bool keep) {
  const ExtendedF F(f);
  const double dn = p.n;
  auto q = [&](double x) { return p.lambda * F.slope(p.eval(x)[0]) + mu; };
  auto rhs = [&](double x, const OdeState<2>& y) -> OdeState<2> {
    return {y[1], -(dn - 1.0) / x * y[1] - q(x) * y[0]};
  };
  const double q0 = q(0.0);
  const double r0 = 1e-4 * std::min(1.0, 1.0 / std::sqrt(std::abs(q0) + 1e-300));
  const double phi0 = 1.0 - q0 * r0 * r0 / (2.0 * dn);
  const double dphi0 = -q0 * r0 / dn;
  EigenShot out;
  if (keep) {
    out.r = {0.0, r0};
    out.phi = {1.0, phi0};
    out.dphi = {0.0, dphi0};
    out.d2phi = {-q0 / dn, rhs(r0, {phi0, dphi0})[1]};
  }
  auto dp = make_dormand_prince<2>(rhs);
  dp.run(r0, {phi0, dphi0}, 1.0, oc,
         [&](double, const OdeState<2>&, const OdeState<2>&, double x, const OdeState<2>& y, const OdeState<2>& dy) {
           if (keep) {
             out.r.push_back(x);
             out.phi.push_back(y[0]);
             out.dphi.push_back(y[1]);
             out.d2phi.push_back(dy[1]);
           }
           if (y[0] <= 0.0) {
             out.has_zero = true;
             return true;
           }
           return false;
         });
  return out;
}

}  // namespace detail

/// mu_1 = sup of mu for which the regular solution phi of
/// phi'' + (n-1)/r phi' + (lambda f'(u) + mu) phi = 0 has no zero in (0, 1].
inline EigenResult principal_eigenvalue(const Nonlinearity& f, const RadialProfile& p, const EigenControls& ctl = {}) {
  double fp_max = 0.0;
  for (double v : p.u) fp_max = std::max(fp_max, f.eval(std::max(v, 0.0)).d1);
  double lo = -p.lambda * fp_max - 1.0;
  if (detail::shoot_eigen(f, p, lo, ctl.ode, false).has_zero)
    throw IntegrationError("eigenvalue bracket: lower end already has a zero");
  double hi = std::max(10.0, lo + 10.0);
  while (!detail::shoot_eigen(f, p, hi, ctl.ode, false).has_zero) {
    lo = hi;
    hi *= 2.0;
    if (hi > ctl.mu_max) throw IntegrationError("eigenvalue bracket not found below mu_max");
  }
  EigenResult res;
  while (hi - lo > ctl.tolerance * std::max(1.0, std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (detail::shoot_eigen(f, p, mid, ctl.ode, false).has_zero) hi = mid;
    else lo = mid;
    ++res.iterations;
  }
  res.mu1 = 0.5 * (lo + hi);
  const auto shot = detail::shoot_eigen(f, p, lo, ctl.ode, true);
  RadialProfile& e = res.eigenfunction;
  e.n = p.n;
  e.lambda = p.lambda;
  e.R = p.R;
  e.m = 1.0;
  e.r = shot.r;
  e.u = shot.phi;
  e.du = shot.dphi;
  e.d2u = shot.d2phi;
  e.r.back() = 1.0;
  const double dn = p.n;
  e.d3u.resize(e.r.size(), 0.0);
  for (std::size_t i = 1; i < e.r.size(); ++i) {
    const double x = e.r[i];
    const auto uv = p.eval(x);
    const Triple fy = f.eval(std::max(uv[0], 0.0));
    const double q = p.lambda * fy.d1 + res.mu1;
    const double dq = p.lambda * fy.d2 * uv[1];
    e.d3u[i] = (dn - 1.0) / (x * x) * e.du[i] - (dn - 1.0) / x * e.d2u[i] - dq * e.u[i] - q * e.du[i];
  }
  for (std::size_t i = 1; i + 1 < e.u.size(); ++i) res.positive_inside = res.positive_inside && e.u[i] > 0.0;
  return res;
}

// ---------------------------------------------------------------------------
// Stability margins

struct StabilityMargin {
  double direct = 0.0;       // int |grad eta|^2 - lambda int f'(u) eta^2, eta = g(u)
  double lemma_form = 0.0;   // -lambda int H(u), H = g^2 f' - G f
  double gradient_term = 0.0;
  double potential_term = 0.0;
  double int_H = 0.0;          // int H(u)
  double int_positive = 0.0;   // int g(u)^2 f'(u), the positive part of H
  double quadrature_error = 0.0;
};

inline StabilityMargin verify_stability_inequality(const Nonlinearity& f, const RadialProfile& p, const GChoice& g,
                                                   double tolerance = 1e-10) {
  StabilityMargin out;
  if (p.m == 0.0 && p.lambda == 0.0) {
    // eta = g(0) is constant, so only the potential term could contribute and it carries lambda = 0.
    return out;
  }
  EstimateRequest req;
  req.g = g;
  req.tolerance = tolerance;
  const CumulativeTable table(f, req, p.m);
  auto clamp = [&](double v) { return std::clamp(v, 0.0, p.m); };
  const auto grad = ball_integral(p, [&](double, double u, double du) {
    const double gp = table.g(clamp(u)).second;
    return gp * gp * du * du;
  });
  const auto pot = ball_integral(p, [&](double, double u, double) {
    const double v = clamp(u);
    const double gv = table.g(v).first;
    return f.eval(v).d1 * gv * gv;
  });
  const auto gf = ball_integral(p, [&](double, double u, double) {
    const double v = clamp(u);
    return table.G(v) * f.eval(v).f;
  });
  out.gradient_term = grad.value;
  out.potential_term = p.lambda * pot.value;
  out.direct = out.gradient_term - out.potential_term;
  out.int_positive = pot.value;
  out.int_H = pot.value - gf.value;
  out.lemma_form = -p.lambda * out.int_H;
  out.quadrature_error = grad.error + p.lambda * (pot.error + gf.error);
  return out;
}

/// int |phi'|^2 - lambda int f'(u) phi^2 together with int phi^2.
struct EigenMargin {
  double margin = 0.0;
  double norm2 = 0.0;
};

inline EigenMargin eigen_margin(const Nonlinearity& f, const RadialProfile& p, const EigenResult& eig) {
  const RadialProfile& e = eig.eigenfunction;
  EigenMargin out;
  out.margin = ball_integral(e, [&](double r, double phi, double dphi) {
                 const double u = std::clamp(p.eval(r)[0], 0.0, p.m);
                 return dphi * dphi - p.lambda * f.eval(u).d1 * phi * phi;
               }).value;
  out.norm2 = ball_integral(e, [](double, double phi, double) { return phi * phi; }).value;
  return out;
}

// ---------------------------------------------------------------------------
// Branch sweep

struct BranchPoint {
  double m = 0.0;
  double R = 0.0;
  double lambda = 0.0;
  std::optional<double> mu1;
  double u_inf = 0.0;
  double residual = 0.0;
  std::shared_ptr<const RadialProfile> profile;
  std::string error;  // non-empty when the integration failed

  bool ok() const { return error.empty(); }
};

struct Branch {
  int n = 2;
  std::vector<BranchPoint> points;  // ordered by m
  double lambda_star = 0.0;
  double m_star = 0.0;             // argmax of lambda
  std::optional<double> fold_m;    // first interior local max, refined
  bool monotone_flag = false;
  double lambda_sup_estimate = 0.0;  // lambda_star, or an extrapolated limit on monotone branches

  /// Indices of points on the minimal branch (m up to the first fold).
  std::vector<std::size_t> minimal_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (points[i].ok() && (!fold_m || points[i].m <= *fold_m)) idx.push_back(i);
    return idx;
  }
};

struct BranchOptions {
  RadialControls radial{};
  EigenControls eigen{};
  bool compute_mu1 = false;
  unsigned threads = 1;
  double golden_tol = 1e-9;  // relative width in m
  double fold_noise = 1e-9;  // relative lambda drop below which a local max is ignored
};

inline std::vector<double> linear_grid(double lo, double hi, std::size_t count) {
  if (count < 2) throw DomainError("grid needs at least two points");
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  g.back() = hi;
  return g;
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0)) throw DomainError("geometric grid needs lo > 0");
  auto g = linear_grid(std::log(lo), std::log(hi), count);
  for (double& x : g) x = std::exp(x);
  g.front() = lo;
  g.back() = hi;
  return g;
}

inline BranchPoint solve_point(const Nonlinearity& f, int n, double m, const BranchOptions& opt) {
  BranchPoint bp;
  bp.m = m;
  bp.u_inf = m;
  try {
    auto prof = std::make_shared<RadialProfile>(integrate_profile(f, n, m, opt.radial));
    bp.R = prof->R;
    bp.lambda = prof->lambda;
    bp.residual = prof->residual;
    if (opt.compute_mu1) bp.mu1 = principal_eigenvalue(f, *prof, opt.eigen).mu1;
    bp.profile = std::move(prof);
  } catch (const std::exception& e) {
    bp.error = e.what();
  }
  return bp;
}

/// Golden-section maximization of lambda(m) on [a, b]. Returns (m, lambda).
inline std::pair<double, double> golden_max_lambda(const Nonlinearity& f, int n, double a, double b,
                                                   const BranchOptions& opt) {
  auto lam = [&](double m) { return integrate_profile(f, n, m, opt.radial).lambda; };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = lam(x1), f2 = lam(x2);
  while (b - a > opt.golden_tol * std::max(1.0, std::abs(b))) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = lam(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = lam(x1);
    }
  }
  return f1 >= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

namespace detail {

inline void analyze_branch(Branch& b, const Nonlinearity& f, const BranchOptions& opt) {
  const auto& P = b.points;
  b.lambda_star = 0.0;
  b.fold_m.reset();
  for (std::size_t i = 0; i < P.size(); ++i)
    if (P[i].ok() && P[i].lambda > b.lambda_star) {
      b.lambda_star = P[i].lambda;
      b.m_star = P[i].m;
    }
  std::optional<std::size_t> first_max;
  std::optional<std::size_t> arg;
  for (std::size_t i = 1; i + 1 < P.size(); ++i) {
    if (!P[i - 1].ok() || !P[i].ok() || !P[i + 1].ok()) continue;
    // Drops below the relative noise floor are integration noise, not folds.
    const double drop = P[i].lambda - std::min(P[i - 1].lambda, P[i + 1].lambda);
    if (P[i].lambda > P[i - 1].lambda && P[i].lambda >= P[i + 1].lambda && drop > opt.fold_noise * P[i].lambda) {
      if (!first_max) first_max = i;
      if (P[i].m == b.m_star) arg = i;
    }
  }
  b.monotone_flag = !first_max.has_value();
  if (first_max) {
    const auto [mf, lf] = golden_max_lambda(f, b.n, P[*first_max - 1].m, P[*first_max + 1].m, opt);
    b.fold_m = mf;
    if (lf > b.lambda_star) {
      b.lambda_star = lf;
      b.m_star = mf;
    }
    if (arg && *arg != *first_max) {
      const auto [ma, la] = golden_max_lambda(f, b.n, P[*arg - 1].m, P[*arg + 1].m, opt);
      if (la > b.lambda_star) {
        b.lambda_star = la;
        b.m_star = ma;
      }
    }
  }
  b.lambda_sup_estimate = b.lambda_star;
  if (b.monotone_flag) {
    // Aitken extrapolation of the last three points when the increments shrink.
    std::vector<double> lam;
    for (const auto& p : P)
      if (p.ok()) lam.push_back(p.lambda);
    if (lam.size() >= 3) {
      const double l1 = lam[lam.size() - 3], l2 = lam[lam.size() - 2], l3 = lam.back();
      const double d1 = l2 - l1, d2 = l3 - l2;
      if (d1 > 0.0 && d2 >= 0.0 && d2 < d1) b.lambda_sup_estimate = std::max(l3, l3 - d2 * d2 / (d2 - d1));
    }
  }
}

}  // namespace detail

inline Branch branch_sweep(const Nonlinearity& f, int n, const std::vector<double>& m_grid,
                           const BranchOptions& opt = {}) {
  if (n < 2) throw DomainError("dimension must be >= 2");
  if (m_grid.empty()) throw DomainError("m grid is empty");
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    if (!(m_grid[i] > 0.0)) throw DomainError("m grid must be positive");
    if (i > 0 && !(m_grid[i] > m_grid[i - 1])) throw DomainError("m grid must be increasing");
  }
  Branch b;
  b.n = n;
  b.points = parallel_map<BranchPoint>(m_grid.size(), opt.threads,
                                       [&](std::size_t i) { return solve_point(f, n, m_grid[i], opt); });
  detail::analyze_branch(b, f, opt);
  return b;
}

/// Adds `count` points between the last minimal-branch grid point with
/// lambda < 0.99 lambda_star and the fold, geometrically clustered at the fold.
inline void refine_tail(Branch& b, const Nonlinearity& f, std::size_t count, const BranchOptions& opt = {}) {
  if (!b.fold_m || count == 0) return;
  const double mf = *b.fold_m;
  double ma = 0.0;
  for (const auto& p : b.points)
    if (p.ok() && p.m < mf && p.lambda < 0.99 * b.lambda_star) ma = std::max(ma, p.m);
  if (!(ma > 0.0)) return;
  std::vector<double> extra;
  const double q = std::pow(1e-4, 1.0 / static_cast<double>(count));
  double d = mf - ma;
  for (std::size_t k = 0; k < count; ++k) {
    d *= q;
    extra.push_back(mf - d);
  }
  std::sort(extra.begin(), extra.end());
  auto pts = parallel_map<BranchPoint>(extra.size(), opt.threads,
                                       [&](std::size_t i) { return solve_point(f, b.n, extra[i], opt); });
  for (auto& p : pts) b.points.push_back(std::move(p));
  std::stable_sort(b.points.begin(), b.points.end(), [](const BranchPoint& x, const BranchPoint& y) { return x.m < y.m; });
  b.points.erase(std::unique(b.points.begin(), b.points.end(),
                             [](const BranchPoint& x, const BranchPoint& y) { return x.m == y.m; }),
                 b.points.end());
}

}  // namespace semistable
