#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "semistable/errors.hpp"
#include "semistable/ode.hpp"
#include "semistable/quadrature.hpp"

namespace semistable {

/// A radial function on [0, 1] stored as nodes (r, u, u', u'', u''').
/// Values come from the quintic Hermite interpolant of (u, u', u''); when
/// u''' is present the derivatives come from the one of (u', u'', u'''),
/// which avoids differencing values that agree to many digits near r = 0.
struct RadialProfile {
  int n = 2;
  double m = 0.0;       // u(0)
  double lambda = 0.0;  // R^2
  double R = 0.0;       // first zero of the unscaled profile
  std::vector<double> r, u, du, d2u, d3u;
  double residual = 0.0;  // max |u'' + (n-1)/r u' + lambda f(u)| / (lambda f(m)) on interval midpoints

  std::size_t intervals() const { return r.size() - 1; }

  std::size_t interval_of(double x) const {
    auto it = std::upper_bound(r.begin(), r.end(), x);
    std::size_t i = static_cast<std::size_t>(std::distance(r.begin(), it));
    if (i == 0) return 0;
    return std::min(i - 1, r.size() - 2);
  }

  /// (u, u', u'') at x in [0, 1].
  std::array<double, 3> eval(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("profile evaluated outside [0, 1]");
    return eval_in(interval_of(x), x);
  }

  /// (u, u', u'') at x inside node interval i.
  std::array<double, 3> eval_in(std::size_t i, double x) const {
    auto v = quintic_hermite(r[i], r[i + 1], {u[i], du[i], d2u[i]}, {u[i + 1], du[i + 1], d2u[i + 1]}, x);
    if (!d3u.empty()) {
      const auto d = quintic_hermite(r[i], r[i + 1], {du[i], d2u[i], d3u[i]}, {du[i + 1], d2u[i + 1], d3u[i + 1]}, x);
      v[1] = d[0];
      v[2] = d[1];
    }
    return v;
  }

  /// Profile from a closed-form u, returning (u, u', u'', u'''), on `count`
  /// equal intervals.
  static RadialProfile from_function(int n, double lambda, const std::function<std::array<double, 4>(double)>& fn,
                                     std::size_t count = 512) {
    if (n < 1) throw DomainError("dimension must be >= 1");
    if (count < 1) throw DomainError("need at least one interval");
    RadialProfile p;
    p.n = n;
    p.lambda = lambda;
    p.R = std::sqrt(std::max(lambda, 0.0));
    for (std::size_t i = 0; i <= count; ++i) {
      const double x = static_cast<double>(i) / static_cast<double>(count);
      const auto v = fn(x);
      p.r.push_back(x);
      p.u.push_back(v[0]);
      p.du.push_back(v[1]);
      p.d2u.push_back(v[2]);
      p.d3u.push_back(v[3]);
    }
    p.m = p.u.front();
    return p;
  }
};

/// Surface area of the unit sphere in R^n, 2 pi^(n/2) / Gamma(n/2).
inline double sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// omega_{n-1} int_0^1 integrand(r, u, u') r^(n-1) dr by G7K15 on every node
/// interval of the profile. `error` sums the per-interval |K15 - G7|.
inline QuadResult ball_integral(const RadialProfile& p, const std::function<double(double, double, double)>& integrand) {
  QuadResult total;
  const double w = sphere_area(p.n);
  for (std::size_t i = 0; i + 1 < p.r.size(); ++i) {
    const double a = p.r[i], b = p.r[i + 1];
    if (!(b > a)) continue;
    auto fn = [&](double x) {
      const auto v = p.eval_in(i, x);
      return integrand(x, v[0], v[1]) * std::pow(x, p.n - 1);
    };
    const QuadResult q = gauss_kronrod15(fn, a, b);
    total.value += q.value;
    total.error += q.error;
  }
  total.value *= w;
  total.error *= w;
  return total;
}

}  // namespace semistable
