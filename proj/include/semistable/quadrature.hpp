#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "semistable/errors.hpp"

namespace semistable {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

}  // namespace detail

/// One G7K15 panel. The error estimate is |K15 - G7|.
template <class F>
QuadResult gauss_kronrod15(F&& fn, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = fn(c);
  double kronrod = fc * detail::kKronrodWeights[7];
  double gauss = fc * detail::kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = h * detail::kKronrodNodes[i];
    const double s = fn(c - dx) + fn(c + dx);
    kronrod += detail::kKronrodWeights[i] * s;
    if (i % 2 == 1) gauss += detail::kGaussWeights[i / 2] * s;
  }
  return {kronrod * h, std::abs((kronrod - gauss) * h)};
}

struct QuadOptions {
  double abs_tol = 1e-14;
  double rel_tol = 1e-12;
  int max_intervals = 4000;
};

/// Adaptive bisection of G7K15 panels. A subinterval is accepted when its
/// error is below max(abs_tol * width / (b - a), rel_tol * |value|).
template <class F>
QuadResult integrate_adaptive(F&& fn, double a, double b, const QuadOptions& opt = {}) {
  if (a == b) return {};
  const double total_width = b - a;
  struct Piece {
    double a, b;
  };
  std::vector<Piece> stack{{a, b}};
  QuadResult out;
  int intervals = 0;
  while (!stack.empty()) {
    const Piece p = stack.back();
    stack.pop_back();
    const QuadResult r = gauss_kronrod15(fn, p.a, p.b);
    if (!std::isfinite(r.value)) throw QuadratureError("integrand is not finite on [" + std::to_string(p.a) + ", " +
                                                       std::to_string(p.b) + "]");
    const double target = std::max(opt.abs_tol * (p.b - p.a) / total_width, opt.rel_tol * std::abs(r.value));
    const double mid = 0.5 * (p.a + p.b);
    const bool unsplittable = !(p.a < mid && mid < p.b);
    if (r.error <= target || unsplittable) {
      if (unsplittable && r.error > target) throw QuadratureError("interval too small to subdivide");
      out.value += r.value;
      out.error += r.error;
      continue;
    }
    if (++intervals > opt.max_intervals) throw QuadratureError("adaptive quadrature did not converge");
    stack.push_back({mid, p.b});
    stack.push_back({p.a, mid});
  }
  return out;
}

}  // namespace semistable
