#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "semistable/errors.hpp"

namespace semistable {

/// Quintic Hermite interpolation on [a, b] from values and first two
/// derivatives at both ends. Returns (y, y', y'') at x.
inline std::array<double, 3> quintic_hermite(double a, double b, const std::array<double, 3>& left,
                                             const std::array<double, 3>& right, double x) {
  const double h = b - a;
  const double t = (x - a) / h;
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
  const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
  const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
  const double h3 = 10 * t3 - 15 * t4 + 6 * t5;
  const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
  const double h5 = 0.5 * (t3 - 2 * t4 + t5);
  const double d0 = -30 * t2 + 60 * t3 - 30 * t4;
  const double d1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
  const double d2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
  const double d3 = -d0;
  const double d4 = -12 * t2 + 28 * t3 - 15 * t4;
  const double d5 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
  const double s0 = -60 * t + 180 * t2 - 120 * t3;
  const double s1 = -36 * t + 96 * t2 - 60 * t3;
  const double s2 = 0.5 * (2 - 18 * t + 36 * t2 - 20 * t3);
  const double s3 = -s0;
  const double s4 = -24 * t + 84 * t2 - 60 * t3;
  const double s5 = 0.5 * (6 * t - 24 * t2 + 20 * t3);
  const double y = left[0] * h0 + h * left[1] * h1 + h * h * left[2] * h2 + right[0] * h3 + h * right[1] * h4 +
                   h * h * right[2] * h5;
  const double dy = (left[0] * d0 + right[0] * d3) / h + left[1] * d1 + right[1] * d4 + h * (left[2] * d2 + right[2] * d5);
  const double ddy = (left[0] * s0 + right[0] * s3) / (h * h) + (left[1] * s1 + right[1] * s4) / h + left[2] * s2 +
                     right[2] * s5;
  return {y, dy, ddy};
}

struct OdeControls {
  double rtol = 1e-12;
  double atol = 1e-14;
  double h_init = 0.0;  // 0: chosen from the interval
  double h_min = 0.0;   // 0: only fail when s + h no longer advances s
  double h_max = 0.0;   // 0: unlimited
  long max_steps = 200000;
};

template <std::size_t N>
using OdeState = std::array<double, N>;

/// Dormand-Prince 5(4) step with FSAL. `rhs(s, y)` returns dy/ds.
template <std::size_t N, class Rhs>
struct DormandPrince {
  Rhs rhs;

  struct StepResult {
    OdeState<N> y;
    OdeState<N> dy;  // rhs at the new point
    double err;      // scaled error norm
  };

  StepResult step(double s, const OdeState<N>& y, const OdeState<N>& k1, double h, const OdeControls& c) const {
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;
    OdeState<N> t, k2, k3, k4, k5, k6;
    for (std::size_t i = 0; i < N; ++i) t[i] = y[i] + h * a21 * k1[i];
    k2 = rhs(s + c2 * h, t);
    for (std::size_t i = 0; i < N; ++i) t[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    k3 = rhs(s + c3 * h, t);
    for (std::size_t i = 0; i < N; ++i) t[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = rhs(s + c4 * h, t);
    for (std::size_t i = 0; i < N; ++i) t[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = rhs(s + c5 * h, t);
    for (std::size_t i = 0; i < N; ++i)
      t[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    k6 = rhs(s + h, t);
    StepResult r;
    for (std::size_t i = 0; i < N; ++i)
      r.y[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    r.dy = rhs(s + h, r.y);
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * r.dy[i]);
      const double sc = c.atol + c.rtol * std::max(std::abs(y[i]), std::abs(r.y[i]));
      acc += (e / sc) * (e / sc);
    }
    r.err = std::sqrt(acc / static_cast<double>(N));
    return r;
  }

  /// Integrates from (s0, y0) towards s_end. After each accepted step
  /// `on_step(s_prev, y_prev, dy_prev, s, y, dy)` is called; returning true
  /// stops the integration. Returns the last accepted s.
  template <class OnStep>
  double run(double s0, OdeState<N> y0, double s_end, const OdeControls& c, OnStep&& on_step) const {
    const double span = s_end - s0;
    if (!(span > 0.0)) throw IntegrationError("empty integration interval");
    double h = c.h_init > 0.0 ? c.h_init : span * 1e-3;
    if (c.h_max > 0.0) h = std::min(h, c.h_max);
    double s = s0;
    OdeState<N> y = y0;
    OdeState<N> dy = rhs(s, y);
    long steps = 0;
    while (s < s_end) {
      if (++steps > c.max_steps) throw IntegrationError("maximum number of steps exceeded");
      bool last = false;
      if (s + h >= s_end) {
        h = s_end - s;
        last = true;
      }
      const StepResult r = step(s, y, dy, h, c);
      bool finite = true;
      for (double v : r.y) finite = finite && std::isfinite(v);
      if (!finite || !(r.err <= 1.0)) {
        const double factor = finite && std::isfinite(r.err) ? std::max(0.2, 0.9 * std::pow(r.err, -0.2)) : 0.2;
        h *= factor;
        if (h < c.h_min || h <= 1e-14 * std::abs(s)) throw IntegrationError("step size underflow");
        continue;
      }
      const double s_new = last ? s_end : s + h;
      const bool stop = on_step(s, y, dy, s_new, r.y, r.dy);
      s = s_new;
      y = r.y;
      dy = r.dy;
      if (stop) return s;
      const double factor = r.err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(r.err, -0.2)));
      h *= factor;
      if (c.h_max > 0.0) h = std::min(h, c.h_max);
    }
    return s;
  }
};

template <std::size_t N, class Rhs>
DormandPrince<N, Rhs> make_dormand_prince(Rhs rhs) {
  return DormandPrince<N, Rhs>{std::move(rhs)};
}

}  // namespace semistable
