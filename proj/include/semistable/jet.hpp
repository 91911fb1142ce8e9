#pragma once

#include <cmath>

namespace semistable {

/// Second-order truncated Taylor jet: value, first and second derivative
/// with respect to a single seed variable.
struct Jet2 {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  constexpr Jet2() = default;
  constexpr Jet2(double v, double a = 0.0, double b = 0.0) : value(v), d1(a), d2(b) {}

  static constexpr Jet2 constant(double v) { return {v, 0.0, 0.0}; }
  static constexpr Jet2 variable(double t) { return {t, 1.0, 0.0}; }

  constexpr bool is_constant() const { return d1 == 0.0 && d2 == 0.0; }
};

constexpr Jet2 operator-(const Jet2& a) { return {-a.value, -a.d1, -a.d2}; }

constexpr Jet2 operator+(const Jet2& a, const Jet2& b) {
  return {a.value + b.value, a.d1 + b.d1, a.d2 + b.d2};
}

constexpr Jet2 operator-(const Jet2& a, const Jet2& b) {
  return {a.value - b.value, a.d1 - b.d1, a.d2 - b.d2};
}

constexpr Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.value * b.value, a.d1 * b.value + a.value * b.d1,
          a.d2 * b.value + 2.0 * a.d1 * b.d1 + a.value * b.d2};
}

constexpr Jet2 operator/(const Jet2& a, const Jet2& b) {
  const double q = a.value / b.value;
  const double q1 = (a.d1 - q * b.d1) / b.value;
  const double q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) / b.value;
  return {q, q1, q2};
}

/// Chain rule for a scalar function g with g(x), g'(x), g''(x) known at x = a.value.
constexpr Jet2 compose(const Jet2& a, double g0, double g1, double g2) {
  return {g0, g1 * a.d1, g2 * a.d1 * a.d1 + g1 * a.d2};
}

inline Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.value);
  return compose(a, e, e, e);
}

inline Jet2 log(const Jet2& a) {
  const double inv = 1.0 / a.value;
  return compose(a, std::log(a.value), inv, -inv * inv);
}

inline Jet2 sqrt(const Jet2& a) {
  const double s = std::sqrt(a.value);
  return compose(a, s, 0.5 / s, -0.25 / (s * a.value));
}

/// a^p for constant exponent p. Zero coefficients are skipped so that
/// integer powers stay finite at a = 0.
inline Jet2 pow(const Jet2& a, double p) {
  const double v = std::pow(a.value, p);
  const double g1 = p == 0.0 ? 0.0 : p * std::pow(a.value, p - 1.0);
  const double g2 = (p == 0.0 || p == 1.0) ? 0.0 : p * (p - 1.0) * std::pow(a.value, p - 2.0);
  return compose(a, v, g1, g2);
}

/// General a^b = exp(b ln a); requires a > 0 unless b is constant.
inline Jet2 pow(const Jet2& a, const Jet2& b) {
  if (b.is_constant()) return pow(a, b.value);
  return exp(b * log(a));
}

}  // namespace semistable
