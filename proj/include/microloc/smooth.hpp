#pragma once

#include <cmath>

namespace microloc {

// Smooth (C-infinity) profile functions used by all cutoff symbols, together
// with their first derivatives.

namespace detail {
inline double expm1_inv(double u) {  // exp(-1/u) for u > 0, else 0
  return u > 0.0 ? std::exp(-1.0 / u) : 0.0;
}
inline double expm1_inv_deriv(double u) {  // d/du exp(-1/u)
  return u > 0.0 ? std::exp(-1.0 / u) / (u * u) : 0.0;
}
}  // namespace detail

/// C-infinity step: 0 for u <= 0, 1 for u >= 1, strictly increasing between.
inline double cinf_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  double f = detail::expm1_inv(u);
  double g = detail::expm1_inv(1.0 - u);
  return f / (f + g);
}

inline double cinf_step_deriv(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  double f = detail::expm1_inv(u);
  double g = detail::expm1_inv(1.0 - u);
  double fp = detail::expm1_inv_deriv(u);
  double gp = -detail::expm1_inv_deriv(1.0 - u);
  double s = f + g;
  return (fp * s - f * (fp + gp)) / (s * s);
}

/// Standard bump: exp(1 - 1/(1-u^2)) on |u| < 1, zero outside. Peak value 1.
inline double bump(double u) {
  double u2 = u * u;
  if (u2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u2));
}

inline double bump_deriv(double u) {
  double u2 = u * u;
  if (u2 >= 1.0) return 0.0;
  double w = 1.0 - u2;
  return bump(u) * (-2.0 * u / (w * w));
}

/// Plateau profile: 1 for |u| <= p, 0 for |u| >= 1, smooth ramp between.
/// p in [0, 1).
inline double plateau(double u, double p) {
  double v = std::abs(u);
  if (v <= p) return 1.0;
  if (v >= 1.0) return 0.0;
  return cinf_step((1.0 - v) / (1.0 - p));
}

inline double plateau_deriv(double u, double p) {
  double v = std::abs(u);
  if (v <= p || v >= 1.0) return 0.0;
  double s = (u > 0.0) ? 1.0 : -1.0;
  return s * cinf_step_deriv((1.0 - v) / (1.0 - p)) * (-1.0 / (1.0 - p));
}

/// Smooth ramp from 0 at x <= a to 1 at x >= b.
inline double ramp_up(double x, double a, double b) {
  return cinf_step((x - a) / (b - a));
}

inline double ramp_up_deriv(double x, double a, double b) {
  return cinf_step_deriv((x - a) / (b - a)) / (b - a);
}

}  // namespace microloc
