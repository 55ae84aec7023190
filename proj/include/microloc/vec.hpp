#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>

#include "microloc/errors.hpp"

namespace microloc {

using Cplx = std::complex<double>;

inline constexpr int kMaxDim = 3;
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Small fixed-capacity real vector for points in R^d, d <= 3.
struct Vec {
  int n = 0;
  std::array<double, kMaxDim> a{0.0, 0.0, 0.0};

  Vec() = default;
  explicit Vec(int dim) : n(dim) {}
  Vec(std::initializer_list<double> xs) {
    n = static_cast<int>(xs.size());
    int i = 0;
    for (double x : xs) a[i++] = x;
  }

  double operator[](int i) const { return a[i]; }
  double& operator[](int i) { return a[i]; }
  int dim() const { return n; }

  Vec operator+(const Vec& o) const {
    Vec r(n);
    for (int i = 0; i < n; ++i) r.a[i] = a[i] + o.a[i];
    return r;
  }
  Vec operator-(const Vec& o) const {
    Vec r(n);
    for (int i = 0; i < n; ++i) r.a[i] = a[i] - o.a[i];
    return r;
  }
  Vec operator*(double c) const {
    Vec r(n);
    for (int i = 0; i < n; ++i) r.a[i] = a[i] * c;
    return r;
  }
  double dot(const Vec& o) const {
    double s = 0;
    for (int i = 0; i < n; ++i) s += a[i] * o.a[i];
    return s;
  }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
};

inline Vec operator*(double c, const Vec& v) { return v * c; }

/// Complex gradient value (one component per coordinate).
struct CVec {
  int n = 0;
  std::array<Cplx, kMaxDim> a{};

  CVec() = default;
  explicit CVec(int dim) : n(dim) {}
  Cplx operator[](int i) const { return a[i]; }
  Cplx& operator[](int i) { return a[i]; }
  CVec operator+(const CVec& o) const {
    CVec r(n);
    for (int i = 0; i < n; ++i) r.a[i] = a[i] + o.a[i];
    return r;
  }
  CVec operator*(Cplx c) const {
    CVec r(n);
    for (int i = 0; i < n; ++i) r.a[i] = a[i] * c;
    return r;
  }
};

/// <xi> = (1 + |xi|^2)^{1/2}, the Japanese bracket.
inline double jbracket(const Vec& xi) { return std::sqrt(1.0 + xi.norm2()); }

/// Wrap a displacement to the symmetric fundamental domain [-L/2, L/2).
inline double wrap_displacement(double d, double period) {
  d = std::fmod(d, period);
  if (d >= 0.5 * period) d -= period;
  if (d < -0.5 * period) d += period;
  return d;
}

/// Axis-aligned box in R^d.
struct BoxRegion {
  Vec lo, hi;
  bool contains(const Vec& x) const {
    for (int i = 0; i < x.n; ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
};

/// A point and a unit direction (x, xi_hat) in R^d x S^{d-1}.
struct PhaseDirection {
  Vec x;
  Vec xi_hat;

  static PhaseDirection make(Vec x, Vec dir) {
    double n = dir.norm();
    if (n == 0.0) throw ConstructionError("phase direction: zero direction vector");
    PhaseDirection p;
    p.x = x;
    p.xi_hat = dir * (1.0 / n);
    return p;
  }

  /// |xi_hat| must equal 1 to within 1e-12.
  void validate() const {
    if (std::abs(xi_hat.norm() - 1.0) > 1e-12)
      throw ConstructionError("phase direction: |xi_hat| != 1");
  }
};

}  // namespace microloc
