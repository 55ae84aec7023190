#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "microloc/vec.hpp"

namespace microloc {

/// Periodic grid on a d-torus. Points x_i = i * L / N per axis; frequency
/// lattice xi_k = 2*pi*k/L with k in [-N/2, N/2).
struct GridSpec {
  int dim = 0;
  std::array<int, kMaxDim> n{0, 0, 0};
  std::array<double, kMaxDim> period{0.0, 0.0, 0.0};

  static GridSpec make(int dim, int n_per_axis, double period_all = kTwoPi);
  static GridSpec make_anisotropic(int dim, const std::array<int, kMaxDim>& n,
                                   const std::array<double, kMaxDim>& period);

  std::size_t total() const {
    std::size_t t = 1;
    for (int i = 0; i < dim; ++i) t *= static_cast<std::size_t>(n[i]);
    return t;
  }

  double cell_volume() const {
    double v = 1;
    for (int i = 0; i < dim; ++i) v *= period[i] / n[i];
    return v;
  }
  double volume() const {
    double v = 1;
    for (int i = 0; i < dim; ++i) v *= period[i];
    return v;
  }

  double coord(int axis, int idx) const { return period[axis] * idx / n[axis]; }

  int signed_index(int axis, int idx) const {
    return idx < n[axis] / 2 ? idx : idx - n[axis];
  }
  double freq(int axis, int idx) const {
    return kTwoPi * signed_index(axis, idx) / period[axis];
  }
  /// Grid row index of the signed lattice integer k (k in [-N/2, N/2)).
  int index_of_signed(int axis, int k) const {
    return k >= 0 ? k : k + n[axis];
  }

  int nyquist(int axis) const { return n[axis] / 2; }

  std::array<int, kMaxDim> unflatten(std::size_t flat) const {
    std::array<int, kMaxDim> idx{0, 0, 0};
    for (int ax = dim - 1; ax >= 0; --ax) {
      idx[ax] = static_cast<int>(flat % n[ax]);
      flat /= n[ax];
    }
    return idx;
  }
  std::size_t flatten(const std::array<int, kMaxDim>& idx) const {
    std::size_t f = 0;
    for (int ax = 0; ax < dim; ++ax) f = f * n[ax] + idx[ax];
    return f;
  }

  Vec point(const std::array<int, kMaxDim>& idx) const {
    Vec x(dim);
    for (int ax = 0; ax < dim; ++ax) x[ax] = coord(ax, idx[ax]);
    return x;
  }
  Vec frequency(const std::array<int, kMaxDim>& idx) const {
    Vec xi(dim);
    for (int ax = 0; ax < dim; ++ax) xi[ax] = freq(ax, idx[ax]);
    return xi;
  }

  bool operator==(const GridSpec& o) const {
    if (dim != o.dim) return false;
    for (int i = 0; i < dim; ++i)
      if (n[i] != o.n[i] || period[i] != o.period[i]) return false;
    return true;
  }
};

/// Complex-valued sampled function on a GridSpec, with a lazily computed
/// spectrum. Treat as immutable after construction; all operations return new
/// fields. The spectrum uses the forward-normalized transform, so
/// u(x) = sum_k uhat(k) e^{i x.xi_k}.
class Field {
 public:
  Field() = default;
  Field(GridSpec grid, std::vector<Cplx> values);

  /// Build from an exactly known spectrum (preserves the zero pattern, which
  /// downstream operator applications exploit).
  static Field from_spectrum(GridSpec grid, std::vector<Cplx> spectrum);

  const GridSpec& grid() const { return grid_; }
  const std::vector<Cplx>& values() const { return values_; }
  const std::vector<Cplx>& spectrum() const;
  bool has_cached_spectrum() const { return spectrum_ != nullptr; }

  std::size_t size() const { return values_.size(); }

 private:
  GridSpec grid_;
  std::vector<Cplx> values_;
  mutable std::shared_ptr<const std::vector<Cplx>> spectrum_;
};

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(Cplx c, const Field& a);

/// Flat binary field file plus a JSON metadata sidecar (<path>.json).
void write_field(const Field& f, const std::string& path,
                 const std::string& label = "");
Field read_field(const std::string& path);

}  // namespace microloc
