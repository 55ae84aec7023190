#include "microloc/waves.hpp"

#include <cmath>

#include "microloc/errors.hpp"
#include "microloc/fft.hpp"
#include "microloc/rng.hpp"
#include "microloc/smooth.hpp"

namespace microloc {

namespace {

GridSpec spatial_grid_of(const GridSpec& spacetime) {
  std::array<int, kMaxDim> n{8, 8, 8};
  std::array<double, kMaxDim> p{kTwoPi, kTwoPi, kTwoPi};
  for (int i = 1; i < spacetime.dim; ++i) {
    n[i - 1] = spacetime.n[i];
    p[i - 1] = spacetime.period[i];
  }
  return GridSpec::make_anisotropic(spacetime.dim - 1, n, p);
}

void check_band_limited(const Field& f, const char* who) {
  const GridSpec& g = f.grid();
  const auto& fh = f.spectrum();
  double floor = 0.0;
  for (const auto& z : fh) floor = std::max(floor, std::abs(z));
  floor *= 1e-14;
  for (std::size_t i = 0; i < fh.size(); ++i) {
    if (std::abs(fh[i]) <= floor) continue;
    auto idx = g.unflatten(i);
    for (int ax = 0; ax < g.dim; ++ax)
      if (std::abs(g.signed_index(ax, idx[ax])) > g.n[ax] / 4)
        throw ConstructionError(std::string(who) +
                                ": data not band-limited below Nyquist/2");
  }
}

}  // namespace

Field solve_box(const Field& u0, const Field& u1, const GridSpec& spacetime) {
  if (spacetime.dim < 2)
    throw DimensionError("solve_box: spacetime dimension must be >= 2");
  GridSpec sp = spatial_grid_of(spacetime);
  if (!(u0.grid() == sp) || !(u1.grid() == sp))
    throw GridMismatchError("solve_box: Cauchy data grid mismatch");
  check_band_limited(u0, "solve_box(u0)");
  check_band_limited(u1, "solve_box(u1)");

  const auto& a0 = u0.spectrum();
  const auto& a1 = u1.spectrum();
  const std::size_t nsp = sp.total();
  const int nt = spacetime.n[0];

  std::vector<Cplx> values(spacetime.total());
  std::vector<Cplx> slice_hat(nsp);
  for (int it = 0; it < nt; ++it) {
    double t = spacetime.coord(0, it);
    for (std::size_t j = 0; j < nsp; ++j) {
      double omega = sp.frequency(sp.unflatten(j)).norm();
      if (omega == 0.0) {
        slice_hat[j] = a0[j] + t * a1[j];
      } else {
        slice_hat[j] =
            std::cos(omega * t) * a0[j] + std::sin(omega * t) / omega * a1[j];
      }
    }
    std::vector<Cplx> slice = fft_inverse(sp, slice_hat);
    std::copy(slice.begin(), slice.end(),
              values.begin() + std::size_t(it) * nsp);
  }
  return Field(spacetime, std::move(values));
}

Field traveling_delta(const GridSpec& spacetime, int band_limit,
                      double offset) {
  if (spacetime.dim < 2)
    throw DimensionError("traveling_delta: dimension must be >= 2");
  if (band_limit < 1 || band_limit > spacetime.n[1] / 4 ||
      band_limit > spacetime.n[0] / 4)
    throw ConstructionError(
        "traveling_delta: band limit must satisfy 1 <= L <= N/4");
  if (spacetime.period[0] != spacetime.period[1])
    throw ConstructionError(
        "traveling_delta: time and space periods must agree");
  double L = spacetime.period[1];
  std::vector<Cplx> spec(spacetime.total(), 0.0);
  for (int k = -band_limit; k <= band_limit; ++k) {
    std::array<int, kMaxDim> idx{0, 0, 0};
    idx[0] = spacetime.index_of_signed(0, -k);
    idx[1] = spacetime.index_of_signed(1, k);
    double phase = k * offset * kTwoPi / L;
    spec[spacetime.flatten(idx)] =
        Cplx(std::cos(phase), std::sin(phase)) / L;
  }
  return Field::from_spectrum(spacetime, std::move(spec));
}

Field random_hs_field(const GridSpec& spacetime, double s, uint64_t seed,
                      int band_limit) {
  GridSpec sp = spatial_grid_of(spacetime);
  if (band_limit <= 0) band_limit = sp.n[0] / 4;
  const double eta = 0.01;
  Rng rng = Rng(seed).split("random-hs");

  std::vector<Cplx> a0(sp.total(), 0.0);
  if (sp.dim == 1) {
    for (int k = 1; k <= band_limit; ++k) {
      double xi = kTwoPi * k / sp.period[0];
      double amp = std::pow(1.0 + xi * xi, 0.5 * (-(s - 0.5) - eta));
      Cplx z = amp * rng.split(uint64_t(k)).unit_phase();
      a0[sp.index_of_signed(0, k)] = z;
      a0[sp.index_of_signed(0, -k)] = std::conj(z);  // real data
    }
    a0[0] = rng.split("dc").uniform(-1.0, 1.0);
  } else {
    // lexicographic positive half-lattice carries the free phases
    for (std::size_t j = 0; j < sp.total(); ++j) {
      auto idx = sp.unflatten(j);
      int lead = 0;
      bool zero = true, positive = false;
      for (int ax = 0; ax < sp.dim; ++ax) {
        lead = sp.signed_index(ax, idx[ax]);
        if (lead != 0) {
          zero = false;
          positive = lead > 0;
          break;
        }
      }
      if (zero) {
        a0[j] = rng.split("dc").uniform(-1.0, 1.0);
        continue;
      }
      if (!positive) continue;
      Vec xi = sp.frequency(idx);
      bool in_band = true;
      for (int ax = 0; ax < sp.dim; ++ax)
        if (std::abs(sp.signed_index(ax, idx[ax])) > band_limit)
          in_band = false;
      if (!in_band) continue;
      double amp = std::pow(1.0 + xi.norm2(), 0.5 * (-(s - 0.5) - eta));
      Cplx z = amp * rng.split(uint64_t(j)).unit_phase();
      a0[j] = z;
      // conjugate mode
      std::array<int, kMaxDim> neg{0, 0, 0};
      for (int ax = 0; ax < sp.dim; ++ax)
        neg[ax] = sp.index_of_signed(ax, -sp.signed_index(ax, idx[ax]));
      a0[sp.flatten(neg)] = std::conj(z);
    }
  }
  Field u0 = Field::from_spectrum(sp, std::move(a0));
  Field u1 = Field::from_spectrum(sp, std::vector<Cplx>(sp.total(), 0.0));
  return solve_box(u0, u1, spacetime);
}

Field plane_wave_packet(const GridSpec& spacetime, double center, double width,
                        int wavenumber) {
  GridSpec sp = spatial_grid_of(spacetime);
  std::vector<Cplx> v(sp.total());
  for (std::size_t j = 0; j < sp.total(); ++j) {
    Vec x = sp.point(sp.unflatten(j));
    double env = 1.0;
    for (int ax = 0; ax < sp.dim; ++ax)
      env *= bump(wrap_displacement(x[ax] - center, sp.period[ax]) / width);
    double ph = wavenumber * x[0];
    v[j] = env * Cplx(std::cos(ph), std::sin(ph));
  }
  Field raw(sp, std::move(v));
  // band-limit the data to N/4 so the aliasing guard passes exactly
  const auto& rh = raw.spectrum();
  std::vector<Cplx> spec(rh);
  for (std::size_t j = 0; j < sp.total(); ++j) {
    auto idx = sp.unflatten(j);
    for (int ax = 0; ax < sp.dim; ++ax)
      if (std::abs(sp.signed_index(ax, idx[ax])) > sp.n[ax] / 4) spec[j] = 0.0;
  }
  Field u0 = Field::from_spectrum(sp, std::move(spec));
  Field u1 = Field::from_spectrum(sp, std::vector<Cplx>(sp.total(), 0.0));
  return solve_box(u0, u1, spacetime);
}

double time_window_value(double x0, double period) {
  // support [0.2L, 0.8L], identically 1 on [0.35L, 0.65L]
  return plateau((x0 - 0.5 * period) / (0.3 * period), 0.5);
}

Field apply_time_window(const Field& u) {
  const GridSpec& g = u.grid();
  std::vector<Cplx> v(u.values());
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto idx = g.unflatten(i);
    v[i] *= time_window_value(g.coord(0, idx[0]), g.period[0]);
  }
  return Field(g, std::move(v));
}

std::string SolutionFamily::name() const {
  switch (kind) {
    case Kind::TravelingDelta:
      return "traveling-delta:L" + std::to_string(band_limit) +
             (window ? ":w" : "");
    case Kind::RandomHs:
      return "random-hs:s" + std::to_string(s) + ":seed" +
             std::to_string(seed) + (window ? ":w" : "");
    case Kind::PlaneWavePacket:
      return "packet:k" + std::to_string(packet_wavenumber) +
             (window ? ":w" : "");
  }
  return "?";
}

Field SolutionFamily::realize(const GridSpec& spacetime) const {
  Field u;
  int bl = band_limit > 0 ? band_limit : spacetime.n[0] / 4;
  switch (kind) {
    case Kind::TravelingDelta:
      u = traveling_delta(spacetime, bl, offset);
      break;
    case Kind::RandomHs:
      u = random_hs_field(spacetime, s, seed, bl);
      break;
    case Kind::PlaneWavePacket:
      u = plane_wave_packet(spacetime, packet_center, packet_width,
                            packet_wavenumber);
      break;
  }
  if (window) u = apply_time_window(u);
  return u;
}

}  // namespace microloc
