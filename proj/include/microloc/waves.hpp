#pragma once

#include <cstdint>
#include <string>

#include "microloc/grid.hpp"

namespace microloc {

/// Spectral d'Alembert evolution on the spatial torus. Axis 0 of the
/// spacetime grid is time; axes 1..d-1 must match the spatial grids of the
/// Cauchy data. Data must be band-limited to |k| <= N/4 per axis (aliasing
/// guard).
Field solve_box(const Field& u0, const Field& u1, const GridSpec& spacetime);

/// Band-limited realization of the traveling line singularity
/// delta(x_0 - x_1 - offset): u = sum_{|k| <= band_limit} e^{ik(x_1 + offset - x_0)} / L.
/// Exactly annihilated by the discrete wave operator.
Field traveling_delta(const GridSpec& spacetime, int band_limit, double offset);

/// Random solution with prescribed regularity label s: spatial Cauchy data
/// with independent phases and amplitudes <k>^{-(s-1/2)-eta}, u1 = 0, evolved
/// by solve_box. The labels are anchored so the traveling delta coincides
/// with the s = 1/2 family (constant amplitudes).
Field random_hs_field(const GridSpec& spacetime, double s, uint64_t seed,
                      int band_limit = 0 /* 0 => N/4 */);

/// Smooth compactly supported packet data e^{i k0 x} bump((x-c)/w), u1 = 0.
Field plane_wave_packet(const GridSpec& spacetime, double center, double width,
                        int wavenumber);

/// Smooth time window supported on the middle 60% of the time axis,
/// identically 1 on the middle 30%.
double time_window_value(double x0, double period);
Field apply_time_window(const Field& u);

/// Declarative description of a test solution; realization is deterministic
/// in (kind, parameters, seed).
struct SolutionFamily {
  enum class Kind { TravelingDelta, RandomHs, PlaneWavePacket };
  Kind kind = Kind::TravelingDelta;
  int band_limit = 0;  // 0 => N/4
  double s = 1.0;
  uint64_t seed = 0;
  double offset = 0.0;
  double packet_center = 3.141592653589793;
  double packet_width = 0.8;
  int packet_wavenumber = 12;
  bool window = false;

  std::string name() const;
  Field realize(const GridSpec& spacetime) const;
};

}  // namespace microloc
