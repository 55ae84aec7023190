// Shared geometry for the propagation experiments: a triple (b, e, g) along
// the diagonal light ray of the traveling line singularity, the shrunken g1
// used by the inductive ladder, a broken variant with e moved off the
// backward ray, and the escape-function configuration at the torus center.
#pragma once

#include <cmath>

#include "microloc/escape.hpp"
#include "microloc/hamilton.hpp"
#include "microloc/propagation.hpp"
#include "microloc/symbols.hpp"

namespace flagship {

using namespace microloc;

inline const double kPi = 3.14159265358979323846;
inline const double kInv = 1.0 / std::sqrt(2.0);

inline Vec cone_dir() { return Vec{kInv, -kInv}; }  // characteristic
inline Vec ray_axis() { return Vec{1.0, 1.0}; }

inline TubeSpec b_spec() {
  TubeSpec t;
  t.center = Vec{kPi + 0.85, kPi + 0.85};
  t.axis = ray_axis();
  t.par_halfwidth = 0.28;
  t.par_plateau = 0.5;
  t.perp_halfwidth = 0.28;
  t.perp_plateau = 0.5;
  t.direction = cone_dir();
  t.half_angle = 0.10;
  t.ang_plateau = 0.5;
  t.order = 0.0;
  return t;
}

inline TubeSpec e_spec() {
  TubeSpec t;
  t.center = Vec{kPi - 0.85, kPi - 0.85};
  t.axis = ray_axis();
  t.par_halfwidth = 0.55;
  t.par_plateau = 0.55;
  t.perp_halfwidth = 1.15;
  t.perp_plateau = 0.82;
  t.direction = cone_dir();
  t.half_angle = 0.22;
  t.ang_plateau = 0.55;
  t.order = 0.0;
  return t;
}

inline TubeSpec g_spec() {
  TubeSpec t;
  t.center = Vec{kPi, kPi};
  t.axis = ray_axis();
  t.par_halfwidth = 2.6;
  t.par_plateau = 0.8;
  t.perp_halfwidth = 1.45;
  t.perp_plateau = 0.72;
  t.direction = cone_dir();
  t.half_angle = 0.42;
  t.ang_plateau = 0.62;
  t.order = -1.0;
  return t;
}

inline TubeSpec g1_spec() {
  TubeSpec t = g_spec();
  t.par_halfwidth = 1.9;
  t.par_plateau = 0.8;
  t.perp_halfwidth = 0.8;
  t.perp_plateau = 0.65;
  t.half_angle = 0.26;
  t.ang_plateau = 0.6;
  return t;
}

/// e translated off the backward ray (perpendicular to the light ray).
inline TubeSpec e_off_spec() {
  TubeSpec t = e_spec();
  double shift = 2.3;
  t.center = Vec{t.center[0] + shift * kInv, t.center[1] - shift * kInv};
  return t;
}

inline Symbol b_sym() { return make_tube_cutoff(b_spec()).with_label("b"); }
inline Symbol e_sym() { return make_tube_cutoff(e_spec()).with_label("e"); }
inline Symbol g_sym() { return make_tube_cutoff(g_spec()).with_label("g"); }
inline Symbol g1_sym() { return make_tube_cutoff(g1_spec()).with_label("g1"); }
inline Symbol e_off_sym() {
  return make_tube_cutoff(e_off_spec()).with_label("e-off");
}

inline ControlNet b_net() {
  ControlNet net;
  net.x_box = *b_sym().x_support();
  net.x_count = 5;
  net.dir_center = cone_dir();
  net.dir_spread = 0.13;
  net.dir_count = 7;
  net.extra_circle_dirs = 8;
  net.t_max = 4.5;
  net.samples_per_unit = 64;
  return net;
}

inline ControlNet g1_net() {
  ControlNet net;
  net.x_box = *g1_sym().x_support();
  net.x_count = 5;
  net.dir_center = cone_dir();
  net.dir_spread = 0.30;
  net.dir_count = 9;
  net.extra_circle_dirs = 8;
  net.t_max = 6.5;
  net.samples_per_unit = 64;
  return net;
}

inline TripleSpec triple() {
  TripleSpec t;
  t.b = b_sym();
  t.e = e_sym();
  t.g = g_sym();
  t.k = 0.0;
  t.N = 2.0;
  t.net = b_net();
  t.name = "flagship";
  return t;
}

inline TripleSpec broken_triple() {
  TripleSpec t = triple();
  t.e = e_off_sym();
  t.name = "flagship-broken";
  return t;
}

inline EscapeSpec escape_spec(double gamma = 1.0) {
  EscapeSpec spec;
  spec.target = PhaseDirection{Vec{kPi, kPi}, cone_dir()};
  spec.t0 = 1.0;
  spec.delta = 0.25;
  spec.gamma = gamma;
  spec.k = 0.0;
  spec.y_halfwidth = 0.5;
  spec.y_plateau = 0.5;
  spec.ang_halfwidth = 0.15;
  spec.ang_plateau = 0.4;
  spec.lowcut_on = 1.0;
  spec.lowcut_full = 2.0;
  return spec;
}

/// Wide pad covering the flowed segment t in (-t0-delta, t0+delta) around the
/// escape target; plays the role of e in the single-point lemma experiments.
inline Symbol e_pad_sym() {
  TubeSpec t;
  t.center = Vec{kPi, kPi};
  t.axis = ray_axis();
  t.par_halfwidth = 2.4;
  t.par_plateau = 0.85;
  t.perp_halfwidth = 1.2;
  t.perp_plateau = 0.8;
  t.direction = cone_dir();
  t.half_angle = 0.30;
  t.ang_plateau = 0.65;
  // active from low frequencies: the pad must dominate the escape symbol's
  // full frequency range in the C e^2 comparison
  t.lowcut_on = 0.5;
  t.lowcut_full = 1.5;
  t.order = 0.0;
  return make_tube_cutoff(t).with_label("e-pad");
}

inline SolutionFamily delta_family() {
  SolutionFamily f;
  f.kind = SolutionFamily::Kind::TravelingDelta;
  f.band_limit = 0;  // resolution-matched
  f.offset = 0.0;
  return f;
}

inline std::vector<SolutionFamily> smooth_corpus() {
  std::vector<SolutionFamily> fams;
  for (double s : {3.0, 5.0}) {
    for (uint64_t seed : {31ull, 32ull}) {
      SolutionFamily f;
      f.kind = SolutionFamily::Kind::RandomHs;
      f.s = s;
      f.seed = seed;
      fams.push_back(f);
    }
  }
  SolutionFamily p;
  p.kind = SolutionFamily::Kind::PlaneWavePacket;
  p.packet_center = kPi;
  p.packet_width = 0.8;
  p.packet_wavenumber = 10;
  fams.push_back(p);
  return fams;
}

}  // namespace flagship
