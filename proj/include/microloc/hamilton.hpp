#pragma once

#include <string>
#include <vector>

#include "microloc/symbols.hpp"

namespace microloc {

/// Hamilton vector field of the flat wave operator:
/// (xdot, xidot) = ((2 xi_0, -2 xi_1, ..., -2 xi_n), 0).
struct HamiltonTangent {
  Vec x_dot;
  Vec xi_dot;  // identically zero for the flat operator
};
HamiltonTangent hamilton_field(const Vec& x, const Vec& xi);

/// |xihat_0^2 - sum_j xihat_j^2| <= tol on the unit sphere.
bool in_characteristic_set(const Vec& xi_hat, double tol = 1e-9);

enum class RayOrientation { Plus = +1, Minus = -1 };

/// Closed-form light ray through a characteristic phase point:
/// t -> (x_0 +/- t xihat_0, x_j -/+ t xihat_j, xihat).
struct LightRay {
  PhaseDirection base;
  RayOrientation orientation = RayOrientation::Plus;
  double t_lo = 0.0, t_hi = 0.0;

  PhaseDirection at(double t) const;
};

/// Flow a characteristic point by parameter t; throws off the characteristic
/// set.
PhaseDirection flow(const PhaseDirection& p, double t,
                    RayOrientation orientation = RayOrientation::Plus,
                    double char_tol = 1e-9);

// ---- control relation --------------------------------------------------------

struct ControlNet {
  BoxRegion x_box;
  int x_count = 5;  // per axis
  Vec dir_center;
  double dir_spread = 0.15;
  int dir_count = 7;
  int extra_circle_dirs = 8;  // coarse full-circle sweep (exclusion path)
  double t_max = 3.0;
  int samples_per_unit = 64;
  double eps_g = 0.01, eps_e = 0.01;
  double ellip_C = 16.0;
  double char_tol = 1e-9;
};

struct ControlSample {
  PhaseDirection p;
  enum class Kind {
    Excluded,         // not in esssupp(b): nothing to control
    RayWitness,       // backward/forward ray into ellip(e) found
    CharComplement,   // off the characteristic set; covered by ellip(g)
    Failed
  } kind = Kind::Failed;
  double witness_t = 0.0;
  int orientation = +1;
  std::string detail;
};

struct ControlCertificate {
  std::vector<ControlSample> samples;
  bool verdict = false;
  long checked = 0, excluded = 0, ray_witness = 0, char_complement = 0,
       failed = 0;
};

/// Verifies "b is controlled by e through g" on a sampled phase-space net.
/// On-characteristic points search both ray orientations for an endpoint in
/// ellip(e) with all intermediate samples in ellip(g); zero-length rays are
/// admitted. Off-characteristic points of esssupp(b) are covered by the
/// wave operator's own ellipticity there and require only ellip(g)
/// membership.
ControlCertificate check_control(const Symbol& b, const Symbol& e,
                                 const Symbol& g, const ControlNet& net);

/// Witness-ray plot data: rows (t, x..., in_ellip_g) for one sample.
std::vector<std::array<double, 5>> witness_ray_track(
    const ControlSample& sample, const Symbol& g, const ControlNet& net);

}  // namespace microloc
