#include "microloc/hamilton.hpp"

#include <cmath>

#include "microloc/errors.hpp"

namespace microloc {

HamiltonTangent hamilton_field(const Vec& x, const Vec& xi) {
  HamiltonTangent t;
  t.x_dot = Vec(x.n);
  t.xi_dot = Vec(x.n);
  t.x_dot[0] = 2.0 * xi[0];
  for (int j = 1; j < x.n; ++j) t.x_dot[j] = -2.0 * xi[j];
  return t;
}

bool in_characteristic_set(const Vec& xi_hat, double tol) {
  if (std::abs(xi_hat.norm() - 1.0) > 1e-9)
    throw ConstructionError("in_characteristic_set: direction is not unit");
  double q = xi_hat[0] * xi_hat[0];
  for (int j = 1; j < xi_hat.n; ++j) q -= xi_hat[j] * xi_hat[j];
  return std::abs(q) <= tol;
}

PhaseDirection flow(const PhaseDirection& p, double t,
                    RayOrientation orientation, double char_tol) {
  p.validate();
  if (!in_characteristic_set(p.xi_hat, char_tol))
    throw ConstructionError("flow: base point off the characteristic set");
  double s = orientation == RayOrientation::Plus ? 1.0 : -1.0;
  PhaseDirection q = p;
  q.x[0] = p.x[0] + s * t * p.xi_hat[0];
  for (int j = 1; j < p.x.n; ++j) q.x[j] = p.x[j] - s * t * p.xi_hat[j];
  return q;
}

PhaseDirection LightRay::at(double t) const {
  return flow(base, t, orientation);
}

namespace {

std::vector<PhaseDirection> net_points(const ControlNet& net, int d) {
  std::vector<PhaseDirection> pts;
  std::vector<Vec> xs;
  std::vector<std::array<int, kMaxDim>> grid_idx;
  int n = net.x_count;
  if (d == 2) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Vec x{net.x_box.lo[0] +
                  (net.x_box.hi[0] - net.x_box.lo[0]) * i / std::max(1, n - 1),
              net.x_box.lo[1] +
                  (net.x_box.hi[1] - net.x_box.lo[1]) * j / std::max(1, n - 1)};
        xs.push_back(x);
      }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          Vec x(3);
          int ii[3] = {i, j, l};
          for (int ax = 0; ax < 3; ++ax)
            x[ax] = net.x_box.lo[ax] + (net.x_box.hi[ax] - net.x_box.lo[ax]) *
                                           ii[ax] / std::max(1, n - 1);
          xs.push_back(x);
        }
  }

  std::vector<Vec> dirs;
  if (d == 2) {
    double th0 = std::atan2(net.dir_center[1], net.dir_center[0]);
    for (int i = 0; i < net.dir_count; ++i) {
      double f = net.dir_count == 1
                     ? 0.0
                     : -1.0 + 2.0 * i / double(net.dir_count - 1);
      double th = th0 + f * net.dir_spread;
      dirs.push_back(Vec{std::cos(th), std::sin(th)});
    }
    for (int i = 0; i < net.extra_circle_dirs; ++i) {
      double th = kTwoPi * i / net.extra_circle_dirs;
      dirs.push_back(Vec{std::cos(th), std::sin(th)});
    }
  } else {
    Vec c = net.dir_center * (1.0 / net.dir_center.norm());
    dirs.push_back(c);
    // tangent-frame perturbations
    Vec up = std::abs(c[2]) < 0.9 ? Vec{0, 0, 1} : Vec{1, 0, 0};
    Vec t1(3);
    double cc = up.dot(c);
    for (int i = 0; i < 3; ++i) t1[i] = up[i] - cc * c[i];
    t1 = t1 * (1.0 / t1.norm());
    Vec t2{c[1] * t1[2] - c[2] * t1[1], c[2] * t1[0] - c[0] * t1[2],
           c[0] * t1[1] - c[1] * t1[0]};
    for (int i = 1; i < net.dir_count; ++i) {
      double f = -1.0 + 2.0 * i / double(net.dir_count - 1);
      for (const Vec& tv : {t1, t2}) {
        Vec dv = c + tv * (f * net.dir_spread);
        dirs.push_back(dv * (1.0 / dv.norm()));
      }
    }
  }

  for (const auto& x : xs)
    for (const auto& dir : dirs) pts.push_back(PhaseDirection{x, dir});
  return pts;
}

}  // namespace

ControlCertificate check_control(const Symbol& b, const Symbol& e,
                                 const Symbol& g, const ControlNet& net) {
  if (!b.x_support())
    throw ConstructionError("check_control: b must be compactly supported in x");
  const int d = b.dim();
  ControlCertificate cert;
  cert.verdict = true;

  NeighborhoodSpec nb;
  for (const auto& p : net_points(net, d)) {
    cert.checked++;
    ControlSample s;
    s.p = p;
    if (esssupp_excludes(b, p)) {
      s.kind = ControlSample::Kind::Excluded;
      cert.excluded++;
      cert.samples.push_back(std::move(s));
      continue;
    }
    if (!in_characteristic_set(p.xi_hat, net.char_tol)) {
      // off the light cone the wave operator itself is elliptic; control
      // reduces to g-ellipticity (the GPu term absorbs this region)
      if (is_elliptic_at(g, p, net.ellip_C, net.eps_g, nb)) {
        s.kind = ControlSample::Kind::CharComplement;
        cert.char_complement++;
      } else {
        s.kind = ControlSample::Kind::Failed;
        s.detail = "off-characteristic point not in ellip(g)";
        cert.failed++;
        cert.verdict = false;
      }
      cert.samples.push_back(std::move(s));
      continue;
    }

    bool found = false;
    for (RayOrientation orient : {RayOrientation::Plus, RayOrientation::Minus}) {
      long steps = std::lround(net.t_max * net.samples_per_unit);
      for (long i = 0; i <= steps; ++i) {
        double t = double(i) / net.samples_per_unit;
        PhaseDirection q = flow(p, t, orient, net.char_tol);
        if (!is_elliptic_at(g, q, net.ellip_C, net.eps_g, nb)) break;
        if (is_elliptic_at(e, q, net.ellip_C, net.eps_e, nb)) {
          s.kind = ControlSample::Kind::RayWitness;
          s.witness_t = t;
          s.orientation = orient == RayOrientation::Plus ? +1 : -1;
          found = true;
          break;
        }
      }
      if (found) break;
    }
    if (found) {
      cert.ray_witness++;
    } else {
      s.kind = ControlSample::Kind::Failed;
      s.detail = "no ray in ellip(g) reaching ellip(e)";
      cert.failed++;
      cert.verdict = false;
    }
    cert.samples.push_back(std::move(s));
  }
  return cert;
}

std::vector<std::array<double, 5>> witness_ray_track(
    const ControlSample& sample, const Symbol& g, const ControlNet& net) {
  std::vector<std::array<double, 5>> rows;
  if (sample.kind != ControlSample::Kind::RayWitness) return rows;
  RayOrientation orient =
      sample.orientation > 0 ? RayOrientation::Plus : RayOrientation::Minus;
  long steps = std::max<long>(
      1, std::lround(sample.witness_t * net.samples_per_unit));
  for (long i = 0; i <= steps; ++i) {
    double t = sample.witness_t * double(i) / double(steps);
    PhaseDirection q = flow(sample.p, t, orient, net.char_tol);
    bool ok = is_elliptic_at(g, q, net.ellip_C, net.eps_g);
    std::array<double, 5> row{t, q.x[0], q.x.n > 1 ? q.x[1] : 0.0,
                              q.x.n > 2 ? q.x[2] : 0.0, ok ? 1.0 : 0.0};
    rows.push_back(row);
  }
  return rows;
}

}  // namespace microloc
