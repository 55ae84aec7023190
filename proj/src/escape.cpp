#include "microloc/escape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "microloc/errors.hpp"
#include "microloc/rng.hpp"
#include "microloc/smooth.hpp"

namespace microloc {

double escape_phi(double t, const EscapeSpec& spec) {
  if (t <= -spec.t0 - spec.delta || t >= spec.delta) return 0.0;
  return std::exp(-spec.gamma * t + 1.0 / (t - spec.delta) -
                  1.0 / (t + spec.t0 + spec.delta));
}

double escape_phi_deriv(double t, const EscapeSpec& spec) {
  if (t <= -spec.t0 - spec.delta || t >= spec.delta) return 0.0;
  double d1 = t - spec.delta;
  double d2 = t + spec.t0 + spec.delta;
  return escape_phi(t, spec) * (-spec.gamma - 1.0 / (d1 * d1) + 1.0 / (d2 * d2));
}

double escape_negativity_boundary(const EscapeSpec& spec) {
  // 2 phi' + gamma phi = phi * (-gamma - 2/(t-delta)^2 + 2/(t+t0+delta)^2);
  // the bracket decreases strictly from +inf to -inf on the support interval.
  auto bracket = [&spec](double t) {
    double d1 = t - spec.delta;
    double d2 = t + spec.t0 + spec.delta;
    return -spec.gamma - 2.0 / (d1 * d1) + 2.0 / (d2 * d2);
  };
  double lo = -spec.t0 - spec.delta + 1e-12, hi = spec.delta - 1e-12;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (bracket(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

struct ChiGeometry {
  int d;
  Vec x;         // target spacetime point
  Vec dir;       // target unit direction
  double y_halfwidth, y_plateau;
  double one_minus_cos, ang_plateau;
  double lowcut_on, lowcut_full;
  double period;
  double guard;

  double t_of(const Vec& z, const Vec& zeta) const {
    double r = zeta.norm();
    if (r == 0.0) return std::numeric_limits<double>::infinity();
    double zhat0 = zeta[0] / r;
    if (zhat0 == 0.0) return std::numeric_limits<double>::infinity();
    return wrap_displacement(z[0] - x[0], period) / zhat0;
  }

  // chi1 = (product of y plateaus) * (angular plateau); chi = chi1^2
  double chi1_y(const Vec& z, const Vec& zeta, double t) const {
    double r = zeta.norm();
    double v = 1.0;
    for (int j = 1; j < d; ++j) {
      double y = wrap_displacement(z[j] - x[j], period) + (zeta[j] / r) * t;
      v *= plateau(y / y_halfwidth, y_plateau);
      if (v == 0.0) return 0.0;
    }
    return v;
  }
  double chi1_ang(const Vec& zeta) const {
    double r = zeta.norm();
    if (r == 0.0) return 0.0;
    double c = dir.dot(zeta) / r;
    double u = (1.0 - c) / one_minus_cos;
    if (u >= 1.0) return 0.0;
    return plateau(u, ang_plateau);
  }
  double lowcut(const Vec& zeta) const {
    return ramp_up(zeta.norm(), lowcut_on, lowcut_full);
  }
};

ChiGeometry geometry_of(const EscapeSpec& spec) {
  ChiGeometry g;
  g.d = spec.target.x.n;
  g.x = spec.target.x;
  g.dir = spec.target.xi_hat;
  g.y_halfwidth = spec.y_halfwidth;
  g.y_plateau = spec.y_plateau;
  g.one_minus_cos = 1.0 - std::cos(spec.ang_halfwidth);
  g.ang_plateau = spec.ang_plateau;
  g.lowcut_on = spec.lowcut_on;
  g.lowcut_full = spec.lowcut_full;
  g.period = spec.period;
  g.guard = spec.zhat0_guard;
  return g;
}

// min |zhat_0| over the closed angular support of chi
double min_abs_zhat0(const EscapeSpec& spec) {
  double theta0 = std::acos(std::clamp(spec.target.xi_hat[0], -1.0, 1.0));
  double lo = theta0 - spec.ang_halfwidth, hi = theta0 + spec.ang_halfwidth;
  // |cos| minimized at the point of [lo,hi] closest to pi/2
  double worst;
  if (lo <= 1.5707963267948966 && hi >= 1.5707963267948966)
    worst = 0.0;
  else if (hi < 1.5707963267948966)
    worst = std::cos(hi);
  else
    worst = -std::cos(lo);
  return std::abs(worst);
}

}  // namespace

double EscapeBundle::t_of(const Vec& z, const Vec& zeta) const {
  return geometry_of(spec).t_of(z, zeta);
}

double EscapeBundle::chi_of(const Vec& z, const Vec& zeta) const {
  ChiGeometry g = geometry_of(spec);
  double a = g.chi1_ang(zeta);
  if (a == 0.0) return 0.0;
  double t = g.t_of(z, zeta);
  double c1 = a * g.chi1_y(z, zeta, t);
  return c1 * c1;
}

double EscapeBundle::invariant_weight(const Vec& z, const Vec& zeta) const {
  ChiGeometry g = geometry_of(spec);
  return chi_of(z, zeta) * g.lowcut(zeta);
}

EscapeBundle build_escape(const EscapeSpec& spec, const Symbol* g,
                          const Symbol* e) {
  spec.target.validate();
  const int d = spec.target.x.n;
  if (d < 2) throw DimensionError("escape: dimension must be >= 2");
  {
    double q = spec.target.xi_hat[0] * spec.target.xi_hat[0];
    for (int j = 1; j < d; ++j) q -= spec.target.xi_hat[j] * spec.target.xi_hat[j];
    if (std::abs(q) > spec.char_tol)
      throw ConstructionError("escape: target direction is not characteristic");
  }
  if (min_abs_zhat0(spec) < spec.zhat0_guard)
    throw ConstructionError(
        "escape: zhat_0 vanishes on the direction support of chi");

  EscapeBundle bundle;
  bundle.spec = spec;
  bundle.t_star = escape_negativity_boundary(spec);
  bundle.paper_interval = bundle.t_star <= -spec.t0 + 1e-12;
  bundle.t_K = std::max(bundle.t_star, -spec.t0);

  ChiGeometry geo = geometry_of(spec);
  double korder = spec.k - 0.5;

  // z-support box from interval arithmetic on t and the transported y
  {
    double theta0 = std::acos(std::clamp(spec.target.xi_hat[0], -1.0, 1.0));
    double c_lo = std::cos(std::min(kTwoPi / 2, theta0 + spec.ang_halfwidth));
    double c_hi = std::cos(std::max(0.0, theta0 - spec.ang_halfwidth));
    double t_lo = -spec.t0 - spec.delta, t_hi = spec.delta;
    auto prod_range = [](double a_lo, double a_hi, double b_lo, double b_hi,
                         double* lo, double* hi) {
      double c1 = a_lo * b_lo, c2 = a_lo * b_hi, c3 = a_hi * b_lo,
             c4 = a_hi * b_hi;
      *lo = std::min(std::min(c1, c2), std::min(c3, c4));
      *hi = std::max(std::max(c1, c2), std::max(c3, c4));
    };
    BoxRegion box;
    box.lo = Vec(d);
    box.hi = Vec(d);
    double z0lo, z0hi;
    prod_range(t_lo, t_hi, c_lo, c_hi, &z0lo, &z0hi);
    box.lo[0] = spec.target.x[0] + z0lo;
    box.hi[0] = spec.target.x[0] + z0hi;
    for (int j = 1; j < d; ++j) {
      double s_lo = spec.target.xi_hat[j] - spec.ang_halfwidth;
      double s_hi = spec.target.xi_hat[j] + spec.ang_halfwidth;
      double plo, phi_;
      prod_range(t_lo, t_hi, s_lo, s_hi, &plo, &phi_);
      box.lo[j] = spec.target.x[j] - spec.y_halfwidth - phi_;
      box.hi[j] = spec.target.x[j] + spec.y_halfwidth - plo;
    }
    bundle.z_support = box;
  }

  EscapeSpec sp = spec;
  auto core = [geo, sp](const Vec& z, const Vec& zeta) -> Cplx {
    double t = geo.t_of(z, zeta);
    double ph = escape_phi(t, sp);
    if (ph == 0.0) return 0.0;
    double cy = geo.chi1_y(z, zeta, t);
    return Cplx(ph * cy * cy);
  };
  auto prefac = [geo, korder](const Vec& zeta) -> Cplx {
    double ca = geo.chi1_ang(zeta);
    if (ca == 0.0) return 0.0;
    double lc = geo.lowcut(zeta);
    if (lc == 0.0) return 0.0;
    return Cplx(ca * ca * lc *
                std::pow(1.0 + zeta.norm2(), 0.5 * korder));
  };
  bundle.a = Symbol::generic_factored(d, korder, core, prefac, "escape")
                 .with_x_support(bundle.z_support);

  // sampled ray-pad conditions for the supplied g and e
  if (g || e) {
    Rng rng(777);
    std::vector<Vec> dirs;
    dirs.push_back(spec.target.xi_hat);
    if (d == 2) {
      double th0 = std::atan2(spec.target.xi_hat[1], spec.target.xi_hat[0]);
      for (double f : {-0.9, -0.45, 0.45, 0.9}) {
        double th = th0 + f * spec.ang_halfwidth;
        dirs.push_back(Vec{std::cos(th), std::sin(th)});
      }
    }
    std::vector<Vec> ys;  // spatial offsets within supp chi_y
    {
      int npt = 3;
      std::vector<double> offs;
      for (int i = 0; i < npt; ++i)
        offs.push_back(-spec.y_halfwidth +
                       2.0 * spec.y_halfwidth * i / (npt - 1));
      if (d == 2) {
        for (double o : offs) ys.push_back(Vec{0.0, o});
      } else {
        for (double o1 : offs)
          for (double o2 : offs) ys.push_back(Vec{0.0, o1, o2});
      }
    }
    auto flowed = [&](double t, const Vec& yoff, const Vec& dir) {
      Vec p(d);
      p[0] = spec.target.x[0] + t * dir[0];
      for (int j = 1; j < d; ++j)
        p[j] = spec.target.x[j] + yoff[j] - t * dir[j];
      return p;
    };
    const double dt = 0.125;
    if (g) {
      for (double t = -spec.t0 - spec.delta; t <= spec.delta + 1e-12; t += dt)
        for (const auto& yoff : ys)
          for (const auto& dir : dirs) {
            PhaseDirection q = PhaseDirection::make(flowed(t, yoff, dir), dir);
            if (!is_elliptic_at(*g, q, 16.0, 0.01))
              throw HypothesisError(
                  "escape: flowed neighborhood not elliptic for g at t=" +
                  std::to_string(t));
          }
      // esssupp(a) subset ellip(g), sampled over the support box
      for (int trial = 0; trial < 40; ++trial) {
        Rng r2 = rng.split(uint64_t(trial));
        Vec z(d);
        for (int j = 0; j < d; ++j)
          z[j] = r2.uniform(bundle.z_support.lo[j], bundle.z_support.hi[j]);
        Vec dir = dirs[trial % dirs.size()];
        PhaseDirection q = PhaseDirection::make(z, dir);
        if (!esssupp_excludes(bundle.a, q) && !is_elliptic_at(*g, q, 16.0, 0.01))
          throw HypothesisError("escape: esssupp(a) escapes ellip(g)");
      }
    }
    if (e) {
      for (double t = -spec.t0 - spec.delta; t <= spec.t0 + spec.delta + 1e-12;
           t += dt)
        for (const auto& yoff : ys)
          for (const auto& dir : dirs) {
            PhaseDirection q = PhaseDirection::make(flowed(t, yoff, dir), dir);
            if (!is_elliptic_at(*e, q, 16.0, 0.01))
              throw HypothesisError(
                  "escape: flowed neighborhood not elliptic for e at t=" +
                  std::to_string(t));
          }
    }
  }
  return bundle;
}

Symbol a_hamilton_a(const EscapeBundle& bundle) {
  ChiGeometry geo = geometry_of(bundle.spec);
  EscapeSpec sp = bundle.spec;
  double k2 = 2.0 * sp.k;
  auto core = [geo, sp](const Vec& z, const Vec& zeta) -> Cplx {
    double t = geo.t_of(z, zeta);
    double ph = escape_phi(t, sp);
    if (ph == 0.0) return 0.0;
    double dph = escape_phi_deriv(t, sp);
    double cy = geo.chi1_y(z, zeta, t);
    double cy4 = cy * cy * cy * cy;
    // zeta_0 / zhat_0 = |zeta|
    return Cplx(2.0 * zeta.norm() * dph * ph * cy4);
  };
  auto prefac = [geo, k2](const Vec& zeta) -> Cplx {
    double ca = geo.chi1_ang(zeta);
    if (ca == 0.0) return 0.0;
    double lc = geo.lowcut(zeta);
    if (lc == 0.0) return 0.0;
    double ca2 = ca * ca;
    return Cplx(ca2 * ca2 * lc * lc *
                std::pow(1.0 + zeta.norm2(), 0.5 * (k2 - 1.0)));
  };
  return Symbol::generic_factored(bundle.a.dim(), k2, core, prefac,
                                  "a*Hp(a)")
      .with_x_support(bundle.z_support);
}

double a_hamilton_a_fd_error(const EscapeBundle& bundle, int samples,
                             uint64_t seed) {
  Symbol closed = a_hamilton_a(bundle);
  const Symbol& a = bundle.a;
  const EscapeSpec& es = bundle.spec;
  ChiGeometry geo = geometry_of(es);
  const int d = a.dim();
  Rng rng(seed);
  double max_rel = 0.0, scale = 0.0;
  std::vector<std::pair<double, double>> vals;
  for (int i = 0; i < samples; ++i) {
    Rng r = rng.split(uint64_t(i));
    Vec z(d);
    for (int j = 0; j < d; ++j)
      z[j] = r.uniform(bundle.z_support.lo[j], bundle.z_support.hi[j]);
    double th0 = std::atan2(bundle.spec.target.xi_hat[1],
                            bundle.spec.target.xi_hat[0]);
    double th = th0 + r.uniform(-1.2, 1.2) * bundle.spec.ang_halfwidth;
    double lam = std::exp(r.uniform(std::log(4.0), std::log(512.0)));
    Vec zeta = Vec{std::cos(th), std::sin(th)} * lam;
    if (d == 3) zeta = Vec{lam * std::cos(th), lam * std::sin(th), 0.0};

    // the comparison holds away from support boundaries; skip samples deep
    // in the cutoffs' exponential tails where finite differences of a^2 are
    // ill conditioned (the profile there is below 1% of its plateau value)
    if (bundle.invariant_weight(z, zeta) < 1e-2) continue;

    // H_P(a^2)/2 by fourth-order central differences in z
    double h = 1e-4 * (1.0 + z.norm());
    auto a2 = [&](const Vec& p) {
      Cplx v = a.eval(p, zeta);
      return (v * std::conj(v)).real();
    };
    auto deriv = [&](int axis) {
      Vec zp = z, zm = z, zp2 = z, zm2 = z;
      zp[axis] += h;
      zm[axis] -= h;
      zp2[axis] += 2.0 * h;
      zm2[axis] -= 2.0 * h;
      return (-a2(zp2) + 8.0 * a2(zp) - 8.0 * a2(zm) + a2(zm2)) / (12.0 * h);
    };
    double hp = 2.0 * zeta[0] * deriv(0);
    for (int j = 1; j < d; ++j) hp -= 2.0 * zeta[j] * deriv(j);
    double fd = 0.5 * hp;
    double cf = closed.eval(z, zeta).real();
    vals.emplace_back(cf, fd);
    scale = std::max(scale, std::abs(cf));
  }
  for (auto& [cf, fd] : vals) {
    double denom = std::abs(cf) + std::abs(fd);
    if (denom < 1e-9 * scale) continue;  // both effectively zero
    max_rel = std::max(max_rel, std::abs(cf - fd) / denom);
  }
  return max_rel;
}

SignReport verify_sign_condition(const EscapeBundle& bundle, const Symbol& e,
                                 double gamma, const SignSampleSpec& sspec) {
  const EscapeSpec& es = bundle.spec;
  ChiGeometry geo = geometry_of(es);
  const int d = es.target.x.n;
  Rng rng(sspec.seed);

  SignReport rep;
  rep.n = sspec.n;
  rep.t_star = bundle.t_star;
  rep.gamma_min_for_paper_interval =
      2.0 / (es.delta * es.delta) -
      2.0 / ((es.t0 + es.delta) * (es.t0 + es.delta));
  rep.region_matches_prediction = true;
  rep.C_finite = true;
  rep.neg_t_min = std::numeric_limits<double>::infinity();
  rep.neg_t_max = -std::numeric_limits<double>::infinity();

  double th0 = std::atan2(es.target.xi_hat[1], es.target.xi_hat[0]);
  std::vector<PhaseDirection> ellip_cells;

  for (long i = 0; i < sspec.n; ++i) {
    Rng r = rng.split(uint64_t(i));
    Vec z(d);
    for (int j = 0; j < d; ++j) {
      double pad = 0.3;
      z[j] = r.uniform(bundle.z_support.lo[j] - pad,
                       bundle.z_support.hi[j] + pad);
    }
    double lam =
        std::exp(r.uniform(std::log(sspec.lam_min), std::log(sspec.lam_max)));
    Vec zeta(d);
    double th;
    if (d == 2) {
      if (r.uniform() < sspec.inside_fraction)
        th = th0 + r.uniform(-1.1, 1.1) * es.ang_halfwidth;
      else
        th = r.uniform(0.0, kTwoPi);
      zeta[0] = lam * std::cos(th);
      zeta[1] = lam * std::sin(th);
    } else {
      // blend the target direction with a random sphere point
      double zc = r.uniform(-1.0, 1.0);
      double az = r.uniform(0.0, kTwoPi);
      double rr = std::sqrt(std::max(0.0, 1.0 - zc * zc));
      Vec rnd{rr * std::cos(az), rr * std::sin(az), zc};
      double w = r.uniform() < sspec.inside_fraction
                     ? r.uniform(0.0, 1.2 * es.ang_halfwidth)
                     : r.uniform(0.0, 1.0);
      Vec dirv = es.target.xi_hat * (1.0 - w) + rnd * w;
      dirv = dirv * (1.0 / dirv.norm());
      zeta = dirv * lam;
      th = std::atan2(dirv[1], dirv[0]);
    }

    double t = geo.t_of(z, zeta);
    double phi = escape_phi(t, es);
    double dphi = escape_phi_deriv(t, es);
    double chi = bundle.chi_of(z, zeta);
    double lc = geo.lowcut(zeta);
    double br2 = 1.0 + zeta.norm2();
    // principal expression of -aH_P(a) - gamma <z> a^2
    double value = -(2.0 * dphi + gamma * phi) * phi * chi * chi * lc * lc *
                   std::pow(br2, es.k);

    bool negative = value < 0.0;
    bool predicted = (2.0 * dphi + gamma * phi > 0.0) && (phi > 0.0) &&
                     (chi > 0.0) && (lc > 0.0);
    if (negative != predicted) {
      // ignore mismatches where the product underflows to zero
      double logmag = -1e9;
      if (predicted) {
        logmag = std::log(2.0 * dphi + gamma * phi) + std::log(phi) +
                 2.0 * std::log(chi) + 2.0 * std::log(lc) +
                 es.k * std::log(br2);
      }
      if (!predicted || logmag > -640.0) rep.region_matches_prediction = false;
    }

    if (!negative) continue;
    rep.negatives++;
    rep.neg_t_min = std::min(rep.neg_t_min, t);
    rep.neg_t_max = std::max(rep.neg_t_max, t);
    bool in_paper_K = (t >= -es.t0 - es.delta && t <= -es.t0) && chi > 0.0;
    if (!in_paper_K) {
      rep.negatives_outside_paper_K++;
      if (rep.offenders.size() < 16)
        rep.offenders.push_back({z, zeta, t, value, in_paper_K});
    }

    // minimal C against the exact (non-principal) expression
    double norm = zeta.norm();
    double X = -(2.0 * norm * dphi + gamma * std::sqrt(br2) * phi) * phi * chi *
               chi * lc * lc * std::pow(br2, es.k - 0.5);
    if (X < 0.0) {
      double ev = std::abs(e.eval(z, zeta));
      if (ev * ev < 1e-14 * std::abs(X)) {
        rep.C_finite = false;
      } else {
        rep.C_min = std::max(rep.C_min, -X / (ev * ev));
      }
    }

    // dedup negatives into coarse ellipticity cells
    bool fresh = true;
    for (const auto& c : ellip_cells) {
      if ((c.x - z).norm() < 0.15 &&
          std::abs(std::atan2(c.xi_hat[1], c.xi_hat[0]) - th) < 0.05) {
        fresh = false;
        break;
      }
    }
    if (fresh && ellip_cells.size() < 400) {
      Vec dir = zeta * (1.0 / zeta.norm());
      ellip_cells.push_back(PhaseDirection{z, dir});
    }
  }

  rep.paper_containment = (rep.negatives_outside_paper_K == 0);
  rep.exceptional_region_elliptic_for_e = true;
  for (const auto& c : ellip_cells) {
    if (!is_elliptic_at(e, c, 16.0, 0.005)) {
      rep.exceptional_region_elliptic_for_e = false;
      break;
    }
  }
  rep.verdict = rep.paper_containment && rep.exceptional_region_elliptic_for_e;
  return rep;
}

Symbol make_sos_psi(const EscapeBundle& bundle, double margin) {
  const EscapeSpec& es = bundle.spec;
  ChiGeometry geo = geometry_of(es);
  const int d = es.target.x.n;

  double A = -es.t0 - es.delta, B = bundle.t_K;
  double mid = 0.5 * (A - 2 * margin + B + 2 * margin);
  double half = 0.5 * (B - A) + 2 * margin;
  double pfrac = (half - margin) / half;  // plateau covers [A-margin, B+margin]

  // widened direction plateau, identically 1 on supp chi_ang
  double wide = 1.3 * es.ang_halfwidth;
  double one_minus_cos_w = 1.0 - std::cos(wide);
  double u_cover = (1.0 - std::cos(1.05 * es.ang_halfwidth)) / one_minus_cos_w;
  Vec dir = es.target.xi_hat;

  if (std::acos(std::clamp(std::abs(dir[0]), 0.0, 1.0)) + wide >=
      1.5707963267948966 - 1e-6) {
    // t would be unguarded on the widened cone
    throw ConstructionError("sos psi: widened cone reaches zhat_0 = 0");
  }

  double yh_wide = 1.3 * es.y_halfwidth;
  double y_cover = 1.05 * es.y_halfwidth / yh_wide;
  double period = es.period;
  Vec x0 = es.target.x;

  auto eval = [geo, dir, one_minus_cos_w, u_cover, mid, half, pfrac, yh_wide,
               y_cover, period, x0, d](const Vec& z, const Vec& zeta) -> Cplx {
    double r = zeta.norm();
    if (r == 0.0) return 1.0;
    double c = dir.dot(zeta) / r;
    double u = (1.0 - c) / one_minus_cos_w;
    if (u >= 1.0) return 1.0;
    double ang = plateau(u, u_cover);
    double t = geo.t_of(z, zeta);
    double tp = plateau((t - mid) / half, pfrac);
    double yp = 1.0;
    for (int j = 1; j < d; ++j) {
      double y = wrap_displacement(z[j] - x0[j], period) + (zeta[j] / r) * t;
      yp *= plateau(y / yh_wide, y_cover);
    }
    return Cplx(1.0 - ang * tp * yp);
  };
  return Symbol::generic(d, 0.0, eval, "sos-psi");
}

std::pair<Symbol, Symbol> sos_decomposition(const EscapeBundle& bundle,
                                            const Symbol& e, const Symbol& psi,
                                            double C, double gamma) {
  const EscapeSpec& es = bundle.spec;
  ChiGeometry geo = geometry_of(es);
  const int d = es.target.x.n;
  EscapeSpec sp = es;

  // X = -a H_P(a) - gamma <zeta> a^2 (exact form)
  auto X_of = [geo, sp, gamma](const Vec& z, const Vec& zeta) -> double {
    double t = geo.t_of(z, zeta);
    double phi = escape_phi(t, sp);
    if (phi == 0.0) return 0.0;
    double dphi = escape_phi_deriv(t, sp);
    double cy = geo.chi1_y(z, zeta, t);
    double ca = geo.chi1_ang(zeta);
    double lc = geo.lowcut(zeta);
    double chi = cy * cy * ca * ca;
    double w2 = chi * chi * lc * lc;
    if (w2 == 0.0) return 0.0;
    double n = zeta.norm();
    double br2 = 1.0 + zeta.norm2();
    return -(2.0 * n * dphi + gamma * std::sqrt(br2) * phi) * phi * w2 *
           std::pow(br2, sp.k - 0.5);
  };

  Symbol e_local = e, psi_local = psi;
  auto a1_eval = [X_of, e_local, psi_local, C](const Vec& z,
                                               const Vec& zeta) -> Cplx {
    double ev = std::abs(e_local.eval(z, zeta));
    double ps = psi_local.eval(z, zeta).real();
    double rad = C * ev * ev + (1.0 - ps * ps) * X_of(z, zeta);
    if (rad < 0.0) {
      if (rad > -1e-12 * (C * ev * ev + 1.0)) return 0.0;  // rounding dust
      throw ConstructionError("sos: negative a1 radicand at sample");
    }
    return Cplx(std::sqrt(rad));
  };
  // a2 = psi * chi * lowcut * <z>^{k-1/2} * sqrt(phi*(-2|z|phi' - gamma<z>phi))
  auto a2_eval = [geo, sp, gamma, psi_local](const Vec& z,
                                             const Vec& zeta) -> Cplx {
    double ps = psi_local.eval(z, zeta).real();
    if (ps == 0.0) return 0.0;
    double t = geo.t_of(z, zeta);
    double phi = escape_phi(t, sp);
    if (phi == 0.0) return 0.0;
    double cy = geo.chi1_y(z, zeta, t);
    double ca = geo.chi1_ang(zeta);
    double lc = geo.lowcut(zeta);
    double theta = cy * cy * ca * ca * lc;
    if (theta == 0.0) return 0.0;
    double dphi = escape_phi_deriv(t, sp);
    double n = zeta.norm();
    double br2 = 1.0 + zeta.norm2();
    double rad = phi * (-2.0 * n * dphi - gamma * std::sqrt(br2) * phi);
    if (rad < 0.0) {
      if (rad > -1e-12 * phi * (std::abs(dphi) * n + phi * std::sqrt(br2)))
        return 0.0;
      throw ConstructionError("sos: negative a2 radicand at sample");
    }
    return Cplx(ps * theta * std::pow(br2, 0.5 * (sp.k - 0.5)) *
                std::sqrt(rad));
  };

  Symbol a1 = Symbol::generic(d, e.order(), a1_eval, "sos-a1");
  Symbol a2 = Symbol::generic(d, sp.k, a2_eval, "sos-a2")
                  .with_x_support(bundle.z_support);
  return {a1, a2};
}

}  // namespace microloc
