#include <algorithm>
#include <cmath>

#include "microloc/errors.hpp"
#include "microloc/rng.hpp"
#include "microloc/symbols.hpp"

namespace microloc {

namespace {

// Nested central differences for mixed partials up to total order 2.
// Steps are relative: h_x = sx*(1+|x|), h_xi = sx*(1+|xi|).
Cplx mixed_derivative(const Symbol& a, Vec x, Vec xi,
                      std::array<int, kMaxDim> alpha,
                      std::array<int, kMaxDim> beta, double step) {
  for (int i = 0; i < a.dim(); ++i) {
    if (alpha[i] > 0) {
      alpha[i] -= 1;
      double h = step * (1.0 + x.norm());
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      return (mixed_derivative(a, xp, xi, alpha, beta, step) -
              mixed_derivative(a, xm, xi, alpha, beta, step)) /
             (2.0 * h);
    }
  }
  for (int i = 0; i < a.dim(); ++i) {
    if (beta[i] > 0) {
      beta[i] -= 1;
      double h = step * (1.0 + xi.norm());
      Vec xp = xi, xm = xi;
      xp[i] += h;
      xm[i] -= h;
      return (mixed_derivative(a, x, xp, alpha, beta, step) -
              mixed_derivative(a, x, xm, alpha, beta, step)) /
             (2.0 * h);
    }
  }
  return a.eval(x, xi);
}

std::vector<Vec> direction_net(int d, int count, Rng rng) {
  std::vector<Vec> dirs;
  if (d == 1) {
    dirs.push_back(Vec{1.0});
    dirs.push_back(Vec{-1.0});
    return dirs;
  }
  if (d == 2) {
    for (int i = 0; i < count; ++i) {
      double th = kTwoPi * i / count;
      dirs.push_back(Vec{std::cos(th), std::sin(th)});
    }
    return dirs;
  }
  for (int i = 0; i < count; ++i) {
    double z = rng.uniform(-1.0, 1.0);
    double th = rng.uniform(0.0, kTwoPi);
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    dirs.push_back(Vec{r * std::cos(th), r * std::sin(th), z});
  }
  return dirs;
}

// Least-squares slope of log(y) on log(x), skipping vanishing entries.
// Returns false if fewer than two usable points remain.
bool loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys,
                  double* slope) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (ys[i] > 1e-280) {
      lx.push_back(std::log(xs[i]));
      ly.push_back(std::log(ys[i]));
    }
  }
  if (lx.size() < 2) return false;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= lx.size();
  my /= ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  *slope = sxy / sxx;
  return true;
}

std::vector<std::pair<std::array<int, kMaxDim>, std::array<int, kMaxDim>>>
multi_indices(int d, int max_total) {
  std::vector<std::pair<std::array<int, kMaxDim>, std::array<int, kMaxDim>>> out;
  // enumerate alpha, beta componentwise with |alpha|+|beta| <= max_total
  std::array<int, kMaxDim> alpha{0, 0, 0}, beta{0, 0, 0};
  std::function<void(int, int)> rec_beta;
  std::function<void(int, int)> rec_alpha = [&](int axis, int budget) {
    if (axis == d) {
      rec_beta(0, budget);
      return;
    }
    for (int v = 0; v <= budget; ++v) {
      alpha[axis] = v;
      rec_alpha(axis + 1, budget - v);
    }
    alpha[axis] = 0;
  };
  rec_beta = [&](int axis, int budget) {
    if (axis == d) {
      out.emplace_back(alpha, beta);
      return;
    }
    for (int v = 0; v <= budget; ++v) {
      beta[axis] = v;
      rec_beta(axis + 1, budget - v);
    }
    beta[axis] = 0;
  };
  rec_alpha(0, max_total);
  return out;
}

}  // namespace

OrderReport check_symbol_order(const Symbol& a, const OrderCheckConfig& cfg) {
  if (cfg.annuli.empty()) throw ConstructionError("order check: empty annuli");
  const int d = a.dim();
  Rng rng(cfg.seed);

  BoxRegion box;
  if (cfg.x_box) {
    box = *cfg.x_box;
  } else if (a.x_support()) {
    box = *a.x_support();
  } else {
    box.lo = Vec(d);
    box.hi = Vec(d);
    for (int i = 0; i < d; ++i) box.hi[i] = kTwoPi;
  }

  std::vector<Vec> xs;
  for (int i = 0; i < cfg.n_x; ++i) {
    Vec x(d);
    for (int j = 0; j < d; ++j) x[j] = rng.uniform(box.lo[j], box.hi[j]);
    xs.push_back(x);
  }
  std::vector<Vec> dirs;
  if (cfg.dir_center && d == 2) {
    double th0 = std::atan2((*cfg.dir_center)[1], (*cfg.dir_center)[0]);
    for (int i = 0; i < cfg.n_dir; ++i) {
      double f = cfg.n_dir == 1 ? 0.0 : -1.0 + 2.0 * i / (cfg.n_dir - 1);
      dirs.push_back(
          Vec{std::cos(th0 + f * cfg.dir_spread),
              std::sin(th0 + f * cfg.dir_spread)});
    }
  } else {
    dirs = direction_net(d, cfg.n_dir, rng.split("dirs"));
  }

  OrderReport report;
  report.slack = cfg.slack;
  report.all_ok = true;

  for (const auto& [alpha, beta] : multi_indices(d, cfg.max_deriv)) {
    DerivativeFit fit;
    fit.alpha = alpha;
    fit.beta = beta;
    int abs_beta = 0;
    for (int i = 0; i < d; ++i) abs_beta += beta[i];
    fit.bound_exponent = a.order() - abs_beta;

    for (double lam : cfg.annuli) {
      double sup = 0.0;
      for (const auto& x : xs) {
        for (const auto& dir : dirs) {
          for (int r = 0; r < cfg.n_radial; ++r) {
            double radius = lam * std::pow(2.0, double(r) / cfg.n_radial);
            Vec xi = dir * radius;
            Cplx v = mixed_derivative(a, x, xi, alpha, beta, 1e-4);
            sup = std::max(sup, std::abs(v));
          }
        }
      }
      fit.sup_per_annulus.push_back(sup);
    }

    double slope = 0.0;
    if (loglog_slope(cfg.annuli, fit.sup_per_annulus, &slope)) {
      fit.fitted_exponent = slope;
    } else {
      fit.fitted_exponent = -1e9;  // vanishing derivative: passes trivially
    }
    fit.ok = fit.fitted_exponent <= fit.bound_exponent + cfg.slack;
    report.all_ok = report.all_ok && fit.ok;
    report.fits.push_back(std::move(fit));
  }
  return report;
}

namespace {

// Sample points of the (x', xihat') neighborhood of p.
struct NeighborhoodSamples {
  std::vector<Vec> xs;
  std::vector<Vec> dirs;
};

NeighborhoodSamples neighborhood_samples(const PhaseDirection& p,
                                         const NeighborhoodSpec& nb) {
  p.validate();
  NeighborhoodSamples s;
  int d = p.x.n;
  s.xs.push_back(p.x);
  for (int i = 0; i < d; ++i) {
    Vec xp = p.x, xm = p.x;
    xp[i] += nb.x_radius;
    xm[i] -= nb.x_radius;
    s.xs.push_back(xp);
    s.xs.push_back(xm);
  }
  s.dirs.push_back(p.xi_hat);
  if (d == 2) {
    double th0 = std::atan2(p.xi_hat[1], p.xi_hat[0]);
    for (double dt : {-nb.ang_radius, nb.ang_radius})
      s.dirs.push_back(Vec{std::cos(th0 + dt), std::sin(th0 + dt)});
  } else if (d == 3) {
    // perturb within the tangent plane
    Vec up = std::abs(p.xi_hat[2]) < 0.9 ? Vec{0, 0, 1} : Vec{1, 0, 0};
    Vec t1(d);
    double c = up.dot(p.xi_hat);
    for (int i = 0; i < d; ++i) t1[i] = up[i] - c * p.xi_hat[i];
    t1 = t1 * (1.0 / t1.norm());
    Vec t2{p.xi_hat[1] * t1[2] - p.xi_hat[2] * t1[1],
           p.xi_hat[2] * t1[0] - p.xi_hat[0] * t1[2],
           p.xi_hat[0] * t1[1] - p.xi_hat[1] * t1[0]};
    for (const Vec& t : {t1, t2}) {
      for (double sgn : {-1.0, 1.0}) {
        Vec dir = p.xi_hat + t * (sgn * nb.ang_radius);
        s.dirs.push_back(dir * (1.0 / dir.norm()));
      }
    }
  }
  return s;
}

}  // namespace

bool esssupp_excludes(const Symbol& a, const PhaseDirection& p,
                      const std::vector<int>& decay_orders,
                      const NeighborhoodSpec& nb) {
  NeighborhoodSamples s = neighborhood_samples(p, nb);
  std::vector<double> sup;
  for (double lam : nb.lambdas) {
    double m = 0.0;
    for (const auto& x : s.xs)
      for (const auto& dir : s.dirs)
        m = std::max(m, std::abs(a.eval(x, dir * lam)));
    sup.push_back(m);
  }
  // tail check starts at the midpoint of the lambda ladder
  std::size_t j0 = nb.lambdas.size() / 2;
  for (int N : decay_orders) {
    for (std::size_t j = j0; j + 1 < nb.lambdas.size(); ++j) {
      double w0 = sup[j] * std::pow(nb.lambdas[j], N);
      double w1 = sup[j + 1] * std::pow(nb.lambdas[j + 1], N);
      if (w1 > w0 * (1.0 + 1e-6) + 1e-280) return false;
    }
  }
  return true;
}

bool is_elliptic_at(const Symbol& a, const PhaseDirection& p, double C,
                    double eps, const NeighborhoodSpec& nb) {
  if (!(C > 0.0) || !(eps > 0.0))
    throw ConstructionError("is_elliptic_at: C and eps must be positive");
  NeighborhoodSamples s = neighborhood_samples(p, nb);
  double lam_max = nb.lambdas.empty() ? 1024.0 : nb.lambdas.back();
  for (double lam = C; lam <= lam_max + 1e-12; lam *= 2.0) {
    double weight = eps * std::pow(1.0 + lam * lam, 0.5 * a.order());
    for (const auto& x : s.xs)
      for (const auto& dir : s.dirs)
        if (std::abs(a.eval(x, dir * lam)) < weight) return false;
  }
  return true;
}

}  // namespace microloc
