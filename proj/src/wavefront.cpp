#include "microloc/wavefront.hpp"

#include <algorithm>
#include <cmath>

#include "microloc/errors.hpp"
#include "microloc/fft.hpp"
#include "microloc/smooth.hpp"
#include "microloc/waves.hpp"

namespace microloc {

std::vector<double> default_wavefront_bands(const GridSpec& grid) {
  double n = grid.n[0];
  return {n / 32.0, n / 16.0, n / 8.0};
}

namespace {

void check_margins(const PhaseDirection& p, const GridSpec& grid,
                   const WavefrontParams& params) {
  if (!params.margin_guard) return;
  double L = grid.period[0];
  double lo = 0.2 * L + params.window_scale;
  double hi = 0.8 * L - params.window_scale;
  if (p.x[0] < lo || p.x[0] > hi)
    throw Error("microlocal estimate: point within one window scale of the "
                "time-window margins");
}

std::vector<Cplx> windowed_spectrum(const Field& u, const Vec& center,
                                    double scale) {
  const GridSpec& g = u.grid();
  std::vector<Cplx> v(u.values());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    auto idx = g.unflatten(i);
    double w = 1.0;
    for (int ax = 0; ax < g.dim; ++ax) {
      w *= bump(wrap_displacement(g.coord(ax, idx[ax]) - center[ax],
                                  g.period[ax]) /
                scale);
      if (w == 0.0) break;
    }
    v[i] *= w;
  }
  return fft_forward(g, v);
}

struct BandFit {
  std::vector<double> energies;
  double total = 0.0;
  double slope = 0.0;
  int usable = 0;
  bool top_two_below_floor = false;
};

BandFit band_fit(const std::vector<Cplx>& spectrum, const GridSpec& g,
                 const Vec& dir, const WavefrontParams& params,
                 const std::vector<double>& bands) {
  BandFit fit;
  double cos_half = std::cos(params.cone_half_angle);
  std::vector<double> I(bands.size(), 0.0);
  double vol = g.volume();
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    double e = std::norm(spectrum[i]);
    if (e == 0.0) continue;
    fit.total += vol * e;
    Vec xi = g.frequency(g.unflatten(i));
    double r = xi.norm();
    if (r == 0.0) continue;
    double c = dir.dot(xi) / r;
    if (c < cos_half) continue;
    for (std::size_t b = 0; b < bands.size(); ++b) {
      if (r >= bands[b] && r < 2.0 * bands[b]) {
        I[b] += vol * e;
        break;
      }
    }
  }
  fit.energies = I;

  double floor_abs = params.floor_rel * std::max(fit.total, 1e-300);
  std::vector<double> lx, ly;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    if (I[b] > floor_abs) {
      lx.push_back(std::log2(bands[b]));
      ly.push_back(std::log2(I[b]));
    }
  }
  fit.usable = int(lx.size());
  std::size_t nb = bands.size();
  fit.top_two_below_floor =
      nb >= 2 && I[nb - 1] <= floor_abs && I[nb - 2] <= floor_abs;
  if (fit.usable >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= lx.size();
    my /= ly.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    fit.slope = sxy / sxx;
  }
  return fit;
}

}  // namespace

SobolevEstimate raw_microlocal_fit(const Field& u, const PhaseDirection& p,
                                   const WavefrontParams& params) {
  p.validate();
  check_margins(p, u.grid(), params);
  std::vector<double> bands = params.bands.empty()
                                  ? default_wavefront_bands(u.grid())
                                  : params.bands;
  auto spec = windowed_spectrum(u, p.x, params.window_scale);
  BandFit fit = band_fit(spec, u.grid(), p.xi_hat, params, bands);

  SobolevEstimate est;
  est.point = p;
  est.band_energies = fit.energies;
  est.total_energy = fit.total;
  est.window_scale = params.window_scale;
  est.cone_half_angle = params.cone_half_angle;
  est.raw_slope = fit.slope;
  if (fit.usable < 2 || fit.top_two_below_floor) {
    est.sentinel = true;
  } else {
    est.s_est = fit.slope;  // raw fit carries the slope
  }
  return est;
}

SobolevEstimate microlocal_estimate(const Field& u, const PhaseDirection& p,
                                    const WavefrontParams& params,
                                    const CalibrationTable& cal) {
  SobolevEstimate est = raw_microlocal_fit(u, p, params);
  if (est.sentinel) return est;
  est.s_est = cal.alpha + cal.beta * est.raw_slope;
  if (est.s_est > params.smax_sentinel) est.sentinel = true;
  return est;
}

CalibrationTable calibrate(const GridSpec& grid, const WavefrontParams& params,
                           const std::vector<double>& s_labels,
                           const std::vector<uint64_t>& seeds) {
  if (s_labels.size() < 2)
    throw ConstructionError("calibrate: need at least two family labels");
  // probe at grid center along a characteristic direction
  PhaseDirection p;
  p.x = Vec(grid.dim);
  for (int i = 0; i < grid.dim; ++i) p.x[i] = 0.5 * grid.period[i];
  double inv = 1.0 / std::sqrt(2.0);
  p.xi_hat = grid.dim == 2 ? Vec{inv, -inv} : Vec{inv, -inv, 0.0};

  CalibrationTable cal;
  std::vector<double> xs, ys;
  for (double s : s_labels) {
    CalibrationRow row;
    row.s_label = s;
    double mean = 0.0;
    for (uint64_t seed : seeds) {
      Field u = random_hs_field(grid, s, seed);
      SobolevEstimate est = raw_microlocal_fit(u, p, params);
      if (est.sentinel)
        throw Error("calibrate: family s=" + std::to_string(s) +
                    " hit the sentinel floor");
      row.slopes.push_back(est.raw_slope);
      mean += est.raw_slope;
    }
    mean /= double(seeds.size());
    row.mean_slope = mean;
    xs.push_back(mean);
    ys.push_back(s);
    cal.rows.push_back(std::move(row));
  }

  // least squares s = alpha + beta * slope
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= xs.size();
  my /= ys.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  cal.beta = sxy / sxx;
  cal.alpha = my - cal.beta * mx;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double fitted = cal.alpha + cal.beta * xs[i];
    cal.rows[i].fitted_s = fitted;
    cal.max_residual = std::max(cal.max_residual, std::abs(fitted - ys[i]));
  }
  if (cal.max_residual > 0.15)
    throw Error("calibrate: residual " + std::to_string(cal.max_residual) +
                " exceeds 0.15; adjust window/cone/bands");
  return cal;
}

std::vector<SobolevEstimate> wavefront_scan(const Field& u,
                                            const std::vector<Vec>& x_net,
                                            const std::vector<Vec>& dir_net,
                                            const WavefrontParams& params,
                                            const CalibrationTable& cal) {
  std::vector<SobolevEstimate> out;
  std::vector<double> bands = params.bands.empty()
                                  ? default_wavefront_bands(u.grid())
                                  : params.bands;
  for (const auto& x : x_net) {
    std::vector<Cplx> spec;
    bool spec_ok = true;
    std::string err;
    try {
      PhaseDirection probe{x, dir_net.front() * (1.0 / dir_net.front().norm())};
      check_margins(probe, u.grid(), params);
      spec = windowed_spectrum(u, x, params.window_scale);
    } catch (const std::exception& ex) {
      spec_ok = false;
      err = ex.what();
    }
    for (const auto& rawdir : dir_net) {
      Vec dir = rawdir * (1.0 / rawdir.norm());
      SobolevEstimate est;
      est.point = PhaseDirection{x, dir};
      est.window_scale = params.window_scale;
      est.cone_half_angle = params.cone_half_angle;
      if (!spec_ok) {
        est.ok = false;
        est.error = err;
        out.push_back(std::move(est));
        continue;
      }
      BandFit fit = band_fit(spec, u.grid(), dir, params, bands);
      est.band_energies = fit.energies;
      est.total_energy = fit.total;
      est.raw_slope = fit.slope;
      if (fit.usable < 2 || fit.top_two_below_floor) {
        est.sentinel = true;
      } else {
        est.s_est = cal.alpha + cal.beta * fit.slope;
        if (est.s_est > params.smax_sentinel) est.sentinel = true;
      }
      out.push_back(std::move(est));
    }
  }
  return out;
}

}  // namespace microloc
