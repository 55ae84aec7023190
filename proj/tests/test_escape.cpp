#include <cmath>

#include "doctest.h"
#include "flagship.hpp"
#include "microloc/errors.hpp"
#include "microloc/escape.hpp"
#include "microloc/rng.hpp"
#include "microloc/smooth.hpp"

using namespace microloc;

TEST_CASE("phi closed form") {
  EscapeSpec spec = flagship::escape_spec();

  SUBCASE("reference value at t = 0 for t0 = delta = gamma = 1") {
    EscapeSpec s1 = spec;
    s1.t0 = 1.0;
    s1.delta = 1.0;
    s1.gamma = 1.0;
    // exp(0 + 1/(0-1) - 1/(0+2)) = e^{-1.5}
    CHECK(escape_phi(0.0, s1) ==
          doctest::Approx(std::exp(-1.5)).epsilon(1e-12));
    CHECK(escape_phi(0.0, s1) == doctest::Approx(0.22313016).epsilon(1e-7));
  }

  SUBCASE("supported exactly on [-t0-delta, delta]") {
    CHECK(escape_phi(spec.delta, spec) == 0.0);
    CHECK(escape_phi(spec.delta + 0.1, spec) == 0.0);
    CHECK(escape_phi(-spec.t0 - spec.delta, spec) == 0.0);
    CHECK(escape_phi(-spec.t0 - spec.delta - 0.5, spec) == 0.0);
    CHECK(escape_phi(0.0, spec) > 0.0);
    CHECK(escape_phi(-1.2, spec) > 0.0);
  }

  SUBCASE("one-sided derivatives vanish at the endpoints") {
    for (double h : {1e-2, 1e-3}) {
      CHECK(std::abs(escape_phi(spec.delta - h, spec)) / h <= 1e-8);
      CHECK(std::abs(escape_phi(-spec.t0 - spec.delta + h, spec)) / h <= 1e-8);
    }
  }

  SUBCASE("derivative matches finite differences") {
    for (double t : {-1.1, -0.8, -0.3, 0.1}) {
      double h = 1e-6;
      double fd = (escape_phi(t + h, spec) - escape_phi(t - h, spec)) / (2 * h);
      CHECK(escape_phi_deriv(t, spec) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("negativity boundary of 2 phi' + gamma phi") {
  EscapeSpec spec = flagship::escape_spec(1.0);
  double t_star = escape_negativity_boundary(spec);

  // the bracket -gamma - 2/(t-d)^2 + 2/(t+t0+d)^2 changes sign at t_star
  auto bracket = [&](double t) {
    double d1 = t - spec.delta, d2 = t + spec.t0 + spec.delta;
    return -spec.gamma - 2.0 / (d1 * d1) + 2.0 / (d2 * d2);
  };
  CHECK(bracket(t_star - 1e-6) > 0.0);
  CHECK(bracket(t_star + 1e-6) < 0.0);

  // at the default (t0, delta, gamma) = (1, 0.25, 1) the positivity region
  // extends well past -t0: the narrow containment claim fails here
  CHECK(t_star > -spec.t0);
  CHECK(t_star == doctest::Approx(-0.575).epsilon(0.05));

  // the containment needs gamma >= 2/delta^2 - 2/(t0+delta)^2
  double gamma_min = 2.0 / (spec.delta * spec.delta) -
                     2.0 / ((spec.t0 + spec.delta) * (spec.t0 + spec.delta));
  CHECK(gamma_min == doctest::Approx(30.72).epsilon(0.01));
  EscapeSpec big = flagship::escape_spec(32.0);
  CHECK(escape_negativity_boundary(big) <= -big.t0 + 1e-9);
}

TEST_CASE("escape bundle construction") {
  EscapeSpec spec = flagship::escape_spec();
  EscapeBundle bundle = build_escape(spec);

  SUBCASE("value at the target: phi(0) <zeta>^{k-1/2}") {
    Vec zeta = flagship::cone_dir() * 40.0;
    Cplx a = bundle.a.eval(spec.target.x, zeta);
    double want = escape_phi(0.0, spec) *
                  std::pow(1.0 + zeta.norm2(), 0.5 * (spec.k - 0.5));
    CHECK(a.real() == doctest::Approx(want).epsilon(1e-10));
    CHECK(a.real() != 0.0);
  }

  SUBCASE("vanishes where t hits the support edge") {
    Vec z = spec.target.x;
    z[0] += spec.delta * flagship::cone_dir()[0];
    Vec zeta = flagship::cone_dir() * 40.0;
    CHECK(bundle.a.eval(z, zeta) == Cplx(0.0));
  }

  SUBCASE("vanishes where chi vanishes") {
    Vec z = spec.target.x;
    z[1] += 2.5;  // outside the y bump
    Vec zeta = flagship::cone_dir() * 40.0;
    CHECK(bundle.a.eval(z, zeta) == Cplx(0.0));
    CHECK(bundle.a.eval(spec.target.x, Vec{40.0, 0.0}) == Cplx(0.0));
  }

  SUBCASE("order fit lands at k - 1/2") {
    OrderCheckConfig cfg;
    cfg.max_deriv = 1;
    cfg.x_box = bundle.z_support;
    cfg.dir_center = spec.target.xi_hat;  // sample inside the direction cone
    cfg.dir_spread = 0.8 * spec.ang_halfwidth;
    OrderReport rep = check_symbol_order(bundle.a, cfg);
    CHECK(rep.all_ok);
    for (const auto& fit : rep.fits) {
      if (fit.alpha == std::array<int, 3>{0, 0, 0} &&
          fit.beta == std::array<int, 3>{0, 0, 0})
        CHECK(fit.fitted_exponent ==
              doctest::Approx(spec.k - 0.5).epsilon(0.15));
    }
  }

  SUBCASE("elliptic at the target on a computed neighborhood") {
    // radius where phi stays above phi(0)/2 along the flow coordinate
    double lo = 0.0, hi = spec.delta;
    double half = 0.5 * escape_phi(0.0, spec);
    for (int i = 0; i < 60; ++i) {
      double mid = 0.5 * (lo + hi);
      (escape_phi(mid, spec) >= half ? lo : hi) = mid;
    }
    NeighborhoodSpec nb;
    nb.x_radius = 0.25 * lo;  // t moves by x_radius * sqrt(2) at most
    nb.ang_radius = 0.01;
    CHECK(is_elliptic_at(bundle.a, spec.target, 16.0, half, nb));
  }

  SUBCASE("pads against the flagship g and e-pad symbols") {
    Symbol g = flagship::g_sym();
    Symbol e = flagship::e_pad_sym();
    EscapeBundle checked = build_escape(spec, &g, &e);
    CHECK(checked.a.eval(spec.target.x, flagship::cone_dir() * 40.0) !=
          Cplx(0.0));
  }

  SUBCASE("vanishing zhat0 on the cone support refuses") {
    EscapeSpec bad = spec;
    bad.ang_halfwidth = 1.0;  // cone reaches zhat0 = 0
    CHECK_THROWS_AS(build_escape(bad), ConstructionError);
  }

  SUBCASE("off-characteristic target refuses") {
    EscapeSpec bad = spec;
    bad.target = PhaseDirection{spec.target.x, Vec{1.0, 0.0}};
    CHECK_THROWS_AS(build_escape(bad), ConstructionError);
  }
}

TEST_CASE("a H_P(a): closed form against finite differences") {
  EscapeBundle bundle = build_escape(flagship::escape_spec());
  double err = a_hamilton_a_fd_error(bundle, 1000, 77);
  CHECK(err <= 1e-4);
}

TEST_CASE("a H_P(a): sign structure") {
  EscapeSpec spec = flagship::escape_spec();
  EscapeBundle bundle = build_escape(spec);
  Symbol aha = a_hamilton_a(bundle);
  Vec dir = flagship::cone_dir();

  SUBCASE("vanishes off supp chi") {
    Vec z = spec.target.x;
    z[1] += 2.5;
    CHECK(aha.eval(z, dir * 30.0) == Cplx(0.0));
  }

  SUBCASE("vanishes at the interior critical point of phi") {
    double lo = -1.2, hi = 0.2;
    for (int i = 0; i < 100; ++i) {
      double mid = 0.5 * (lo + hi);
      if (escape_phi_deriv(mid, spec) > 0)
        lo = mid;
      else
        hi = mid;
    }
    double t_peak = 0.5 * (lo + hi);
    Vec z = spec.target.x;
    z[0] += t_peak * dir[0];
    double val = std::abs(aha.eval(z, dir * 30.0));
    double scale = std::abs(aha.eval(spec.target.x, dir * 30.0)) + 1e-300;
    CHECK(val <= 1e-6 * scale);
  }

  SUBCASE("negative approaching the forward support edge") {
    // phi' < 0 near t = delta^-
    Vec z = spec.target.x;
    double t = spec.delta - 0.05;
    z[0] += t * dir[0];
    CHECK(aha.eval(z, dir * 30.0).real() < 0.0);
  }
}

TEST_CASE("sign condition sampling") {
  EscapeSpec spec = flagship::escape_spec(1.0);
  EscapeBundle bundle = build_escape(spec);
  Symbol e = flagship::e_pad_sym();
  SignSampleSpec sspec;
  sspec.n = 30000;
  SignReport rep = verify_sign_condition(bundle, e, spec.gamma, sspec);

  SUBCASE("negativity region matches the closed-form prediction") {
    CHECK(rep.region_matches_prediction);
    CHECK(rep.negatives > 0);
  }

  SUBCASE("measured negative t-range matches the analytic boundary") {
    CHECK(rep.neg_t_min >= -spec.t0 - spec.delta);
    CHECK(rep.neg_t_max <= rep.t_star + 1e-9);
    CHECK(rep.neg_t_max >= rep.t_star - 0.05);  // samples approach it
  }

  SUBCASE("gamma = 1 violates the narrow containment, honestly reported") {
    CHECK_FALSE(rep.paper_containment);
    CHECK(rep.negatives_outside_paper_K > 0);
    CHECK(!rep.offenders.empty());
    CHECK_FALSE(rep.verdict);
  }

  SUBCASE("exceptional region is elliptic for e and C stays finite") {
    CHECK(rep.exceptional_region_elliptic_for_e);
    CHECK(rep.C_finite);
    CHECK(rep.C_min > 0.0);
  }

  SUBCASE("gamma = 32 satisfies the narrow containment") {
    EscapeSpec big = flagship::escape_spec(32.0);
    EscapeBundle bigb = build_escape(big);
    SignReport rep32 = verify_sign_condition(bigb, e, big.gamma, sspec);
    CHECK(rep32.paper_containment);
    CHECK(rep32.region_matches_prediction);
    CHECK(rep32.exceptional_region_elliptic_for_e);
    CHECK(rep32.verdict);
  }
}

TEST_CASE("sum of squares decomposition") {
  EscapeSpec spec = flagship::escape_spec(1.0);
  EscapeBundle bundle = build_escape(spec);
  Symbol e = flagship::e_pad_sym();
  SignSampleSpec sspec;
  sspec.n = 20000;
  SignReport sign = verify_sign_condition(bundle, e, spec.gamma, sspec);
  REQUIRE(sign.C_finite);
  double C = std::max(1.0, 1.1 * sign.C_min);
  Symbol psi = make_sos_psi(bundle);
  auto [a1, a2] = sos_decomposition(bundle, e, psi, C, spec.gamma);
  Symbol aha = a_hamilton_a(bundle);

  Rng rng(13);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Rng r = rng.split(uint64_t(i));
    Vec z(2);
    for (int j = 0; j < 2; ++j)
      z[j] = r.uniform(bundle.z_support.lo[j] - 0.2,
                       bundle.z_support.hi[j] + 0.2);
    double th0 = std::atan2(spec.target.xi_hat[1], spec.target.xi_hat[0]);
    double th = th0 + r.uniform(-1.3, 1.3) * spec.ang_halfwidth;
    double lam = std::exp(r.uniform(std::log(2.0), std::log(512.0)));
    Vec zeta{lam * std::cos(th), lam * std::sin(th)};

    double ev = std::abs(e.eval(z, zeta));
    double av = std::abs(bundle.a.eval(z, zeta));
    double X = -aha.eval(z, zeta).real() -
               spec.gamma * std::sqrt(1.0 + zeta.norm2()) * av * av;
    double rhs = C * ev * ev + X;
    double lhs = std::norm(a1.eval(z, zeta)) + std::norm(a2.eval(z, zeta));
    double scale = std::abs(lhs) + std::abs(rhs) + C * ev * ev + 1e-300;
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  CHECK(worst <= 1e-8);

  SUBCASE("branch cases") {
    // where psi = 1 and chi = 0: a2 = 0 and a1^2 = C e^2
    Vec z = spec.target.x;
    z[1] += 2.6;  // chi = 0
    Vec zeta = flagship::cone_dir() * 60.0;
    CHECK(psi.eval(z, zeta).real() == doctest::Approx(1.0));
    CHECK(a2.eval(z, zeta) == Cplx(0.0));
    double ev = std::abs(e.eval(z, zeta));
    CHECK(std::norm(a1.eval(z, zeta)) ==
          doctest::Approx(C * ev * ev).epsilon(1e-10));

    // where psi = 0: a2 = 0 and a1^2 carries the full expression;
    // the probe point flows along the ray into the exceptional t-window
    Vec zk = spec.target.x;
    double tk = -spec.t0 - 0.1;
    zk[0] += tk * flagship::cone_dir()[0];
    zk[1] -= tk * flagship::cone_dir()[1];
    REQUIRE(psi.eval(zk, zeta).real() == doctest::Approx(0.0));
    CHECK(a2.eval(zk, zeta) == Cplx(0.0));
    double av = std::abs(bundle.a.eval(zk, zeta));
    double X = -aha.eval(zk, zeta).real() -
               spec.gamma * std::sqrt(1.0 + zeta.norm2()) * av * av;
    double ev2 = std::abs(e.eval(zk, zeta));
    CHECK(std::norm(a1.eval(zk, zeta)) ==
          doctest::Approx(C * ev2 * ev2 + X).epsilon(1e-8));
  }

  SUBCASE("smoothness surrogate: finite-difference derivatives stay bounded") {
    Rng r2(99);
    double worst_grad = 0.0;
    for (int i = 0; i < 300; ++i) {
      Rng r = r2.split(uint64_t(i));
      Vec z(2);
      for (int j = 0; j < 2; ++j)
        z[j] = r.uniform(bundle.z_support.lo[j], bundle.z_support.hi[j]);
      double th0 = std::atan2(spec.target.xi_hat[1], spec.target.xi_hat[0]);
      double th = th0 + r.uniform(-1.0, 1.0) * spec.ang_halfwidth;
      double lam = std::exp(r.uniform(std::log(8.0), std::log(256.0)));
      Vec zeta{lam * std::cos(th), lam * std::sin(th)};
      CVec g1 = a1.grad_x_fd(z, zeta);
      CVec g2 = a2.grad_x_fd(z, zeta);
      for (int j = 0; j < 2; ++j)
        worst_grad = std::max({worst_grad, std::abs(g1[j]), std::abs(g2[j])});
    }
    CHECK(worst_grad < 1e4);
  }

  SUBCASE("too-small C raises on the offending sample") {
    auto [b1, b2] =
        sos_decomposition(bundle, e, psi, 1e-6 * sign.C_min, spec.gamma);
    bool threw = false;
    try {
      for (int i = 0; i < 5000 && !threw; ++i) {
        Rng r = Rng(31).split(uint64_t(i));
        Vec z(2);
        for (int j = 0; j < 2; ++j)
          z[j] = r.uniform(bundle.z_support.lo[j], bundle.z_support.hi[j]);
        double th0 = std::atan2(spec.target.xi_hat[1], spec.target.xi_hat[0]);
        double th = th0 + r.uniform(-0.5, 0.5) * spec.ang_halfwidth;
        double lam = std::exp(r.uniform(std::log(8.0), std::log(256.0)));
        b1.eval(z, Vec{lam * std::cos(th), lam * std::sin(th)});
      }
    } catch (const ConstructionError&) {
      threw = true;
    }
    CHECK(threw);
  }
}
