#include <cmath>

#include "doctest.h"
#include "microloc/calculus.hpp"
#include "microloc/errors.hpp"
#include "microloc/rng.hpp"
#include "microloc/smooth.hpp"
#include "microloc/symbols.hpp"

using namespace microloc;

namespace {

Symbol chi(Vec c = Vec{3.0, 3.0}, double hw = 1.0) {
  BumpSpec s;
  s.center = c;
  s.halfwidth = Vec{hw, hw};
  return make_bump_multiplier(s);
}

Symbol cone(double half, double order = 0.0, Vec dir = Vec{1.0, 0.0}) {
  ConeSpec s;
  s.direction = dir;
  s.half_angle = half;
  s.order = order;
  return make_cone_cutoff(s);
}

// the documented composition pair: outer symbol chi~ <xi> carries a genuine
// second-order tail, inner symbol xi_1 chi is a first-order differential one
Symbol pair_outer() {
  return symbol_product(chi(Vec{3.4, 2.7}, 1.2), make_bracket_symbol(2, 1.0));
}
Symbol pair_inner() {
  return symbol_product(make_xi_coordinate_symbol(2, 1), chi());
}

BandProbeConfig small_cfg() {
  BandProbeConfig cfg;
  cfg.bands = {8, 16, 32};
  cfg.probes_per_band = 8;
  return cfg;
}

}  // namespace

TEST_CASE("composition residual vanishes for pure multipliers") {
  GridSpec g = GridSpec::make(2, 128);
  BandProbeConfig cfg = small_cfg();

  SUBCASE("both x-independent") {
    ResidualReport rep = composition_residual(
        make_bracket_symbol(2, 1.0), make_bracket_symbol(2, -0.5), g, cfg);
    for (double v : rep.residual_norms) CHECK(v <= 1e-10);
    CHECK(rep.verdict);
  }

  SUBCASE("both xi-independent") {
    ResidualReport rep =
        composition_residual(chi(), chi(Vec{3.3, 3.2}, 1.1), g, cfg);
    for (double v : rep.residual_norms) CHECK(v <= 1e-10);
    CHECK(rep.verdict);
  }
}

TEST_CASE("composition residual decays at order m1+m2-2") {
  GridSpec g = GridSpec::make(2, 256);
  BandProbeConfig cfg;
  cfg.bands = {8, 16, 32, 64};
  cfg.probes_per_band = 8;
  ResidualReport rep = composition_residual(pair_outer(), pair_inner(), g, cfg);
  CHECK(rep.target_exponent == doctest::Approx(0.0));
  CHECK(rep.fitted_exponent <= 0.3);
  CHECK(rep.verdict);
  CHECK_FALSE(rep.used_fd_gradients);
}

TEST_CASE("principal-symbol multiplicativity") {
  // with the first-order correction removed the residual is one order worse
  GridSpec g = GridSpec::make(2, 256);
  BandProbeConfig cfg;
  cfg.bands = {8, 16, 32, 64};
  cfg.probes_per_band = 6;
  ResidualReport rep =
      composition_residual(pair_outer(), pair_inner(), g, cfg, 0.3, false);
  CHECK(rep.target_exponent == doctest::Approx(1.0));
  CHECK(rep.fitted_exponent <= 1.3);
  // and the correction really is first order: the fit sits near slope 1
  CHECK(rep.fitted_exponent >= 0.5);
}

TEST_CASE("doubled grid moves fitted exponents by at most 0.15") {
  BandProbeConfig cfg = small_cfg();
  ResidualReport r128 = composition_residual(pair_outer(), pair_inner(),
                                             GridSpec::make(2, 128), cfg);
  ResidualReport r256 = composition_residual(pair_outer(), pair_inner(),
                                             GridSpec::make(2, 256), cfg);
  CHECK(std::abs(r128.fitted_exponent - r256.fitted_exponent) <= 0.15);
}

TEST_CASE("adjoint residual") {
  GridSpec g = GridSpec::make(2, 128);
  BandProbeConfig cfg = small_cfg();

  SUBCASE("real x-independent symbols are exactly self-adjoint") {
    ResidualReport rep = adjoint_residual(make_bracket_symbol(2, 1.0), g, cfg);
    for (double v : rep.residual_norms) CHECK(v <= 1e-10);
  }

  SUBCASE("real multiplication operators are exactly self-adjoint") {
    ResidualReport rep = adjoint_residual(chi(), g, cfg);
    for (double v : rep.residual_norms) CHECK(v <= 1e-10);
  }

  SUBCASE("chi(x)<xi> has an order m-1 adjoint defect") {
    ResidualReport rep = adjoint_residual(pair_outer(), g, cfg);
    CHECK(rep.target_exponent == doctest::Approx(0.0));
    CHECK(rep.fitted_exponent <= 0.3);
    CHECK(rep.verdict);
  }
}

TEST_CASE("commutator principal symbol") {
  GridSpec g = GridSpec::make(2, 128);
  BandProbeConfig cfg = small_cfg();

  SUBCASE("x-independent symbols commute") {
    ResidualReport rep = commutator_principal_check(
        make_bracket_symbol(2, 1.0), make_box_symbol(2), g, cfg);
    for (double v : rep.residual_norms) CHECK(v <= 1e-10);
  }

  SUBCASE("general pair decays at order m1+m2-2") {
    ResidualReport rep =
        commutator_principal_check(pair_outer(), pair_inner(), g, cfg);
    CHECK(rep.fitted_exponent <= 0.0 + 0.3);
    CHECK(rep.verdict);
  }

  SUBCASE("box commutators match the Hamilton bracket") {
    // the specialization behind the escape argument: sigma([P, A]) =
    // (1/i) H_P(a); residual order 2 + m2 - 2
    Symbol a2 = symbol_product(chi(), cone(0.3, -1.0));
    ResidualReport rep =
        commutator_principal_check(make_box_symbol(2), a2, g, cfg);
    CHECK(rep.target_exponent == doctest::Approx(-1.0));
    CHECK(rep.fitted_exponent <= -1.0 + 0.3);
    CHECK(rep.verdict);
  }
}

TEST_CASE("commutator with a locally linear cutoff acts by the slope") {
  // [Op(xi_0), Op(c(x_0))] = Op((1/i) c'(x_0)) exactly for this pair; on a
  // probe supported where c is linear the action is -i * slope
  GridSpec g = GridSpec::make(2, 256);
  double slope = 0.7;
  Symbol c = Symbol::from_terms(
      2, 0.0,
      {SeparableTerm{[slope](const Vec& x) {
                       double w = wrap_displacement(x[0] - 3.0, kTwoPi);
                       return Cplx(slope * w * plateau(w / 2.0, 0.5));
                     },
                     nullptr, nullptr, nullptr}},
      "ramp");
  Operator A1 = quantize(make_xi_coordinate_symbol(2, 0), g);
  Operator A2 = quantize(c, g);

  // probe localized where the ramp is exactly linear (|x0 - 3| < 1)
  std::vector<Cplx> v(g.total());
  for (std::size_t i = 0; i < g.total(); ++i) {
    Vec x = g.point(g.unflatten(i));
    double env = bump(wrap_displacement(x[0] - 3.0, kTwoPi) / 0.9) *
                 bump(wrap_displacement(x[1] - 3.0, kTwoPi) / 1.2);
    double ph = 20.0 * x[1];
    v[i] = env * Cplx(std::cos(ph), std::sin(ph));
  }
  Field u(g, std::move(v));
  Field comm = A1.apply(A2.apply(u)) - A2.apply(A1.apply(u));
  Field want = Cplx(0.0, -slope) * u;
  CHECK(l2_norm(comm - want) <= 1e-3 * l2_norm(u));
}

TEST_CASE("elliptic estimate experiment") {
  EstimateConfig cfg;
  cfg.resolutions = {64, 128};
  cfg.n_fields = 6;

  SUBCASE("a = a' gives a constant at most 1") {
    Symbol a = make_bracket_symbol(2, 1.0);
    ConstantReport rep = elliptic_estimate_experiment(a, a, 0.5, 2.0, cfg);
    CHECK(rep.hypothesis_ok);
    CHECK(rep.sup <= 1.0);
    CHECK(rep.sup >= 0.5);
    CHECK(rep.stable);
  }

  SUBCASE("narrow cone controlled by a wider cone, stable across grids") {
    EstimateConfig cfg3 = cfg;
    cfg3.resolutions = {64, 128, 256};
    Symbol a = symbol_product(chi(), cone(0.25));
    Symbol ap = cone(0.45);
    ConstantReport rep = elliptic_estimate_experiment(a, ap, 0.5, 2.0, cfg3);
    CHECK(rep.hypothesis_ok);
    CHECK(rep.stable);
    CHECK(rep.sup > 0.1);
  }

  SUBCASE("violated hypothesis refuses with a diagnostic") {
    Symbol a = symbol_product(chi(), cone(0.3, 0.0, Vec{1.0, 0.0}));
    Symbol ap = cone(0.3, 0.0, Vec{-1.0, 0.0});  // opposite cone
    CHECK_THROWS_AS(elliptic_estimate_experiment(a, ap, 0.0, 2.0, cfg),
                    HypothesisError);
  }
}

TEST_CASE("parametrix factor") {
  Symbol a = symbol_product(chi(), cone(0.25, 1.0));
  Symbol ap = cone(0.45, 1.0);
  Symbol psi = cone(0.35);  // 1 near esssupp(a) directions, inside ellip(a')
  double C = 8.0;
  Symbol chi_C = make_radial_cutoff(2, C, 4.0);
  Symbol g = parametrix_factor(a, ap, C, psi, chi_C);

  SUBCASE("pointwise identity g a' = (1 - chi_C) psi a") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
      Rng r = rng.split(uint64_t(i));
      Vec x{r.uniform(2, 4), r.uniform(2, 4)};
      double th = r.uniform(-0.6, 0.6);
      double lam = std::exp(r.uniform(std::log(2.0), std::log(600.0)));
      Vec xi{lam * std::cos(th), lam * std::sin(th)};
      Cplx lhs = g.eval(x, xi) * ap.eval(x, xi);
      Cplx rhs = (1.0 - chi_C.eval(x, xi)) * psi.eval(x, xi) * a.eval(x, xi);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(rhs) + 1.0));
    }
  }

  SUBCASE("vanishes below the frequency cutoff") {
    CHECK(g.eval(Vec{3, 3}, Vec{3.0, 0.0}) == Cplx(0.0));
  }

  SUBCASE("order is m - m'") {
    CHECK(g.order() == doctest::Approx(0.0));
    OrderCheckConfig ocfg;
    ocfg.max_deriv = 1;
    OrderReport rep = check_symbol_order(g, ocfg);
    CHECK(rep.all_ok);
  }

  SUBCASE("a = a' reduces to the pure cutoff (1 - chi_C) psi") {
    Symbol gid = parametrix_factor(ap, ap, C, psi, chi_C);
    Rng rng(6);
    for (int i = 0; i < 50; ++i) {
      Rng r = rng.split(uint64_t(i));
      double th = r.uniform(-0.3, 0.3);
      double lam = std::exp(r.uniform(std::log(16.0), std::log(600.0)));
      Vec xi{lam * std::cos(th), lam * std::sin(th)};
      Cplx want = (1.0 - chi_C.eval(Vec{3, 3}, xi)) * psi.eval(Vec{3, 3}, xi);
      CHECK(std::abs(gid.eval(Vec{3, 3}, xi) - want) <=
            1e-12 * (std::abs(want) + 1.0));
    }
  }

  SUBCASE("division by a vanishing a' raises") {
    Symbol ap_bad = cone(0.2, 1.0);  // vanishes on part of supp psi
    CHECK_THROWS_AS(parametrix_factor(a, ap_bad, C, psi, chi_C),
                    ConstructionError);
  }
}

TEST_CASE("garding experiments") {
  EstimateConfig cfg;
  cfg.resolutions = {64, 128};
  cfg.n_fields = 6;

  SUBCASE("exact B*B quadratic forms are nonnegative") {
    GridSpec g = GridSpec::make(2, 128);
    Operator B = quantize(symbol_product(chi(), make_bracket_symbol(2, 0.5)), g);
    Rng rng(9);
    for (int i = 0; i < 6; ++i) {
      Field u = random_band_probe(g, 4.0 * (i + 1), 8.0 * (i + 1),
                                  rng.split(uint64_t(i)));
      Field Bu = B.apply(u);
      Cplx q = inner(B.adjoint().apply(Bu), u);
      // Re<B*Bu, u> = ||Bu||^2 exactly: C = 0 suffices
      CHECK(q.real() >= -1e-12);
      CHECK(q.real() ==
            doctest::Approx(l2_norm(Bu) * l2_norm(Bu)).epsilon(1e-10));
    }
  }

  SUBCASE("square symbols fit a stable constant") {
    EstimateConfig cfg3 = cfg;
    cfg3.resolutions = {64, 128, 256};
    Symbol b = symbol_product(chi(), make_bracket_symbol(2, 0.5));
    ConstantReport rep = garding_experiment(symbol_product(b, b), nullptr,
                                            2.0, cfg3);
    CHECK(rep.hypothesis_ok);
    CHECK(rep.stable);
  }

  SUBCASE("microlocalized form fits a stable constant") {
    EstimateConfig cfg3 = cfg;
    cfg3.resolutions = {64, 128, 256};
    Symbol asym = symbol_product(symbol_product(chi(), cone(0.2)),
                                 symbol_product(chi(), cone(0.2)));
    Symbol bloc = cone(0.4);
    ConstantReport rep = garding_experiment(asym, &bloc, 2.0, cfg3);
    CHECK(rep.hypothesis_ok);
    CHECK(rep.stable);
  }

  SUBCASE("a strictly negative low-frequency bubble is absorbed") {
    // a = (chi <xi>^{1/2})^2 - 3 bump(|xi|/6): negative for small |xi| only
    Symbol b = symbol_product(chi(), make_bracket_symbol(2, 0.5));
    SeparableTerm bubble;
    bubble.freq = [](const Vec& xi) {
      return Cplx(-3.0 * bump(xi.norm() / 6.0));
    };
    bubble.freq_grad = [](const Vec& xi) {
      CVec g(2);
      double r = xi.norm();
      if (r == 0.0) return g;
      double d = -3.0 * bump_deriv(r / 6.0) / 6.0;
      for (int j = 0; j < 2; ++j) g[j] = d * xi[j] / r;
      return g;
    };
    Symbol a = symbol_sum(symbol_product(b, b),
                          Symbol::from_terms(2, 0.0, {bubble}, "bubble"));
    ConstantReport rep = garding_experiment(a, nullptr, 2.0, cfg);
    CHECK(rep.hypothesis_ok);
    CHECK(rep.sup > 0.01);   // the bubble genuinely costs a constant
    CHECK(rep.stable);
  }

  SUBCASE("negative principal symbol refuses") {
    Symbol bad = symbol_scale(
        symbol_product(chi(), make_bracket_symbol(2, 1.0)), -1.0);
    CHECK_THROWS_AS(garding_experiment(bad, nullptr, 2.0, cfg),
                    HypothesisError);
  }
}
