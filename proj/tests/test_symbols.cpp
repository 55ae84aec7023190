#include <cmath>

#include "doctest.h"
#include "microloc/errors.hpp"
#include "microloc/rng.hpp"
#include "microloc/symbols.hpp"

using namespace microloc;

namespace {

Symbol test_cone(double half_angle = 0.3, double order = 0.0) {
  ConeSpec spec;
  spec.direction = Vec{1.0, 0.0};
  spec.half_angle = half_angle;
  spec.order = order;
  return make_cone_cutoff(spec);
}

Symbol test_bump() {
  BumpSpec spec;
  spec.center = Vec{3.0, 3.0};
  spec.halfwidth = Vec{0.8, 0.8};
  return make_bump_multiplier(spec);
}

}  // namespace

TEST_CASE("box symbol values") {
  Symbol box2 = make_box_symbol(2);
  CHECK(box2.eval(Vec{0, 0}, Vec{1, 1}).real() == doctest::Approx(0.0));
  CHECK(box2.eval(Vec{0, 0}, Vec{2, 0}).real() == doctest::Approx(4.0));
  Symbol box3 = make_box_symbol(3);
  CHECK(box3.eval(Vec{0, 0, 0}, Vec{1, 1, 1}).real() == doctest::Approx(-1.0));
  CHECK(box2.order() == doctest::Approx(2.0));
  CHECK_THROWS_AS(make_box_symbol(1), DimensionError);
}

TEST_CASE("bracket symbol values") {
  Symbol b0 = make_bracket_symbol(2, 0.0);
  CHECK(b0.eval(Vec{0, 0}, Vec{7, -3}).real() == doctest::Approx(1.0));
  Symbol b2 = make_bracket_symbol(2, 2.0);
  CHECK(b2.eval(Vec{0, 0}, Vec{0, 0}).real() == doctest::Approx(1.0));
  Symbol b1 = make_bracket_symbol(2, 1.0);
  // <(3,4)> = (1 + 25)^{1/2}
  CHECK(b1.eval(Vec{0, 0}, Vec{3, 4}).real() ==
        doctest::Approx(std::sqrt(26.0)).epsilon(1e-12));
}

TEST_CASE("symbol algebra") {
  Symbol b1 = make_bracket_symbol(2, 1.0);
  Symbol prod = symbol_product(b1, b1);
  Symbol b2 = make_bracket_symbol(2, 2.0);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    Vec xi{rng.uniform(-30, 30), rng.uniform(-30, 30)};
    Vec x{rng.uniform(0, 6), rng.uniform(0, 6)};
    CHECK(std::abs(prod.eval(x, xi) - b2.eval(x, xi)) <=
          1e-12 * std::abs(b2.eval(x, xi)));
  }
  CHECK(prod.order() == doctest::Approx(2.0));

  Symbol zero = symbol_sum(b1, symbol_negate(b1));
  for (int i = 0; i < 10; ++i) {
    Vec xi{rng.uniform(-30, 30), rng.uniform(-30, 30)};
    CHECK(std::abs(zero.eval(Vec{1, 1}, xi)) <= 1e-14);
  }

  Symbol box = make_box_symbol(2);
  Symbol conj = symbol_conjugate(box);
  for (int i = 0; i < 10; ++i) {
    Vec xi{rng.uniform(-30, 30), rng.uniform(-30, 30)};
    CHECK(conj.eval(Vec{0, 0}, xi) == box.eval(Vec{0, 0}, xi));
  }

  CHECK_THROWS_AS(symbol_product(make_box_symbol(2), make_box_symbol(3)),
                  DimensionError);
}

TEST_CASE("analytic gradients agree with finite differences") {
  Rng rng(11);
  for (const Symbol& s : {make_box_symbol(2), make_bracket_symbol(2, 1.5),
                          make_eps_bracket_symbol(2, 0.25, -2.0), test_cone(),
                          test_bump(),
                          symbol_product(test_bump(), test_cone())}) {
    REQUIRE(s.has_analytic_gradients());
    for (int i = 0; i < 40; ++i) {
      Vec x{rng.uniform(2.0, 4.0), rng.uniform(2.0, 4.0)};
      Vec xi{rng.uniform(5.0, 40.0), rng.uniform(-20.0, 20.0)};
      CVec ga = s.grad_xi(x, xi);
      CVec gf = s.grad_xi_fd(x, xi);
      CVec ha = s.grad_x(x, xi);
      CVec hf = s.grad_x_fd(x, xi);
      double scale = 0.0;
      for (int j = 0; j < 2; ++j)
        scale = std::max({scale, std::abs(ga[j]), std::abs(ha[j]), 1e-6});
      for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(ga[j] - gf[j]) <= 1e-4 * scale);
        CHECK(std::abs(ha[j] - hf[j]) <= 1e-4 * scale);
      }
    }
  }
}

TEST_CASE("symbol order fits") {
  OrderCheckConfig cfg;
  cfg.max_deriv = 2;

  SUBCASE("bracket squared: d/dxi0 grows with exponent 1") {
    // |d_{xi0} <xi>^2| = 2|xi0|: slope 1 over dyadic annuli
    OrderReport rep = check_symbol_order(make_bracket_symbol(2, 2.0), cfg);
    for (const auto& fit : rep.fits) {
      if (fit.beta[0] == 1 && fit.beta[1] == 0 && fit.alpha[0] == 0 &&
          fit.alpha[1] == 0)
        CHECK(fit.fitted_exponent == doctest::Approx(1.0).epsilon(0.05));
    }
    CHECK(rep.all_ok);
  }

  SUBCASE("constant symbol: all exponents <= 0") {
    OrderReport rep = check_symbol_order(make_constant_symbol(2, 1.0), cfg);
    for (const auto& fit : rep.fits)
      CHECK(fit.fitted_exponent <= 0.0 + rep.slack);
    CHECK(rep.all_ok);
  }

  SUBCASE("box symbol: second xi derivative is constant") {
    OrderReport rep = check_symbol_order(make_box_symbol(2), cfg);
    for (const auto& fit : rep.fits) {
      if (fit.beta[0] == 2 && fit.beta[1] == 0 && fit.alpha[0] == 0 &&
          fit.alpha[1] == 0)
        CHECK(std::abs(fit.fitted_exponent) <= 0.1);
    }
    CHECK(rep.all_ok);
  }

  SUBCASE("builders pass at their declared order") {
    for (const Symbol& s :
         {make_bracket_symbol(2, -1.0), test_cone(0.3, 1.0),
          symbol_product(test_bump(), make_bracket_symbol(2, 1.0))}) {
      OrderReport rep = check_symbol_order(s, cfg);
      CHECK(rep.all_ok);
    }
  }
}

TEST_CASE("essential support exclusion") {
  NeighborhoodSpec nb;

  SUBCASE("bracket decays nowhere") {
    Symbol b = make_bracket_symbol(2, 1.0);
    PhaseDirection p{Vec{1, 1}, Vec{1, 0}};
    CHECK_FALSE(esssupp_excludes(b, p, {1, 2, 4}, nb));
  }

  SUBCASE("cone cutoff excluded outside the cone closure") {
    Symbol c = test_cone(0.3);
    PhaseDirection away{Vec{1, 1}, Vec{0, 1}};  // angle pi/2 from cone axis
    CHECK(esssupp_excludes(c, away, {1, 2, 4}, nb));
    PhaseDirection inside{Vec{1, 1}, Vec{1, 0}};
    CHECK_FALSE(esssupp_excludes(c, inside, {1, 2, 4}, nb));
  }

  SUBCASE("x-support miss excludes") {
    Symbol s = symbol_product(test_bump(), make_bracket_symbol(2, 1.0));
    PhaseDirection far{Vec{0.5, 0.5}, Vec{1, 0}};  // bump sits at (3,3)
    CHECK(esssupp_excludes(s, far, {1, 2, 4}, nb));
  }
}

TEST_CASE("ellipticity predicate") {
  SUBCASE("bracket is elliptic everywhere at eps 1/2") {
    Symbol b = make_bracket_symbol(2, 1.5);
    PhaseDirection p{Vec{2, 2}, Vec{0.6, 0.8}};
    CHECK(is_elliptic_at(b, p, 16.0, 0.5));
  }

  SUBCASE("box symbol is not elliptic on the light cone") {
    Symbol box = make_box_symbol(2);
    double inv = 1.0 / std::sqrt(2.0);
    PhaseDirection on_cone{Vec{1, 1}, Vec{inv, inv}};
    CHECK_FALSE(is_elliptic_at(box, on_cone, 16.0, 0.1));
  }

  SUBCASE("box symbol is elliptic in the timelike direction") {
    // |xi0^2 - xi1^2| ~ lambda^2 near (1,0)
    Symbol box = make_box_symbol(2);
    PhaseDirection timelike{Vec{1, 1}, Vec{1, 0}};
    CHECK(is_elliptic_at(box, timelike, 16.0, 0.5));
  }

  SUBCASE("elliptic neighborhoods are open: nearby points stay elliptic") {
    Symbol c = test_cone(0.3);
    PhaseDirection p{Vec{1, 1}, Vec{1, 0}};
    REQUIRE(is_elliptic_at(c, p, 16.0, 0.5));
    for (double dt : {-0.02, 0.02}) {
      PhaseDirection q{Vec{1.05, 0.95}, Vec{std::cos(dt), std::sin(dt)}};
      CHECK(is_elliptic_at(c, q, 16.0, 0.5));
    }
  }

  SUBCASE("ellipticity forbids rapid decay for m >= 0") {
    for (const Symbol& s : {make_bracket_symbol(2, 0.5), test_cone(0.4)}) {
      PhaseDirection p{Vec{2, 2}, Vec{1, 0}};
      if (is_elliptic_at(s, p, 16.0, 0.1)) CHECK_FALSE(esssupp_excludes(s, p));
    }
  }
}

TEST_CASE("phase direction validation") {
  PhaseDirection p = PhaseDirection::make(Vec{0, 0}, Vec{3, 4});
  CHECK(p.xi_hat.norm() == doctest::Approx(1.0).epsilon(1e-13));
  p.validate();
  PhaseDirection bad;
  bad.x = Vec{0, 0};
  bad.xi_hat = Vec{1.0, 0.5};
  CHECK_THROWS_AS(bad.validate(), ConstructionError);
}
