#include <cmath>

#include "doctest.h"
#include "flagship.hpp"
#include "microloc/errors.hpp"
#include "microloc/hamilton.hpp"
#include "microloc/rng.hpp"

using namespace microloc;

TEST_CASE("hamilton field of the wave operator") {
  HamiltonTangent t = hamilton_field(Vec{0, 0}, Vec{1, 1});
  CHECK(t.x_dot[0] == doctest::Approx(2.0));
  CHECK(t.x_dot[1] == doctest::Approx(-2.0));
  CHECK(t.xi_dot[0] == 0.0);
  CHECK(t.xi_dot[1] == 0.0);

  // H_P annihilates its own Hamiltonian (no x dependence in the box symbol)
  Symbol box = make_box_symbol(2);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    Vec xi{rng.uniform(-9, 9), rng.uniform(-9, 9)};
    CVec gx = box.grad_x(Vec{1, 2}, xi);
    Cplx hp = 2.0 * xi[0] * gx[0] - 2.0 * xi[1] * gx[1];
    CHECK(std::abs(hp) <= 1e-12);
  }
}

TEST_CASE("characteristic set membership") {
  double inv = 1.0 / std::sqrt(2.0);
  CHECK(in_characteristic_set(Vec{inv, inv}));
  CHECK_FALSE(in_characteristic_set(Vec{1.0, 0.0}));
  // the conormal of the traveling line singularity
  CHECK(in_characteristic_set(Vec{inv, -inv}));
  CHECK_THROWS_AS(in_characteristic_set(Vec{1.0, 1.0}), ConstructionError);
}

TEST_CASE("light ray flow") {
  double inv = 1.0 / std::sqrt(2.0);
  PhaseDirection p{Vec{0, 0}, Vec{inv, -inv}};

  SUBCASE("closed-form example") {
    PhaseDirection q = flow(p, std::sqrt(2.0), RayOrientation::Plus);
    CHECK(q.x[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q.x[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q.xi_hat[0] == p.xi_hat[0]);
    CHECK(q.xi_hat[1] == p.xi_hat[1]);
  }

  SUBCASE("t = 0 is the identity") {
    PhaseDirection q = flow(p, 0.0);
    CHECK(q.x[0] == 0.0);
    CHECK(q.x[1] == 0.0);
  }

  SUBCASE("group law and inverses are exact") {
    double t = 0.7, s = 1.9;
    PhaseDirection a = flow(flow(p, t), s);
    PhaseDirection b = flow(p, t + s);
    CHECK(a.x[0] == doctest::Approx(b.x[0]).epsilon(1e-15));
    CHECK(a.x[1] == doctest::Approx(b.x[1]).epsilon(1e-15));
    PhaseDirection back = flow(flow(p, t), -t);
    CHECK(back.x[0] == doctest::Approx(0.0));
    CHECK(back.x[1] == doctest::Approx(0.0));
  }

  SUBCASE("direction never changes and stays characteristic") {
    for (double t : {-2.0, 0.3, 5.0}) {
      PhaseDirection q = flow(p, t, RayOrientation::Minus);
      CHECK(q.xi_hat[0] == p.xi_hat[0]);
      CHECK(q.xi_hat[1] == p.xi_hat[1]);
      CHECK(in_characteristic_set(q.xi_hat));
    }
  }

  SUBCASE("off-characteristic base refuses") {
    PhaseDirection bad{Vec{0, 0}, Vec{1.0, 0.0}};
    CHECK_THROWS_AS(flow(bad, 1.0), ConstructionError);
  }
}

TEST_CASE("control certificate: degenerate rays") {
  // esssupp(b) inside ellip(e) and ellip(g): zero-length rays witness
  TubeSpec small = flagship::b_spec();
  small.par_halfwidth = 0.2;
  small.perp_halfwidth = 0.2;
  small.half_angle = 0.08;
  Symbol b = make_tube_cutoff(small);

  TubeSpec wide = flagship::b_spec();
  wide.par_halfwidth = 0.9;
  wide.par_plateau = 0.7;
  wide.perp_halfwidth = 0.9;
  wide.perp_plateau = 0.7;
  wide.half_angle = 0.3;
  wide.ang_plateau = 0.7;
  Symbol e = make_tube_cutoff(wide);
  TubeSpec gw = wide;
  gw.order = -1.0;
  Symbol g = make_tube_cutoff(gw);

  ControlNet net;
  net.x_box = *b.x_support();
  net.x_count = 3;
  net.dir_center = flagship::cone_dir();
  net.dir_spread = 0.1;
  net.dir_count = 5;
  net.extra_circle_dirs = 4;
  ControlCertificate cert = check_control(b, e, g, net);
  CHECK(cert.verdict);
  for (const auto& s : cert.samples)
    if (s.kind == ControlSample::Kind::RayWitness) CHECK(s.witness_t == 0.0);
}

TEST_CASE("control certificate: flagship triple") {
  TripleSpec t = flagship::triple();
  ControlCertificate cert = check_control(t.b, t.e, t.g, t.net);
  CHECK(cert.verdict);
  CHECK(cert.ray_witness > 0);      // the characteristic direction rays
  CHECK(cert.char_complement > 0);  // off-cone directions covered by g
  CHECK(cert.excluded > 0);         // far directions excluded from esssupp
  CHECK(cert.failed == 0);

  // nonzero-length witnesses flow backward (minus orientation reaches e)
  for (const auto& s : cert.samples)
    if (s.kind == ControlSample::Kind::RayWitness && s.witness_t > 0)
      CHECK(s.orientation == -1);
}

TEST_CASE("control certificate: e off the backward ray fails") {
  TripleSpec t = flagship::broken_triple();
  ControlCertificate cert = check_control(t.b, t.e, t.g, t.net);
  CHECK_FALSE(cert.verdict);
  CHECK(cert.failed > 0);
  bool listed = false;
  for (const auto& s : cert.samples)
    if (s.kind == ControlSample::Kind::Failed && !s.detail.empty())
      listed = true;
  CHECK(listed);
}

TEST_CASE("control certificate: monotone under enlarging ellip(g)") {
  TripleSpec t = flagship::triple();
  ControlCertificate before = check_control(t.b, t.e, t.g, t.net);
  REQUIRE(before.verdict);
  // add a nonnegative elliptic bump far away: enlarges ellip(g)
  TubeSpec far = flagship::g_spec();
  far.center = Vec{1.0, 5.0};
  far.par_halfwidth = 0.5;
  far.perp_halfwidth = 0.5;
  Symbol g_bigger = symbol_sum(t.g, make_tube_cutoff(far));
  ControlCertificate after = check_control(t.b, t.e, g_bigger, t.net);
  CHECK(after.verdict);
}

TEST_CASE("ladder control conditions for the shrunken symbol") {
  TripleSpec t = flagship::triple();
  Symbol g1 = flagship::g1_sym();
  ControlCertificate c1 = check_control(t.b, t.e, g1, t.net);
  CHECK(c1.verdict);
  for (int m : {1, 4}) {
    double shift = -0.5 * m;
    Symbol lhs = symbol_product(make_bracket_symbol(2, 1.0 + shift), g1);
    Symbol mid = symbol_product(make_bracket_symbol(2, shift), t.e);
    Symbol rhs = symbol_product(make_bracket_symbol(2, shift), t.g);
    ControlCertificate c2 = check_control(lhs, mid, rhs, flagship::g1_net());
    CHECK(c2.verdict);
  }
}

TEST_CASE("witness ray track stays inside ellip(g)") {
  TripleSpec t = flagship::triple();
  ControlCertificate cert = check_control(t.b, t.e, t.g, t.net);
  for (const auto& s : cert.samples) {
    if (s.kind == ControlSample::Kind::RayWitness && s.witness_t > 1.0) {
      auto rows = witness_ray_track(s, t.g, t.net);
      REQUIRE(!rows.empty());
      for (const auto& r : rows) CHECK(r[4] == 1.0);
      return;
    }
  }
  FAIL("no long ray witness found");
}
