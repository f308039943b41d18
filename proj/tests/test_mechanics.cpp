#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "pivoting/kinematics.hpp"
#include "pivoting/presets.hpp"
#include "pivoting/statics.hpp"

using namespace pivot;

namespace {

// Independent re-derivation of the embedding: A on the wall plane, B on the
// floor plane, contact span L, P and C placed by rotating body offsets.
Vec2 expected_A(double theta, double L) {
  return {-L * std::cos(theta), L * std::sin(theta)};
}

ContactForceKnot slipping_forces(const StaticSolution& s,
                                 const ObjectSpec& o) {
  ContactForceKnot f;
  f.f_nA = s.f_nA;
  f.f_tA = o.mu_A * s.f_nA;
  f.f_nB = s.f_nB;
  f.f_tB = -o.mu_B * s.f_nB;
  return f;
}

}  // namespace

TEST_CASE("fk anchors for gear1") {
  const ObjectSpec o = make_gear1();

  auto g0 = fk(0.0, 0.0, o);
  CHECK(g0.A.x() == doctest::Approx(-0.084).epsilon(1e-14));
  CHECK(g0.A.y() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(g0.B.norm() == 0.0);

  auto g90 = fk(M_PI / 2, 0.0, o);
  CHECK(g90.A.x() == doctest::Approx(0.0).scale(1).epsilon(1e-12));
  CHECK(g90.A.y() == doctest::Approx(0.084).epsilon(1e-14));

  auto g45 = fk(M_PI / 4, 0.005, o);
  // frozen values from the closed-form embedding
  CHECK(g45.A.x() == doctest::Approx(-0.059396969619670).epsilon(1e-12));
  CHECK(g45.A.y() == doctest::Approx(0.059396969619670).epsilon(1e-12));
  CHECK(g45.P.x() == doctest::Approx(0.010606601717798213).epsilon(1e-12));
  CHECK(g45.P.y() == doctest::Approx(0.010606601717798213).epsilon(1e-12));
  CHECK(g45.C.x() == doctest::Approx(-0.022627416997969523).epsilon(1e-12));
  CHECK(g45.C.y() == doctest::Approx(0.036769552621700476).epsilon(1e-12));
  CHECK((g45.A - expected_A(M_PI / 4, o.length)).norm() < 1e-15);
}

TEST_CASE("fk domain and shape errors") {
  const ObjectSpec o = make_gear1();
  CHECK_THROWS_AS(fk(-0.2, 0.0, o), DomainError);
  CHECK_THROWS_AS(fk(2.0, 0.0, o), DomainError);
  CHECK_THROWS_AS(fk(0.3, 0.03, o), DomainError);
  CHECK_THROWS_AS(fk(0.3, 0.0, o, 2), ShapeError);
  CHECK_NOTHROW(fk(0.3, 0.0, make_peg3(), 2));
}

TEST_CASE("fk rigid link and plane embedding") {
  const ObjectSpec o = make_gear1();
  for (int i = 0; i <= 50; ++i) {
    const double th = i * (M_PI / 2) / 50;
    const auto g = fk(th, 0.004, o);
    CHECK(std::abs((g.A - g.B).norm() - o.length) < 1e-12);
    // A on the wall, B on the floor under the world embedding B=(b,0)
    const double b_x = -g.A.x();
    CHECK(b_x >= -1e-12);
    CHECK(g.A.y() >= -1e-12);
  }
}

TEST_CASE("force map is an isometry") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double th = std::abs(u(rng)) * M_PI / 10;
    const double fn = std::abs(u(rng)), ft = u(rng);
    const Vec2 f = world_force(th, fn, ft);
    CHECK(f.norm() == doctest::Approx(std::hypot(fn, ft)).epsilon(1e-12));
  }
}

TEST_CASE("peg two-mode geometry") {
  const ObjectSpec peg = make_peg3();
  const double gamma = peg.step_angle();
  CHECK(gamma == doctest::Approx(std::atan2(0.0175, 0.012)).epsilon(1e-14));

  // inactive corner touches down exactly at the step angle
  CHECK(inactive_corner_height(gamma, peg, 1) ==
        doctest::Approx(0.0).scale(1).epsilon(1e-14));
  CHECK(inactive_corner_height(gamma, peg, 2) ==
        doctest::Approx(0.0).scale(1).epsilon(1e-14));
  CHECK(inactive_corner_height(gamma - 0.1, peg, 1) > 0);
  CHECK(inactive_corner_height(gamma + 0.1, peg, 2) > 0);

  // contact span differs per mode
  const auto g1 = fk(0.3, 0.0, peg, 1);
  CHECK((g1.A - g1.B).norm() == doctest::Approx(peg.step_length).epsilon(1e-12));
  const auto g2 = fk(1.2, 0.0, peg, 2);
  const double span2 = std::hypot(peg.length, peg.width - peg.step_width);
  CHECK((g2.A - g2.B).norm() == doctest::Approx(span2).epsilon(1e-12));
}

TEST_CASE("equilibrium residual trivial cases") {
  ObjectSpec o = make_gear1();
  o.mass = 1e-12;  // effectively massless
  const auto geom = fk(0.7, 0.002, o);
  const Vec3 r = equilibrium_residual(geom, {}, {}, o);
  CHECK(r.norm() < 1e-10);
}

TEST_CASE("static solve puts the residual at zero") {
  const ObjectSpec o = make_gear1();
  const auto w = static_window(M_PI / 4, 0.0, o, 1, 20.0);
  REQUIRE(w.feasible);
  const StaticSolution s = w.mid();
  const auto geom = fk(M_PI / 4, 0.0, o);
  ControlKnot u{s.f_nP, s.f_tP};
  const Vec3 r = equilibrium_residual(geom, slipping_forces(s, o), u, o);
  CHECK(r.lpNorm<Eigen::Infinity>() < 1e-10);

  // the 3x3 linear-solve route agrees
  const auto s2 = static_solve_given_ftp(M_PI / 4, 0.0, s.f_tP, o);
  REQUIRE(s2.has_value());
  CHECK(s2->f_nA == doctest::Approx(s.f_nA).epsilon(1e-9));
  CHECK(s2->f_nB == doctest::Approx(s.f_nB).epsilon(1e-9));
  CHECK(s2->f_nP == doctest::Approx(s.f_nP).epsilon(1e-9));
}

TEST_CASE("mass perturbation shifts the y-residual by eps*g") {
  ObjectSpec o = make_gear1();
  const auto w = static_window(0.9, -0.003, o, 1, 20.0);
  REQUIRE(w.feasible);
  const StaticSolution s = w.mid();
  const auto geom = fk(0.9, -0.003, o);
  ControlKnot u{s.f_nP, s.f_tP};
  const auto fc = slipping_forces(s, o);
  const Vec3 r0 = equilibrium_residual(geom, fc, u, o);
  ObjectSpec heavier = o;
  heavier.mass = o.mass + 0.01;
  const Vec3 r1 = equilibrium_residual(geom, fc, u, heavier);
  CHECK(r1(1) - r0(1) == doctest::Approx(0.01 * kGravity).epsilon(1e-12));
  CHECK(r1(2) - r0(2) ==
        doctest::Approx(geom.C.x() * 0.01 * kGravity).epsilon(1e-12));
}

TEST_CASE("patch residual degenerates to doubled point contact") {
  const ObjectSpec o = make_gear1();
  const double fhw = o.face_halfwidth();
  const auto geom = fk(0.6, fhw, o);  // point contact at the vertex
  ControlKnot u{1.3, -0.4};
  ControlKnot u2{2 * 1.3, 2 * -0.4};
  ContactForceKnot fc;
  fc.f_nA = 0.8;
  fc.f_tA = 0.24;
  fc.f_nB = 1.1;
  fc.f_tB = -0.33;
  const Vec3 rp = patch_equilibrium_residual(geom, fc, u, o, 0.0);
  const Vec3 r2 = equilibrium_residual(geom, fc, u2, o);
  CHECK((rp - r2).lpNorm<Eigen::Infinity>() == 0.0);

  CHECK_THROWS_AS(patch_equilibrium_residual(geom, fc, u, o, o.width * 1.5),
                  DomainError);
}

TEST_CASE("patch zero-mass zero-force residual") {
  ObjectSpec o = make_gear2();
  o.mass = 1e-12;
  const auto geom = fk(0.5, 0.0, o);
  CHECK(patch_equilibrium_residual(geom, {}, {}, o, o.width / 4).norm() <
        1e-10);
}

TEST_CASE("equilibrium jacobian matches finite differences") {
  const ObjectSpec o = make_gear1();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u01(0.05, 0.95);
  for (int trial = 0; trial < 100; ++trial) {
    const double th = u01(rng) * M_PI / 2;
    const double py = (u01(rng) - 0.5) * o.width;
    const auto geom = fk(th, py, o);
    Eigen::Matrix<double, 7, 1> v;
    for (int i = 0; i < 7; ++i) v(i) = u01(rng) * 2;
    auto residual_at = [&](const Eigen::Matrix<double, 7, 1>& p) {
      ObjectSpec oo = o;
      oo.mass = p(0);
      ContactForceKnot fc;
      fc.f_nA = p(1);
      fc.f_tA = p(2);
      fc.f_nB = p(3);
      fc.f_tB = p(4);
      ControlKnot uu{p(5), p(6)};
      return equilibrium_residual(geom, fc, uu, oo);
    };
    const auto J = equilibrium_jacobian(geom, {v(5), v(6)}, o);
    for (int c = 0; c < 7; ++c) {
      auto vp = v, vm = v;
      const double h = 1e-6;
      vp(c) += h;
      vm(c) -= h;
      const Vec3 fd = (residual_at(vp) - residual_at(vm)) / (2 * h);
      for (int r = 0; r < 3; ++r)
        CHECK(J(r, c) == doctest::Approx(fd(r)).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("complementarity residuals classify stick and slip") {
  const ObjectSpec o = make_gear1();
  Knot k;
  k.geom = fk(0.8, 0.0, o);
  const auto w = static_window(0.8, 0.0, o, 1, 20.0);
  REQUIRE(w.feasible);
  const auto s = w.mid();
  k.u = {s.f_nP, s.f_tP};
  k.f = slipping_forces(s, o);

  SUBCASE("sticking at P") {
    k.x.p_y_dot_plus = k.x.p_y_dot_minus = 0.0;
    auto pairs = complementarity_residuals(k, o);
    // A and B ride their cone edges; products vanish where the splits do
    CHECK(pairs[0].second == doctest::Approx(0.0).scale(1).epsilon(1e-12));
    CHECK(pairs[3].second == doctest::Approx(0.0).scale(1).epsilon(1e-12));
    for (auto& [a, b] : pairs) CHECK(std::abs(a * b) < 1e-9);
  }
  SUBCASE("slipping at P on the cone boundary") {
    k.u.f_tP = o.mu_P * k.u.f_nP;
    k.x.p_y_dot_plus = 0.01;
    auto pairs = complementarity_residuals(k, o);
    CHECK(pairs[4].second == doctest::Approx(0.0).scale(1).epsilon(1e-12));
    CHECK(std::abs(pairs[4].first * pairs[4].second) < 1e-12);
    CHECK(pairs[5].second > 0);  // other side inactive
  }
}

TEST_CASE("euler integration") {
  StateKnot x;
  x.theta = 0.0;
  x.theta_dot = 0.0;
  CHECK(integrate_euler(x, 1.0).first == 0.0);
  x.theta = 0.1;
  x.theta_dot = 0.05;
  CHECK(integrate_euler(x, 1.0).first == doctest::Approx(0.15).epsilon(1e-15));
  CHECK_THROWS_AS(integrate_euler(x, 0.0), DomainError);
}

TEST_CASE("static windows exist through the lift for table objects") {
  for (const auto& o : {make_gear1(), make_gear2(), make_gear3()}) {
    for (double th : {0.0, 0.3, 0.8, 1.2, 1.45}) {
      const auto w = static_window(th, o.face_halfwidth() / 2, o, 1, 20.0);
      CHECK(w.feasible);
      if (w.feasible) {
        const auto s = w.mid();
        CHECK(s.f_nA >= -1e-10);
        CHECK(s.f_nB >= -1e-10);
        CHECK(std::abs(s.f_tP) <= o.mu_P * s.f_nP + 1e-9);
      }
    }
  }
}
