#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "pivoting/margins.hpp"
#include "pivoting/presets.hpp"

using namespace pivot;

namespace {

struct KnotSampler {
  ObjectSpec obj;
  std::mt19937_64 rng{20240802};
  std::uniform_real_distribution<double> u01{0.0, 1.0};

  explicit KnotSampler(ObjectSpec o) : obj(std::move(o)) {}

  std::optional<KnotMarginInputs> next() {
    const double th = 0.04 + u01(rng) * (1.48 - 0.04);
    const double fhw = obj.face_halfwidth();
    const double py = (2 * u01(rng) - 1) * fhw * 0.95;
    const auto w = static_window(th, py, obj, 1, 20.0);
    if (!w.feasible || w.fnP_hi - w.fnP_lo < 1e-6) return std::nullopt;
    const double f = w.fnP_lo + (0.1 + 0.8 * u01(rng)) * (w.fnP_hi - w.fnP_lo);
    const auto s = w.at(f);
    return make_margin_inputs(fk(th, py, obj), ControlKnot{s.f_nP, s.f_tP},
                              obj);
  }
};

bool interval_close(const MarginInterval& a, const MarginInterval& b,
                    double rel) {
  auto side_close = [&](double va, bool ua, double vb, bool ub) {
    const double cap = 1e6;
    const bool big_a = ua || va > cap * (1 - 1e-6);
    const bool big_b = ub || vb > cap * (1 - 1e-6);
    if (big_a || big_b) return big_a == big_b;
    return std::abs(va - vb) <= rel * std::max({1e-2, va, vb}) + 1e-10;
  };
  return side_close(a.eps_plus, a.unbounded_plus, b.eps_plus,
                    b.unbounded_plus) &&
         side_close(a.eps_minus, a.unbounded_minus, b.eps_minus,
                    b.unbounded_minus);
}

}  // namespace

TEST_CASE("mass and com margins match the bisection oracle") {
  for (const auto& obj : {make_gear1(), make_gear2(), make_gear3()}) {
    KnotSampler sampler(obj);
    int tested = 0;
    while (tested < 250) {
      auto in = sampler.next();
      if (!in) continue;
      ++tested;
      const auto m_cf = mass_margin(*in);
      const auto m_or = margin_oracle(*in, MarginKind::kMassForce);
      CHECK(interval_close(m_cf, m_or, 1e-8));
      const auto c_cf = com_margin(*in);
      const auto c_or = margin_oracle(*in, MarginKind::kComOffset);
      CHECK(interval_close(c_cf, c_or, 1e-8));
    }
  }
}

TEST_CASE("friction axis margins match the bisection oracle") {
  KnotSampler sampler(make_gear1());
  int tested = 0;
  while (tested < 200) {
    auto in = sampler.next();
    if (!in) continue;
    ++tested;
    for (auto kind : {MarginKind::kFrictionA, MarginKind::kFrictionB}) {
      const auto cf = friction_margin(*in, kind);
      const auto orc = margin_oracle(*in, kind);
      CHECK(interval_close(cf, orc, 1e-8));
    }
  }
}

TEST_CASE("zero moment arm gives an unbounded mass margin side") {
  const ObjectSpec o = make_gear1();
  // C_x crosses zero at tan(theta) = l/w
  const double th_star = std::atan2(o.length, o.width);
  const auto w = static_window(th_star, 0.003, o, 1, 20.0);
  REQUIRE(w.feasible);
  const auto s = w.mid();
  auto in = make_margin_inputs(fk(th_star, 0.003, o),
                               ControlKnot{s.f_nP, s.f_tP}, o);
  in.C_x = 0.0;  // exactly on the crossing
  const auto m = mass_margin(in);
  CHECK(m.unbounded_minus);
  CHECK_FALSE(m.unbounded_plus);
  // bounded only by the floor-contact condition
  CHECK(m.eps_plus ==
        doctest::Approx(in.mu_A * in.F_x - in.F_y - in.weight()).epsilon(1e-12));
}

TEST_CASE("mass margin branches follow the sign of C_x") {
  KnotSampler sampler(make_gear1());
  int seen_pos = 0, seen_neg = 0;
  while (seen_pos < 20 || seen_neg < 20) {
    auto in = sampler.next();
    if (!in) continue;
    const auto m = mass_margin(*in);
    if (in->C_x > kComArmTol) {
      ++seen_pos;
      CHECK_FALSE(m.unbounded_minus);  // heavier side bounded by A contact
    } else if (in->C_x < -kComArmTol) {
      ++seen_neg;
      CHECK(m.unbounded_minus);
    }
    CHECK_FALSE(m.unbounded_plus);
  }
}

TEST_CASE("A-side mass bound diverges monotonically as C_x -> 0") {
  const ObjectSpec o = make_gear1();
  KnotSampler sampler(o);
  auto base = sampler.next();
  REQUIRE(base.has_value());
  // force the geometry arm while keeping the rest fixed: the A-side bound is
  // b1 / C_x with b1 continuous in C_x, so it diverges as C_x -> 0+.
  double last = 0.0;
  for (int k = 1; k <= 6; ++k) {
    KnotMarginInputs in = *base;
    in.C_x = std::pow(10.0, -k) * o.length;
    // rebalance the control moment so the knot stays in equilibrium
    in.M_P = -in.C_x * in.weight() +
             (-(in.mu_A * in.A.x() - in.A.y())) * in.f_nA;
    const auto m = mass_margin(in);
    REQUIRE_FALSE(m.unbounded_minus);
    if (k > 1) CHECK(m.eps_minus > last);
    last = m.eps_minus;
  }
}

TEST_CASE("floor-contact bound is affine in the control") {
  // Eq-level property: the bound b2 = mu_A F_x - F_y - mg responds to f_nP
  // with slope mu_A dFx/dfnP - dFy/dfnP at fixed geometry.
  const ObjectSpec o = make_gear1();
  const double th = 0.9;
  const auto geom = fk(th, 0.002, o);
  const double c = std::cos(th), s = std::sin(th);
  const double slope_expected = o.mu_A * (-c) - s;
  auto bound = [&](double fnP) {
    const Vec2 f = world_force(th, fnP, 0.3);
    return o.mu_A * f.x() - f.y() - o.weight();
  };
  const double d = (bound(2.0) - bound(1.0));
  CHECK(d == doctest::Approx(slope_expected).epsilon(1e-12));
  const double d2 = (bound(3.0) - bound(2.0));
  CHECK(d == doctest::Approx(d2).epsilon(1e-12));
}

TEST_CASE("com margin hits zero when the A contact is critical") {
  const ObjectSpec o = make_gear1();
  // f_nA == 0 can only occur at a static-window endpoint; find one where it
  // is the binding constraint.
  bool found = false;
  for (double th = 0.1; th < 1.5 && !found; th += 0.05) {
    for (double py = -0.009; py < 0.0095 && !found; py += 0.002) {
      const auto w = static_window(th, py, o, 1, 20.0);
      if (!w.feasible) continue;
      for (double f_star : {w.fnP_lo, w.fnP_hi}) {
        const auto s = w.at(f_star);
        if (std::abs(s.f_nA) > 1e-9) continue;
        auto in = make_margin_inputs(fk(th, py, o),
                                     ControlKnot{s.f_nP, s.f_tP}, o);
        const auto m = com_margin(in);
        CHECK(m.eps_plus == doctest::Approx(0.0).scale(1).epsilon(1e-9));
        found = true;
        break;
      }
    }
  }
  CHECK(found);
}

TEST_CASE("friction constraint residuals") {
  KnotSampler sampler(make_gear1());
  auto in = sampler.next();
  while (!in) in = sampler.next();

  SUBCASE("nominal interior point") {
    const auto g = friction_margin_constraints(*in, 0.0, 0.0);
    for (double v : g) CHECK(v < 1e-9);
  }
  SUBCASE("box violated by exactly delta") {
    const double delta = 0.123;
    const auto g =
        friction_margin_constraints(*in, in->mu_A * in->f_nA + delta, 0.0);
    CHECK(g[2] == doctest::Approx(delta).epsilon(1e-12));
  }
}

TEST_CASE("friction polygon is convex and matches the residual test") {
  KnotSampler sampler(make_gear1());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int tested = 0;
  while (tested < 20) {
    auto in = sampler.next();
    if (!in) continue;
    const auto poly = friction_polygon(*in);
    if (poly.size() < 3) continue;
    ++tested;
    // vertices satisfy all residuals (boundary)
    for (const auto& v : poly) {
      const auto g = friction_margin_constraints(*in, v.x(), v.y());
      for (double gi : g) CHECK(gi <= 1e-7);
    }
    // random convex combinations stay feasible
    for (int t = 0; t < 50; ++t) {
      Vec2 p = Vec2::Zero();
      double wsum = 0.0;
      std::vector<double> ws(poly.size());
      for (size_t i = 0; i < poly.size(); ++i) {
        ws[i] = u01(rng);
        wsum += ws[i];
      }
      for (size_t i = 0; i < poly.size(); ++i) p += ws[i] / wsum * poly[i];
      const auto g = friction_margin_constraints(*in, p.x(), p.y());
      for (double gi : g) CHECK(gi <= 1e-7);
    }
  }
}

TEST_CASE("friction polygon agrees with a dense grid scan") {
  KnotSampler sampler(make_gear1());
  auto in = sampler.next();
  while (!in) in = sampler.next();
  const auto poly = friction_polygon(*in);
  REQUIRE(poly.size() >= 3);
  double max_eA = 0, max_eB = 0;
  for (const auto& v : poly) {
    max_eA = std::max(max_eA, std::abs(v.x()));
    max_eB = std::max(max_eB, std::abs(v.y()));
  }
  // 1e-3 N grid: interior points of the polygon pass the residual check and
  // the polygon's bounding box matches the scanned feasible extent.
  const double step = 1e-3;
  double scan_eA = 0, scan_eB = 0;
  for (double eA = -max_eA - 0.05; eA <= max_eA + 0.05; eA += step) {
    for (double eB = -max_eB - 0.05; eB <= max_eB + 0.05; eB += step) {
      const auto g = friction_margin_constraints(*in, eA, eB);
      bool feas = true;
      for (double gi : g) feas = feas && gi <= 0;
      if (feas) {
        scan_eA = std::max(scan_eA, std::abs(eA));
        scan_eB = std::max(scan_eB, std::abs(eB));
      }
    }
  }
  CHECK(scan_eA == doctest::Approx(max_eA).epsilon(2e-3));
  CHECK(scan_eB == doctest::Approx(max_eB).epsilon(2e-3));
}

TEST_CASE("margin preconditions") {
  KnotSampler sampler(make_gear1());
  auto in = sampler.next();
  while (!in) in = sampler.next();

  SUBCASE("non-equilibrium input is rejected") {
    KnotMarginInputs bad = *in;
    bad.F_x += 0.5;
    CHECK_THROWS_AS(mass_margin(bad), PreconditionError);
    CHECK_THROWS_AS(margin_oracle(bad, MarginKind::kMassForce),
                    PreconditionError);
  }
  SUBCASE("negative nominal normal is degenerate") {
    KnotMarginInputs bad = *in;
    // flip the moment so f_nA from the moment balance goes negative
    bad.M_P = -bad.C_x * bad.weight() +
              (bad.mu_A * bad.A.x() - bad.A.y()) * 0.1;
    bad.F_x = (-(1 + bad.mu_A * bad.mu_B) * -0.1 -
               bad.mu_B * (bad.weight() + bad.F_y));
    CHECK_THROWS_AS(mass_margin(bad), DegenerateMarginError);
  }
}

TEST_CASE("trajectory worst margin reduces over knots") {
  KnotSampler sampler(make_gear1());
  std::vector<KnotMarginInputs> knots;
  while (knots.size() < 12) {
    auto in = sampler.next();
    if (in) knots.push_back(*in);
  }
  const auto w = trajectory_worst_margin(knots, MarginKind::kMassForce);
  // single-knot reduction equals that knot's margin
  const auto w1 = trajectory_worst_margin({knots.data(), 1},
                                          MarginKind::kMassForce);
  const auto m0 = mass_margin(knots[0]);
  CHECK(w1.eps_plus_min == doctest::Approx(m0.eps_plus).epsilon(1e-12));
  REQUIRE(w.argmin_plus >= 0);
  double manual = std::numeric_limits<double>::infinity();
  for (const auto& k : knots)
    manual = std::min(manual, mass_margin(k).eps_plus);
  CHECK(w.eps_plus_min == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("mass margin converts to kilograms") {
  CHECK(margin_force_to_kg(0.981) == doctest::Approx(0.1).epsilon(1e-12));
}
