#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pivoting/nlp.hpp"

using namespace pivot;

namespace {

// min (x-2)^2 s.t. x >= 1  -> x = 2;  min x^2 s.t. x >= 1 -> x = 1
NlpSpec bound_quadratic(double target) {
  NlpSpec s;
  const int x = s.add_var("x", 1.0, kInf);
  s.add_obj(make_expr({x}, [target](const std::vector<Dual2>& v) {
    return square(v[0] - target);
  }));
  return s;
}

NlpSpec scalar_mpcc() {
  // min (a-1)^2 + (b-1)^2 s.t. a, b >= 0, a*b = 0  -> objective 1
  NlpSpec s;
  const int a = s.add_var("a", 0.0, kInf);
  const int b = s.add_var("b", 0.0, kInf);
  s.comp_pairs.emplace_back(a, b);
  s.add_obj(make_expr({a, b}, [](const std::vector<Dual2>& v) {
    return square(v[0] - 1.0) + square(v[1] - 1.0);
  }));
  return s;
}

NlpSpec equality_circle() {
  // min x + y s.t. x^2 + y^2 = 2 -> (-1, -1)
  NlpSpec s;
  const int x = s.add_var("x", -10, 10);
  const int y = s.add_var("y", -10, 10);
  s.add_eq(make_expr({x, y}, [](const std::vector<Dual2>& v) {
    return square(v[0]) + square(v[1]) - 2.0;
  }));
  s.add_obj(make_expr({x, y}, [](const std::vector<Dual2>& v) {
    return v[0] + v[1];
  }));
  return s;
}

std::string report_fingerprint(const SolveResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << to_string(r.report.status) << "|" << r.report.objective << "|"
     << r.report.max_eq_residual << "|" << r.report.max_comp_product << "|"
     << r.x.transpose();
  return os.str();
}

}  // namespace

TEST_CASE("validate passes exact gradients and flags corrupted ones") {
  NlpSpec s = bound_quadratic(2.0);
  CHECK(validate(s).ok);

  // deliberately wrong gradient: value path says (x-2)^2, gradient says 3
  NlpSpec bad = s;
  bad.eq.push_back(make_expr({0}, [](const std::vector<Dual2>& v) {
    Dual2 r = square(v[0] - 2.0);
    if (r.g.size() > 0) r.g(0) = 3.0;
    return r;
  }));
  const auto rep = validate(bad);
  CHECK_FALSE(rep.ok);
  REQUIRE_FALSE(rep.issues.empty());
  CHECK(rep.issues[0].where.find("eq[0]") != std::string::npos);
  CHECK(rep.issues[0].var == 0);
}

TEST_CASE("bound-constrained quadratics") {
  SolverOptions opts;
  {
    auto r = solve(bound_quadratic(2.0), opts, VecX::Constant(1, 5.0));
    CHECK(r.report.status == SolveStatus::kConverged);
    CHECK(r.x(0) == doctest::Approx(2.0).epsilon(1e-6));
  }
  {
    auto r = solve(bound_quadratic(0.0), opts, VecX::Constant(1, 5.0));
    CHECK(r.report.status == SolveStatus::kConverged);
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("equality constrained solve") {
  SolverOptions opts;
  VecX w(2);
  w << 0.5, -1.5;
  auto r = solve(equality_circle(), opts, w);
  CHECK(r.report.status == SolveStatus::kConverged);
  CHECK(r.x(0) == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(r.x(1) == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(r.report.max_eq_residual < 1e-6);
}

TEST_CASE("scalar MPCC reaches a corner solution") {
  SolverOptions opts;
  VecX w(2);
  w << 0.8, 0.6;
  auto r = solve(scalar_mpcc(), opts, w);
  CHECK(r.report.status == SolveStatus::kConverged);
  CHECK(r.report.objective == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.report.max_comp_product <= opts.delta_min * (1 + 1e-9));
  const double lo = std::min(r.x(0), r.x(1));
  const double hi = std::max(r.x(0), r.x(1));
  CHECK(lo == doctest::Approx(0.0).scale(1).epsilon(1e-4));
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("inequality rows are honored") {
  // min (x+2)^2 s.t. x^2 - 1 <= 0 -> x = -1 with an active multiplier
  NlpSpec s;
  const int x = s.add_var("x", -kInf, kInf);
  s.add_ineq(make_expr({x}, [](const std::vector<Dual2>& v) {
    return square(v[0]) - 1.0;
  }));
  s.add_obj(make_expr({x}, [](const std::vector<Dual2>& v) {
    return square(v[0] + 2.0);
  }));
  SolverOptions opts;
  auto r = solve(s, opts, VecX::Constant(1, 0.9));
  CHECK(r.report.status == SolveStatus::kConverged);
  CHECK(r.x(0) == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(r.report.max_ineq_violation <= opts.tol_ineq);
}

TEST_CASE("solver reports are deterministic") {
  SolverOptions opts;
  VecX w(2);
  w << 0.8, 0.6;
  const auto a = solve(scalar_mpcc(), opts, w);
  const auto b = solve(scalar_mpcc(), opts, w);
  // wall time differs; everything numerical must be bitwise identical
  CHECK(report_fingerprint(a) == report_fingerprint(b));
}

TEST_CASE("check_kkt audits") {
  SUBCASE("unconstrained quadratic minimum has zero stationarity") {
    NlpSpec s;
    const int x = s.add_var("x", -kInf, kInf);
    s.add_obj(make_expr({x}, [](const std::vector<Dual2>& v) {
      return square(v[0] - 3.0);
    }));
    VecX pt(1);
    pt << 3.0;
    CHECK(check_kkt(s, pt).stationarity == doctest::Approx(0.0).epsilon(1e-12));
    pt << 1.0;  // non-optimal point has a visible residual
    CHECK(check_kkt(s, pt).stationarity > 1.0);
  }
  SUBCASE("converged solve passes the audit") {
    SolverOptions opts;
    auto r = solve(equality_circle(), opts, VecX::Zero(2));
    CHECK(check_kkt(equality_circle(), r.x).stationarity <= 10 * opts.tol_kkt);
  }
}

TEST_CASE("infeasible equalities are reported") {
  NlpSpec s;
  const int x = s.add_var("x", 0.0, 1.0);
  s.add_eq(make_expr({x}, [](const std::vector<Dual2>& v) {
    return v[0] - 5.0;  // impossible within the bounds
  }));
  s.add_obj(make_expr({x}, [](const std::vector<Dual2>& v) {
    return square(v[0]);
  }));
  SolverOptions opts;
  opts.max_inner_iterations = 120;
  auto r = solve(s, opts, VecX::Zero(1));
  CHECK(r.report.status != SolveStatus::kConverged);
}

TEST_CASE("relaxation schedule never leaves products above delta_min") {
  SolverOptions opts;
  VecX w(2);
  w << 0.3, 0.3;
  auto r = solve(scalar_mpcc(), opts, w);
  REQUIRE(r.report.status == SolveStatus::kConverged);
  CHECK(r.report.max_comp_product <= opts.delta_min * (1 + 1e-9));
}
