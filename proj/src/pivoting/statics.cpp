#include "statics.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace pivot {

namespace {

// Moment of a unit normal / unit tangential force at point P about B.
// M_P = P_x f_y - P_y f_x = kn * f_nP + kt * f_tP.
inline double arm_normal(const Vec2& P, double c, double s) {
  return P.x() * s + P.y() * c;
}
inline double arm_tangential(const Vec2& P, double c, double s) {
  return P.x() * c - P.y() * s;
}

struct ManipModel {
  double force_scale = 1.0;  // 1 point, 2 patch
  double kn = 0.0;           // total normal moment arm
  double kt = 0.0;           // total tangential moment arm
};

ManipModel manip_model(const ContactGeometry& geom, const ObjectSpec& spec,
                       std::optional<double> patch_len) {
  const double c = std::cos(geom.theta), s = std::sin(geom.theta);
  ManipModel m;
  if (!patch_len) {
    m.force_scale = 1.0;
    m.kn = arm_normal(geom.P, c, s);
    m.kt = arm_tangential(geom.P, c, s);
    return m;
  }
  const double fhw = spec.face_halfwidth();
  if (*patch_len < 0 || *patch_len > 2 * fhw + 1e-12)
    throw DomainError("patch_len out of [0, w]");
  const Eigen::Matrix2d R = body_to_world(geom.theta);
  const Vec2 Bb = body_point_B(spec, geom.mode);
  const Vec2 P1 = R * (body_point_P(spec, fhw) - Bb);
  const Vec2 P2 = R * (body_point_P(spec, fhw - *patch_len) - Bb);
  m.force_scale = 2.0;
  m.kn = arm_normal(P1, c, s) + arm_normal(P2, c, s);
  m.kt = arm_tangential(P1, c, s) + arm_tangential(P2, c, s);
  return m;
}

Vec3 residual_impl(const ContactGeometry& geom, const ContactForceKnot& fc,
                   const ControlKnot& u, const ObjectSpec& spec,
                   const ManipModel& m) {
  const Vec2 f = world_force(geom.theta, u);
  const double mg = spec.weight();
  const double moment_P = m.kn * u.f_nP + m.kt * u.f_tP;
  return {fc.f_nA + fc.f_tB + m.force_scale * f.x(),
          fc.f_tA + fc.f_nB + mg + m.force_scale * f.y(),
          geom.A.x() * fc.f_tA - geom.A.y() * fc.f_nA + geom.C.x() * mg +
              moment_P};
}

}  // namespace

Vec3 equilibrium_residual(const ContactGeometry& geom,
                          const ContactForceKnot& fc, const ControlKnot& u,
                          const ObjectSpec& spec) {
  return residual_impl(geom, fc, u, spec, manip_model(geom, spec, {}));
}

Vec3 patch_equilibrium_residual(const ContactGeometry& geom,
                                const ContactForceKnot& fc,
                                const ControlKnot& u, const ObjectSpec& spec,
                                double patch_len) {
  return residual_impl(geom, fc, u, spec, manip_model(geom, spec, patch_len));
}

Eigen::Matrix<double, 3, 7> equilibrium_jacobian(const ContactGeometry& geom,
                                                 const ControlKnot& /*u*/,
                                                 const ObjectSpec& /*spec*/) {
  const double c = std::cos(geom.theta), s = std::sin(geom.theta);
  const double kn = arm_normal(geom.P, c, s);
  const double kt = arm_tangential(geom.P, c, s);
  Eigen::Matrix<double, 3, 7> J = Eigen::Matrix<double, 3, 7>::Zero();
  // columns: mass, f_nA, f_tA, f_nB, f_tB, f_nP, f_tP
  J(0, 1) = 1;
  J(0, 4) = 1;
  J(0, 5) = -c;
  J(0, 6) = s;
  J(1, 0) = kGravity;
  J(1, 2) = 1;
  J(1, 3) = 1;
  J(1, 5) = s;
  J(1, 6) = c;
  J(2, 0) = geom.C.x() * kGravity;
  J(2, 1) = -geom.A.y();
  J(2, 2) = geom.A.x();
  J(2, 5) = kn;
  J(2, 6) = kt;
  return J;
}

std::vector<std::pair<double, double>> complementarity_residuals(
    const Knot& knot, const ObjectSpec& spec) {
  const auto& f = knot.f;
  const auto& x = knot.x;
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(6);
  pairs.emplace_back(f.slip_A_plus, spec.mu_A * f.f_nA - f.f_tA);
  pairs.emplace_back(f.slip_A_minus, spec.mu_A * f.f_nA + f.f_tA);
  pairs.emplace_back(f.slip_B_plus, spec.mu_B * f.f_nB - f.f_tB);
  pairs.emplace_back(f.slip_B_minus, spec.mu_B * f.f_nB + f.f_tB);
  pairs.emplace_back(x.p_y_dot_plus, spec.mu_P * knot.u.f_nP - knot.u.f_tP);
  pairs.emplace_back(x.p_y_dot_minus, spec.mu_P * knot.u.f_nP + knot.u.f_tP);
  return pairs;
}

StaticSolution StaticWindow::at(double f_nP) const {
  StaticSolution s;
  s.f_nP = f_nP;
  s.f_tP = slope * f_nP + offset;
  s.f_nA = fnA_a * f_nP + fnA_b;
  s.f_nB = fnB_a * f_nP + fnB_b;
  return s;
}

StaticWindow static_window(double theta, double p_y, const ObjectSpec& spec,
                           ModeId mode, double f_u,
                           std::optional<double> patch_len) {
  const ContactGeometry geom = fk(theta, p_y, spec, mode);
  const ManipModel m = manip_model(geom, spec, patch_len);
  const double c = std::cos(theta), s = std::sin(theta);
  const double mg = spec.weight();
  const double Pi = 1 + spec.mu_A * spec.mu_B;
  const double D = spec.mu_A * geom.A.x() - geom.A.y();  // < 0 away from 0

  const double den = m.force_scale * (s + spec.mu_B * c) - m.kt * Pi / D;
  StaticWindow w;
  if (std::abs(den) < 1e-12) return w;  // degenerate family
  w.slope = (m.force_scale * (c - spec.mu_B * s) + m.kn * Pi / D) / den;
  w.offset = (geom.C.x() * mg * Pi / D - spec.mu_B * mg) / den;

  // f_nA, f_nB are affine in f_nP along the family.
  w.fnA_a = -(m.kn + m.kt * w.slope) / D;
  w.fnA_b = -(geom.C.x() * mg + m.kt * w.offset) / D;
  const double fy_a = s + w.slope * c;
  const double fy_b = w.offset * c;
  w.fnB_a = -m.force_scale * fy_a - spec.mu_A * w.fnA_a;
  w.fnB_b = -mg - m.force_scale * fy_b - spec.mu_A * w.fnA_b;
  const double fnA_a = w.fnA_a, fnA_b = w.fnA_b;
  const double fnB_a = w.fnB_a, fnB_b = w.fnB_b;

  double lo = 0.0, hi = f_u;
  auto clip = [&](double a, double b) {
    // require a*f + b >= 0
    if (std::abs(a) < 1e-14) {
      if (b < -1e-12) lo = 1.0, hi = 0.0;
      return;
    }
    const double r = -b / a;
    if (a > 0)
      lo = std::max(lo, r);
    else
      hi = std::min(hi, r);
  };
  clip(fnA_a, fnA_b);
  clip(fnB_a, fnB_b);
  clip(spec.mu_P - w.slope, -w.offset);   // f_tP <= mu_P f_nP
  clip(spec.mu_P + w.slope, w.offset);    // -mu_P f_nP <= f_tP
  clip(-fnA_a, f_u - fnA_b);              // f_nA <= f_u
  clip(-fnB_a, f_u - fnB_b);              // f_nB <= f_u

  if (lo <= hi) {
    w.feasible = true;
    w.fnP_lo = lo;
    w.fnP_hi = hi;
  }
  return w;
}

std::optional<StaticSolution> static_solve_given_ftp(double theta, double p_y,
                                                     double f_tP,
                                                     const ObjectSpec& spec,
                                                     ModeId mode) {
  const ContactGeometry geom = fk(theta, p_y, spec, mode);
  const double c = std::cos(theta), s = std::sin(theta);
  const double mg = spec.weight();
  const double kn = arm_normal(geom.P, c, s);
  const double kt = arm_tangential(geom.P, c, s);

  Eigen::Matrix3d M;
  Vec3 b;
  // unknowns: f_nA, f_nB, f_nP
  M << 1, -spec.mu_B, -c,                            //
      spec.mu_A, 1, s,                               //
      spec.mu_A * geom.A.x() - geom.A.y(), 0, kn;    //
  b << -f_tP * s, -mg - f_tP * c, -geom.C.x() * mg - kt * f_tP;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(M);
  if (!lu.isInvertible()) return std::nullopt;
  const Vec3 sol = lu.solve(b);
  StaticSolution out;
  out.f_nA = sol(0);
  out.f_nB = sol(1);
  out.f_nP = sol(2);
  out.f_tP = f_tP;
  return out;
}

}  // namespace pivot
