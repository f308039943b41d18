#include "kinematics.hpp"

#include <cmath>

namespace pivot {

double ObjectSpec::step_angle() const {
  if (!is_peg()) return 0.0;
  return std::atan2(width - step_width, length - step_length);
}

void ObjectSpec::validate() const {
  if (!(mass > 0)) throw ConfigError(name + ": mass must be positive");
  if (!(length > 0) || !(width > 0))
    throw ConfigError(name + ": dimensions must be positive");
  for (double mu : {mu_A, mu_B, mu_P}) {
    if (!(mu > 0) || mu > 2.0)
      throw ConfigError(name + ": friction coefficients must be in (0, 2]");
  }
  if (is_peg()) {
    if (!(step_length > 0) || !(step_width > 0))
      throw ConfigError(name + ": peg step dimensions must be positive");
    if (!(step_length < length) && !(step_width < width))
      throw ConfigError(name + ": peg must have a genuine step (l1 < l2 or w1 < w2)");
  } else {
    if (step_length != 0 || step_width != 0)
      throw ConfigError(name + ": rectangle must not carry peg step dims");
  }
}

std::string to_string(MarginKind kind) {
  switch (kind) {
    case MarginKind::kMassForce: return "mass";
    case MarginKind::kComOffset: return "com";
    case MarginKind::kFrictionA: return "friction-A";
    case MarginKind::kFrictionB: return "friction-B";
  }
  return "?";
}

Eigen::Matrix2d body_to_world(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d R;
  R << c, s, -s, c;
  return R;
}

Vec2 body_point_A(const ObjectSpec& spec) {
  return {-spec.length / 2, -spec.width / 2};
}

Vec2 body_point_B(const ObjectSpec& spec, ModeId mode) {
  if (!spec.is_peg()) {
    if (mode != 1) throw ShapeError(spec.name + ": rectangle has no mode 2");
    return {spec.length / 2, -spec.width / 2};
  }
  if (mode == 1)  // step corner B2
    return {-spec.length / 2 + spec.step_length, -spec.width / 2};
  if (mode == 2)  // outer corner B1
    return {spec.length / 2, spec.width / 2 - spec.step_width};
  throw ShapeError(spec.name + ": invalid contact mode");
}

Vec2 body_point_P(const ObjectSpec& spec, double p_y) {
  if (!spec.is_peg()) return {spec.length / 2, p_y};
  // Pressed face of the peg is the narrow end section; p_y measured from its
  // center.
  return {spec.length / 2, spec.width / 2 - spec.step_width / 2 + p_y};
}

Vec2 body_point_C(const ObjectSpec& /*spec*/) { return Vec2::Zero(); }

ContactGeometry fk(double theta, double p_y, const ObjectSpec& spec,
                   ModeId mode) {
  constexpr double kTol = 1e-12;
  if (theta < -kTol || theta > M_PI / 2 + kTol)
    throw DomainError("fk: theta out of [0, pi/2]");
  const double fhw = spec.face_halfwidth();
  if (p_y < -fhw - kTol || p_y > fhw + kTol)
    throw DomainError("fk: p_y out of [-w/2, w/2]");

  const Eigen::Matrix2d R = body_to_world(theta);
  const Vec2 Bb = body_point_B(spec, mode);
  ContactGeometry g;
  g.A = R * (body_point_A(spec) - Bb);
  g.B = Vec2::Zero();
  g.P = R * (body_point_P(spec, p_y) - Bb);
  g.C = R * (body_point_C(spec) - Bb);
  g.theta = theta;
  g.p_y = p_y;
  g.mode = mode;
  return g;
}

Vec2 world_force(double theta, double f_nP, double f_tP) {
  const double c = std::cos(theta), s = std::sin(theta);
  // normal direction (c, -s) presses into the end face; tangential (s, c)
  // points along increasing p_y.
  return {-f_nP * c + f_tP * s, f_nP * s + f_tP * c};
}

Vec2 world_force(double theta, const ControlKnot& u) {
  return world_force(theta, u.f_nP, u.f_tP);
}

double inactive_corner_height(double theta, const ObjectSpec& spec,
                              ModeId mode) {
  if (!spec.is_peg()) return 0.0;
  const Vec2 Bc = body_point_B(spec, mode);
  const Vec2 Bo = body_point_B(spec, mode == 1 ? 2 : 1);
  return (body_to_world(theta) * (Bo - Bc)).y();
}

std::pair<double, double> contact_slip_speeds(double theta, double theta_dot,
                                              const ObjectSpec& spec,
                                              ModeId mode) {
  const Vec2 d = body_point_A(spec) - body_point_B(spec, mode);
  // A_rel(theta) = R(-theta) d; derivative of the world coordinates wrt theta.
  const double c = std::cos(theta), s = std::sin(theta);
  const double dAy = (-d.x() * c - d.y() * s) * theta_dot;  // d/dt of A_y
  const double dBx = (d.x() * s - d.y() * c) * theta_dot;   // d/dt of (-A_x)
  return {std::abs(dAy), std::abs(dBx)};
}

std::pair<double, double> integrate_euler(const StateKnot& x, double dt) {
  if (!(dt > 0)) throw DomainError("integrate_euler: dt must be positive");
  return {x.theta + dt * x.theta_dot, x.p_y + dt * x.p_y_dot};
}

}  // namespace pivot
