#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace pivot {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;

// Signed gravitational acceleration: the weight force on a body of mass m is
// m * kGravity (negative, i.e. pointing along -y in the world frame).
inline constexpr double kGravity = -9.81;

// |C_x| below this is treated as a zero moment arm (unbounded mass margin on
// the wall-contact side).
inline constexpr double kComArmTol = 1e-9;

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateMarginError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LayoutError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Shape { kRectangle, kPeg };

// Contact mode for pegs: mode 1 pivots on the step corner B2, mode 2 on the
// outer corner B1. Rectangles only have mode 1.
using ModeId = int;

struct ObjectSpec {
  std::string name;
  Shape shape = Shape::kRectangle;
  double mass = 0.0;    // kg
  double length = 0.0;  // m; outer length l (l2 for pegs)
  double width = 0.0;   // m; outer width w (w2 for pegs)
  double step_length = 0.0;  // l1, pegs only
  double step_width = 0.0;   // w1, pegs only
  double mu_A = 0.0;
  double mu_B = 0.0;
  double mu_P = 0.0;

  bool is_peg() const { return shape == Shape::kPeg; }

  // Half-extent of the face the manipulator presses on.
  double face_halfwidth() const {
    return 0.5 * (is_peg() ? step_width : width);
  }

  // Step angle of the peg: body rotation at which the outer corner B1 touches
  // down while pivoting on the step corner B2.
  double step_angle() const;

  double weight() const { return mass * kGravity; }  // signed, N

  void validate() const;
};

struct StateKnot {
  double theta = 0.0;       // rad, object angle vs world x-axis
  double p_y = 0.0;         // m, manipulator coordinate on the pressed face
  double theta_dot = 0.0;   // rad/s
  double p_y_dot = 0.0;     // m/s
  double p_y_dot_plus = 0.0;
  double p_y_dot_minus = 0.0;
};

struct ControlKnot {
  double f_nP = 0.0;  // N, normal force at P, body frame
  double f_tP = 0.0;  // N, tangential force at P, body frame
};

struct ContactForceKnot {
  double f_nA = 0.0;  // N, wall normal (world +x)
  double f_tA = 0.0;  // N, wall friction (world y component)
  double f_nB = 0.0;  // N, floor normal (world +y)
  double f_tB = 0.0;  // N, floor friction (world x component)
  double slip_A_plus = 0.0;
  double slip_A_minus = 0.0;
  double slip_B_plus = 0.0;
  double slip_B_minus = 0.0;
};

// Contact points expressed relative to the active floor corner B (the moment
// balance origin). theta/p_y are retained so force maps need no extra state.
struct ContactGeometry {
  Vec2 A = Vec2::Zero();
  Vec2 B = Vec2::Zero();
  Vec2 P = Vec2::Zero();
  Vec2 C = Vec2::Zero();
  double theta = 0.0;
  double p_y = 0.0;
  ModeId mode = 1;
};

// One trajectory time step.
struct Knot {
  StateKnot x;
  ControlKnot u;
  ContactForceKnot f;
  ContactGeometry geom;
  double t = 0.0;  // s
};

enum class MarginKind { kMassForce, kComOffset, kFrictionA, kFrictionB };

std::string to_string(MarginKind kind);

// Admissible perturbation interval [-eps_minus, +eps_plus] for one knot.
struct MarginInterval {
  double eps_plus = 0.0;
  double eps_minus = 0.0;
  bool unbounded_plus = false;
  bool unbounded_minus = false;
  MarginKind kind = MarginKind::kMassForce;
};

}  // namespace pivot
