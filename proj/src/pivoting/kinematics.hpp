#pragma once

#include <utility>

#include <Eigen/Core>

#include "types.hpp"

namespace pivot {

// World frame: wall plane x = 0 (object on the +x side), floor plane y = 0,
// origin at their junction. The object pivots between corner A sliding on the
// wall and corner B on the floor.
//
// Body frame: origin at the center of the outer envelope, x axis from the
// wall end toward the pressed end face, y axis pointing from the wall/floor
// contact face into the object. body->world is the rotation by -theta,
//   R(-theta) = [[cos, sin], [-sin, cos]],
// which places A relative to B at (-L cos(theta), L sin(theta)) for contact
// span L.

// body->world rotation at angle theta.
Eigen::Matrix2d body_to_world(double theta);

// Body-frame coordinates of the named points. Pegs are stepped rectangles:
// outer envelope length x width, with the section at the pressed end reduced
// to step_width (top-flush), so the floor side has two candidate corners:
// the step corner B2 and the outer corner B1.
Vec2 body_point_A(const ObjectSpec& spec);
Vec2 body_point_B(const ObjectSpec& spec, ModeId mode);  // active floor corner
Vec2 body_point_P(const ObjectSpec& spec, double p_y);
Vec2 body_point_C(const ObjectSpec& spec);

// Forward kinematics: contact points relative to the active floor corner.
// Throws DomainError for out-of-range theta/p_y and ShapeError when mode 2 is
// requested for a rectangle.
ContactGeometry fk(double theta, double p_y, const ObjectSpec& spec,
                   ModeId mode = 1);

// World components of the manipulator force: the normal presses into the end
// face, the tangential runs along +p_y. An isometry of (f_nP, f_tP).
Vec2 world_force(double theta, double f_nP, double f_tP);
Vec2 world_force(double theta, const ControlKnot& u);

// Height of the inactive peg floor corner above the floor plane; zero at
// theta == step_angle() where both modes touch down.
double inactive_corner_height(double theta, const ObjectSpec& spec,
                              ModeId mode);

// Wall/floor slip speeds |d A_y/dt|, |d B_x/dt| for the given rate.
std::pair<double, double> contact_slip_speeds(double theta, double theta_dot,
                                              const ObjectSpec& spec,
                                              ModeId mode);

// Explicit Euler step on the configuration variables.
std::pair<double, double> integrate_euler(const StateKnot& x, double dt);

}  // namespace pivot
