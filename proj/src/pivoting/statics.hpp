#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "kinematics.hpp"
#include "types.hpp"

namespace pivot {

// Residual of the quasi-static force/moment balance about B:
//   [ f_nA + f_tB + f_x,
//     f_tA + f_nB + m g + f_y,
//     A_x f_tA - A_y f_nA + C_x m g + P_x f_y - P_y f_x ]
// Zero iff the knot is in static equilibrium. Units N, N, N m.
Vec3 equilibrium_residual(const ContactGeometry& geom,
                          const ContactForceKnot& fc, const ControlKnot& u,
                          const ObjectSpec& spec);

// Patch-contact variant: P1 pinned at the face vertex, P2 at patch_len down
// the face, equal per-point force (f_nP, f_tP) at both.
Vec3 patch_equilibrium_residual(const ContactGeometry& geom,
                                const ContactForceKnot& fc,
                                const ControlKnot& u, const ObjectSpec& spec,
                                double patch_len);

// Jacobian of equilibrium_residual wrt (mass, f_nA, f_tA, f_nB, f_tB,
// f_nP, f_tP) at fixed geometry; the residual is affine in these.
Eigen::Matrix<double, 3, 7> equilibrium_jacobian(const ContactGeometry& geom,
                                                 const ControlKnot& u,
                                                 const ObjectSpec& spec);

// All stick/slip complementarity pairs (a, b) of the knot, ordered
// A+, A-, B+, B-, P+, P-. Feasibility requires a >= 0, b >= 0, a*b == 0.
std::vector<std::pair<double, double>> complementarity_residuals(
    const Knot& knot, const ObjectSpec& spec);

// One point of the quasi-static manifold at fixed (theta, p_y): contact
// normals and control consistent with the balances and the slipping
// equalities f_tA = mu_A f_nA, f_tB = -mu_B f_nB.
struct StaticSolution {
  double f_nP = 0.0;
  double f_tP = 0.0;
  double f_nA = 0.0;
  double f_nB = 0.0;
};

// The one-parameter static family at (theta, p_y): f_tP is affine in f_nP
// (a line), and feasibility (normals >= 0, |f_tP| <= mu_P f_nP,
// f_nP in [0, f_u]) restricts f_nP to a closed interval.
struct StaticWindow {
  bool feasible = false;
  double fnP_lo = 0.0;
  double fnP_hi = 0.0;
  double slope = 0.0;   // d f_tP / d f_nP along the family
  double offset = 0.0;  // f_tP at f_nP = 0
  double fnA_a = 0.0, fnA_b = 0.0;  // f_nA = fnA_a * f_nP + fnA_b
  double fnB_a = 0.0, fnB_b = 0.0;

  StaticSolution at(double f_nP) const;
  StaticSolution mid() const { return at(0.5 * (fnP_lo + fnP_hi)); }
};

// Computes the static window. patch_len (>= 0) switches to the patch model;
// in that case f_nP/f_tP are per-point forces and P2 sits at the state's p_y.
StaticWindow static_window(double theta, double p_y, const ObjectSpec& spec,
                           ModeId mode, double f_u,
                           std::optional<double> patch_len = std::nullopt);

// Solves the 3x3 linear system for (f_nA, f_nB, f_nP) with f_tP given and the
// slipping equalities substituted. Returns nullopt when singular.
std::optional<StaticSolution> static_solve_given_ftp(double theta, double p_y,
                                                     double f_tP,
                                                     const ObjectSpec& spec,
                                                     ModeId mode = 1);

}  // namespace pivot
