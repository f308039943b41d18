#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "statics.hpp"
#include "types.hpp"

namespace pivot {

// Everything the per-knot margin calculators need. F_x/F_y/M_P are the total
// manipulator force and its moment about B (two summed points under patch
// contact), so point and patch knots share the same closed forms.
struct KnotMarginInputs {
  Vec2 A = Vec2::Zero();  // wall contact relative to B
  double C_x = 0.0;       // CoM x offset relative to B
  double mass = 0.0;      // kg
  double mu_A = 0.0;
  double mu_B = 0.0;
  double F_x = 0.0;  // N, total manipulator force, world
  double F_y = 0.0;
  double M_P = 0.0;  // N m, total manipulator moment about B
  double f_nA = 0.0;  // nominal normals (friction boxes, reference)
  double f_nB = 0.0;

  double weight() const { return mass * kGravity; }
};

// Builds inputs from a trajectory knot; patch_len engages the two-point
// contact model with P1 pinned at the face vertex.
KnotMarginInputs make_margin_inputs(const ContactGeometry& geom,
                                    const ControlKnot& u,
                                    const ObjectSpec& spec,
                                    std::optional<double> patch_len = {});

// Largest tolerable weight-force perturbation interval (N). Throws
// PreconditionError when the inputs are not in equilibrium and
// DegenerateMarginError when the nominal point is already infeasible.
MarginInterval mass_margin(const KnotMarginInputs& in);

// Largest tolerable world-frame CoM x-offset interval (m).
MarginInterval com_margin(const KnotMarginInputs& in);

// Largest tolerable friction-force perturbation at A or B (N), searched per
// axis with the other perturbation at zero.
MarginInterval friction_margin(const KnotMarginInputs& in, MarginKind which);

// Signed residuals (<= 0 iff admissible) of the contact-maintenance
// conditions and the friction uncertainty boxes, in the order
// [B-contact, A-contact, box A+, box A-, box B+, box B-].
std::array<double, 6> friction_margin_constraints(const KnotMarginInputs& in,
                                                  double eps_A, double eps_B);

// Vertices of the admissible (eps_A, eps_B) polygon, counterclockwise.
// Empty when the nominal point is infeasible.
std::vector<Vec2> friction_polygon(const KnotMarginInputs& in);

// Independent bisection oracle for any margin kind; tolerance 1e-10, search
// capped at +/-1e6 with the unbounded flags set beyond the cap.
MarginInterval margin_oracle(const KnotMarginInputs& in, MarginKind kind);

// Weight-force margin expressed in kilograms of mass perturbation.
double margin_force_to_kg(double eps_newton);

struct WorstMargin {
  double eps_plus_min = 0.0;
  double eps_minus_min = 0.0;
  bool unbounded_plus = false;
  bool unbounded_minus = false;
  int argmin_plus = -1;
  int argmin_minus = -1;
};

// Per-knot closed-form margins reduced over the horizon (Eq. of the
// worst-case objective: min_k eps_k+ and min_k eps_k-).
WorstMargin trajectory_worst_margin(std::span<const KnotMarginInputs> knots,
                                    MarginKind kind);

}  // namespace pivot
