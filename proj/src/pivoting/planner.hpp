#pragma once

#include <array>
#include <optional>
#include <vector>

#include "margins.hpp"
#include "nlp.hpp"
#include "statics.hpp"
#include "types.hpp"

namespace pivot {

enum class PlannerKind {
  kBaseline,
  kCiboMass,
  kCiboCom,
  kCiboFriction,
  kCiboModes
};
enum class ContactModel { kPoint, kPatch };
enum class WarmStartStrategy { kPaper, kInterpolated };

std::string to_string(PlannerKind k);
PlannerKind planner_kind_from(const std::string& s);

struct PlanConfig {
  ObjectSpec object;
  PlannerKind kind = PlannerKind::kBaseline;
  ContactModel contact = ContactModel::kPoint;
  WarmStartStrategy warm_start = WarmStartStrategy::kInterpolated;

  int N = 30;
  double dt = 1.0;            // s (fixed-time planners)
  Vec4 Q{0.1, 0.0, 0.0, 0.0};  // state tracking weights (diagonal)
  Eigen::Vector2d R{0.01, 0.01};
  double alpha = 1.0;   // weight of the negative-direction margin
  double beta = 1e-4;   // tracking regularization inside CIBO objectives
  // optional floors on the epigraph variables (directed re-solves in the
  // patch-vs-point comparison); zero leaves them free
  double t_plus_floor = 0.0;
  double t_minus_floor = 0.0;
  double f_u = 20.0;    // N, normal force upper bound

  double theta_s = 0.0;
  double p_s = 0.0;     // p_y at t=0
  double theta_g = M_PI / 2;
  bool terminal_constraint = true;

  double thetadot_max = 0.2;  // rad/s
  double pydot_max = 0.05;    // m/s

  // modes
  double T_min = 1.0, T_max = 120.0;
  std::vector<ModeId> mode_sequence{1, 2};
  ModeId fixed_mode = 0;  // nonzero pins one contact mode (hierarchical use)

  SolverOptions solver;

  void validate() const;
  MarginKind margin_kind() const;  // uncertainty kind the planner optimizes
};

// Fully-resolved margins of one stage knot plus the solver's own epsilons.
struct KnotMargins {
  MarginInterval mass;
  MarginInterval com;
  MarginInterval friction_A;
  MarginInterval friction_B;
};

struct Trajectory {
  PlanConfig cfg;
  std::vector<Knot> knots;             // N+1, terminal knot state-only
  std::vector<KnotMargins> margins;    // N entries (stage knots)
  std::vector<std::array<double, 4>> eps_solver;  // per-knot solver epsilons
  std::vector<double> patch_len;       // patch contact only, N entries
  double T1 = 0.0, T2 = 0.0;           // mode planner durations
  double epigraph_plus = 0.0, epigraph_minus = 0.0;
  std::array<double, 4> epigraph_friction{};
  double margin_discrepancy = 0.0;  // max |solver eps - closed form|
  SolveReport report;

  int horizon() const { return static_cast<int>(knots.size()) - 1; }
};

// Variable layout of one built problem (indices into the NlpSpec vector).
struct KnotLayout {
  int th = -1, py = -1, thd = -1, pyd = -1;
  int pdp = -1, pdm = -1;
  int fnP = -1, ftP = -1, fnA = -1, ftA = -1, fnB = -1, ftB = -1;
  int Ax = -1, Ay = -1, Px = -1, Py = -1, Cx = -1, Cy = -1;
  int sP1 = -1, sP2 = -1;
  // scalar CIBO: multipliers for [b1, b2, e>=0] rows plus the epsilon cap
  int ep = -1, em = -1;
  std::array<int, 3> wp{-1, -1, -1}, wm{-1, -1, -1};
  int wp_cap = -1, wm_cap = -1;
  std::array<int, 2> sp{-1, -1}, sm{-1, -1};
  int sp_cap = -1, sm_cap = -1;
  // friction CIBO: lower-level blocks ordered A+, A-, B+, B-
  std::array<int, 4> ef{-1, -1, -1, -1};
  int eAs = -1, eBs = -1;
  std::array<std::array<int, 7>, 4> wf;
  std::array<std::array<int, 6>, 4> sgf;
};

struct ProblemLayout {
  std::vector<KnotLayout> knot;  // N+1 (stage fields unset at N)
  int tp = -1, tm = -1;
  std::array<int, 4> tf{-1, -1, -1, -1};
  int T1 = -1, T2 = -1;
  int seam = -1;  // first mode-2 stage index (modes planner)
};

struct BuiltProblem {
  PlanConfig cfg;
  NlpSpec spec;
  ProblemLayout layout;
  ModeId mode_of_stage(int k) const;
};

// NLP builders (one per planner family).
BuiltProblem build_baseline(const PlanConfig& cfg);
BuiltProblem build_cibo_scalar(const PlanConfig& cfg);    // mass or CoM
BuiltProblem build_cibo_friction(const PlanConfig& cfg);
BuiltProblem build_cibo_modes(const PlanConfig& cfg);
BuiltProblem build(const PlanConfig& cfg);  // dispatch on cfg.kind

// Initial iterate: "paper" pins only the boundary states; "interpolated"
// seeds states, per-knot static forces and lower-level variables.
VecX make_warm_start(const BuiltProblem& bp);

// Unpacks a solution vector, attaches geometry and recomputed margins.
// Throws LayoutError when the vector does not match the layout.
Trajectory extract_trajectory(const BuiltProblem& bp, const VecX& x,
                              const SolveReport& report);

// Largest per-knot difference between the solver's lower-level optima and
// the independently recomputed LP maxima (Eq. of the bilevel optimality).
double lower_level_audit(const BuiltProblem& bp, const VecX& x);

// Convenience: build + warm start + solve + extract.
Trajectory solve_plan(const PlanConfig& cfg);

// Two-stage hierarchical peg baseline: mode 1 to the step angle, then mode 2
// from the handoff state. Converges only when both stages do.
struct HierarchicalResult {
  bool converged = false;
  std::optional<Trajectory> stage1, stage2;
};
HierarchicalResult solve_hierarchical(const PlanConfig& cfg);

// Margin inputs of one solved knot (patch-aware).
KnotMarginInputs knot_margin_inputs(const PlanConfig& cfg, const Knot& knot,
                                    std::optional<double> patch_len);

}  // namespace pivot
