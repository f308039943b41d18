#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "planner.hpp"

namespace pivot {

enum class PerturbationKind { kMass, kCom, kFrictionA, kFrictionB, kJoint };

std::string to_string(PerturbationKind k);
PerturbationKind perturbation_kind_from(const std::string& s);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::kMass;
  double lo = 0.0;  // uniform support; kJoint applies the range to each axis
  double hi = 0.0;
  int count = 1;
  std::uint64_t seed = 0;
  std::vector<double> fixed;  // used instead of sampling when non-empty

  void validate() const;
};

struct JointPerturbation {
  double mass_force = 0.0;  // N added to the weight force
  double com_offset = 0.0;  // m, world x shift of the CoM
  double eps_A = 0.0;       // N, friction force uncertainty at A
  double eps_B = 0.0;
};

// Contact-maintenance check of one knot under a perturbation: recomputes the
// wall normal from the moment balance and the floor normal from the force
// balances (slipping equalities substituted) and requires both nonnegative,
// plus the friction uncertainty boxes when friction is perturbed.
bool contact_feasibility_check(const KnotMarginInputs& in,
                               const JointPerturbation& p);
bool contact_feasibility_check(const Knot& knot, const ObjectSpec& perturbed,
                               const ObjectSpec& nominal,
                               std::optional<double> patch_len = {});

struct RobustnessReport {
  double success_rate = 0.0;
  int n_samples = 0;
  std::vector<int> first_failure_knot;  // -1 for successful samples
  // smallest failing |perturbation| minus the certified trajectory bound
  double margin_tightness_gap = 0.0;
};

// Monte Carlo robustness of a solved trajectory: each sample perturbs every
// knot and succeeds iff the contact check holds throughout. Deterministic
// under the seed.
RobustnessReport monte_carlo_robustness(const Trajectory& traj,
                                        const PerturbationSpec& pspec);

struct SweepRow {
  double p_y0 = 0.0;
  bool converged = false;
  double r_plus = 0.0;   // worst-case CoM margins (m)
  double r_minus = 0.0;
  double solve_time = 0.0;
};

// One CoM-kind planner run per grid entry of p_y(0).
std::vector<SweepRow> sweep_initial_py(const PlanConfig& cfg,
                                       const std::vector<double>& grid);

struct ModeExperimentResult {
  int n = 0;
  int mode_based_ok = 0;
  int hierarchical_ok = 0;
  std::vector<double> samples;
  std::vector<bool> mode_based, hierarchical;

  double rate_mode_based() const {
    return n ? static_cast<double>(mode_based_ok) / n : 0.0;
  }
  double rate_hierarchical() const {
    return n ? static_cast<double>(hierarchical_ok) / n : 0.0;
  }
};

// Samples p_y(0) uniformly over the pressed face and runs the mode-based
// planner against the two-stage hierarchical baseline.
ModeExperimentResult mode_feasibility_experiment(const PlanConfig& cfg, int n,
                                                 std::uint64_t seed);

struct PatchPointComparison {
  Trajectory point;
  Trajectory patch;
  double point_r_plus = 0.0, point_r_minus = 0.0;
  double patch_r_plus = 0.0, patch_r_minus = 0.0;
  bool patch_dominates = false;
  bool used_directed_resolve = false;
};

// CoM-kind CIBO with point vs patch contact; when the free patch optimum is
// componentwise short of the point margins, re-solves the patch problem with
// the point margins as epigraph floors (warm-started from the patch run).
PatchPointComparison patch_vs_point(const PlanConfig& base_cfg);

// Worst-case margins of a trajectory for one kind (helper shared by the
// experiments and the CLI).
WorstMargin trajectory_margins(const Trajectory& traj, MarginKind kind);

}  // namespace pivot
