#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pivot {

namespace {

constexpr double kContactTol = 1e-9;  // N, allowed normal-force undershoot

// deterministic uniform in [lo, hi) from raw generator bits
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = (rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

}  // namespace

std::string to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::kMass: return "mass";
    case PerturbationKind::kCom: return "com";
    case PerturbationKind::kFrictionA: return "friction-A";
    case PerturbationKind::kFrictionB: return "friction-B";
    case PerturbationKind::kJoint: return "joint";
  }
  return "?";
}

PerturbationKind perturbation_kind_from(const std::string& s) {
  if (s == "mass") return PerturbationKind::kMass;
  if (s == "com") return PerturbationKind::kCom;
  if (s == "friction-A") return PerturbationKind::kFrictionA;
  if (s == "friction-B") return PerturbationKind::kFrictionB;
  if (s == "joint") return PerturbationKind::kJoint;
  throw ConfigError("unknown perturbation kind: " + s);
}

void PerturbationSpec::validate() const {
  if (fixed.empty()) {
    if (lo > hi) throw ConfigError("perturbation range lo > hi");
    if (count < 1) throw ConfigError("perturbation count must be >= 1");
  }
}

bool contact_feasibility_check(const KnotMarginInputs& in,
                               const JointPerturbation& p) {
  const double mg = in.weight() + p.mass_force;
  const double D = in.mu_A * in.A.x() - in.A.y();
  const double Pi = 1 + in.mu_A * in.mu_B;

  // wall normal from the perturbed moment balance (A slip equality in)
  const double f_nA_mom = -((in.C_x + p.com_offset) * mg + in.M_P) / D;
  if (f_nA_mom < -kContactTol) return false;

  // floor normal from the force balances with slipping substituted
  const double f_nB_frc =
      (in.mu_A * (in.F_x + p.eps_B) - in.F_y - mg - p.eps_A) / Pi;
  if (f_nB_frc < -kContactTol) return false;

  if (p.com_offset != 0.0) {
    // CoM shifts leave the force balances untouched; the floor contact
    // condition follows from their sum with the moment-route wall normal
    const double S = -in.F_x - in.F_y - mg;
    const double f_nB_sum = (S - (1 + in.mu_A) * f_nA_mom) / (1 - in.mu_B);
    if (f_nB_sum < -kContactTol) return false;
  }
  if (p.eps_A != 0.0 || p.eps_B != 0.0) {
    // wall contact under friction uncertainty, plus the uncertainty boxes
    const double f_nA_frc =
        (-in.mu_B * (mg + in.F_y + p.eps_A) - in.F_x - p.eps_B) / Pi;
    if (f_nA_frc < -kContactTol) return false;
    if (std::abs(p.eps_A) > in.mu_A * in.f_nA + kContactTol) return false;
    if (std::abs(p.eps_B) > in.mu_B * in.f_nB + kContactTol) return false;
  }
  return true;
}

bool contact_feasibility_check(const Knot& knot, const ObjectSpec& perturbed,
                               const ObjectSpec& nominal,
                               std::optional<double> patch_len) {
  KnotMarginInputs in = make_margin_inputs(knot.geom, knot.u, nominal,
                                           patch_len);
  JointPerturbation p;
  p.mass_force = (perturbed.mass - nominal.mass) * kGravity;
  return contact_feasibility_check(in, p);
}

WorstMargin trajectory_margins(const Trajectory& traj, MarginKind kind) {
  std::vector<KnotMarginInputs> ins;
  ins.reserve(traj.horizon());
  for (int k = 0; k < traj.horizon(); ++k) {
    std::optional<double> plen;
    if (!traj.patch_len.empty()) plen = traj.patch_len[k];
    ins.push_back(knot_margin_inputs(traj.cfg, traj.knots[k], plen));
  }
  return trajectory_worst_margin(ins, kind);
}

RobustnessReport monte_carlo_robustness(const Trajectory& traj,
                                        const PerturbationSpec& pspec) {
  pspec.validate();
  if (traj.report.status != SolveStatus::kConverged)
    throw PreconditionError("monte carlo needs a converged trajectory");

  std::vector<KnotMarginInputs> ins;
  for (int k = 0; k < traj.horizon(); ++k) {
    std::optional<double> plen;
    if (!traj.patch_len.empty()) plen = traj.patch_len[k];
    ins.push_back(knot_margin_inputs(traj.cfg, traj.knots[k], plen));
  }

  std::vector<double> samples = pspec.fixed;
  if (samples.empty()) {
    std::mt19937_64 rng(pspec.seed);
    samples.resize(pspec.count);
    for (auto& s : samples) s = uniform(rng, pspec.lo, pspec.hi);
  }

  RobustnessReport rep;
  rep.n_samples = static_cast<int>(samples.size());
  rep.first_failure_knot.assign(samples.size(), -1);
  int ok = 0;
  double smallest_fail = kInf;
  for (size_t i = 0; i < samples.size(); ++i) {
    JointPerturbation p;
    switch (pspec.kind) {
      case PerturbationKind::kMass: p.mass_force = samples[i]; break;
      case PerturbationKind::kCom: p.com_offset = samples[i]; break;
      case PerturbationKind::kFrictionA: p.eps_A = samples[i]; break;
      case PerturbationKind::kFrictionB: p.eps_B = samples[i]; break;
      case PerturbationKind::kJoint:
        p.mass_force = samples[i];
        p.com_offset = samples[i] * 1e-2;  // N-scale sample, cm-scale offset
        p.eps_A = p.eps_B = samples[i] * 0.1;
        break;
    }
    bool good = true;
    for (size_t k = 0; k < ins.size(); ++k) {
      if (!contact_feasibility_check(ins[k], p)) {
        rep.first_failure_knot[i] = static_cast<int>(k);
        good = false;
        break;
      }
    }
    if (good) {
      ++ok;
    } else {
      smallest_fail = std::min(smallest_fail, std::abs(samples[i]));
    }
  }
  rep.success_rate = samples.empty() ? 1.0 : double(ok) / samples.size();

  // tightness: smallest failing perturbation vs the certified bound
  if (std::isfinite(smallest_fail) &&
      (pspec.kind == PerturbationKind::kMass ||
       pspec.kind == PerturbationKind::kCom)) {
    const MarginKind mk = pspec.kind == PerturbationKind::kMass
                              ? MarginKind::kMassForce
                              : MarginKind::kComOffset;
    const WorstMargin w = trajectory_worst_margin(ins, mk);
    const double bound = std::min(w.eps_plus_min, w.eps_minus_min);
    rep.margin_tightness_gap = smallest_fail - bound;
  }
  return rep;
}

std::vector<SweepRow> sweep_initial_py(const PlanConfig& cfg,
                                       const std::vector<double>& grid) {
  if (cfg.kind != PlannerKind::kCiboCom)
    throw ConfigError("sweep_initial_py expects the CoM planner kind");
  std::vector<SweepRow> rows;
  for (double p0 : grid) {
    PlanConfig c = cfg;
    c.p_s = p0;
    SweepRow row;
    row.p_y0 = p0;
    try {
      const Trajectory t = solve_plan(c);
      row.converged = t.report.status == SolveStatus::kConverged;
      row.solve_time = t.report.wall_time_s;
      if (row.converged) {
        const WorstMargin w = trajectory_margins(t, MarginKind::kComOffset);
        row.r_plus = w.eps_plus_min;
        row.r_minus = w.eps_minus_min;
      }
    } catch (const std::exception&) {
      row.converged = false;
    }
    rows.push_back(row);
  }
  return rows;
}

ModeExperimentResult mode_feasibility_experiment(const PlanConfig& cfg, int n,
                                                 std::uint64_t seed) {
  if (!cfg.object.is_peg())
    throw ConfigError("mode experiment needs a peg object");
  ModeExperimentResult out;
  out.n = n;
  std::mt19937_64 rng(seed);
  const double fhw = cfg.object.face_halfwidth();
  for (int i = 0; i < n; ++i)
    out.samples.push_back(uniform(rng, -fhw, fhw));

  for (double p0 : out.samples) {
    PlanConfig m = cfg;
    m.kind = PlannerKind::kCiboModes;
    m.terminal_constraint = false;
    m.p_s = p0;
    bool mode_ok = false;
    try {
      mode_ok = solve_plan(m).report.status == SolveStatus::kConverged;
    } catch (const std::exception&) {
    }
    out.mode_based.push_back(mode_ok);
    if (mode_ok) ++out.mode_based_ok;

    PlanConfig h = cfg;
    h.p_s = p0;
    bool hier_ok = false;
    try {
      hier_ok = solve_hierarchical(h).converged;
    } catch (const std::exception&) {
    }
    out.hierarchical.push_back(hier_ok);
    if (hier_ok) ++out.hierarchical_ok;
  }
  return out;
}

PatchPointComparison patch_vs_point(const PlanConfig& base_cfg) {
  PlanConfig cfg = base_cfg;
  cfg.kind = PlannerKind::kCiboCom;

  PatchPointComparison out;
  cfg.contact = ContactModel::kPoint;
  out.point = solve_plan(cfg);
  const WorstMargin wp = trajectory_margins(out.point, MarginKind::kComOffset);
  out.point_r_plus = wp.eps_plus_min;
  out.point_r_minus = wp.eps_minus_min;

  cfg.contact = ContactModel::kPatch;
  BuiltProblem bp = build(cfg);
  SolveResult res = solve(bp.spec, cfg.solver, make_warm_start(bp));
  out.patch = extract_trajectory(bp, res.x, res.report);
  WorstMargin wq = trajectory_margins(out.patch, MarginKind::kComOffset);

  const double slack = 1e-9;
  bool dominates = res.report.status == SolveStatus::kConverged &&
                   wq.eps_plus_min + slack >= out.point_r_plus &&
                   wq.eps_minus_min + slack >= out.point_r_minus;
  if (!dominates && res.report.status == SolveStatus::kConverged) {
    // directed re-solve: require at least the point margins, keep maximizing
    PlanConfig floored = cfg;
    floored.t_plus_floor = out.point_r_plus;
    floored.t_minus_floor = out.point_r_minus;
    BuiltProblem bp2 = build(floored);
    const SolveResult res2 = solve(bp2.spec, floored.solver, res.x);
    if (res2.report.status == SolveStatus::kConverged) {
      out.patch = extract_trajectory(bp2, res2.x, res2.report);
      wq = trajectory_margins(out.patch, MarginKind::kComOffset);
      dominates = wq.eps_plus_min + slack >= out.point_r_plus &&
                  wq.eps_minus_min + slack >= out.point_r_minus;
      out.used_directed_resolve = true;
    }
  }
  out.patch_r_plus = wq.eps_plus_min;
  out.patch_r_minus = wq.eps_minus_min;
  out.patch_dominates = dominates;
  return out;
}

}  // namespace pivot
