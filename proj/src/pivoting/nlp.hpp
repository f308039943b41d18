#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ad.hpp"
#include "types.hpp"

namespace pivot {

using VecX = Eigen::VectorXd;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// One scalar residual or objective term over a short list of variables.
struct Expr {
  std::vector<int> vars;                                   // global indices
  std::function<Dual2(const std::vector<Dual2>&)> fn;      // locals in order
  std::string label;

  double value(const VecX& x) const;
  Dual2 eval(const VecX& x) const;
};

// Sparse nonlinear program: minimize sum(objective) subject to eq(x) = 0,
// ineq(x) <= 0, lo <= x <= hi, and x[a] * x[b] == 0 for every complementarity
// pair (both sides are variables bounded below by 0; the solver drives the
// products through a relaxation schedule).
struct NlpSpec {
  int n = 0;
  VecX lo, hi;
  std::vector<std::string> var_names;
  std::vector<Expr> eq;
  std::vector<Expr> ineq;
  std::vector<std::pair<int, int>> comp_pairs;
  std::vector<Expr> objective;

  int add_var(const std::string& name, double lb, double ub);
  void add_eq(Expr e) { eq.push_back(std::move(e)); }
  void add_ineq(Expr e) { ineq.push_back(std::move(e)); }
  void add_obj(Expr e) { objective.push_back(std::move(e)); }

  int n_vars() const { return n; }
  int n_constraints() const {
    return static_cast<int>(eq.size() + ineq.size() + comp_pairs.size());
  }

  double objective_value(const VecX& x) const;
  double max_eq_residual(const VecX& x) const;
  double max_ineq_violation(const VecX& x) const;
  double max_comp_product(const VecX& x) const;
};

// Helper for the one-liner affine/bilinear rows the builders emit.
Expr make_expr(std::vector<int> vars,
               std::function<Dual2(const std::vector<Dual2>&)> fn,
               std::string label = {});

struct ValidationIssue {
  std::string where;  // "eq[3]", "obj[0]", ...
  int var = -1;       // global variable index
  double analytic = 0.0;
  double fd = 0.0;
  double rel_err = 0.0;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;
  std::string summary() const;
};

// Finite-difference check of every expression's gradient at random interior
// points (default 10), plus structural checks (bounds, pair indices).
ValidationReport validate(const NlpSpec& spec, int n_points = 10,
                          unsigned seed = 20240801);

enum class SolveStatus { kConverged, kInfeasible, kStalled, kIterationLimit };

std::string to_string(SolveStatus s);

struct SolverOptions {
  // complementarity relaxation schedule: products <= delta
  double delta0 = 1e-1;
  double delta_min = 3e-7;
  double shrink = 0.1;
  int max_stages = 8;
  int max_inner_iterations = 1000;
  double tol_eq = 1e-6;
  double tol_ineq = 1e-6;
  double tol_comp = 1e-6;
  double tol_kkt = 1e-5;
  unsigned seed = 0;  // reserved for randomized restarts (unused by default)
  double mu0 = 1e-2;  // initial barrier parameter per stage

  // one record per inner iteration when set
  std::function<void(int stage, double delta, int iter, double mu, double obj,
                     double eq_res, double kkt_res)>
      log;
};

struct SolveReport {
  SolveStatus status = SolveStatus::kStalled;
  double objective = 0.0;
  double max_eq_residual = 0.0;
  double max_ineq_violation = 0.0;
  double max_comp_product = 0.0;
  double stationarity = 0.0;
  std::vector<int> iterations_per_stage;
  double wall_time_s = 0.0;
  std::string message;

  int total_iterations() const {
    int t = 0;
    for (int i : iterations_per_stage) t += i;
    return t;
  }
};

struct SolveResult {
  VecX x;
  SolveReport report;
};

// Relaxation-homotopy interior-point solve. Deterministic for fixed inputs.
SolveResult solve(const NlpSpec& spec, const SolverOptions& opts,
                  const VecX& warm_start);

struct KktAudit {
  double stationarity = 0.0;  // after the least-squares multiplier fit
  double max_eq_residual = 0.0;
  double max_ineq_violation = 0.0;
  double max_comp_product = 0.0;
};

// Independent post-solve audit: refits multipliers for the active set by
// least squares and reports the remaining stationarity residual.
KktAudit check_kkt(const NlpSpec& spec, const VecX& x);

}  // namespace pivot
