#include "nlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace pivot {

Dual2 Expr::eval(const VecX& x) const {
  const int nl = static_cast<int>(vars.size());
  std::vector<Dual2> locals;
  locals.reserve(nl);
  for (int i = 0; i < nl; ++i)
    locals.push_back(Dual2::var(x(vars[i]), i, nl));
  return fn(locals);
}

double Expr::value(const VecX& x) const {
  const int nl = static_cast<int>(vars.size());
  std::vector<Dual2> locals;
  locals.reserve(nl);
  for (int i = 0; i < nl; ++i)
    locals.push_back(Dual2::constant(x(vars[i]), 0));
  return fn(locals).v;
}

Expr make_expr(std::vector<int> vars,
               std::function<Dual2(const std::vector<Dual2>&)> fn,
               std::string label) {
  Expr e;
  e.vars = std::move(vars);
  e.fn = std::move(fn);
  e.label = std::move(label);
  return e;
}

int NlpSpec::add_var(const std::string& name, double lb, double ub) {
  if (lb > ub) throw ConfigError("variable bound lo > hi: " + name);
  const int idx = n++;
  lo.conservativeResize(n);
  hi.conservativeResize(n);
  lo(idx) = lb;
  hi(idx) = ub;
  var_names.push_back(name);
  return idx;
}

double NlpSpec::objective_value(const VecX& x) const {
  double f = 0.0;
  for (const auto& t : objective) f += t.value(x);
  return f;
}

double NlpSpec::max_eq_residual(const VecX& x) const {
  double r = 0.0;
  for (const auto& e : eq) r = std::max(r, std::abs(e.value(x)));
  return r;
}

double NlpSpec::max_ineq_violation(const VecX& x) const {
  double r = 0.0;
  for (const auto& e : ineq) r = std::max(r, e.value(x));
  return std::max(r, 0.0);
}

double NlpSpec::max_comp_product(const VecX& x) const {
  double r = 0.0;
  for (const auto& [a, b] : comp_pairs)
    r = std::max(r, std::abs(x(a) * x(b)));
  return r;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kStalled: return "stalled";
    case SolveStatus::kIterationLimit: return "iteration-limit";
  }
  return "?";
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  if (ok) {
    os << "validate: ok";
  } else {
    os << "validate: " << issues.size() << " issue(s)";
    for (size_t i = 0; i < issues.size() && i < 8; ++i) {
      const auto& is = issues[i];
      os << "\n  " << is.where << " var " << is.var << ": analytic "
         << is.analytic << " vs fd " << is.fd << " (rel " << is.rel_err << ")";
    }
  }
  return os.str();
}

ValidationReport validate(const NlpSpec& spec, int n_points, unsigned seed) {
  ValidationReport rep;
  for (int i = 0; i < spec.n; ++i) {
    if (spec.lo(i) > spec.hi(i)) {
      rep.ok = false;
      rep.issues.push_back({"bounds", i, spec.lo(i), spec.hi(i), 0.0});
    }
  }
  for (const auto& [a, b] : spec.comp_pairs) {
    if (a < 0 || a >= spec.n || b < 0 || b >= spec.n) {
      rep.ok = false;
      rep.issues.push_back({"comp_pair", std::min(a, b), 0, 0, 0});
    }
  }
  if (!rep.ok) return rep;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  auto interior_point = [&]() {
    VecX x(spec.n);
    for (int i = 0; i < spec.n; ++i) {
      const double lb = std::isfinite(spec.lo(i)) ? spec.lo(i) : -1.0;
      const double ub = std::isfinite(spec.hi(i)) ? spec.hi(i) : 1.0;
      x(i) = lb + (ub - lb) * unit(rng);
    }
    return x;
  };

  auto check_group = [&](const std::vector<Expr>& exprs, const char* tag,
                         const VecX& x) {
    for (size_t k = 0; k < exprs.size(); ++k) {
      const Expr& e = exprs[k];
      const Dual2 d = e.eval(x);
      for (size_t j = 0; j < e.vars.size(); ++j) {
        const int v = e.vars[j];
        const double h =
            1e-6 * std::max(1.0, std::abs(x(v)));
        VecX xp = x, xm = x;
        xp(v) += h;
        xm(v) -= h;
        const double fd = (e.value(xp) - e.value(xm)) / (2 * h);
        const double scale = std::max({1.0, std::abs(fd), std::abs(d.g(j))});
        const double err = std::abs(fd - d.g(j)) / scale;
        if (err > 1e-5) {
          rep.ok = false;
          std::ostringstream os;
          os << tag << "[" << k << "]";
          if (!e.label.empty()) os << " (" << e.label << ")";
          rep.issues.push_back({os.str(), v, d.g(j), fd, err});
        }
      }
    }
  };

  for (int p = 0; p < n_points; ++p) {
    const VecX x = interior_point();
    check_group(spec.eq, "eq", x);
    check_group(spec.ineq, "ineq", x);
    check_group(spec.objective, "obj", x);
    if (rep.issues.size() > 64) break;
  }
  return rep;
}

}  // namespace pivot
