#include "margins.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pivot {

namespace {

constexpr double kFeasTol = 1e-9;
// The bisection oracle tests near-exact non-negativity so its boundary
// agrees with the closed forms to machine-level accuracy.
constexpr double kOracleTol = 1e-13;
constexpr double kSearchCap = 1e6;
constexpr double kBisectTol = 1e-10;

struct Derived {
  double mg, D, Pi, S;
  double f_nA_moment;  // nominal normal at A from the moment balance
  double f_nA_forces;  // same from the two force balances
  double f_nB;         // nominal normal at B from the force balances
};

Derived derive(const KnotMarginInputs& in) {
  Derived d;
  d.mg = in.weight();
  d.D = in.mu_A * in.A.x() - in.A.y();
  d.Pi = 1 + in.mu_A * in.mu_B;
  d.S = -in.F_x - in.F_y - d.mg;
  d.f_nA_moment = -(in.C_x * d.mg + in.M_P) / d.D;
  d.f_nA_forces = (-in.mu_B * (d.mg + in.F_y) - in.F_x) / d.Pi;
  d.f_nB = (in.mu_A * in.F_x - in.F_y - d.mg) / d.Pi;
  return d;
}

// The margins certify redistribution around a consistent nominal point; the
// residual of the moment balance measures the inconsistency of the two f_nA
// routes at the equilibrium-equation scale.
void require_equilibrium(const KnotMarginInputs& in, const Derived& d) {
  const double scale = std::max(1.0, std::abs(d.mg) + std::abs(in.F_x) +
                                         std::abs(in.F_y));
  const double moment_resid =
      std::abs(d.f_nA_moment - d.f_nA_forces) * std::abs(d.D);
  if (moment_resid > 1e-6 * scale)
    throw PreconditionError("margin inputs violate static equilibrium");
  if (d.f_nA_moment < -1e-7 || d.f_nB < -1e-7)
    throw DegenerateMarginError("nominal contact normals are negative");
}

MarginInterval clamp_nonneg(MarginInterval m) {
  m.eps_plus = std::max(0.0, m.eps_plus);
  m.eps_minus = std::max(0.0, m.eps_minus);
  return m;
}

// Perturbed-normal evaluations shared by the oracle and the eval module.
bool mass_feasible(const KnotMarginInputs& in, const Derived& d, double eps) {
  const double f_nA = -(in.C_x * (d.mg + eps) + in.M_P) / d.D;
  const double f_nB = (in.mu_A * in.F_x - in.F_y - d.mg - eps) / d.Pi;
  return f_nA >= -kOracleTol && f_nB >= -kOracleTol;
}

bool com_feasible(const KnotMarginInputs& in, const Derived& d, double r) {
  const double f_nA = -((in.C_x + r) * d.mg + in.M_P) / d.D;
  const double f_nB = (d.S - (1 + in.mu_A) * f_nA) / (1 - in.mu_B);
  return f_nA >= -kOracleTol && f_nB >= -kOracleTol;
}

bool friction_feasible(const KnotMarginInputs& in, double eA, double eB) {
  const auto g = friction_margin_constraints(in, eA, eB);
  return *std::max_element(g.begin(), g.end()) <= kOracleTol;
}

}  // namespace

KnotMarginInputs make_margin_inputs(const ContactGeometry& geom,
                                    const ControlKnot& u,
                                    const ObjectSpec& spec,
                                    std::optional<double> patch_len) {
  KnotMarginInputs in;
  in.A = geom.A;
  in.C_x = geom.C.x();
  in.mass = spec.mass;
  in.mu_A = spec.mu_A;
  in.mu_B = spec.mu_B;
  const Vec2 f = world_force(geom.theta, u);
  if (!patch_len) {
    in.F_x = f.x();
    in.F_y = f.y();
    in.M_P = geom.P.x() * f.y() - geom.P.y() * f.x();
  } else {
    const double fhw = spec.face_halfwidth();
    if (*patch_len < 0 || *patch_len > 2 * fhw + 1e-12)
      throw DomainError("patch_len out of [0, w]");
    const Eigen::Matrix2d R = body_to_world(geom.theta);
    const Vec2 Bb = body_point_B(spec, geom.mode);
    const Vec2 P1 = R * (body_point_P(spec, fhw) - Bb);
    const Vec2 P2 = R * (body_point_P(spec, fhw - *patch_len) - Bb);
    in.F_x = 2 * f.x();
    in.F_y = 2 * f.y();
    in.M_P = (P1.x() + P2.x()) * f.y() - (P1.y() + P2.y()) * f.x();
  }
  const Derived d = derive(in);
  in.f_nA = d.f_nA_forces;
  in.f_nB = d.f_nB;
  return in;
}

MarginInterval mass_margin(const KnotMarginInputs& in) {
  const Derived d = derive(in);
  require_equilibrium(in, d);

  MarginInterval m;
  m.kind = MarginKind::kMassForce;
  const double b1 = in.C_x * d.mg + in.M_P;  // = -D * f_nA(0) >= 0
  const double b2 = in.mu_A * in.F_x - in.F_y - d.mg;  // = Pi * f_nB(0) >= 0
  if (std::abs(in.C_x) < kComArmTol) {
    m.eps_plus = b2;
    m.unbounded_minus = true;
  } else if (in.C_x > 0) {
    m.eps_plus = b2;
    m.eps_minus = b1 / in.C_x;
  } else {
    m.eps_plus = std::min(b2, -b1 / in.C_x);
    m.unbounded_minus = true;
  }
  return clamp_nonneg(m);
}

MarginInterval com_margin(const KnotMarginInputs& in) {
  const Derived d = derive(in);
  require_equilibrium(in, d);
  if (std::abs(in.mu_B - 1.0) < 1e-9)
    throw ConfigError("com margin undefined at mu_B == 1");

  MarginInterval m;
  m.kind = MarginKind::kComOffset;
  const double r_A = -in.M_P / d.mg - in.C_x;  // A-contact, upper bound
  const double r_B =
      in.C_x + (d.D * d.S / (1 + in.mu_A) + in.M_P) / d.mg;  // B-contact
  if (in.mu_B < 1.0) {
    m.eps_plus = r_A;
    m.eps_minus = r_B;
  } else {
    // B condition flips into a second upper bound; heavier-left unbounded.
    m.eps_plus = std::min(r_A, -r_B);
    m.unbounded_minus = true;
  }
  return clamp_nonneg(m);
}

std::array<double, 6> friction_margin_constraints(const KnotMarginInputs& in,
                                                  double eps_A, double eps_B) {
  const double mg = in.weight();
  const double n_A0 = -in.mu_B * (mg + in.F_y) - in.F_x;  // = Pi f_nA nominal
  const double n_B0 = in.mu_A * in.F_x - in.F_y - mg;     // = Pi f_nB nominal
  return {
      -(n_B0 - eps_A + in.mu_A * eps_B),  // perturbed B contact
      -(n_A0 - in.mu_B * eps_A - eps_B),  // perturbed A contact
      eps_A - in.mu_A * in.f_nA,          // uncertainty box at A
      -eps_A - in.mu_A * in.f_nA,
      eps_B - in.mu_B * in.f_nB,          // uncertainty box at B
      -eps_B - in.mu_B * in.f_nB,
  };
}

MarginInterval friction_margin(const KnotMarginInputs& in, MarginKind which) {
  const Derived d = derive(in);
  require_equilibrium(in, d);
  const double n_A0 = d.Pi * d.f_nA_forces;
  const double n_B0 = d.Pi * d.f_nB;

  MarginInterval m;
  m.kind = which;
  if (which == MarginKind::kFrictionA) {
    m.eps_plus = std::min({n_B0, n_A0 / in.mu_B, in.mu_A * in.f_nA});
    m.eps_minus = in.mu_A * in.f_nA;
  } else if (which == MarginKind::kFrictionB) {
    m.eps_plus = std::min(n_A0, in.mu_B * in.f_nB);
    m.eps_minus = std::min(n_B0 / in.mu_A, in.mu_B * in.f_nB);
  } else {
    throw DomainError("friction_margin: kind must be friction-A/B");
  }
  return clamp_nonneg(m);
}

std::vector<Vec2> friction_polygon(const KnotMarginInputs& in) {
  // Halfplanes a.x <= b from friction_margin_constraints.
  const double mg = in.weight();
  const double n_A0 = -in.mu_B * (mg + in.F_y) - in.F_x;
  const double n_B0 = in.mu_A * in.F_x - in.F_y - mg;
  struct Half {
    Vec2 a;
    double b;
  };
  const std::vector<Half> hs = {
      {{1.0, -in.mu_A}, n_B0},          {{in.mu_B, 1.0}, n_A0},
      {{1.0, 0.0}, in.mu_A * in.f_nA},  {{-1.0, 0.0}, in.mu_A * in.f_nA},
      {{0.0, 1.0}, in.mu_B * in.f_nB},  {{0.0, -1.0}, in.mu_B * in.f_nB},
  };
  std::vector<Vec2> verts;
  for (size_t i = 0; i < hs.size(); ++i) {
    for (size_t j = i + 1; j < hs.size(); ++j) {
      const double det =
          hs[i].a.x() * hs[j].a.y() - hs[i].a.y() * hs[j].a.x();
      if (std::abs(det) < 1e-12) continue;
      const Vec2 v{(hs[i].b * hs[j].a.y() - hs[j].b * hs[i].a.y()) / det,
                   (hs[i].a.x() * hs[j].b - hs[j].a.x() * hs[i].b) / det};
      bool inside = true;
      for (const auto& h : hs)
        if (h.a.dot(v) > h.b + 1e-9) inside = false;
      if (inside) verts.push_back(v);
    }
  }
  if (verts.empty()) return verts;
  Vec2 centroid = Vec2::Zero();
  for (const auto& v : verts) centroid += v;
  centroid /= static_cast<double>(verts.size());
  std::sort(verts.begin(), verts.end(), [&](const Vec2& p, const Vec2& q) {
    return std::atan2(p.y() - centroid.y(), p.x() - centroid.x()) <
           std::atan2(q.y() - centroid.y(), q.x() - centroid.x());
  });
  // drop duplicates from coincident halfplane intersections
  std::vector<Vec2> out;
  for (const auto& v : verts) {
    if (out.empty() || (v - out.back()).norm() > 1e-9) out.push_back(v);
  }
  if (out.size() > 2 && (out.front() - out.back()).norm() < 1e-9)
    out.pop_back();
  return out;
}

MarginInterval margin_oracle(const KnotMarginInputs& in, MarginKind kind) {
  const Derived d = derive(in);
  require_equilibrium(in, d);

  auto feasible = [&](double eps) -> bool {
    switch (kind) {
      case MarginKind::kMassForce: return mass_feasible(in, d, eps);
      case MarginKind::kComOffset: return com_feasible(in, d, eps);
      case MarginKind::kFrictionA: return friction_feasible(in, eps, 0.0);
      case MarginKind::kFrictionB: return friction_feasible(in, 0.0, eps);
    }
    return false;
  };
  if (!feasible(0.0))
    throw DegenerateMarginError("oracle: nominal point infeasible");

  auto search = [&](double sign) -> std::pair<double, bool> {
    if (feasible(sign * kSearchCap)) return {0.0, true};  // unbounded
    double lo = 0.0, hi = kSearchCap;
    while (hi - lo > kBisectTol) {
      const double mid = 0.5 * (lo + hi);
      (feasible(sign * mid) ? lo : hi) = mid;
    }
    return {lo, false};
  };
  MarginInterval m;
  m.kind = kind;
  std::tie(m.eps_plus, m.unbounded_plus) = search(+1.0);
  std::tie(m.eps_minus, m.unbounded_minus) = search(-1.0);
  return m;
}

double margin_force_to_kg(double eps_newton) {
  return eps_newton / std::abs(kGravity);
}

WorstMargin trajectory_worst_margin(std::span<const KnotMarginInputs> knots,
                                    MarginKind kind) {
  WorstMargin w;
  w.eps_plus_min = std::numeric_limits<double>::infinity();
  w.eps_minus_min = std::numeric_limits<double>::infinity();
  w.unbounded_plus = true;
  w.unbounded_minus = true;
  for (size_t k = 0; k < knots.size(); ++k) {
    MarginInterval m;
    switch (kind) {
      case MarginKind::kMassForce: m = mass_margin(knots[k]); break;
      case MarginKind::kComOffset: m = com_margin(knots[k]); break;
      default: m = friction_margin(knots[k], kind); break;
    }
    if (!m.unbounded_plus && m.eps_plus < w.eps_plus_min) {
      w.eps_plus_min = m.eps_plus;
      w.argmin_plus = static_cast<int>(k);
      w.unbounded_plus = false;
    }
    if (!m.unbounded_minus && m.eps_minus < w.eps_minus_min) {
      w.eps_minus_min = m.eps_minus;
      w.argmin_minus = static_cast<int>(k);
      w.unbounded_minus = false;
    }
  }
  return w;
}

}  // namespace pivot
