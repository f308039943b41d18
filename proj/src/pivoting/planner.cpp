#include "planner.hpp"

#include <algorithm>
#include <cmath>

#include "kinematics.hpp"

namespace pivot {

namespace {

constexpr double kBigMult = 1e4;  // multiplier / slack upper bound

// Cap of the lower-level epsilon variables. It closes the otherwise
// unbounded negative-direction LPs (heavier-side margin with C_x < 0 has no
// finite bound), standing in for the +infinity the analysis allows.
double eps_cap(MarginKind kind) {
  return kind == MarginKind::kComOffset ? 0.1 : 5.0;
}

struct BodyOffsets {
  double dAx, dAy;    // A - Bc in body coordinates
  double dPx, dPy0;   // P - Bc at p_y = 0 (p_y adds to y)
  double dCx, dCy;    // C - Bc
  double dP1x, dP1y;  // patch point P1 (face vertex) - Bc
};

BodyOffsets body_offsets(const ObjectSpec& o, ModeId mode) {
  const Vec2 Bc = body_point_B(o, mode);
  const Vec2 A = body_point_A(o) - Bc;
  const Vec2 P0 = body_point_P(o, 0.0) - Bc;
  const Vec2 C = body_point_C(o) - Bc;
  const Vec2 P1 = body_point_P(o, o.face_halfwidth()) - Bc;
  return {A.x(), A.y(), P0.x(), P0.y(), C.x(), C.y(), P1.x(), P1.y()};
}

// Shared builder for every planner family.
class Builder {
 public:
  explicit Builder(const PlanConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    o_ = cfg_.object;
    N_ = cfg_.N;
    kappa_ = cfg_.contact == ContactModel::kPatch ? 2.0 : 1.0;
    modes_ = cfg_.kind == PlannerKind::kCiboModes;
    seam_ = modes_ ? N_ / 2 : N_;
    bp_.cfg = cfg_;
    bp_.layout.knot.resize(N_ + 1);
    bp_.layout.seam = modes_ ? seam_ : -1;
  }

  BuiltProblem run() {
    add_globals();
    for (int k = 0; k <= N_; ++k) add_state_vars(k);
    for (int k = 0; k < N_; ++k) add_stage_vars(k);
    for (int k = 0; k < N_; ++k) add_stage_rows(k);
    add_objective();
    return std::move(bp_);
  }

 private:
  PlanConfig cfg_;
  ObjectSpec o_;
  int N_ = 0;
  int seam_ = 0;
  bool modes_ = false;
  double kappa_ = 1.0;
  BuiltProblem bp_;

  NlpSpec& spec() { return bp_.spec; }
  KnotLayout& L(int k) { return bp_.layout.knot[k]; }
  ProblemLayout& g() { return bp_.layout; }

  ModeId mode_of(int k) const {
    if (cfg_.fixed_mode != 0) return cfg_.fixed_mode;
    if (!modes_) return 1;
    return k < seam_ ? cfg_.mode_sequence[0] : cfg_.mode_sequence[1];
  }

  bool cibo_scalar() const {
    return cfg_.kind == PlannerKind::kCiboMass ||
           cfg_.kind == PlannerKind::kCiboCom ||
           cfg_.kind == PlannerKind::kCiboModes;
  }
  bool cibo_friction() const {
    return cfg_.kind == PlannerKind::kCiboFriction;
  }

  std::string tag(const char* base, int k) const {
    return std::string(base) + "[" + std::to_string(k) + "]";
  }

  void add_globals() {
    if (modes_) {
      g().T1 = spec().add_var("T1", cfg_.T_min, cfg_.T_max);
      g().T2 = spec().add_var("T2", cfg_.T_min, cfg_.T_max);
    }
    if (cibo_scalar()) {
      const double cap = eps_cap(cfg_.margin_kind());
      g().tp = spec().add_var("t_plus", cfg_.t_plus_floor, cap);
      g().tm = spec().add_var("t_minus", cfg_.t_minus_floor, cap);
    } else if (cibo_friction()) {
      const double cap = eps_cap(MarginKind::kFrictionA);
      static const char* names[4] = {"t_Aplus", "t_Aminus", "t_Bplus",
                                     "t_Bminus"};
      for (int i = 0; i < 4; ++i)
        g().tf[i] = spec().add_var(names[i], 0.0, cap);
    }
  }

  void add_state_vars(int k) {
    auto& l = L(k);
    const double gamma = o_.is_peg() ? o_.step_angle() : 0.0;
    double th_lo = 0.0, th_hi = M_PI / 2;
    if (o_.is_peg()) {
      const ModeId m = mode_of(std::min(k, N_ - 1));
      if (m == 1) th_hi = gamma;
      if (m == 2) th_lo = gamma;
      if (modes_ && k == seam_) th_lo = th_hi = gamma;  // touchdown knot
    }
    if (k == 0) th_lo = th_hi = cfg_.theta_s;
    if (k == N_ && cfg_.terminal_constraint) th_lo = th_hi = cfg_.theta_g;
    l.th = spec().add_var(tag("th", k), th_lo, th_hi);

    const double fhw = o_.face_halfwidth();
    double py_lo = -fhw, py_hi = fhw;
    if (k == 0) py_lo = py_hi = cfg_.p_s;
    l.py = spec().add_var(tag("py", k), py_lo, py_hi);

    const double rate_scale = modes_ ? cfg_.T_max : 1.0;
    l.thd = spec().add_var(tag("thd", k), 0.0, cfg_.thetadot_max * rate_scale);
    l.pyd = spec().add_var(tag("pyd", k), -cfg_.pydot_max * rate_scale,
                           cfg_.pydot_max * rate_scale);
  }

  void add_stage_vars(int k) {
    auto& l = L(k);
    const double rate_scale = modes_ ? cfg_.T_max : 1.0;
    const double pmax = cfg_.pydot_max * rate_scale;
    l.pdp = spec().add_var(tag("pdp", k), 0.0, pmax);
    l.pdm = spec().add_var(tag("pdm", k), 0.0, pmax);
    l.fnP = spec().add_var(tag("fnP", k), 0.0, cfg_.f_u);
    l.ftP = spec().add_var(tag("ftP", k), -o_.mu_P * cfg_.f_u,
                           o_.mu_P * cfg_.f_u);
    l.fnA = spec().add_var(tag("fnA", k), 0.0, cfg_.f_u);
    l.ftA = spec().add_var(tag("ftA", k), 0.0, o_.mu_A * cfg_.f_u);
    l.fnB = spec().add_var(tag("fnB", k), 0.0, cfg_.f_u);
    l.ftB = spec().add_var(tag("ftB", k), -o_.mu_B * cfg_.f_u, 0.0);
    const double span = 2 * (o_.length + o_.width);
    l.Ax = spec().add_var(tag("Ax", k), -span, span);
    l.Ay = spec().add_var(tag("Ay", k), -span, span);
    l.Px = spec().add_var(tag("Px", k), -span, span);
    l.Py = spec().add_var(tag("Py", k), -span, span);
    l.Cx = spec().add_var(tag("Cx", k), -span, span);
    l.Cy = spec().add_var(tag("Cy", k), -span, span);
    l.sP1 = spec().add_var(tag("sP1", k), 0.0, 2 * o_.mu_P * cfg_.f_u);
    l.sP2 = spec().add_var(tag("sP2", k), 0.0, 2 * o_.mu_P * cfg_.f_u);

    if (cibo_scalar()) {
      const double cap = eps_cap(cfg_.margin_kind());
      l.ep = spec().add_var(tag("ep", k), 0.0, cap);
      l.em = spec().add_var(tag("em", k), 0.0, cap);
      for (int j = 0; j < 3; ++j)
        l.wp[j] = spec().add_var(tag("wp", k) + std::to_string(j), 0.0,
                                 kBigMult);
      l.wp_cap = spec().add_var(tag("wpc", k), 0.0, kBigMult);
      for (int j = 0; j < 3; ++j)
        l.wm[j] = spec().add_var(tag("wm", k) + std::to_string(j), 0.0,
                                 kBigMult);
      l.wm_cap = spec().add_var(tag("wmc", k), 0.0, kBigMult);
      l.sp[0] = spec().add_var(tag("sp0", k), 0.0, kBigMult);
      l.sp[1] = spec().add_var(tag("sp1c", k), 0.0, kBigMult);
      l.sp_cap = spec().add_var(tag("spc", k), 0.0, cap);
      l.sm[0] = spec().add_var(tag("sm0", k), 0.0, kBigMult);
      l.sm[1] = spec().add_var(tag("sm1c", k), 0.0, kBigMult);
      l.sm_cap = spec().add_var(tag("smc", k), 0.0, cap);
    } else if (cibo_friction()) {
      const double cap = eps_cap(MarginKind::kFrictionA);
      static const char* enames[4] = {"eAp", "eAm", "eBp", "eBm"};
      for (int i = 0; i < 4; ++i)
        l.ef[i] = spec().add_var(tag(enames[i], k), 0.0, cap);
      l.eAs = spec().add_var(tag("eAs", k), -cap, cap);
      l.eBs = spec().add_var(tag("eBs", k), -cap, cap);
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 7; ++j)
          l.wf[i][j] = spec().add_var(
              tag("wf", k) + std::to_string(i) + "_" + std::to_string(j), 0.0,
              kBigMult);
        for (int j = 0; j < 6; ++j)
          l.sgf[i][j] = spec().add_var(
              tag("sg", k) + std::to_string(i) + "_" + std::to_string(j), 0.0,
              kBigMult);
      }
    }
  }

  // ---- helpers returning AD expressions inside row lambdas ----
  // world force components at local duals: th, fnP, ftP
  static Dual2 fx_of(const Dual2& th, const Dual2& fnP, const Dual2& ftP) {
    return -fnP * cos(th) + ftP * sin(th);
  }
  static Dual2 fy_of(const Dual2& th, const Dual2& fnP, const Dual2& ftP) {
    return fnP * sin(th) + ftP * cos(th);
  }

  void add_stage_rows(int k) {
    auto& l = L(k);
    auto& ln = L(k + 1);
    const ModeId m = mode_of(k);
    const BodyOffsets b = body_offsets(o_, m);
    const double mg = o_.weight();
    const double muA = o_.mu_A, muB = o_.mu_B, muP = o_.mu_P;
    const double kap = kappa_;
    const bool patch = cfg_.contact == ContactModel::kPatch;

    // dynamics (explicit Euler; scaled-time rate for the mode planner)
    const double dt = modes_ ? 2.0 / N_ : cfg_.dt;
    spec().add_eq(make_expr({ln.th, l.th, l.thd},
                            [dt](const std::vector<Dual2>& v) {
                              return v[0] - v[1] - dt * v[2];
                            },
                            tag("dyn_th", k)));
    spec().add_eq(make_expr({ln.py, l.py, l.pyd},
                            [dt](const std::vector<Dual2>& v) {
                              return v[0] - v[1] - dt * v[2];
                            },
                            tag("dyn_py", k)));
    // slip-velocity split at P
    spec().add_eq(make_expr({l.pyd, l.pdp, l.pdm},
                            [](const std::vector<Dual2>& v) {
                              return v[0] - v[1] + v[2];
                            },
                            tag("split", k)));

    // forward kinematics
    auto fk_pair = [&](int vx, int vy, double dx, double dy, bool with_py,
                       const char* nm) {
      if (!with_py) {
        spec().add_eq(make_expr({vx, l.th},
                                [dx, dy](const std::vector<Dual2>& v) {
                                  return v[0] - dx * cos(v[1]) -
                                         dy * sin(v[1]);
                                },
                                tag(nm, k) + "x"));
        spec().add_eq(make_expr({vy, l.th},
                                [dx, dy](const std::vector<Dual2>& v) {
                                  return v[0] + dx * sin(v[1]) -
                                         dy * cos(v[1]);
                                },
                                tag(nm, k) + "y"));
      } else {
        spec().add_eq(make_expr({vx, l.th, l.py},
                                [dx, dy](const std::vector<Dual2>& v) {
                                  return v[0] - dx * cos(v[1]) -
                                         (dy + v[2]) * sin(v[1]);
                                },
                                tag(nm, k) + "x"));
        spec().add_eq(make_expr({vy, l.th, l.py},
                                [dx, dy](const std::vector<Dual2>& v) {
                                  return v[0] + dx * sin(v[1]) -
                                         (dy + v[2]) * cos(v[1]);
                                },
                                tag(nm, k) + "y"));
      }
    };
    fk_pair(l.Ax, l.Ay, b.dAx, b.dAy, false, "fkA");
    fk_pair(l.Px, l.Py, b.dPx, b.dPy0, true, "fkP");
    fk_pair(l.Cx, l.Cy, b.dCx, b.dCy, false, "fkC");

    // slipping-contact friction equalities at A and B
    spec().add_eq(make_expr({l.ftA, l.fnA},
                            [muA](const std::vector<Dual2>& v) {
                              return v[0] - muA * v[1];
                            },
                            tag("slipA", k)));
    spec().add_eq(make_expr({l.ftB, l.fnB},
                            [muB](const std::vector<Dual2>& v) {
                              return v[0] + muB * v[1];
                            },
                            tag("slipB", k)));

    // static equilibrium (forces in x, y and moment about B)
    spec().add_eq(make_expr({l.fnA, l.ftB, l.th, l.fnP, l.ftP},
                            [kap](const std::vector<Dual2>& v) {
                              return v[0] + v[1] + kap * fx_of(v[2], v[3], v[4]);
                            },
                            tag("eq_x", k)));
    spec().add_eq(make_expr({l.ftA, l.fnB, l.th, l.fnP, l.ftP},
                            [kap, mg](const std::vector<Dual2>& v) {
                              return v[0] + v[1] + mg +
                                     kap * fy_of(v[2], v[3], v[4]);
                            },
                            tag("eq_y", k)));
    // moment about B; under patch contact P1 rides the face vertex
    const double p1x = b.dP1x, p1y = b.dP1y;
    spec().add_eq(make_expr(
        {l.Ax, l.ftA, l.Ay, l.fnA, l.Cx, l.Px, l.Py, l.th, l.fnP, l.ftP},
        [mg, patch, p1x, p1y](const std::vector<Dual2>& v) {
          const Dual2& th = v[7];
          const Dual2 fx = fx_of(th, v[8], v[9]);
          const Dual2 fy = fy_of(th, v[8], v[9]);
          Dual2 moment = v[5] * fy - v[6] * fx;
          if (patch) {
            const Dual2 P1x = p1x * cos(th) + p1y * sin(th);
            const Dual2 P1y = -p1x * sin(th) + p1y * cos(th);
            moment = moment + P1x * fy - P1y * fx;
          }
          return v[0] * v[1] - v[2] * v[3] + v[4] * mg + moment;
        },
        tag("eq_m", k)));

    // friction cone at P as complementarity slacks
    spec().add_eq(make_expr({l.sP1, l.fnP, l.ftP},
                            [muP](const std::vector<Dual2>& v) {
                              return v[0] - muP * v[1] + v[2];
                            },
                            tag("coneP_p", k)));
    spec().add_eq(make_expr({l.sP2, l.fnP, l.ftP},
                            [muP](const std::vector<Dual2>& v) {
                              return v[0] - muP * v[1] - v[2];
                            },
                            tag("coneP_m", k)));
    spec().comp_pairs.emplace_back(l.pdp, l.sP1);
    spec().comp_pairs.emplace_back(l.pdm, l.sP2);

    // scaled-time rate limits against the active duration
    if (modes_) {
      const int T = (k < seam_) ? g().T1 : g().T2;
      const double thmax = cfg_.thetadot_max, pmax = cfg_.pydot_max;
      spec().add_ineq(make_expr({l.thd, T},
                                [thmax](const std::vector<Dual2>& v) {
                                  return v[0] - thmax * v[1];
                                },
                                tag("rate_th", k)));
      spec().add_ineq(make_expr({l.pyd, T},
                                [pmax](const std::vector<Dual2>& v) {
                                  return v[0] - pmax * v[1];
                                },
                                tag("rate_py_p", k)));
      spec().add_ineq(make_expr({l.pyd, T},
                                [pmax](const std::vector<Dual2>& v) {
                                  return -v[0] - pmax * v[1];
                                },
                                tag("rate_py_m", k)));
    }

    if (cibo_scalar()) add_scalar_lower_level(k);
    if (cibo_friction()) add_friction_lower_level(k);
  }

  // b1/b2 row expressions shared by the scalar lower-level blocks.
  // vars order: {extra..., Cx, Ax, Ay, Px, Py, th, fnP, ftP}
  struct ScalarRows {
    MarginKind kind;
    double mg, muA, muB, kap;
    bool patch;
    double p1x, p1y;

    // A_k entries: a1 may depend on Cx (mass kind)
    double a2;  // constant second row

    Dual2 moment(const std::vector<Dual2>& v, int px, int py, int th, int fnP,
                 int ftP) const {
      const Dual2 fx = fx_of(v[th], v[fnP], v[ftP]);
      const Dual2 fy = fy_of(v[th], v[fnP], v[ftP]);
      Dual2 mom = v[px] * fy - v[py] * fx;
      if (patch) {
        const Dual2 P1x = p1x * cos(v[th]) + p1y * sin(v[th]);
        const Dual2 P1y = -p1x * sin(v[th]) + p1y * cos(v[th]);
        mom = mom + P1x * fy - P1y * fx;
      }
      return mom;
    }
    Dual2 b1(const std::vector<Dual2>& v, int cx, int ax, int ay, int px,
             int py, int th, int fnP, int ftP) const {
      if (kind == MarginKind::kMassForce)
        return v[cx] * mg + moment(v, px, py, th, fnP, ftP);
      // CoM: r <= -M/mg - Cx
      return -1.0 / mg * moment(v, px, py, th, fnP, ftP) - v[cx];
    }
    Dual2 b2(const std::vector<Dual2>& v, int cx, int ax, int ay, int px,
             int py, int th, int fnP, int ftP) const {
      const Dual2 Fx = kap * fx_of(v[th], v[fnP], v[ftP]);
      const Dual2 Fy = kap * fy_of(v[th], v[fnP], v[ftP]);
      if (kind == MarginKind::kMassForce) return muA * Fx - Fy - mg;
      const Dual2 D = muA * v[ax] - v[ay];
      const Dual2 S = -Fx - Fy - mg;
      return v[cx] +
             1.0 / mg * (D * S / (1 + muA) + moment(v, px, py, th, fnP, ftP));
    }
  };

  void add_scalar_lower_level(int k) {
    auto& l = L(k);
    const MarginKind kind = cfg_.margin_kind();
    const double cap = eps_cap(kind);
    ScalarRows R{kind,
                 o_.weight(),
                 o_.mu_A,
                 o_.mu_B,
                 kappa_,
                 cfg_.contact == ContactModel::kPatch,
                 body_offsets(o_, mode_of(k)).dP1x,
                 body_offsets(o_, mode_of(k)).dP1y,
                 kind == MarginKind::kMassForce ? 1.0 : -1.0};
    const bool mass = kind == MarginKind::kMassForce;

    // local order shared by the b-rows: s, e, Cx, Ax, Ay, Px, Py, th, fnP, ftP
    auto brow = [&](int slack, int eps, double sgn_eps, bool second_row,
                    const char* nm) {
      spec().add_eq(make_expr(
          {slack, eps, l.Cx, l.Ax, l.Ay, l.Px, l.Py, l.th, l.fnP, l.ftP},
          [R, sgn_eps, second_row, mass](const std::vector<Dual2>& v) {
            // a1*e (mass: a1 = -Cx; com: a1 = 1); a2 constant
            Dual2 ae = second_row
                           ? (mass ? v[1] * 1.0 : v[1] * -1.0)
                           : (mass ? -(v[2] * v[1]) : v[1] * 1.0);
            const Dual2 b = second_row
                                ? R.b2(v, 2, 3, 4, 5, 6, 7, 8, 9)
                                : R.b1(v, 2, 3, 4, 5, 6, 7, 8, 9);
            return v[0] + sgn_eps * ae - b;
          },
          tag(nm, k)));
    };
    // plus-direction LP rows: s + a_j e - b_j = 0
    brow(l.sp[0], l.ep, +1.0, false, "lpP_b1");
    brow(l.sp[1], l.ep, +1.0, true, "lpP_b2");
    // minus-direction LP rows: s - a_j e - b_j = 0
    brow(l.sm[0], l.em, -1.0, false, "lpM_b1");
    brow(l.sm[1], l.em, -1.0, true, "lpM_b2");
    // cap rows: s_cap + e - cap = 0
    auto caprow = [&](int slack, int eps, const char* nm) {
      spec().add_eq(make_expr({slack, eps},
                              [cap](const std::vector<Dual2>& v) {
                                return v[0] + v[1] - cap;
                              },
                              tag(nm, k)));
    };
    caprow(l.sp_cap, l.ep, "lpP_cap");
    caprow(l.sm_cap, l.em, "lpM_cap");

    // stationarity of both LPs; a1 depends on Cx for the mass kind
    const double a2 = mass ? 1.0 : -1.0;
    if (mass) {
      spec().add_eq(make_expr(
          {l.wp[0], l.wp[1], l.wp[2], l.wp_cap, l.Cx},
          [a2](const std::vector<Dual2>& v) {
            return -1.0 - v[4] * v[0] + a2 * v[1] - v[2] + v[3];
          },
          tag("lpP_stat", k)));
      spec().add_eq(make_expr(
          {l.wm[0], l.wm[1], l.wm[2], l.wm_cap, l.Cx},
          [a2](const std::vector<Dual2>& v) {
            return -1.0 + v[4] * v[0] - a2 * v[1] - v[2] + v[3];
          },
          tag("lpM_stat", k)));
    } else {
      spec().add_eq(make_expr(
          {l.wp[0], l.wp[1], l.wp[2], l.wp_cap},
          [a2](const std::vector<Dual2>& v) {
            return -1.0 + v[0] + a2 * v[1] - v[2] + v[3];
          },
          tag("lpP_stat", k)));
      spec().add_eq(make_expr(
          {l.wm[0], l.wm[1], l.wm[2], l.wm_cap},
          [a2](const std::vector<Dual2>& v) {
            return -1.0 - v[0] - a2 * v[1] - v[2] + v[3];
          },
          tag("lpM_stat", k)));
    }

    // tiny strictly-convex tie-break keeps degenerate LP multipliers unique
    spec().add_obj(make_expr(
        {l.wp[0], l.wp[1], l.wp[2], l.wp_cap, l.wm[0], l.wm[1], l.wm[2],
         l.wm_cap},
        [](const std::vector<Dual2>& v) {
          Dual2 r = square(v[0]);
          for (size_t i = 1; i < v.size(); ++i) r = r + square(v[i]);
          return 1e-9 * r;
        },
        tag("wreg", k)));
    spec().comp_pairs.emplace_back(l.wp[0], l.sp[0]);
    spec().comp_pairs.emplace_back(l.wp[1], l.sp[1]);
    spec().comp_pairs.emplace_back(l.wp[2], l.ep);
    spec().comp_pairs.emplace_back(l.wp_cap, l.sp_cap);
    spec().comp_pairs.emplace_back(l.wm[0], l.sm[0]);
    spec().comp_pairs.emplace_back(l.wm[1], l.sm[1]);
    spec().comp_pairs.emplace_back(l.wm[2], l.em);
    spec().comp_pairs.emplace_back(l.wm_cap, l.sm_cap);

    // epigraph of the worst-case objective
    spec().add_ineq(make_expr({g().tp, l.ep},
                              [](const std::vector<Dual2>& v) {
                                return v[0] - v[1];
                              },
                              tag("epi_p", k)));
    spec().add_ineq(make_expr({g().tm, l.em},
                              [](const std::vector<Dual2>& v) {
                                return v[0] - v[1];
                              },
                              tag("epi_m", k)));
  }

  void add_friction_lower_level(int k) {
    auto& l = L(k);
    const double mg = o_.weight();
    const double muA = o_.mu_A, muB = o_.mu_B;
    const double kap = kappa_;

    // G_j(epsA, epsB) <= 0 residuals; boxes use the trajectory's nominal
    // normals. Local order: s, e, es, th, fnP, ftP, fn(A|B)
    // n_A0 = -muB (mg + Fy) - Fx ; n_B0 = muA Fx - Fy - mg
    auto G = [mg, muA, muB, kap](int j, const Dual2& eA, const Dual2& eB,
                                 const Dual2& th, const Dual2& fnP,
                                 const Dual2& ftP, const Dual2& fn) -> Dual2 {
      const Dual2 Fx = kap * fx_of(th, fnP, ftP);
      const Dual2 Fy = kap * fy_of(th, fnP, ftP);
      switch (j) {
        case 0: return -(muA * Fx - Fy - mg) + eA - muA * eB;      // B contact
        case 1: return -(-muB * (mg + Fy) - Fx) + muB * eA + eB;   // A contact
        case 2: return eA - muA * fn;
        case 3: return -eA - muA * fn;
        case 4: return eB - muB * fn;
        default: return -eB - muB * fn;
      }
    };
    // lower-level blocks: i = 0 (A+), 1 (A-), 2 (B+), 3 (B-)
    for (int i = 0; i < 4; ++i) {
      const bool axis_A = i < 2;
      const double sgn = (i % 2 == 0) ? 1.0 : -1.0;
      const int e = l.ef[i];
      const int es = axis_A ? l.eBs : l.eAs;
      for (int j = 0; j < 6; ++j) {
        const int fn = (j == 2 || j == 3) ? l.fnA : l.fnB;
        spec().add_eq(make_expr(
            {l.sgf[i][j], e, es, l.th, l.fnP, l.ftP, fn},
            [G, j, axis_A, sgn](const std::vector<Dual2>& v) {
              const Dual2 eA = axis_A ? sgn * v[1] : v[2];
              const Dual2 eB = axis_A ? v[2] : sgn * v[1];
              return v[0] + G(j, eA, eB, v[3], v[4], v[5], v[6]);
            },
            tag("fg", k) + std::to_string(i) + std::to_string(j)));
        spec().comp_pairs.emplace_back(l.wf[i][j], l.sgf[i][j]);
      }
      spec().comp_pairs.emplace_back(l.wf[i][6], e);
      // stationarity: -1 + sum_j w_j * dG_j/de - w7 = 0
      const double dA[6] = {1.0, muB, 1.0, -1.0, 0.0, 0.0};
      const double dB[6] = {-muA, 1.0, 0.0, 0.0, 1.0, -1.0};
      std::array<double, 6> c{};
      for (int j = 0; j < 6; ++j) c[j] = sgn * (axis_A ? dA[j] : dB[j]);
      spec().add_eq(make_expr(
          {l.wf[i][0], l.wf[i][1], l.wf[i][2], l.wf[i][3], l.wf[i][4],
           l.wf[i][5], l.wf[i][6]},
          [c](const std::vector<Dual2>& v) {
            Dual2 r = v[6] * -1.0 - 1.0;
            for (int j = 0; j < 6; ++j) r = r + c[j] * v[j];
            return r;
          },
          tag("fstat", k) + std::to_string(i)));
    }
    // cross-coupling boxes: es within the optimized margins of its own axis
    auto boxrow = [&](int es, int lohi, int sign, const char* nm) {
      spec().add_ineq(make_expr({es, lohi},
                                [sign](const std::vector<Dual2>& v) {
                                  return sign * v[0] - v[1];
                                },
                                tag(nm, k)));
    };
    for (int i = 0; i < 4; ++i) {
      spec().add_obj(make_expr(
          {l.wf[i][0], l.wf[i][1], l.wf[i][2], l.wf[i][3], l.wf[i][4],
           l.wf[i][5], l.wf[i][6]},
          [](const std::vector<Dual2>& v) {
            Dual2 r = square(v[0]);
            for (size_t j = 1; j < v.size(); ++j) r = r + square(v[j]);
            return 1e-9 * r;
          },
          tag("wreg", k) + std::to_string(i)));
    }
    spec().add_obj(make_expr({l.eAs, l.eBs},
                             [](const std::vector<Dual2>& v) {
                               return 1e-9 * (square(v[0]) + square(v[1]));
                             },
                             tag("esreg", k)));
    boxrow(l.eAs, l.ef[0], +1, "boxA_hi");
    boxrow(l.eAs, l.ef[1], -1, "boxA_lo");
    boxrow(l.eBs, l.ef[2], +1, "boxB_hi");
    boxrow(l.eBs, l.ef[3], -1, "boxB_lo");
    // epigraphs
    for (int i = 0; i < 4; ++i) {
      spec().add_ineq(make_expr({g().tf[i], l.ef[i]},
                                [](const std::vector<Dual2>& v) {
                                  return v[0] - v[1];
                                },
                                tag("fepi", k) + std::to_string(i)));
    }
  }

  void add_objective() {
    const bool cibo = cfg_.kind != PlannerKind::kBaseline;
    const double track_w =
        cfg_.kind == PlannerKind::kBaseline
            ? 1.0
            : (cfg_.kind == PlannerKind::kCiboModes ? 1.0 : cfg_.beta);
    const int k_lo = modes_ ? 0 : 1;
    const int k_hi = modes_ ? N_ - 1 : N_;
    const double thg = cfg_.theta_g;
    for (int k = k_lo; k <= k_hi; ++k) {
      auto& l = L(k);
      const double q0 = track_w * cfg_.Q(0), q1 = track_w * cfg_.Q(1);
      const double q2 = track_w * cfg_.Q(2), q3 = track_w * cfg_.Q(3);
      if (q0 != 0 || q1 != 0 || q2 != 0 || q3 != 0) {
        spec().add_obj(make_expr(
            {l.th, l.py, l.thd, l.pyd},
            [q0, q1, q2, q3, thg](const std::vector<Dual2>& v) {
              return q0 * square(v[0] - thg) + q1 * square(v[1]) +
                     q2 * square(v[2]) + q3 * square(v[3]);
            },
            tag("track", k)));
      }
    }
    for (int k = 0; k < N_; ++k) {
      auto& l = L(k);
      const double r0 = track_w * cfg_.R(0), r1 = track_w * cfg_.R(1);
      spec().add_obj(make_expr({l.fnP, l.ftP},
                               [r0, r1](const std::vector<Dual2>& v) {
                                 return r0 * square(v[0]) + r1 * square(v[1]);
                               },
                               tag("effort", k)));
    }
    if (modes_) {
      spec().add_obj(make_expr({g().T1, g().T2},
                               [](const std::vector<Dual2>& v) {
                                 return v[0] + v[1];
                               },
                               "duration"));
    }
    if (cibo_scalar()) {
      const double a = cfg_.alpha;
      spec().add_obj(make_expr({g().tp, g().tm},
                               [a](const std::vector<Dual2>& v) {
                                 return -(v[0] + a * v[1]);
                               },
                               "worst_margin"));
    } else if (cibo_friction()) {
      const double a = cfg_.alpha;
      spec().add_obj(make_expr(
          {g().tf[0], g().tf[1], g().tf[2], g().tf[3]},
          [a](const std::vector<Dual2>& v) {
            return -(v[0] + a * v[1] + v[2] + a * v[3]);
          },
          "worst_margin"));
    }
  }
};

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(PlannerKind k) {
  switch (k) {
    case PlannerKind::kBaseline: return "baseline";
    case PlannerKind::kCiboMass: return "cibo-mass";
    case PlannerKind::kCiboCom: return "cibo-com";
    case PlannerKind::kCiboFriction: return "cibo-friction";
    case PlannerKind::kCiboModes: return "cibo-modes";
  }
  return "?";
}

PlannerKind planner_kind_from(const std::string& s) {
  if (s == "baseline") return PlannerKind::kBaseline;
  if (s == "mass" || s == "cibo-mass") return PlannerKind::kCiboMass;
  if (s == "com" || s == "cibo-com") return PlannerKind::kCiboCom;
  if (s == "friction" || s == "cibo-friction")
    return PlannerKind::kCiboFriction;
  if (s == "modes" || s == "cibo-modes") return PlannerKind::kCiboModes;
  throw ConfigError("unknown planner kind: " + s);
}

MarginKind PlanConfig::margin_kind() const {
  switch (kind) {
    case PlannerKind::kCiboMass: return MarginKind::kMassForce;
    case PlannerKind::kCiboCom:
    case PlannerKind::kCiboModes: return MarginKind::kComOffset;
    case PlannerKind::kCiboFriction: return MarginKind::kFrictionA;
    default: return MarginKind::kMassForce;
  }
}

void PlanConfig::validate() const {
  object.validate();
  if (N < 2) throw ConfigError("N must be >= 2");
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  if (!(alpha > 0)) throw ConfigError("alpha must be positive");
  if (!(f_u > 0)) throw ConfigError("f_u must be positive");
  for (int i = 0; i < 4; ++i)
    if (Q(i) < 0) throw ConfigError("Q must be positive semidefinite");
  if (!(R(0) > 0) || !(R(1) > 0))
    throw ConfigError("R must be positive definite");
  if (theta_s < 0 || theta_s > M_PI / 2 || theta_g < 0 ||
      theta_g > M_PI / 2 + 1e-12)
    throw ConfigError("boundary states outside the state set");
  if (std::abs(p_s) > object.face_halfwidth() + 1e-12)
    throw ConfigError("p_y(0) outside the face");
  if (kind == PlannerKind::kCiboModes) {
    if (!object.is_peg()) throw ConfigError("mode planner needs a peg");
    if (mode_sequence.size() != 2 || mode_sequence[0] != 1 ||
        mode_sequence[1] != 2)
      throw ConfigError("mode planner supports the sequence {1, 2}");
    if (N % 2 != 0) throw ConfigError("mode planner needs an even N");
    if (!(T_min > 0) || T_min >= T_max) throw ConfigError("bad T bounds");
    if (theta_s > object.step_angle())
      throw ConfigError("theta_s must lie in mode 1");
  }
  if (fixed_mode != 0 && !object.is_peg())
    throw ConfigError("fixed_mode applies to pegs only");
}

ModeId BuiltProblem::mode_of_stage(int k) const {
  if (cfg.fixed_mode != 0) return cfg.fixed_mode;
  if (cfg.kind != PlannerKind::kCiboModes) return 1;
  return k < layout.seam ? cfg.mode_sequence[0] : cfg.mode_sequence[1];
}

BuiltProblem build_baseline(const PlanConfig& cfg) {
  if (cfg.kind != PlannerKind::kBaseline)
    throw ConfigError("build_baseline: wrong kind");
  return Builder(cfg).run();
}

BuiltProblem build_cibo_scalar(const PlanConfig& cfg) {
  if (cfg.kind != PlannerKind::kCiboMass && cfg.kind != PlannerKind::kCiboCom)
    throw ConfigError("build_cibo_scalar: wrong kind");
  return Builder(cfg).run();
}

BuiltProblem build_cibo_friction(const PlanConfig& cfg) {
  if (cfg.kind != PlannerKind::kCiboFriction)
    throw ConfigError("build_cibo_friction: wrong kind");
  return Builder(cfg).run();
}

BuiltProblem build_cibo_modes(const PlanConfig& cfg) {
  if (cfg.kind != PlannerKind::kCiboModes)
    throw ConfigError("build_cibo_modes: wrong kind");
  return Builder(cfg).run();
}

BuiltProblem build(const PlanConfig& cfg) { return Builder(cfg).run(); }

KnotMarginInputs knot_margin_inputs(const PlanConfig& cfg, const Knot& knot,
                                    std::optional<double> patch_len) {
  return make_margin_inputs(knot.geom, knot.u, cfg.object, patch_len);
}

namespace {

double capped(const MarginInterval& m, bool plus, double cap) {
  if (plus) return m.unbounded_plus ? cap : std::min(m.eps_plus, cap);
  return m.unbounded_minus ? cap : std::min(m.eps_minus, cap);
}

// Analytic optimum of one scalar lower-level LP at a solved knot.
std::pair<double, double> scalar_lp_optima(const KnotMarginInputs& in,
                                           MarginKind kind) {
  const MarginInterval m = kind == MarginKind::kMassForce ? mass_margin(in)
                                                          : com_margin(in);
  const double cap = eps_cap(kind);
  return {capped(m, true, cap), capped(m, false, cap)};
}

// Analytic optima of the four friction LPs given the cross-coupled
// epsilon* values of the other axis.
std::array<double, 4> friction_lp_optima(const KnotMarginInputs& in,
                                         double eAs, double eBs) {
  const double dA[6] = {1.0, in.mu_B, 1.0, -1.0, 0.0, 0.0};
  const double dB[6] = {-in.mu_A, 1.0, 0.0, 0.0, 1.0, -1.0};
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i) {
    const bool axis_A = i < 2;
    const double sgn = (i % 2 == 0) ? 1.0 : -1.0;
    const auto g0 = axis_A ? friction_margin_constraints(in, 0.0, eBs)
                           : friction_margin_constraints(in, eAs, 0.0);
    double best = eps_cap(MarginKind::kFrictionA);
    for (int j = 0; j < 6; ++j) {
      const double slope = sgn * (axis_A ? dA[j] : dB[j]);
      if (slope > 1e-12) best = std::min(best, -g0[j] / slope);
    }
    out[i] = std::max(best, 0.0);
  }
  return out;
}

}  // namespace

VecX make_warm_start(const BuiltProblem& bp) {
  const PlanConfig& cfg = bp.cfg;
  const NlpSpec& spec = bp.spec;
  const ProblemLayout& L = bp.layout;
  const int N = cfg.N;
  VecX x = VecX::Zero(spec.n);

  const double gamma = cfg.object.is_peg() ? cfg.object.step_angle() : 0.0;
  const bool modes = cfg.kind == PlannerKind::kCiboModes;

  // boundary states are always seeded
  x(L.knot[0].th) = cfg.theta_s;
  x(L.knot[0].py) = cfg.p_s;
  if (cfg.terminal_constraint) x(L.knot[N].th) = cfg.theta_g;
  if (modes) {
    x(L.T1) = std::clamp(1.3 * (gamma - cfg.theta_s) / cfg.thetadot_max,
                         cfg.T_min, cfg.T_max);
    x(L.T2) = std::clamp(1.3 * (cfg.theta_g - gamma) / cfg.thetadot_max,
                         cfg.T_min, cfg.T_max);
  }
  if (cfg.warm_start == WarmStartStrategy::kPaper) return x;

  // interpolated: linear theta path, static forces, closed-form margins
  const int seam = modes ? N / 2 : N;
  auto theta_ws = [&](int k) -> double {
    const double th_end =
        cfg.terminal_constraint ? cfg.theta_g : std::min(cfg.theta_g, 1.45);
    if (!modes)
      return cfg.theta_s + (th_end - cfg.theta_s) * k / static_cast<double>(N);
    const double th2_end = std::min(th_end, M_PI / 2 - 0.05);
    if (k <= seam)
      return cfg.theta_s + (gamma - cfg.theta_s) * k / static_cast<double>(seam);
    return gamma + (th2_end - gamma) * (k - seam) / static_cast<double>(N - seam);
  };
  const double dtau = modes ? 2.0 / N : cfg.dt;
  for (int k = 0; k <= N; ++k) {
    x(L.knot[k].th) = theta_ws(k);
    x(L.knot[k].py) = cfg.p_s;
    if (k < N)
      x(L.knot[k].thd) = (theta_ws(k + 1) - theta_ws(k)) / dtau;
  }

  const double fhw = cfg.object.face_halfwidth();
  std::vector<KnotMarginInputs> inputs;
  for (int k = 0; k < N; ++k) {
    const auto& l = L.knot[k];
    const ModeId m = bp.mode_of_stage(k);
    const double th = x(l.th), py = x(l.py);
    std::optional<double> plen;
    if (cfg.contact == ContactModel::kPatch) plen = fhw - py;
    StaticSolution s{0.5, 0.0, 0.2, 0.2};
    const auto w = static_window(th, py, cfg.object, m, cfg.f_u, plen);
    if (w.feasible) s = w.mid();
    x(l.fnP) = s.f_nP;
    x(l.ftP) = s.f_tP;
    x(l.fnA) = s.f_nA;
    x(l.fnB) = s.f_nB;
    x(l.ftA) = cfg.object.mu_A * s.f_nA;
    x(l.ftB) = -cfg.object.mu_B * s.f_nB;
    const ContactGeometry geom = fk(th, py, cfg.object, m);
    x(l.Ax) = geom.A.x();
    x(l.Ay) = geom.A.y();
    x(l.Px) = geom.P.x();
    x(l.Py) = geom.P.y();
    x(l.Cx) = geom.C.x();
    x(l.Cy) = geom.C.y();

    if (cfg.kind != PlannerKind::kBaseline && w.feasible) {
      try {
        KnotMarginInputs in =
            make_margin_inputs(geom, ControlKnot{s.f_nP, s.f_tP}, cfg.object,
                               plen);
        const MarginKind kind = cfg.margin_kind();
        if (cfg.kind == PlannerKind::kCiboFriction) {
          const auto opt = friction_lp_optima(in, 0.0, 0.0);
          const double dA[6] = {1.0, in.mu_B, 1.0, -1.0, 0.0, 0.0};
          const double dB[6] = {-in.mu_A, 1.0, 0.0, 0.0, 1.0, -1.0};
          for (int i = 0; i < 4; ++i) {
            x(l.ef[i]) = opt[i];
            // multiplier of the binding row balances the LP stationarity
            const bool axis_A = i < 2;
            const double sgn = (i % 2 == 0) ? 1.0 : -1.0;
            const auto g0 = axis_A
                                ? friction_margin_constraints(in, 0.0, 0.0)
                                : friction_margin_constraints(in, 0.0, 0.0);
            int jb = -1;
            double best = kInf;
            for (int j = 0; j < 6; ++j) {
              const double slope = sgn * (axis_A ? dA[j] : dB[j]);
              if (slope > 1e-12 && -g0[j] / slope < best) {
                best = -g0[j] / slope;
                jb = j;
              }
            }
            if (jb >= 0 && best <= eps_cap(MarginKind::kFrictionA)) {
              const double slope = sgn * (axis_A ? dA[jb] : dB[jb]);
              x(l.wf[i][jb]) = 1.0 / slope;
            }
          }
        } else {
          auto [ep, em] = scalar_lp_optima(in, kind);
          x(l.ep) = ep;
          x(l.em) = em;
          // caps of both LPs; the binding one carries the multiplier
          const bool mass = kind == MarginKind::kMassForce;
          const double mg = in.weight();
          const double Mp = in.M_P;
          const double D = in.mu_A * in.A.x() - in.A.y();
          const double S = -in.F_x - in.F_y - mg;
          const double b1 = mass ? in.C_x * mg + Mp : -Mp / mg - in.C_x;
          const double b2 = mass
                                ? in.mu_A * in.F_x - in.F_y - mg
                                : in.C_x + (D * S / (1 + in.mu_A) + Mp) / mg;
          const double a1 = mass ? -in.C_x : 1.0;
          const double a2 = mass ? 1.0 : -1.0;
          const double cap = eps_cap(kind);
          auto assign = [&](double e_val, double s1, double s2, int w1,
                            int w2, int wcap) {
            const double c1 = s1 > 1e-12 ? b1 / s1 : kInf;
            const double c2 = s2 > 1e-12 ? b2 / s2 : kInf;
            if (cap <= std::min(c1, c2) + 1e-15 && e_val >= cap - 1e-9) {
              x(wcap) = 1.0;
            } else if (c1 <= c2) {
              x(w1) = 1.0 / s1;
            } else {
              x(w2) = 1.0 / s2;
            }
          };
          assign(x(l.ep), a1, a2, l.wp[0], l.wp[1], l.wp_cap);
          assign(x(l.em), -a1, -a2, l.wm[0], l.wm[1], l.wm_cap);
        }
      } catch (const std::exception&) {
        // leave zeros; the solver recovers
      }
    }
  }
  // slack variables close their defining rows exactly
  for (const auto& e : spec.eq) {
    const auto& lb = e.label;
    const bool slack_row =
        lb.compare(0, 4, "cone") == 0 || lb.compare(0, 2, "fg") == 0 ||
        (lb.compare(0, 2, "lp") == 0 && lb.find("stat") == std::string::npos);
    if (slack_row) {
      const int s = e.vars[0];
      x(s) = 0.0;
      x(s) = -e.value(x);
    }
  }
  // epigraph variables just below the per-knot minima
  if (cfg.kind == PlannerKind::kCiboMass || cfg.kind == PlannerKind::kCiboCom ||
      modes) {
    double mp = kInf, mm = kInf;
    for (int k = 0; k < N; ++k) {
      mp = std::min(mp, x(L.knot[k].ep));
      mm = std::min(mm, x(L.knot[k].em));
    }
    x(L.tp) = std::max(0.0, 0.95 * mp);
    x(L.tm) = std::max(0.0, 0.95 * mm);
  } else if (cfg.kind == PlannerKind::kCiboFriction) {
    for (int i = 0; i < 4; ++i) {
      double mi = kInf;
      for (int k = 0; k < N; ++k) mi = std::min(mi, x(L.knot[k].ef[i]));
      x(L.tf[i]) = std::max(0.0, 0.95 * mi);
    }
  }
  return x;
}

Trajectory extract_trajectory(const BuiltProblem& bp, const VecX& x,
                              const SolveReport& report) {
  const PlanConfig& cfg = bp.cfg;
  if (x.size() != bp.spec.n)
    throw LayoutError("solution vector does not match the problem layout");
  const int N = cfg.N;
  Trajectory traj;
  traj.cfg = cfg;
  traj.report = report;
  traj.knots.resize(N + 1);
  traj.margins.resize(N);
  traj.eps_solver.assign(N, {0, 0, 0, 0});
  if (cfg.contact == ContactModel::kPatch) traj.patch_len.resize(N);
  const bool modes = cfg.kind == PlannerKind::kCiboModes;
  if (modes) {
    traj.T1 = x(bp.layout.T1);
    traj.T2 = x(bp.layout.T2);
  }
  const double fhw = cfg.object.face_halfwidth();
  const double dtau = modes ? 2.0 / N : cfg.dt;
  const int seam = modes ? N / 2 : N;

  double disc = 0.0;
  for (int k = 0; k <= N; ++k) {
    const auto& l = bp.layout.knot[k];
    Knot& kn = traj.knots[k];
    kn.x.theta = x(l.th);
    kn.x.p_y = x(l.py);
    kn.x.theta_dot = x(l.thd);
    kn.x.p_y_dot = x(l.pyd);
    const ModeId m = bp.mode_of_stage(std::min(k, N - 1));
    if (modes) {
      const double tau = k * dtau;
      kn.t = tau <= 1.0 ? traj.T1 * tau : traj.T1 + traj.T2 * (tau - 1.0);
      // physical rates are the scaled rates divided by the active duration
      const double T = k < seam ? traj.T1 : traj.T2;
      kn.x.theta_dot /= T;
      kn.x.p_y_dot /= T;
    } else {
      kn.t = k * cfg.dt;
    }
    kn.geom = fk(kn.x.theta, kn.x.p_y, cfg.object, m);
    if (k == N) break;

    kn.x.p_y_dot_plus = x(l.pdp);
    kn.x.p_y_dot_minus = x(l.pdm);
    if (modes) {
      const double T = k < seam ? traj.T1 : traj.T2;
      kn.x.p_y_dot_plus /= T;
      kn.x.p_y_dot_minus /= T;
    }
    kn.u.f_nP = x(l.fnP);
    kn.u.f_tP = x(l.ftP);
    kn.f.f_nA = x(l.fnA);
    kn.f.f_tA = x(l.ftA);
    kn.f.f_nB = x(l.fnB);
    kn.f.f_tB = x(l.ftB);
    const auto [sA, sB] =
        contact_slip_speeds(kn.x.theta, kn.x.theta_dot, cfg.object, m);
    kn.f.slip_A_plus = sA;
    kn.f.slip_B_minus = sB;

    std::optional<double> plen;
    if (cfg.contact == ContactModel::kPatch) {
      plen = fhw - kn.x.p_y;
      traj.patch_len[k] = *plen;
    }
    KnotMargins& mg = traj.margins[k];
    try {
      const KnotMarginInputs in = knot_margin_inputs(cfg, kn, plen);
      mg.mass = mass_margin(in);
      mg.com = com_margin(in);
      mg.friction_A = friction_margin(in, MarginKind::kFrictionA);
      mg.friction_B = friction_margin(in, MarginKind::kFrictionB);

      if (cfg.kind == PlannerKind::kCiboMass ||
          cfg.kind == PlannerKind::kCiboCom || modes) {
        traj.eps_solver[k] = {x(l.ep), x(l.em), 0, 0};
        const auto [ep_cf, em_cf] = scalar_lp_optima(in, cfg.margin_kind());
        disc = std::max({disc, std::abs(x(l.ep) - ep_cf),
                         std::abs(x(l.em) - em_cf)});
      } else if (cfg.kind == PlannerKind::kCiboFriction) {
        for (int i = 0; i < 4; ++i) traj.eps_solver[k][i] = x(l.ef[i]);
        const auto opt = friction_lp_optima(in, x(l.eAs), x(l.eBs));
        for (int i = 0; i < 4; ++i)
          disc = std::max(disc, std::abs(x(l.ef[i]) - opt[i]));
      }
    } catch (const std::exception&) {
      // non-equilibrium knot (failed solve); margins stay zero
    }
  }
  traj.margin_discrepancy = disc;
  if (cfg.kind == PlannerKind::kCiboMass || cfg.kind == PlannerKind::kCiboCom ||
      modes) {
    traj.epigraph_plus = x(bp.layout.tp);
    traj.epigraph_minus = x(bp.layout.tm);
  } else if (cfg.kind == PlannerKind::kCiboFriction) {
    for (int i = 0; i < 4; ++i)
      traj.epigraph_friction[i] = x(bp.layout.tf[i]);
  }
  return traj;
}

double lower_level_audit(const BuiltProblem& bp, const VecX& x) {
  const SolveReport dummy;
  const Trajectory traj = extract_trajectory(bp, x, dummy);
  return traj.margin_discrepancy;
}

Trajectory solve_plan(const PlanConfig& cfg) {
  BuiltProblem bp = build(cfg);
  const VecX warm = make_warm_start(bp);
  const SolveResult res = solve(bp.spec, cfg.solver, warm);
  return extract_trajectory(bp, res.x, res.report);
}

HierarchicalResult solve_hierarchical(const PlanConfig& cfg) {
  if (!cfg.object.is_peg())
    throw ConfigError("hierarchical planner needs a peg");
  const double gamma = cfg.object.step_angle();
  PlannerKind stage_kind = cfg.kind;
  if (stage_kind == PlannerKind::kCiboModes ||
      stage_kind == PlannerKind::kCiboFriction)
    stage_kind = PlannerKind::kCiboCom;

  HierarchicalResult out;
  PlanConfig s1 = cfg;
  s1.kind = stage_kind;
  s1.fixed_mode = 1;
  s1.N = std::max(2, cfg.N / 2);
  s1.theta_g = gamma;
  s1.terminal_constraint = true;
  out.stage1 = solve_plan(s1);
  if (out.stage1->report.status != SolveStatus::kConverged) return out;

  PlanConfig s2 = cfg;
  s2.kind = stage_kind;
  s2.fixed_mode = 2;
  s2.N = std::max(2, cfg.N / 2);
  s2.theta_s = gamma;
  s2.p_s = out.stage1->knots.back().x.p_y;
  s2.theta_g = M_PI / 2;
  s2.terminal_constraint = true;
  out.stage2 = solve_plan(s2);
  out.converged = out.stage2->report.status == SolveStatus::kConverged;
  return out;
}

}  // namespace pivot
