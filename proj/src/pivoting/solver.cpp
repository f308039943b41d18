#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <cmath>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "nlp.hpp"

namespace pivot {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

// Lifted form: inequality rows and complementarity products become equality
// rows with nonnegative slacks, so the barrier only sees variable bounds.
struct Lifted {
  const NlpSpec* spec = nullptr;
  int n_x = 0, n_s = 0, n_c = 0, n_z = 0, m = 0;
  VecX lo, hi;
  std::vector<char> fixed;     // lo == hi
  std::vector<int> free_pos;   // z index -> free position or -1
  std::vector<int> free_list;  // free position -> z index
  int n_free = 0;
  double delta = 0.0;  // current complementarity relaxation

  int slack_ineq(int i) const { return n_x + i; }
  int slack_comp(int i) const { return n_x + n_s + i; }

  void build(const NlpSpec& s) {
    spec = &s;
    n_x = s.n;
    n_s = static_cast<int>(s.ineq.size());
    n_c = static_cast<int>(s.comp_pairs.size());
    n_z = n_x + n_s + n_c;
    m = static_cast<int>(s.eq.size()) + n_s + n_c;
    lo.resize(n_z);
    hi.resize(n_z);
    lo.head(n_x) = s.lo;
    hi.head(n_x) = s.hi;
    lo.segment(n_x, n_s).setZero();
    hi.segment(n_x, n_s).setConstant(kInf);
    lo.tail(n_c).setZero();
    hi.tail(n_c).setConstant(kInf);
    fixed.assign(n_z, 0);
    free_pos.assign(n_z, -1);
    for (int i = 0; i < n_z; ++i)
      if (lo(i) == hi(i) && std::isfinite(lo(i))) fixed[i] = 1;
    for (int i = 0; i < n_z; ++i) {
      if (!fixed[i]) {
        free_pos[i] = n_free++;
        free_list.push_back(i);
      }
    }
  }

  VecX residual(const VecX& z) const {
    VecX r(m);
    int row = 0;
    const VecX x = z.head(n_x);
    for (const auto& e : spec->eq) r(row++) = e.value(x);
    for (int i = 0; i < n_s; ++i)
      r(row++) = spec->ineq[i].value(x) + z(slack_ineq(i));
    for (int i = 0; i < n_c; ++i) {
      const auto& [a, b] = spec->comp_pairs[i];
      r(row++) = z(a) * z(b) + z(slack_comp(i)) - delta;
    }
    return r;
  }
};

struct EvalData {
  double f = 0.0;
  VecX grad_f;           // over free positions
  VecX resid;            // m rows
  std::vector<Trip> JT;  // (row, free col, value)
  std::vector<Trip> WT;  // Lagrangian Hessian, lower triangle (free, free)
};

EvalData evaluate(const Lifted& L, const VecX& z, const VecX& y,
                  bool with_hessian) {
  EvalData d;
  const VecX x = z.head(L.n_x);
  d.grad_f = VecX::Zero(L.n_free);
  d.resid.resize(L.m);

  auto scatter_grad = [&](const Expr& e, const Dual2& val, int row) {
    for (size_t j = 0; j < e.vars.size(); ++j) {
      const int p = L.free_pos[e.vars[j]];
      if (p >= 0 && val.g(j) != 0.0) d.JT.emplace_back(row, p, val.g(j));
    }
  };
  auto scatter_hess = [&](const Expr& e, const Dual2& val, double w) {
    if (w == 0.0) return;
    for (size_t j = 0; j < e.vars.size(); ++j) {
      const int pj = L.free_pos[e.vars[j]];
      if (pj < 0) continue;
      for (size_t k = 0; k <= j; ++k) {
        const int pk = L.free_pos[e.vars[k]];
        if (pk < 0) continue;
        double h = val.H(j, k);
        if (j == k && e.vars[j] == e.vars[k]) {
          // diagonal of the local Hessian
        }
        if (h == 0.0) continue;
        d.WT.emplace_back(std::max(pj, pk), std::min(pj, pk), w * h);
      }
    }
  };

  for (const auto& t : L.spec->objective) {
    const Dual2 v = t.eval(x);
    d.f += v.v;
    for (size_t j = 0; j < t.vars.size(); ++j) {
      const int p = L.free_pos[t.vars[j]];
      if (p >= 0) d.grad_f(p) += v.g(j);
    }
    if (with_hessian) scatter_hess(t, v, 1.0);
  }

  int row = 0;
  for (const auto& e : L.spec->eq) {
    const Dual2 v = e.eval(x);
    d.resid(row) = v.v;
    scatter_grad(e, v, row);
    if (with_hessian) scatter_hess(e, v, y(row));
    ++row;
  }
  for (int i = 0; i < L.n_s; ++i) {
    const Expr& e = L.spec->ineq[i];
    const Dual2 v = e.eval(x);
    d.resid(row) = v.v + z(L.slack_ineq(i));
    scatter_grad(e, v, row);
    const int p = L.free_pos[L.slack_ineq(i)];
    if (p >= 0) d.JT.emplace_back(row, p, 1.0);
    if (with_hessian) scatter_hess(e, v, y(row));
    ++row;
  }
  for (int i = 0; i < L.n_c; ++i) {
    const auto& [a, b] = L.spec->comp_pairs[i];
    d.resid(row) = z(a) * z(b) + z(L.slack_comp(i)) - L.delta;
    const int pa = L.free_pos[a], pb = L.free_pos[b];
    const int ps = L.free_pos[L.slack_comp(i)];
    if (pa >= 0) d.JT.emplace_back(row, pa, z(b));
    if (pb >= 0) d.JT.emplace_back(row, pb, z(a));
    if (ps >= 0) d.JT.emplace_back(row, ps, 1.0);
    if (with_hessian && pa >= 0 && pb >= 0 && y(row) != 0.0)
      d.WT.emplace_back(std::max(pa, pb), std::min(pa, pb), y(row));
    ++row;
  }
  return d;
}

struct StageResult {
  bool converged = false;
  int iterations = 0;
  double kkt = 0.0;
  std::string note;
};

// One interior-point solve of the lifted problem at a fixed relaxation.
class InteriorPoint {
 public:
  InteriorPoint(const Lifted& L, const SolverOptions& opts, int stage)
      : L_(L), opts_(opts), stage_(stage) {}

  StageResult run(VecX& z, VecX& y, VecX& zL_io, VecX& zU_io, double tol_feas,
                  double tol_kkt, int max_iters, double mu0, double mu_floor) {
    StageResult res;
    const int nf = L_.n_free;
    if (nf == 0) {
      res.converged = L_.residual(z).lpNorm<Eigen::Infinity>() <= tol_feas;
      return res;
    }
    push_interior(z);
    if (y.size() != L_.m) y = VecX::Zero(L_.m);

    double mu = mu0;
    const double mu_min = std::max(1e-11, std::min(0.01 * tol_kkt, mu_floor));
    if (zL_io.size() == nf && zU_io.size() == nf) {
      // warm duals from the previous relaxation stage
      zL_ = zL_io;
      zU_ = zU_io;
      for (int p = 0; p < nf; ++p) {
        const int zi = L_.free_list[p];
        if (std::isfinite(L_.lo(zi))) {
          const double c = mu / (z(zi) - L_.lo(zi));
          zL_(p) = std::min(std::max(zL_(p), 1e-12), 1e12);
          if (zi >= L_.n_x + L_.n_s)  // refreshed product slacks re-center
            zL_(p) = c;
        }
        if (std::isfinite(L_.hi(zi)))
          zU_(p) = std::min(std::max(zU_(p), 1e-12), 1e12);
      }
    } else {
      zL_ = VecX::Zero(nf);
      zU_ = VecX::Zero(nf);
      for (int p = 0; p < nf; ++p) {
        const int zi = L_.free_list[p];
        if (std::isfinite(L_.lo(zi))) zL_(p) = mu / (z(zi) - L_.lo(zi));
        if (std::isfinite(L_.hi(zi))) zU_(p) = mu / (L_.hi(zi) - z(zi));
      }
    }

    double dw_last = 0.0;
    int ls_failures = 0;
    filter_.clear();
    theta_min_ =
        1e-4 * std::max(1.0, L_.residual(z).lpNorm<Eigen::Infinity>());

    for (int it = 0; it < max_iters; ++it) {
      ++res.iterations;
      EvalData ev = evaluate(L_, z, y, true);

      VecX rd = ev.grad_f - zL_ + zU_;
      for (const auto& t : ev.JT) rd(t.col()) += t.value() * y(t.row());
      const double sd = dual_scale(y);
      const double feas = ev.resid.lpNorm<Eigen::Infinity>();
      const double kkt = rd.lpNorm<Eigen::Infinity>() / sd;
      res.kkt = kkt;
      double comp = 0.0;
      for (int p = 0; p < nf; ++p) {
        const int zi = L_.free_list[p];
        if (std::isfinite(L_.lo(zi)))
          comp = std::max(comp, std::abs((z(zi) - L_.lo(zi)) * zL_(p) - mu));
        if (std::isfinite(L_.hi(zi)))
          comp = std::max(comp, std::abs((L_.hi(zi) - z(zi)) * zU_(p) - mu));
      }
      if (opts_.log) opts_.log(stage_, L_.delta, it, mu, ev.f, feas, kkt);
      if (std::getenv("IPDBG") && it > 0 && it % 100 == 0) {
        for (int rep = 0; rep < 4; ++rep) {
          int imax;
          rd.cwiseAbs().maxCoeff(&imax);
          fprintf(stderr, "  it=%d rd[%s]=%.3e\n", it,
                  L_.spec->var_names[L_.free_list[imax]].c_str(), rd(imax));
          rd(imax) = 0;
        }
      }

      if (std::max({kkt, feas, comp / sd}) <= 100.0 * mu) {
        if (mu <= mu_min * (1 + 1e-12) && feas <= tol_feas && kkt <= tol_kkt) {
          res.converged = true;
          return res;
        }
        const double mu_new =
            std::max(mu_min, std::min(0.2 * mu, std::pow(mu, 1.5)));
        if (mu_new < mu) {
          mu = mu_new;
          continue;
        }
      }

      VecX dz, dy;
      if (!newton_step(ev, z, y, mu, dw_last, dz, dy)) {
        res.note = "kkt factorization failed";
        return res;
      }

      const double tau = std::max(0.99, 1.0 - mu);
      const double a_max = max_step(z, dz, tau);
      // a negligible primal step cannot pass a merit test; it is a pure
      // multiplier correction, so take it outright
      if (gather(dz).lpNorm<Eigen::Infinity>() <
          1e-11 * (1.0 + z.lpNorm<Eigen::Infinity>())) {
        update_bound_duals(z, dz, a_max, mu, tau);
        y += dy;
        ls_failures = 0;
        dw_last = dw_used_;
        continue;
      }

      // filter line search on (constraint violation, barrier objective)
      const double th0 = ev.resid.lpNorm<Eigen::Infinity>();
      const double phi0 = ev.f + barrier(z, mu);
      double dir = ev.grad_f.dot(gather(dz));
      for (int p = 0; p < nf; ++p) {
        const int zi = L_.free_list[p];
        if (std::isfinite(L_.lo(zi))) dir -= mu * dz(zi) / (z(zi) - L_.lo(zi));
        if (std::isfinite(L_.hi(zi))) dir += mu * dz(zi) / (L_.hi(zi) - z(zi));
      }

      constexpr double kGam = 1e-5;
      auto filter_ok = [&](double th, double phi) {
        for (const auto& [tj, pj] : filter_)
          if (th > 0.99 * tj && phi > pj - kGam * tj) return false;
        return true;
      };
      double alpha = a_max;
      bool accepted = false;
      bool theta_step = false;
      for (int bt = 0; bt < 25 && alpha > 1e-12; ++bt, alpha *= 0.5) {
        const VecX zt = z + alpha * dz;
        const double phit =
            L_.spec->objective_value(zt.head(L_.n_x)) + barrier(zt, mu);
        if (!std::isfinite(phit)) continue;
        const double tht = L_.residual(zt).lpNorm<Eigen::Infinity>();
        if (!filter_ok(tht, phit)) continue;
        const bool f_type =
            dir < 0 && alpha * (-dir) > th0 && th0 <= theta_min_;
        bool ok;
        if (f_type) {
          ok = phit <= phi0 + 1e-4 * alpha * dir;
        } else {
          ok = tht <= (1 - kGam) * th0 || phit <= phi0 - kGam * th0;
        }
        if (ok) {
          if (!f_type) {
            filter_.emplace_back((1 - kGam) * th0, phi0 - kGam * th0);
            if (filter_.size() > 200)
              filter_.erase(filter_.begin(), filter_.begin() + 100);
            theta_step = true;
          }
          update_bound_duals(z, dz, alpha, mu, tau);
          z = zt;
          y += alpha * dy;
          accepted = true;
          break;
        }
      }
      (void)theta_step;
      if (!accepted) {
        // dual-dominant or non-descent steps: backtrack on the full
        // primal-dual KKT residual norm instead
        const double th0 = kkt_norm(z, y, mu);
        alpha = a_max;
        for (int bt = 0; bt < 15 && alpha > 1e-12; ++bt, alpha *= 0.5) {
          const VecX zt = z + alpha * dz;
          const VecX yt = y + alpha * dy;
          const auto [zLt, zUt] = trial_bound_duals(z, dz, alpha, mu, tau);
          const double tht = kkt_norm_at(zt, yt, zLt, zUt, mu);
          if (tht <= (1.0 - 1e-4 * alpha) * th0) {
            zL_ = zLt;
            zU_ = zUt;
            z = zt;
            y = yt;
            accepted = true;
            break;
          }
        }
      }
      if (!accepted) {
        ++ls_failures;
        if (ls_failures == 2 || ls_failures == 4) {
          if (!restoration(z, y)) {
            res.note = "line search stalled";
            return res;
          }
          continue;
        }
        if (ls_failures > 5) {
          res.note = "line search stalled";
          return res;
        }
        dw_last = std::max(1e-4, dw_last * 10);
        continue;
      }
      ls_failures = 0;
      dw_last = dw_used_;
    }
    res.note = "iteration limit";
    return res;
  }

  void export_duals(VecX& zL, VecX& zU) const {
    zL = zL_;
    zU = zU_;
  }

 private:
  const Lifted& L_;
  const SolverOptions& opts_;
  int stage_;
  VecX zL_, zU_;
  std::vector<std::pair<double, double>> filter_;  // (theta, phi) envelope
  double theta_min_ = 1e-4;  // f-type steps allowed only below this
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  double dw_used_ = 0.0;

  VecX gather(const VecX& dz) const {
    VecX out(L_.n_free);
    for (int p = 0; p < L_.n_free; ++p) out(p) = dz(L_.free_list[p]);
    return out;
  }

  double barrier(const VecX& z, double mu) const {
    double phi = 0.0;
    for (int p = 0; p < L_.n_free; ++p) {
      const int zi = L_.free_list[p];
      const double sl = z(zi) - L_.lo(zi);
      const double su = L_.hi(zi) - z(zi);
      if (std::isfinite(L_.lo(zi))) {
        if (sl <= 0) return kInf;
        phi -= mu * std::log(sl);
      }
      if (std::isfinite(L_.hi(zi))) {
        if (su <= 0) return kInf;
        phi -= mu * std::log(su);
      }
    }
    return phi;
  }

  double dual_scale(const VecX& y) const {
    const double s_max = 100.0;
    const double sum = y.lpNorm<1>() + zL_.lpNorm<1>() + zU_.lpNorm<1>();
    const int denom = L_.m + 2 * L_.n_free;
    return std::max(s_max, sum / std::max(1, denom)) / s_max;
  }

  void push_interior(VecX& z) const {
    for (int i = 0; i < L_.n_z; ++i) {
      if (L_.fixed[i]) {
        z(i) = L_.lo(i);
        continue;
      }
      const double lb = L_.lo(i), ub = L_.hi(i);
      if (std::isfinite(lb) && std::isfinite(ub)) {
        const double push = std::min(1e-2 * std::max(1.0, std::abs(lb)),
                                     1e-1 * (ub - lb));
        z(i) = std::min(std::max(z(i), lb + push), ub - push);
      } else if (std::isfinite(lb)) {
        if (z(i) < lb + 1e-6) z(i) = lb + 1e-4;
      } else if (std::isfinite(ub)) {
        if (z(i) > ub - 1e-6) z(i) = ub - 1e-4;
      }
    }
  }

  bool newton_step(const EvalData& ev, const VecX& z, const VecX& y, double mu,
                   double dw_hint, VecX& dz, VecX& dy) {
    const int nf = L_.n_free, m = L_.m;
    VecX sigma = VecX::Zero(nf);
    VecX grad_phi = ev.grad_f;  // gradient of barrier objective
    for (int p = 0; p < nf; ++p) {
      const int zi = L_.free_list[p];
      if (std::isfinite(L_.lo(zi))) {
        const double sl = z(zi) - L_.lo(zi);
        sigma(p) += zL_(p) / sl;
        grad_phi(p) -= mu / sl;
      }
      if (std::isfinite(L_.hi(zi))) {
        const double su = L_.hi(zi) - z(zi);
        sigma(p) += zU_(p) / su;
        grad_phi(p) += mu / su;
      }
    }
    VecX rd = grad_phi;
    for (const auto& t : ev.JT) rd(t.col()) += t.value() * y(t.row());

    const double delta_c = 1e-8;
    double dw = dw_hint > 0 ? std::max(1e-12, dw_hint / 3.0) : 0.0;
    for (int attempt = 0; attempt < 40; ++attempt) {
      std::vector<Trip> T;
      T.reserve(ev.WT.size() + ev.JT.size() + nf + m);
      for (const auto& t : ev.WT) T.push_back(t);
      for (int p = 0; p < nf; ++p) T.emplace_back(p, p, sigma(p) + dw);
      for (const auto& t : ev.JT)
        T.emplace_back(nf + t.row(), t.col(), t.value());
      for (int r = 0; r < m; ++r) T.emplace_back(nf + r, nf + r, -delta_c);
      SpMat K(nf + m, nf + m);
      K.setFromTriplets(T.begin(), T.end());
      SpMat Kfull = K.selfadjointView<Eigen::Lower>();
      ldlt_.compute(Kfull);
      bool ok = (ldlt_.info() == Eigen::Success);
      if (ok) {
        const auto& D = ldlt_.vectorD();
        int pos = 0, neg = 0;
        for (int i = 0; i < D.size(); ++i) {
          if (D(i) > 0)
            ++pos;
          else if (D(i) < 0)
            ++neg;
        }
        ok = (pos == nf && neg == m);
      }
      if (ok) {
        VecX rhs(nf + m);
        rhs.head(nf) = -rd;
        rhs.tail(m) = -ev.resid;
        const VecX sol = ldlt_.solve(rhs);
        if (sol.allFinite()) {
          dz = VecX::Zero(L_.n_z);
          for (int p = 0; p < nf; ++p) dz(L_.free_list[p]) = sol(p);
          dy = sol.tail(m);
          dw_used_ = dw;
          return true;
        }
      }
      dw = (dw == 0.0) ? 1e-8 : dw * 8.0;
      if (dw > 1e14) break;
    }
    return false;
  }

  double max_step(const VecX& z, const VecX& dz, double tau) const {
    double a = 1.0;
    for (int p = 0; p < L_.n_free; ++p) {
      const int zi = L_.free_list[p];
      if (std::isfinite(L_.lo(zi)) && dz(zi) < 0)
        a = std::min(a, -tau * (z(zi) - L_.lo(zi)) / dz(zi));
      if (std::isfinite(L_.hi(zi)) && dz(zi) > 0)
        a = std::min(a, tau * (L_.hi(zi) - z(zi)) / dz(zi));
    }
    return std::max(a, 0.0);
  }

  std::pair<VecX, VecX> trial_bound_duals(const VecX& z, const VecX& dz,
                                          double alpha, double mu,
                                          double tau) const {
    VecX zL = zL_, zU = zU_;
    for (int p = 0; p < L_.n_free; ++p) {
      const int zi = L_.free_list[p];
      if (std::isfinite(L_.lo(zi))) {
        const double sl = z(zi) - L_.lo(zi);
        const double dzl = (mu - sl * zL(p)) / sl - zL(p) / sl * dz(zi);
        double a = alpha;
        if (dzl < 0) a = std::min(a, -tau * zL(p) / dzl);
        zL(p) = std::max(zL(p) + a * dzl, 1e-16);
        const double center = mu / std::max(sl + alpha * dz(zi), 1e-16);
        zL(p) = std::min(std::max(zL(p), center * 1e-10), center * 1e10);
      }
      if (std::isfinite(L_.hi(zi))) {
        const double su = L_.hi(zi) - z(zi);
        const double dzu = (mu - su * zU(p)) / su + zU(p) / su * dz(zi);
        double a = alpha;
        if (dzu < 0) a = std::min(a, -tau * zU(p) / dzu);
        zU(p) = std::max(zU(p) + a * dzu, 1e-16);
        const double center = mu / std::max(su - alpha * dz(zi), 1e-16);
        zU(p) = std::min(std::max(zU(p), center * 1e-10), center * 1e10);
      }
    }
    return {zL, zU};
  }

  void update_bound_duals(const VecX& z, const VecX& dz, double alpha,
                          double mu, double tau) {
    std::tie(zL_, zU_) = trial_bound_duals(z, dz, alpha, mu, tau);
  }

  // squared norm of the full primal-dual KKT residual at (z, y, zL, zU)
  double kkt_norm_at(const VecX& z, const VecX& y, const VecX& zL,
                     const VecX& zU, double mu) const {
    EvalData ev = evaluate(L_, z, y, false);
    VecX rd = ev.grad_f - zL + zU;
    for (const auto& t : ev.JT) rd(t.col()) += t.value() * y(t.row());
    double th = rd.squaredNorm() + ev.resid.squaredNorm();
    for (int p = 0; p < L_.n_free; ++p) {
      const int zi = L_.free_list[p];
      if (std::isfinite(L_.lo(zi))) {
        const double c = (z(zi) - L_.lo(zi)) * zL(p) - mu;
        th += c * c;
      }
      if (std::isfinite(L_.hi(zi))) {
        const double c = (L_.hi(zi) - z(zi)) * zU(p) - mu;
        th += c * c;
      }
    }
    return th;
  }
  double kkt_norm(const VecX& z, const VecX& y, double mu) const {
    return kkt_norm_at(z, y, zL_, zU_, mu);
  }

  // Gauss-Newton feasibility restoration within the bounds.
  bool restoration(VecX& z, VecX& y) {
    bool any = false;
    for (int it = 0; it < 25; ++it) {
      EvalData ev = evaluate(L_, z, y, false);
      const double r0 = ev.resid.norm();
      if (r0 < 1e-10) return true;
      const int nf = L_.n_free, m = L_.m;
      std::vector<Trip> T;
      for (int p = 0; p < nf; ++p) T.emplace_back(p, p, 1e-6);
      for (const auto& t : ev.JT)
        T.emplace_back(nf + t.row(), t.col(), t.value());
      for (int r = 0; r < m; ++r) T.emplace_back(nf + r, nf + r, -1.0);
      SpMat K(nf + m, nf + m);
      K.setFromTriplets(T.begin(), T.end());
      Eigen::SimplicialLDLT<SpMat> fac;
      fac.compute(SpMat(K.selfadjointView<Eigen::Lower>()));
      if (fac.info() != Eigen::Success) return any;
      VecX rhs(nf + m);
      rhs.head(nf).setZero();
      rhs.tail(m) = -ev.resid;
      const VecX sol = fac.solve(rhs);
      if (!sol.allFinite()) return any;
      VecX dz = VecX::Zero(L_.n_z);
      for (int p = 0; p < nf; ++p) dz(L_.free_list[p]) = sol(p);
      double a = max_step(z, dz, 0.995);
      bool improved = false;
      for (int bt = 0; bt < 20; ++bt, a *= 0.5) {
        const VecX zt = z + a * dz;
        if (L_.residual(zt).norm() < (1 - 1e-4 * a) * r0) {
          z = zt;
          improved = any = true;
          break;
        }
      }
      if (!improved) return any;
    }
    return any;
  }
};

}  // namespace

SolveResult solve(const NlpSpec& spec, const SolverOptions& opts,
                  const VecX& warm_start) {
  const auto t0 = std::chrono::steady_clock::now();
  Lifted L;
  L.build(spec);

  SolveResult out;
  SolveReport& rep = out.report;

  VecX z = VecX::Zero(L.n_z);
  if (warm_start.size() == spec.n)
    z.head(spec.n) = warm_start;
  else if (warm_start.size() != 0)
    throw LayoutError("warm start length mismatch");
  for (int i = 0; i < spec.n; ++i)
    z(i) = L.fixed[i] ? spec.lo(i)
                      : std::min(std::max(z(i), spec.lo(i)), spec.hi(i));

  std::vector<double> deltas;
  if (L.n_c > 0) {
    for (double d = opts.delta0; d > opts.delta_min * (1 + 1e-12);
         d *= opts.shrink) {
      deltas.push_back(d);
      if (static_cast<int>(deltas.size()) >= opts.max_stages - 1) break;
    }
  }
  deltas.push_back(opts.delta_min);

  VecX y = VecX::Zero(L.m);
  VecX zL, zU;
  bool all_ok = true;
  std::string note;
  for (size_t s = 0; s < deltas.size(); ++s) {
    L.delta = deltas[s];
    const VecX x = z.head(L.n_x);
    if (s == 0) {
      for (int i = 0; i < L.n_s; ++i)
        z(L.slack_ineq(i)) = std::max(-spec.ineq[i].value(x), 1e-4);
    }
    for (int i = 0; i < L.n_c; ++i) {
      const auto& [a, b] = spec.comp_pairs[i];
      z(L.slack_comp(i)) = std::max(L.delta - z(a) * z(b), 1e-3 * L.delta);
    }
    const bool last = (s + 1 == deltas.size());
    const double tol_feas =
        last ? opts.tol_eq
             : std::max(opts.tol_eq, std::min(1e-4, 0.1 * L.delta));
    const double tol_kkt =
        last ? opts.tol_kkt
             : std::max(opts.tol_kkt, std::min(1e-2, 30.0 * L.delta));
    const double mu0 =
        (s == 0) ? opts.mu0 : std::max(2e-8, 1e-2 * L.delta);

    InteriorPoint ip(L, opts, static_cast<int>(s));
    const double mu_floor = L.n_c > 0 ? 0.05 * L.delta : 0.01 * tol_kkt;
    const StageResult r = ip.run(z, y, zL, zU, tol_feas, tol_kkt,
                                 opts.max_inner_iterations, mu0, mu_floor);
    ip.export_duals(zL, zU);
    rep.iterations_per_stage.push_back(r.iterations);
    if (!r.converged) {
      all_ok = false;
      note = r.note.empty() ? "stage did not converge" : r.note;
      break;
    }
  }

  out.x = z.head(spec.n);
  rep.objective = spec.objective_value(out.x);
  rep.max_eq_residual = spec.max_eq_residual(out.x);
  rep.max_ineq_violation = spec.max_ineq_violation(out.x);
  rep.max_comp_product = spec.max_comp_product(out.x);
  rep.stationarity = check_kkt(spec, out.x).stationarity;
  rep.message = note;

  const bool feas = rep.max_eq_residual <= opts.tol_eq &&
                    rep.max_ineq_violation <= opts.tol_ineq &&
                    rep.max_comp_product <= opts.tol_comp;
  if (all_ok && feas)
    rep.status = SolveStatus::kConverged;
  else if (rep.max_eq_residual > 100 * opts.tol_eq)
    rep.status = SolveStatus::kInfeasible;
  else if (note == "iteration limit")
    rep.status = SolveStatus::kIterationLimit;
  else
    rep.status = SolveStatus::kStalled;

  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

namespace {

double stationarity_at_tol(const NlpSpec& spec, const VecX& x, const VecX& g,
                           double kActTol) {
  std::vector<Trip> AT;
  int col = 0;
  std::vector<int> sign_constrained;
  auto add_expr = [&](const Expr& e, bool sign) {
    const Dual2 v = e.eval(x);
    for (size_t j = 0; j < e.vars.size(); ++j)
      if (v.g(j) != 0.0) AT.emplace_back(e.vars[j], col, v.g(j));
    if (sign) sign_constrained.push_back(col);
    ++col;
  };
  for (const auto& e : spec.eq) add_expr(e, false);
  for (const auto& e : spec.ineq)
    if (e.value(x) > -kActTol) add_expr(e, true);
  for (const auto& [a, b] : spec.comp_pairs) {
    // complementarity products are treated as active inequalities; the fit
    // zeroes the multiplier when the pair is strictly inactive
    AT.emplace_back(a, col, x(b));
    AT.emplace_back(b, col, x(a));
    sign_constrained.push_back(col);
    ++col;
  }
  for (int i = 0; i < spec.n; ++i) {
    const bool lo_act = std::isfinite(spec.lo(i)) &&
                        x(i) - spec.lo(i) < kActTol * (1 + std::abs(spec.lo(i)));
    const bool hi_act = std::isfinite(spec.hi(i)) &&
                        spec.hi(i) - x(i) < kActTol * (1 + std::abs(spec.hi(i)));
    if (lo_act && hi_act) {
      AT.emplace_back(i, col, 1.0);  // pinned: free-sign multiplier
      ++col;
    } else if (lo_act) {
      AT.emplace_back(i, col, -1.0);
      sign_constrained.push_back(col);
      ++col;
    } else if (hi_act) {
      AT.emplace_back(i, col, 1.0);
      sign_constrained.push_back(col);
      ++col;
    }
  }
  if (col == 0) return g.lpNorm<Eigen::Infinity>();
  SpMat A(spec.n, col);
  A.setFromTriplets(AT.begin(), AT.end());

  // sign-constrained least-squares fit; drop the worst offenders gradually
  std::vector<char> keep(col, 1);
  VecX lambda = VecX::Zero(col);
  for (int round = 0; round < 16; ++round) {
    std::vector<Trip> keepT;
    for (const auto& t : AT)
      if (keep[t.col()]) keepT.push_back(t);
    SpMat Ak(spec.n, col);
    Ak.setFromTriplets(keepT.begin(), keepT.end());
    SpMat Nrm = SpMat(Ak.transpose()) * Ak;
    for (int i = 0; i < col; ++i) Nrm.coeffRef(i, i) += 1e-12;
    Eigen::SimplicialLDLT<SpMat> fac(Nrm);
    lambda = fac.solve(VecX(-Ak.transpose() * g));
    double worst = 0.0;
    for (int c : sign_constrained)
      if (keep[c]) worst = std::min(worst, lambda(c));
    if (worst > -1e-12) break;
    const double cut = 0.25 * worst;  // drop only the most negative quartile
    for (int c : sign_constrained)
      if (keep[c] && lambda(c) < cut) keep[c] = 0;
  }
  for (int c = 0; c < col; ++c)
    if (!keep[c]) lambda(c) = 0.0;
  for (int c : sign_constrained) lambda(c) = std::max(lambda(c), 0.0);
  // same dual scaling the solver's convergence test uses
  const double s_max = 100.0;
  const double sd =
      std::max(s_max, lambda.lpNorm<1>() / std::max(1, col)) / s_max;
  return (g + A * lambda).lpNorm<Eigen::Infinity>() / sd;
}

}  // namespace

KktAudit check_kkt(const NlpSpec& spec, const VecX& x) {
  KktAudit audit;
  audit.max_eq_residual = spec.max_eq_residual(x);
  audit.max_ineq_violation = spec.max_ineq_violation(x);
  audit.max_comp_product = spec.max_comp_product(x);

  VecX g = VecX::Zero(spec.n);
  for (const auto& t : spec.objective) {
    const Dual2 v = t.eval(x);
    for (size_t j = 0; j < t.vars.size(); ++j) g(t.vars[j]) += v.g(j);
  }
  // epsilon-active stationarity: widen the activity window until the
  // multiplier certificate stops improving
  double best = kInf;
  for (double tol : {1e-6, 1e-5, 1e-4, 1e-3}) {
    best = std::min(best, stationarity_at_tol(spec, x, g, tol));
    if (best < 1e-8) break;
  }
  audit.stationarity = best;
  return audit;
}

}  // namespace pivot
