#include "omgrid/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace omgrid {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double qp_value(const BoxQp2& qp, double x0, double x1) {
  return 0.5 * (qp.q00 * x0 * x0 + 2.0 * qp.q01 * x0 * x1 + qp.q11 * x1 * x1) + qp.l0 * x0 +
         qp.l1 * x1;
}

// minimize over the line a'x = b (requires a != 0)
BoxQp2Result equality_solve(const BoxQp2& qp, double b) {
  double an = std::hypot(qp.a0, qp.a1);
  double p0 = qp.a0 / (an * an) * b, p1 = qp.a1 / (an * an) * b;  // a point on the line
  double d0 = -qp.a1 / an, d1 = qp.a0 / an;                       // direction along it
  double quad = qp.q00 * d0 * d0 + 2.0 * qp.q01 * d0 * d1 + qp.q11 * d1 * d1;
  double lin = (qp.q00 * p0 + qp.q01 * p1 + qp.l0) * d0 + (qp.q01 * p0 + qp.q11 * p1 + qp.l1) * d1;
  if (quad <= 1e-14 * (1.0 + qp.q00 + qp.q11)) {
    if (std::fabs(lin) > 1e-12 * (1.0 + std::fabs(b)))
      fail(errc::unbounded, "2x2 qp unbounded along the constraint line");
    return {p0, p1, qp_value(qp, p0, p1)};
  }
  double t = -lin / quad;
  BoxQp2Result r{p0 + t * d0, p1 + t * d1, 0.0};
  r.objective = qp_value(qp, r.x0, r.x1);
  return r;
}

}  // namespace

BoxQp2Result solve_box_qp2(const BoxQp2& qp) {
  if (std::isnan(qp.lo) || std::isnan(qp.hi) || qp.lo > qp.hi)
    fail(errc::parameter, "2x2 qp constraint bounds are invalid");
  double det = qp.q00 * qp.q11 - qp.q01 * qp.q01;
  if (qp.q00 < -1e-12 || qp.q11 < -1e-12 || det < -1e-10 * (1.0 + qp.q00 * qp.q11))
    fail(errc::parameter, "2x2 qp matrix is not positive semidefinite");

  // unconstrained minimizer, when one exists
  bool have_uc = false;
  BoxQp2Result uc;
  if (det > 1e-14 * (1.0 + qp.q00 * qp.q11 + qp.q01 * qp.q01)) {
    uc.x0 = (-qp.l0 * qp.q11 + qp.l1 * qp.q01) / det;
    uc.x1 = (-qp.l1 * qp.q00 + qp.l0 * qp.q01) / det;
    have_uc = true;
  } else {
    double tr = qp.q00 + qp.q11;
    if (tr <= 1e-14) {
      if (std::fabs(qp.l0) <= 1e-14 && std::fabs(qp.l1) <= 1e-14) {
        uc.x0 = uc.x1 = 0.0;
        have_uc = true;
      }
    } else {
      // rank one: Q = tr * v v'; bounded only when l lies along v
      double v0, v1;
      if (qp.q00 >= qp.q11) {
        double nrm = std::hypot(qp.q00, qp.q01);
        v0 = qp.q00 / nrm;
        v1 = qp.q01 / nrm;
      } else {
        double nrm = std::hypot(qp.q01, qp.q11);
        v0 = qp.q01 / nrm;
        v1 = qp.q11 / nrm;
      }
      double lv = qp.l0 * v0 + qp.l1 * v1;
      if (std::hypot(qp.l0 - lv * v0, qp.l1 - lv * v1) <= 1e-10 * (1.0 + std::fabs(lv))) {
        uc.x0 = -lv / tr * v0;
        uc.x1 = -lv / tr * v1;
        have_uc = true;
      }
    }
  }

  double aa = qp.a0 * qp.a0 + qp.a1 * qp.a1;
  if (aa < 1e-14) {
    // vacuous constraint row
    if (qp.lo > 1e-12 || qp.hi < -1e-12) fail(errc::infeasible, "2x2 qp constraint excludes zero");
    if (!have_uc) fail(errc::unbounded, "2x2 qp objective is unbounded");
    uc.objective = qp_value(qp, uc.x0, uc.x1);
    return uc;
  }

  if (have_uc) {
    double ax = qp.a0 * uc.x0 + qp.a1 * uc.x1;
    if (ax >= qp.lo && ax <= qp.hi) {
      uc.objective = qp_value(qp, uc.x0, uc.x1);
      return uc;
    }
    return equality_solve(qp, ax < qp.lo ? qp.lo : qp.hi);
  }

  // no unconstrained minimizer: a strip minimizer, if any, sits on a boundary
  bool found = false;
  BoxQp2Result best;
  for (double b : {qp.lo, qp.hi}) {
    if (!std::isfinite(b)) continue;
    BoxQp2Result r = equality_solve(qp, b);
    if (!found || r.objective < best.objective) {
      best = r;
      found = true;
    }
  }
  if (!found) fail(errc::unbounded, "2x2 qp objective is unbounded");
  return best;
}

namespace {

struct ProxCandidate {
  double u = 0, w = 0, value = kInf;
};

}  // namespace

ProxNodeResult prox_node(const ProxNodeProblem& p) {
  if (!(p.rho > 0.0)) fail(errc::parameter, "proximal weight must be positive");
  if (!(p.mu_c > 0.0) || p.mu_c > 1.0 || !(p.mu_d > 0.0) || p.mu_d > 1.0)
    fail(errc::parameter, "conversion coefficients must lie in (0, 1]");
  if (p.sign.size() != p.center.size())
    fail(errc::parameter, "sign and center lists differ in length");
  if (!(p.u_lo <= p.u_hi)) fail(errc::parameter, "reversed charge bounds");
  for (double s : p.sign)
    if (s != 1.0 && s != -1.0) fail(errc::parameter, "edge signs must be +1 or -1");
  validate_cost(p.cost);

  std::vector<CostLine> lines = cost_linearization(p.cost, p.price);
  int npiece = static_cast<int>(lines.size());
  double d = static_cast<double>(p.sign.size());
  double c0 = -p.delta;
  for (size_t e = 0; e < p.sign.size(); ++e) c0 += p.sign[e] * p.center[e];

  auto piece_lo = [&](int k) { return k == 0 ? -kInf : p.cost.pieces[k].left; };
  auto piece_hi = [&](int k) { return k + 1 < npiece ? p.cost.pieces[k + 1].left : kInf; };
  auto h_coef = [&](double u) { return u >= 0.0 ? 1.0 / p.mu_c : p.mu_d; };

  auto evaluate = [&](double u, double w) -> double {
    double r = h_coef(u) * u + c0 + w;
    double pen = d > 0.0 ? 0.5 * p.rho / d * w * w : 0.0;
    return p.kappa * u + eval_cost(p.cost, r, p.price) + pen;
  };

  ProxCandidate best;
  auto consider = [&](double u, double w) {
    if (!std::isfinite(u) || !std::isfinite(w)) return;
    u = std::clamp(u, p.u_lo, p.u_hi);
    double v = evaluate(u, w);
    double tol = 1e-12 * (1.0 + std::fabs(best.value == kInf ? v : best.value));
    if (v < best.value - tol) {
      best = {u, w, v};
      return;
    }
    if (v > best.value + tol) return;
    // deterministic preference among ties: smaller |u|, then smaller u, then smaller |w|
    bool take = std::fabs(u) < std::fabs(best.u) - 1e-15;
    if (!take && std::fabs(std::fabs(u) - std::fabs(best.u)) <= 1e-15)
      take = u < best.u - 1e-15 ||
             (std::fabs(u - best.u) <= 1e-15 && std::fabs(w) < std::fabs(best.w));
    if (take) best = {u, w, std::min(v, best.value)};
  };

  struct Branch {
    double lo, hi, alpha;
  };
  std::vector<Branch> branches;
  if (p.u_hi >= 0.0) branches.push_back({std::max(0.0, p.u_lo), p.u_hi, 1.0 / p.mu_c});
  if (p.u_lo <= 0.0) branches.push_back({p.u_lo, std::min(0.0, p.u_hi), p.mu_d});

  if (d == 0.0) {
    // no incident edges: one-dimensional in u, objective linear per cost piece
    for (const Branch& br : branches) {
      consider(br.lo, 0.0);
      consider(br.hi, 0.0);
      for (int k = 1; k < npiece; ++k) {
        double u_at = (p.cost.pieces[k].left - c0) / br.alpha;
        if (u_at >= br.lo && u_at <= br.hi) consider(u_at, 0.0);
      }
    }
  } else {
    for (const Branch& br : branches) {
      for (int k = 0; k < npiece; ++k) {
        double w_free = -lines[k].slope * d / p.rho;
        for (double u : {br.lo, br.hi}) {
          double r0 = br.alpha * u + c0;
          double w = std::clamp(w_free, piece_lo(k) - r0, piece_hi(k) - r0);
          if (std::isfinite(w)) consider(u, w);
        }
        // r pinned at a finite piece boundary; quadratic in u along it
        for (double rb : {piece_lo(k), piece_hi(k)}) {
          if (!std::isfinite(rb)) continue;
          double u_star = (rb - c0) / br.alpha - p.kappa * d / (p.rho * br.alpha * br.alpha);
          u_star = std::clamp(u_star, br.lo, br.hi);
          consider(u_star, rb - c0 - br.alpha * u_star);
        }
      }
    }
  }

  ProxNodeResult res;
  res.u = best.u;
  res.r = h_coef(best.u) * best.u + c0 + best.w;
  res.f_hat.resize(p.sign.size());
  double share = d > 0.0 ? best.w / d : 0.0;
  for (size_t e = 0; e < p.sign.size(); ++e) res.f_hat[e] = p.center[e] + share * p.sign[e];
  res.objective = p.kappa * best.u + eval_cost(p.cost, res.r, p.price);
  for (size_t e = 0; e < p.sign.size(); ++e) {
    double diff = res.f_hat[e] - p.center[e];
    res.objective += 0.5 * p.rho * diff * diff;
  }
  return res;
}

}  // namespace omgrid
