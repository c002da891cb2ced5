#include "omgrid/params.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace omgrid {

WMaxResult w_max_info(const StorageParams& sp, const SubgradBounds& sg,
                      double degenerate_cap_factor) {
  double numer = (sp.s_max - sp.s_min) - (sp.u_max - sp.u_min);
  if (!(numer > 0.0))
    fail(errc::parameter, "frequent-acting condition fails: u range must be smaller than s range");
  double denom = sg.d_hi - sg.d_lo;
  if (denom <= 0.0) return {numer * degenerate_cap_factor, true};
  return {numer / denom, false};
}

double w_max(const StorageParams& sp, const SubgradBounds& sg) {
  return w_max_info(sp, sg).value;
}

GammaBounds gamma_bounds(const StorageParams& sp, const SubgradBounds& sg, double w) {
  double wm = w_max_info(sp, sg).value;
  if (!(w > 0.0) || w > wm * (1.0 + 1e-12))
    fail(errc::parameter,
         "weight " + std::to_string(w) + " outside (0, " + std::to_string(wm) + "]");
  GammaBounds gb;
  gb.ks_min = (-w * sg.d_lo + sp.u_max - sp.s_max) / sp.lambda;
  gb.ks_max = (-w * sg.d_hi - sp.s_min + sp.u_min) / sp.lambda;
  return gb;
}

double suboptimality_M(const StorageParams& sp, double gamma) {
  double one_ml = 1.0 - sp.lambda;
  double qu_lo = sp.u_min + one_ml * gamma;
  double qu_hi = sp.u_max + one_ml * gamma;
  double mu = 0.5 * std::max(qu_lo * qu_lo, qu_hi * qu_hi);
  double qs_lo = sp.s_min + gamma;
  double qs_hi = sp.s_max + gamma;
  double ms = std::max(qs_lo * qs_lo, qs_hi * qs_hi);
  return mu + sp.lambda * one_ml * ms;
}

namespace {

struct InnerMin {
  double gamma;
  double m;
};

// Exact minimizer of M over [lo, hi]. M is the sum of two piecewise-quadratic
// convex terms whose active branch switches at most once each, so the minimum
// is at an endpoint, a branch crossing, or the clamped vertex of the active
// quadratic sum on one of the (at most three) segments.
InnerMin minimize_M(const StorageParams& sp, double lo, double hi) {
  double one_ml = 1.0 - sp.lambda;
  std::vector<double> cuts = {lo, hi};
  if (one_ml > 0.0) {
    double cu = -(sp.u_min + sp.u_max) / (2.0 * one_ml);
    if (cu > lo && cu < hi) cuts.push_back(cu);
  }
  double cs = -(sp.s_min + sp.s_max) / 2.0;
  if (cs > lo && cs < hi) cuts.push_back(cs);
  std::sort(cuts.begin(), cuts.end());

  std::vector<double> candidates = cuts;
  if (one_ml > 0.0) {
    for (size_t j = 0; j + 1 < cuts.size(); ++j) {
      double mid = 0.5 * (cuts[j] + cuts[j + 1]);
      double au = std::fabs(sp.u_min + one_ml * mid) >= std::fabs(sp.u_max + one_ml * mid)
                      ? sp.u_min
                      : sp.u_max;
      double as = std::fabs(sp.s_min + mid) >= std::fabs(sp.s_max + mid) ? sp.s_min : sp.s_max;
      // vertex of (1/2)(au + (1-l)G)^2 + l(1-l)(as + G)^2
      double vertex = -(au + 2.0 * sp.lambda * as) / (1.0 + sp.lambda);
      candidates.push_back(std::clamp(vertex, cuts[j], cuts[j + 1]));
    }
  }

  InnerMin best{candidates.front(), suboptimality_M(sp, candidates.front())};
  for (double g : candidates) {
    double m = suboptimality_M(sp, g);
    if (m < best.m) best = {g, m};
  }
  return best;
}

double objective_at_w(const StorageParams& sp, const SubgradBounds& sg, double w) {
  GammaBounds gb = gamma_bounds(sp, sg, w);
  return minimize_M(sp, gb.ks_min, gb.ks_max).m / w;
}

}  // namespace

AlgorithmParams select_max_w(const StorageParams& sp, const SubgradBounds& sg) {
  WMaxResult wm = w_max_info(sp, sg);
  GammaBounds gb = gamma_bounds(sp, sg, wm.value);
  AlgorithmParams p;
  p.w = wm.value;
  // at w_max the interval is a single point; for a degenerate (flat) cost it
  // stays an interval and we take the M-minimizing shift inside it
  p.gamma = wm.degenerate ? minimize_M(sp, gb.ks_min, gb.ks_max).gamma
                          : 0.5 * (gb.ks_min + gb.ks_max);
  p.bound = suboptimality_M(sp, p.gamma) / p.w;
  return p;
}

AlgorithmParams select_min_s(const StorageParams& sp, const SubgradBounds& sg, double tol) {
  if (!(tol > 0.0)) fail(errc::parameter, "tolerance must be positive");
  double w_hi = w_max_info(sp, sg).value;
  double w_lo = w_hi * 1e-9;

  const int K = 257;
  double best_w = w_hi;
  double best_obj = objective_at_w(sp, sg, w_hi);
  int best_j = K - 1;
  double ratio = w_hi / w_lo;
  for (int j = 0; j < K - 1; ++j) {
    double w = w_lo * std::pow(ratio, static_cast<double>(j) / (K - 1));
    double obj = objective_at_w(sp, sg, w);
    if (obj < best_obj) {
      best_obj = obj;
      best_w = w;
      best_j = j;
    }
  }

  // golden-section refinement inside the bracketing grid cells
  double a = w_lo * std::pow(ratio, static_cast<double>(std::max(0, best_j - 1)) / (K - 1));
  double b = w_lo * std::pow(ratio, static_cast<double>(std::min(K - 1, best_j + 1)) / (K - 1));
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = objective_at_w(sp, sg, x1), f2 = objective_at_w(sp, sg, x2);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * w_hi; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = objective_at_w(sp, sg, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = objective_at_w(sp, sg, x2);
    }
  }
  for (double w : {x1, x2, 0.5 * (a + b)}) {
    double obj = objective_at_w(sp, sg, w);
    if (obj < best_obj) {
      best_obj = obj;
      best_w = w;
    }
  }

  GammaBounds gb = gamma_bounds(sp, sg, best_w);
  InnerMin inner = minimize_M(sp, gb.ks_min, gb.ks_max);
  AlgorithmParams p;
  p.w = best_w;
  p.gamma = inner.gamma;
  p.bound = inner.m / best_w;
  return p;
}

void validate_params(const AlgorithmParams& p, const StorageParams& sp, const SubgradBounds& sg) {
  GammaBounds gb = gamma_bounds(sp, sg, p.w);  // also checks 0 < w <= w_max
  double slack = 1e-9 * (1.0 + std::fabs(gb.ks_min) + std::fabs(gb.ks_max));
  if (p.gamma < gb.ks_min - slack || p.gamma > gb.ks_max + slack)
    fail(errc::parameter, "gamma " + std::to_string(p.gamma) + " outside [" +
                              std::to_string(gb.ks_min) + ", " + std::to_string(gb.ks_max) + "]");
}

CertificateReport psd_certificates(const AlgorithmParams& p, const StorageParams& sp,
                                   const SubgradBounds& sg) {
  (void)sg;
  if (!(p.w > 0.0)) fail(errc::parameter, "certificates need a positive weight");
  double one_ml = 1.0 - sp.lambda;
  double qu_lo = sp.u_min + one_ml * p.gamma;
  double qu_hi = sp.u_max + one_ml * p.gamma;
  double mu = 0.5 * std::max(qu_lo * qu_lo, qu_hi * qu_hi);
  double qs_lo = sp.s_min + p.gamma;
  double qs_hi = sp.s_max + p.gamma;
  double ms = std::max(qs_lo * qs_lo, qs_hi * qs_hi);
  double nu = mu / p.w;
  double ns = ms / p.w;

  auto make = [](const char* name, double m00, double m01, double m11) {
    PsdCertificate c;
    c.name = name;
    c.m00 = m00;
    c.m01 = m01;
    c.m11 = m11;
    c.det = m00 * m11 - m01 * m01;
    c.pass = m00 >= -1e-9 && m11 >= -1e-9 && c.det >= -1e-9;
    return c;
  };

  CertificateReport rep;
  rep.certs[0] = make("min_u", nu, qu_lo, 2.0 * p.w);
  rep.certs[1] = make("max_u", nu, qu_hi, 2.0 * p.w);
  rep.certs[2] = make("min_s", ns, qs_lo, p.w);
  rep.certs[3] = make("max_s", ns, qs_hi, p.w);
  rep.all_pass = true;
  for (const PsdCertificate& c : rep.certs) rep.all_pass = rep.all_pass && c.pass;
  return rep;
}

}  // namespace omgrid
