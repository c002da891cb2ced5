#include "omgrid/horizon_lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace omgrid {

int StaircaseLp::add_var(int block, double lo, double hi, double c) {
  if (block < 0 || block >= blocks) fail(errc::parameter, "variable block out of range");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi) || !std::isfinite(c))
    fail(errc::parameter, "staircase variables need finite bounds with lb < ub");
  cost.push_back(c);
  lb.push_back(lo);
  ub.push_back(hi);
  var_block.push_back(block);
  return num_vars() - 1;
}

int StaircaseLp::add_row(int block, double b) {
  if (block < 0 || block >= blocks) fail(errc::parameter, "row block out of range");
  if (!std::isfinite(b)) fail(errc::parameter, "row right-hand side must be finite");
  rhs.push_back(b);
  row_block.push_back(block);
  return num_rows() - 1;
}

void StaircaseLp::add_term(int row, int var, double val) {
  if (row < 0 || row >= num_rows() || var < 0 || var >= num_vars())
    fail(errc::parameter, "staircase term outside problem dimensions");
  if (val != 0.0) entries.push_back({row, var, val});
}

namespace {

// Cholesky factor/solve for a symmetric positive definite block-tridiagonal
// matrix with per-block sizes ns[t]. Diagonal blocks are dense row-major
// ns[t] x ns[t]; subdiagonal blocks are ns[t] x ns[t-1].
class BlockTridiagChol {
 public:
  bool factor(std::vector<std::vector<double>>& diag, std::vector<std::vector<double>>& sub,
              const std::vector<int>& ns) {
    ns_ = ns;
    int T = static_cast<int>(ns.size());
    chol_ = diag;
    e_ = sub;
    for (int t = 0; t < T; ++t) {
      int n = ns_[t];
      if (t > 0) {
        int p = ns_[t - 1];
        // E_t = B_t * C_{t-1}^{-T}: each row of B solves a forward system
        for (int i = 0; i < n; ++i) forward(chol_[t - 1], p, &e_[t][static_cast<size_t>(i) * p]);
        // H_t -= E_t E_t'
        for (int i = 0; i < n; ++i)
          for (int j = 0; j <= i; ++j) {
            double s = 0.0;
            const double *ei = &e_[t][static_cast<size_t>(i) * p],
                         *ej = &e_[t][static_cast<size_t>(j) * p];
            for (int k = 0; k < p; ++k) s += ei[k] * ej[k];
            chol_[t][static_cast<size_t>(i) * n + j] -= s;
            if (i != j) chol_[t][static_cast<size_t>(j) * n + i] -= s;
          }
      }
      if (!cholesky(chol_[t], n)) return false;
    }
    return true;
  }

  // solves M x = r in place over the stacked right-hand side
  void solve(std::vector<std::vector<double>>& r) const {
    int T = static_cast<int>(ns_.size());
    for (int t = 0; t < T; ++t) {
      int n = ns_[t];
      if (t > 0) {
        int p = ns_[t - 1];
        for (int i = 0; i < n; ++i) {
          double s = 0.0;
          const double* ei = &e_[t][static_cast<size_t>(i) * p];
          for (int k = 0; k < p; ++k) s += ei[k] * r[t - 1][k];
          r[t][i] -= s;
        }
      }
      forward(chol_[t], n, r[t].data());
    }
    for (int t = T - 1; t >= 0; --t) {
      int n = ns_[t];
      if (t + 1 < T) {
        int q = ns_[t + 1];
        for (int i = 0; i < q; ++i) {
          double xi = r[t + 1][i];
          const double* ei = &e_[t + 1][static_cast<size_t>(i) * n];
          for (int k = 0; k < n; ++k) r[t][k] -= ei[k] * xi;
        }
      }
      backward(chol_[t], n, r[t].data());
    }
  }

 private:
  std::vector<int> ns_;
  std::vector<std::vector<double>> chol_, e_;

  static bool cholesky(std::vector<double>& m, int n) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        double s = m[static_cast<size_t>(i) * n + j];
        for (int k = 0; k < j; ++k)
          s -= m[static_cast<size_t>(i) * n + k] * m[static_cast<size_t>(j) * n + k];
        if (j < i) {
          m[static_cast<size_t>(i) * n + j] = s / m[static_cast<size_t>(j) * n + j];
        } else {
          if (s <= 0.0 || !std::isfinite(s)) return false;
          m[static_cast<size_t>(i) * n + i] = std::sqrt(s);
        }
      }
    }
    return true;
  }

  static void forward(const std::vector<double>& l, int n, double* x) {
    for (int i = 0; i < n; ++i) {
      double s = x[i];
      for (int k = 0; k < i; ++k) s -= l[static_cast<size_t>(i) * n + k] * x[k];
      x[i] = s / l[static_cast<size_t>(i) * n + i];
    }
  }

  static void backward(const std::vector<double>& l, int n, double* x) {
    for (int i = n - 1; i >= 0; --i) {
      double s = x[i];
      for (int k = i + 1; k < n; ++k) s -= l[static_cast<size_t>(k) * n + i] * x[k];
      x[i] = s / l[static_cast<size_t>(i) * n + i];
    }
  }
};

struct ColumnView {
  int begin = 0, count = 0;
};

}  // namespace

StaircaseResult solve_staircase(const StaircaseLp& lp) {
  const int nv = lp.num_vars(), nr = lp.num_rows(), nb = lp.blocks;
  if (nv == 0 || nb == 0) fail(errc::parameter, "empty staircase problem");

  // per-block row numbering in insertion order
  std::vector<int> row_local(nr), block_rows(nb, 0);
  for (int r = 0; r < nr; ++r) row_local[r] = block_rows[lp.row_block[r]]++;

  // column-major entry layout
  std::vector<ColumnView> colv(nv);
  std::vector<StaircaseLp::Entry> centries(lp.entries.size());
  {
    std::vector<int> count(nv, 0);
    for (const auto& e : lp.entries) ++count[e.var];
    int pos = 0;
    for (int j = 0; j < nv; ++j) {
      colv[j] = {pos, count[j]};
      pos += count[j];
    }
    std::vector<int> fill(nv, 0);
    for (const auto& e : lp.entries) centries[colv[e.var].begin + fill[e.var]++] = e;
  }
  for (int j = 0; j < nv; ++j)
    for (int k = 0; k < colv[j].count; ++k) {
      int rb = lp.row_block[centries[colv[j].begin + k].row];
      if (std::abs(rb - lp.var_block[j]) > 1)
        fail(errc::internal, "staircase variable spans non-adjacent blocks");
    }

  auto ax = [&](const std::vector<double>& x, std::vector<double>& out) {
    out.assign(nr, 0.0);
    for (const auto& e : lp.entries) out[e.row] += e.val * x[e.var];
  };
  auto aty = [&](const std::vector<double>& y, std::vector<double>& out) {
    out.assign(nv, 0.0);
    for (const auto& e : lp.entries) out[e.var] += e.val * y[e.row];
  };

  std::vector<double> x(nv), zl(nv, 1.0), zu(nv, 1.0), y(nr, 0.0);
  for (int j = 0; j < nv; ++j) x[j] = 0.5 * (lp.lb[j] + lp.ub[j]);

  double bnorm = 1.0, cnorm = 1.0;
  for (double b : lp.rhs) bnorm = std::max(bnorm, std::fabs(b));
  for (double c : lp.cost) cnorm = std::max(cnorm, std::fabs(c));

  std::vector<double> gl(nv), gu(nv), d(nv), rp(nr), rd(nv), rhat(nv), tmp(nr);
  std::vector<double> dx(nv), dzl(nv), dzu(nv), dxa(nv), dzla(nv), dzua(nv);
  std::vector<std::vector<double>> hdiag(nb), hsub(nb), rhs_blocks(nb);
  std::vector<double> hdiag_save, hsub_save;
  BlockTridiagChol chol;

  StaircaseResult res;
  const int max_iter = 200;
  for (int iter = 0;; ++iter) {
    if (iter >= max_iter) fail(errc::nonconvergence, "interior-point iteration limit reached");
    res.iterations = iter;

    for (int j = 0; j < nv; ++j) {
      gl[j] = std::max(x[j] - lp.lb[j], 1e-14);
      gu[j] = std::max(lp.ub[j] - x[j], 1e-14);
    }
    ax(x, tmp);
    double pinf = 0.0;
    for (int r = 0; r < nr; ++r) {
      rp[r] = lp.rhs[r] - tmp[r];
      pinf = std::max(pinf, std::fabs(rp[r]));
    }
    aty(y, rd);
    double dinf = 0.0;
    for (int j = 0; j < nv; ++j) {
      rd[j] = lp.cost[j] - rd[j] - zl[j] + zu[j];
      dinf = std::max(dinf, std::fabs(rd[j]));
    }
    double pobj = 0.0, dobj = 0.0;
    for (int j = 0; j < nv; ++j) pobj += lp.cost[j] * x[j];
    for (int r = 0; r < nr; ++r) dobj += lp.rhs[r] * y[r];
    for (int j = 0; j < nv; ++j) dobj += lp.lb[j] * zl[j] - lp.ub[j] * zu[j];
    double gap = std::fabs(pobj - dobj) / (1.0 + std::fabs(pobj));
    if (pinf / bnorm <= 1e-9 && dinf / cnorm <= 1e-9 && gap <= 1e-9) {
      res.x = x;
      res.objective = pobj;
      return res;
    }

    double mu = 0.0;
    for (int j = 0; j < nv; ++j) mu += gl[j] * zl[j] + gu[j] * zu[j];
    mu /= 2.0 * nv;

    for (int j = 0; j < nv; ++j) d[j] = zl[j] / gl[j] + zu[j] / gu[j];

    // assemble normal-equation blocks A D^{-1} A'
    for (int b = 0; b < nb; ++b) {
      hdiag[b].assign(static_cast<size_t>(block_rows[b]) * block_rows[b], 0.0);
      hsub[b].assign(b > 0 ? static_cast<size_t>(block_rows[b]) * block_rows[b - 1] : 0, 0.0);
    }
    for (int j = 0; j < nv; ++j) {
      double dinv = 1.0 / d[j];
      for (int k1 = 0; k1 < colv[j].count; ++k1) {
        const auto& e1 = centries[colv[j].begin + k1];
        int b1 = lp.row_block[e1.row], l1 = row_local[e1.row];
        for (int k2 = k1; k2 < colv[j].count; ++k2) {
          const auto& e2 = centries[colv[j].begin + k2];
          int b2 = lp.row_block[e2.row], l2 = row_local[e2.row];
          double v = e1.val * e2.val * dinv;
          if (b1 == b2) {
            int n = block_rows[b1];
            hdiag[b1][static_cast<size_t>(l1) * n + l2] += v;
            if (l1 != l2) hdiag[b1][static_cast<size_t>(l2) * n + l1] += v;
          } else {
            int hi_b = std::max(b1, b2);
            int lr = b1 > b2 ? l1 : l2, lc = b1 > b2 ? l2 : l1;
            hsub[hi_b][static_cast<size_t>(lr) * block_rows[hi_b - 1] + lc] += v;
          }
        }
      }
    }

    std::vector<int> ns(block_rows.begin(), block_rows.end());
    bool ok = false;
    for (int attempt = 0; attempt < 3 && !ok; ++attempt) {
      auto hd = hdiag;
      auto hs = hsub;
      if (attempt > 0) {
        double ridge = attempt == 1 ? 1e-10 : 1e-6;
        for (int b = 0; b < nb; ++b) {
          double mx = 1.0;
          for (int i = 0; i < ns[b]; ++i)
            mx = std::max(mx, hd[b][static_cast<size_t>(i) * ns[b] + i]);
          for (int i = 0; i < ns[b]; ++i) hd[b][static_cast<size_t>(i) * ns[b] + i] += ridge * mx;
        }
      }
      ok = chol.factor(hd, hs, ns);
    }
    if (!ok) fail(errc::internal, "normal equations lost positive definiteness");

    auto solve_ky = [&](const std::vector<double>& rhat_in, std::vector<double>& dy_out) {
      // rhs_y = rp + A D^{-1} rhat
      for (int b = 0; b < nb; ++b) rhs_blocks[b].assign(block_rows[b], 0.0);
      for (int r = 0; r < nr; ++r) rhs_blocks[lp.row_block[r]][row_local[r]] = rp[r];
      for (const auto& e : lp.entries)
        rhs_blocks[lp.row_block[e.row]][row_local[e.row]] += e.val * rhat_in[e.var] / d[e.var];
      chol.solve(rhs_blocks);
      dy_out.assign(nr, 0.0);
      for (int r = 0; r < nr; ++r) dy_out[r] = rhs_blocks[lp.row_block[r]][row_local[r]];
    };

    std::vector<double> dy(nr);
    auto recover = [&](const std::vector<double>& rcl, const std::vector<double>& rcu,
                       std::vector<double>& ddx, std::vector<double>& ddzl,
                       std::vector<double>& ddzu) {
      for (int j = 0; j < nv; ++j) rhat[j] = rd[j] - rcl[j] / gl[j] + rcu[j] / gu[j];
      solve_ky(rhat, dy);
      aty(dy, ddx);
      for (int j = 0; j < nv; ++j) ddx[j] = (ddx[j] - rhat[j]) / d[j];
      for (int j = 0; j < nv; ++j) {
        ddzl[j] = (rcl[j] - zl[j] * ddx[j]) / gl[j];
        ddzu[j] = (rcu[j] + zu[j] * ddx[j]) / gu[j];
      }
    };

    // affine (predictor) direction
    std::vector<double> rcl(nv), rcu(nv);
    for (int j = 0; j < nv; ++j) {
      rcl[j] = -gl[j] * zl[j];
      rcu[j] = -gu[j] * zu[j];
    }
    recover(rcl, rcu, dxa, dzla, dzua);

    auto step_primal = [&](const std::vector<double>& ddx) {
      double a = 1.0;
      for (int j = 0; j < nv; ++j) {
        if (ddx[j] < 0.0) a = std::min(a, -gl[j] / ddx[j]);
        if (ddx[j] > 0.0) a = std::min(a, gu[j] / ddx[j]);
      }
      return a;
    };
    auto step_dual = [&](const std::vector<double>& ddzl, const std::vector<double>& ddzu) {
      double a = 1.0;
      for (int j = 0; j < nv; ++j) {
        if (ddzl[j] < 0.0) a = std::min(a, -zl[j] / ddzl[j]);
        if (ddzu[j] < 0.0) a = std::min(a, -zu[j] / ddzu[j]);
      }
      return a;
    };

    double apa = step_primal(dxa), ada = step_dual(dzla, dzua);
    double mu_aff = 0.0;
    for (int j = 0; j < nv; ++j)
      mu_aff += (gl[j] + apa * dxa[j]) * (zl[j] + ada * dzla[j]) +
                (gu[j] - apa * dxa[j]) * (zu[j] + ada * dzua[j]);
    mu_aff /= 2.0 * nv;
    double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // corrector
    for (int j = 0; j < nv; ++j) {
      rcl[j] = sigma * mu - gl[j] * zl[j] - dxa[j] * dzla[j];
      rcu[j] = sigma * mu - gu[j] * zu[j] + dxa[j] * dzua[j];
    }
    recover(rcl, rcu, dx, dzl, dzu);

    double ap = 0.9995 * step_primal(dx), ad = 0.9995 * step_dual(dzl, dzu);
    for (int j = 0; j < nv; ++j) {
      x[j] += ap * dx[j];
      zl[j] = std::max(zl[j] + ad * dzl[j], 1e-300);
      zu[j] = std::max(zu[j] + ad * dzu[j], 1e-300);
    }
    for (int r = 0; r < nr; ++r) y[r] += ad * dy[r];
  }
}

HorizonSolve solve_horizon(const Grid& g, const std::vector<BusSpec>& buses,
                           const std::vector<double>& s0, const std::vector<double>& delta,
                           const std::vector<double>& price, int T) {
  validate_grid(g);
  const int n = g.n, m = g.m();
  if (static_cast<int>(buses.size()) != n) fail(errc::parameter, "one bus spec per node required");
  if (T < 1) fail(errc::parameter, "horizon must cover at least one period");
  if (s0.size() != static_cast<size_t>(n) || delta.size() != static_cast<size_t>(T) * n ||
      price.size() != static_cast<size_t>(T) * n)
    fail(errc::parameter, "scenario arrays do not match the horizon and bus count");
  for (int i = 0; i < n; ++i) {
    validate_bus(buses[i]);
    if (s0[i] < buses[i].storage.s_min - 1e-12 || s0[i] > buses[i].storage.s_max + 1e-12)
      fail(errc::parameter, "initial level outside the storage box at bus " + std::to_string(i));
  }

  bool tree = is_forest(g);
  IncidentEdges inc = incident_edges(g);
  std::vector<int> comp = components(g);
  int ncomp = 1 + *std::max_element(comp.begin(), comp.end());
  std::vector<int> root(ncomp, -1);
  for (int i = 0; i < n; ++i)
    if (root[comp[i]] < 0) root[comp[i]] = i;

  double fsum = 0.0, theta_big = 1.0;
  for (int e = 0; e < m; ++e) {
    fsum += g.flow_limit[e];
    theta_big += g.flow_limit[e] / g.susceptance[e];
  }
  double dmax = 0.0;
  for (double v : delta) dmax = std::max(dmax, std::fabs(v));

  // per-bus linearizations; the line count is price-independent
  std::vector<std::vector<CostLine>> lines(n);
  std::vector<double> rbig(n), tbig(n);
  for (int i = 0; i < n; ++i) {
    const StorageParams& sp = buses[i].storage;
    lines[i] = cost_linearization(buses[i].cost, buses[i].cost.p_max);
    double ubig = std::max(std::fabs(sp.u_min) / sp.mu_c, sp.u_max / sp.mu_c);
    rbig[i] = ubig + dmax + fsum + 1.0;
    // slope magnitude is affine in the price, so the corners bound every period
    double c = 1.0;
    for (double p : {buses[i].cost.p_min, buses[i].cost.p_max})
      for (const CostLine& ln : cost_linearization(buses[i].cost, p))
        c = std::max(c, std::fabs(ln.slope) * rbig[i] + std::fabs(ln.intercept) + 1.0);
    tbig[i] = c;
  }

  StaircaseLp lp;
  lp.blocks = T;

  // deterministic per-period variable layout
  std::vector<int> koff(n + 1, 0);
  for (int i = 0; i < n; ++i) koff[i + 1] = koff[i] + static_cast<int>(lines[i].size());
  int ksum = koff[n];
  int off_up = 0, off_um = n, off_r = 2 * n, off_tv = 3 * n, off_sl = 4 * n;
  int off_f = off_sl + ksum;
  int off_th = off_f + m;
  int off_s = off_th + (tree ? 0 : n);
  int stride = off_s + n;

  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) lp.add_var(t, 0.0, std::max(buses[i].storage.u_max, 1e-9), 0.0);
    for (int i = 0; i < n; ++i) lp.add_var(t, std::min(buses[i].storage.u_min, -1e-9), 0.0, 0.0);
    for (int i = 0; i < n; ++i) lp.add_var(t, -rbig[i], rbig[i], 0.0);
    for (int i = 0; i < n; ++i) lp.add_var(t, -tbig[i], tbig[i], 1.0);
    for (int i = 0; i < n; ++i)
      for (size_t k = 0; k < lines[i].size(); ++k) lp.add_var(t, 0.0, 4.0 * tbig[i], 0.0);
    for (int e = 0; e < m; ++e) lp.add_var(t, -g.flow_limit[e], g.flow_limit[e], 0.0);
    if (!tree)
      for (int i = 0; i < n; ++i) lp.add_var(t, -theta_big, theta_big, 0.0);
    for (int i = 0; i < n; ++i)
      lp.add_var(t, buses[i].storage.s_min, buses[i].storage.s_max, 0.0);
  }

  for (int t = 0; t < T; ++t) {
    int vb = t * stride;
    for (int i = 0; i < n; ++i) {
      const StorageParams& sp = buses[i].storage;
      int row = lp.add_row(t, t == 0 ? sp.lambda * s0[i] : 0.0);
      lp.add_term(row, vb + off_s + i, 1.0);
      lp.add_term(row, vb + off_up + i, -1.0);
      lp.add_term(row, vb + off_um + i, -1.0);
      if (t > 0) lp.add_term(row, vb - stride + off_s + i, -sp.lambda);
    }
    for (int i = 0; i < n; ++i) {
      const StorageParams& sp = buses[i].storage;
      int row = lp.add_row(t, delta[static_cast<size_t>(t) * n + i]);
      lp.add_term(row, vb + off_up + i, 1.0 / sp.mu_c);
      lp.add_term(row, vb + off_um + i, sp.mu_d);
      lp.add_term(row, vb + off_r + i, -1.0);
      for (size_t k = 0; k < inc.edge[i].size(); ++k)
        lp.add_term(row, vb + off_f + inc.edge[i][k], static_cast<double>(inc.sign[i][k]));
    }
    for (int i = 0; i < n; ++i) {
      std::vector<CostLine> lt = cost_linearization(buses[i].cost,
                                                    buses[i].price.at(t));
      for (size_t k = 0; k < lt.size(); ++k) {
        int row = lp.add_row(t, -lt[k].intercept);
        lp.add_term(row, vb + off_r + i, lt[k].slope);
        lp.add_term(row, vb + off_tv + i, -1.0);
        lp.add_term(row, vb + off_sl + koff[i] + static_cast<int>(k), 1.0);
      }
    }
    if (!tree) {
      for (int e = 0; e < m; ++e) {
        int row = lp.add_row(t, 0.0);
        lp.add_term(row, vb + off_f + e, 1.0);
        lp.add_term(row, vb + off_th + g.edges[e].head, -g.susceptance[e]);
        lp.add_term(row, vb + off_th + g.edges[e].tail, g.susceptance[e]);
      }
      for (int c = 0; c < ncomp; ++c) {
        int row = lp.add_row(t, 0.0);
        lp.add_term(row, vb + off_th + root[c], 1.0);
      }
    }
  }

  StaircaseResult sol = solve_staircase(lp);

  HorizonSolve out;
  out.iterations = sol.iterations;
  out.u.assign(static_cast<size_t>(T) * n, 0.0);
  out.r.assign(static_cast<size_t>(T) * n, 0.0);
  out.s.assign(static_cast<size_t>(T) * n, 0.0);
  out.theta.assign(static_cast<size_t>(T) * n, 0.0);
  out.f.assign(static_cast<size_t>(T) * m, 0.0);
  std::vector<double> frow(m);
  for (int t = 0; t < T; ++t) {
    int vb = t * stride;
    for (int i = 0; i < n; ++i) {
      size_t at = static_cast<size_t>(t) * n + i;
      out.u[at] = sol.x[vb + off_up + i] + sol.x[vb + off_um + i];
      out.r[at] = sol.x[vb + off_r + i];
      out.s[at] = sol.x[vb + off_s + i];
      out.total_cost += eval_cost(buses[i].cost, out.r[at], buses[i].price.at(t));
    }
    for (int e = 0; e < m; ++e) {
      frow[e] = sol.x[vb + off_f + e];
      out.f[static_cast<size_t>(t) * m + e] = frow[e];
    }
    if (tree) {
      std::vector<double> th = angles_from_flows_forest(g, frow);
      for (int i = 0; i < n; ++i) out.theta[static_cast<size_t>(t) * n + i] = th[i];
    } else {
      for (int i = 0; i < n; ++i)
        out.theta[static_cast<size_t>(t) * n + i] = sol.x[vb + off_th + i];
    }
  }
  return out;
}

}  // namespace omgrid
