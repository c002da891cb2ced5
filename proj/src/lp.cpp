#include "omgrid/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace omgrid {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr signed char kAtLower = 0, kAtUpper = 1, kFree = 2, kBasic = 3;
}  // namespace

int EpigraphLp::add_var(double lo, double hi, double c) {
  lb.push_back(lo);
  ub.push_back(hi);
  cost.push_back(c);
  cols.emplace_back();
  return num_vars() - 1;
}

int EpigraphLp::add_row(double lo, double hi) {
  row_lo.push_back(lo);
  row_hi.push_back(hi);
  return num_rows() - 1;
}

void EpigraphLp::add_term(int row, int var, double coef) {
  if (row < 0 || row >= num_rows() || var < 0 || var >= num_vars())
    fail(errc::parameter, "matrix term outside problem dimensions");
  if (coef != 0.0) cols[var].emplace_back(row, coef);
}

void EpigraphLp::set_cost(int var, double c) {
  if (var < 0 || var >= num_vars()) fail(errc::parameter, "cost index outside problem");
  cost[var] = c;
}

int EpigraphLp::add_epigraph(int r_var, const std::vector<CostLine>& lines, double weight) {
  if (lines.empty()) fail(errc::parameter, "epigraph needs at least one line");
  int t = add_var(-kInf, kInf, weight);
  for (const CostLine& ln : lines) {
    int row = add_row(-kInf, -ln.intercept);
    add_term(row, r_var, ln.slope);
    add_term(row, t, -1.0);
  }
  return t;
}

namespace {

// Bounded-variable primal simplex over G z = 0 with z = (x, y, a):
// structural columns from the problem, one logical per row (column -e_r,
// bounds [row_lo, row_hi]) and phase-1 artificials on rows whose logical
// starts outside its bounds. Dantzig pricing with a Bland fallback after a
// run of degenerate steps.
class Simplex {
 public:
  Simplex(const EpigraphLp& lp, SimplexWorkspace& ws) : lp_(lp), ws_(ws) {}

  LpResult solve() {
    validate();
    ws_.n = -1;
    n_ = lp_.num_vars();
    m_ = lp_.num_rows();
    setup();

    LpResult res;
    if (nart_ > 0) {
      phase1_ = true;
      set_phase_costs();
      int enter = run();
      if (enter >= 0) fail(errc::internal, "phase-1 objective cannot be unbounded");
      double resid = 0.0;
      for (int i = 0; i < m_; ++i)
        if (basis_[i] >= n_ + m_) resid += std::max(0.0, xb_[i]);
      if (resid > 1e-8 * (1.0 + scale_)) {
        res.status = LpResult::Status::infeasible;
        res.infeasibility = resid;
        extract(res);
        return res;
      }
      pivot_out_artificials();
    }

    phase1_ = false;
    set_phase_costs();
    int enter = run();
    if (enter >= 0) {
      res.status = LpResult::Status::unbounded;
      res.unbounded_var = enter < n_ ? enter : -1;
      extract(res);
      return res;
    }
    res.status = LpResult::Status::optimal;
    extract(res);
    ws_.n = n_;
    ws_.m = m_;
    return res;
  }

  // re-solve after bound or cost edits: the stored basis keeps its reduced
  // costs when only bounds move, and cost shifts on boxed variables are
  // repaired by bound flips, so a dual run restores primal feasibility
  LpResult resolve() {
    if (ws_.n != lp_.num_vars() || ws_.m != lp_.num_rows()) return solve();
    validate();
    n_ = lp_.num_vars();
    m_ = lp_.num_rows();
    nart_ = static_cast<int>(art_row_.size());
    ncol_ = n_ + m_ + nart_;
    if (static_cast<int>(state_.size()) != ncol_ || static_cast<int>(basis_.size()) != m_)
      return solve();
    ws_.n = -1;
    phase1_ = false;
    scale_ = 0.0;
    for (int r = 0; r < m_; ++r) {
      if (std::isfinite(lp_.row_lo[r])) scale_ = std::max(scale_, std::fabs(lp_.row_lo[r]));
      if (std::isfinite(lp_.row_hi[r])) scale_ = std::max(scale_, std::fabs(lp_.row_hi[r]));
    }
    set_phase_costs();

    for (int j = 0; j < ncol_; ++j) {
      if (state_[j] == kBasic || state_[j] == kFree) continue;
      double b = state_[j] == kAtLower ? col_lb(j) : col_ub(j);
      if (!std::isfinite(b)) return solve();
      value_[j] = b;
    }

    if (ws_.pivots >= 128) refactor();
    compute_pi();
    for (int j = 0; j < ncol_; ++j) {
      if (state_[j] == kBasic) continue;
      double lo = col_lb(j), hi = col_ub(j);
      if (lo == hi) continue;
      double d = reduced_cost(j);
      if (state_[j] == kAtLower && d < -kDualTol) {
        if (!std::isfinite(hi)) return solve();
        state_[j] = kAtUpper;
        value_[j] = hi;
      } else if (state_[j] == kAtUpper && d > kDualTol) {
        if (!std::isfinite(lo)) return solve();
        state_[j] = kAtLower;
        value_[j] = lo;
      } else if (state_[j] == kFree && std::fabs(d) > kDualTol) {
        return solve();
      }
    }
    recompute_basics();

    int rc = dual_run();
    if (rc == 2) return solve();
    LpResult res;
    if (rc == 1) {
      res.status = LpResult::Status::infeasible;
      for (int i = 0; i < m_; ++i) {
        int jb = basis_[i];
        res.infeasibility += std::max({col_lb(jb) - xb_[i], xb_[i] - col_ub(jb), 0.0});
      }
    }
    extract(res);
    ws_.n = n_;
    ws_.m = m_;
    return res;
  }

 private:
  const EpigraphLp& lp_;
  SimplexWorkspace& ws_;
  int n_ = 0, m_ = 0, nart_ = 0, ncol_ = 0;
  bool phase1_ = false;
  double scale_ = 0.0;
  // views into workspace vectors
  std::vector<double>&binv_ = ws_.binv, &xb_ = ws_.xb, &value_ = ws_.value, &pi_ = ws_.pi,
  &colw_ = ws_.colw, &cost_ = ws_.cost;
  std::vector<int>&basis_ = ws_.basis, &art_sign_ = ws_.col_row, &art_row_ = ws_.art_row;
  std::vector<signed char>& state_ = ws_.state;

  double col_lb(int j) const {
    if (j < n_) return lp_.lb[j];
    if (j < n_ + m_) return lp_.row_lo[j - n_];
    return 0.0;
  }
  double col_ub(int j) const {
    if (j < n_) return lp_.ub[j];
    if (j < n_ + m_) return lp_.row_hi[j - n_];
    return phase1_ ? kInf : 0.0;
  }

  void validate() const {
    for (int j = 0; j < lp_.num_vars(); ++j) {
      if (std::isnan(lp_.lb[j]) || std::isnan(lp_.ub[j]) || !std::isfinite(lp_.cost[j]))
        fail(errc::parameter, "variable " + std::to_string(j) + " has an invalid bound or cost");
      if (lp_.lb[j] > lp_.ub[j])
        fail(errc::parameter, "variable " + std::to_string(j) + " has reversed bounds");
    }
    for (int r = 0; r < lp_.num_rows(); ++r) {
      if (std::isnan(lp_.row_lo[r]) || std::isnan(lp_.row_hi[r]))
        fail(errc::parameter, "row " + std::to_string(r) + " has an invalid bound");
      if (lp_.row_lo[r] > lp_.row_hi[r])
        fail(errc::parameter, "row " + std::to_string(r) + " has reversed bounds");
    }
  }

  void setup() {
    scale_ = 0.0;
    for (int r = 0; r < m_; ++r) {
      if (std::isfinite(lp_.row_lo[r])) scale_ = std::max(scale_, std::fabs(lp_.row_lo[r]));
      if (std::isfinite(lp_.row_hi[r])) scale_ = std::max(scale_, std::fabs(lp_.row_hi[r]));
    }

    value_.assign(n_ + m_, 0.0);
    state_.assign(n_ + m_, kFree);
    for (int j = 0; j < n_; ++j) {
      double lo = lp_.lb[j], hi = lp_.ub[j];
      if (std::isfinite(lo) && (!std::isfinite(hi) || std::fabs(lo) <= std::fabs(hi))) {
        state_[j] = kAtLower;
        value_[j] = lo;
      } else if (std::isfinite(hi)) {
        state_[j] = kAtUpper;
        value_[j] = hi;
      }
    }

    // y = Ax at the starting point; rows outside their range get an artificial
    std::vector<double>& y = colw_;
    y.assign(m_, 0.0);
    for (int j = 0; j < n_; ++j)
      if (value_[j] != 0.0)
        for (const auto& [r, a] : lp_.cols[j]) y[r] += a * value_[j];

    basis_.assign(m_, 0);
    art_row_.clear();
    art_sign_.clear();
    for (int r = 0; r < m_; ++r) {
      double tol = 1e-11 * (1.0 + scale_);
      if (y[r] < lp_.row_lo[r] - tol || y[r] > lp_.row_hi[r] + tol) {
        bool below = y[r] < lp_.row_lo[r];
        state_[n_ + r] = below ? kAtLower : kAtUpper;
        value_[n_ + r] = below ? lp_.row_lo[r] : lp_.row_hi[r];
        basis_[r] = n_ + m_ + static_cast<int>(art_row_.size());
        art_row_.push_back(r);
        art_sign_.push_back(below ? 1 : -1);
      } else {
        state_[n_ + r] = kBasic;
        basis_[r] = n_ + r;
      }
    }
    nart_ = static_cast<int>(art_row_.size());
    ncol_ = n_ + m_ + nart_;
    value_.resize(ncol_, 0.0);
    state_.resize(ncol_, kBasic);

    // the starting basis holds one logical or artificial per row, so its
    // inverse is the same diagonal of unit entries
    ws_.pivots = 0;
    binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
    int next_art = 0;
    for (int r = 0; r < m_; ++r) {
      double diag = -1.0;
      if (basis_[r] >= n_ + m_) diag = static_cast<double>(art_sign_[next_art++]);
      binv_[static_cast<size_t>(r) * m_ + r] = diag;
    }
    recompute_basics();
  }

  void set_phase_costs() {
    cost_.assign(ncol_, 0.0);
    if (phase1_) {
      for (int k = 0; k < nart_; ++k) cost_[n_ + m_ + k] = 1.0;
    } else {
      for (int j = 0; j < n_; ++j) cost_[j] = lp_.cost[j];
      // artificials are done; pin them at zero so they never re-enter
      for (int k = 0; k < nart_; ++k)
        if (state_[n_ + m_ + k] != kBasic) value_[n_ + m_ + k] = 0.0;
    }
  }

  void col_entries(int j, const std::pair<int, double>** begin, int* count, int* row,
                   double* coef) const {
    if (j < n_) {
      *begin = lp_.cols[j].data();
      *count = static_cast<int>(lp_.cols[j].size());
    } else if (j < n_ + m_) {
      *count = -1;
      *row = j - n_;
      *coef = -1.0;
    } else {
      *count = -1;
      *row = art_row_[j - n_ - m_];
      *coef = static_cast<double>(art_sign_[j - n_ - m_]);
    }
  }

  // w = B^{-1} G_j
  void column_w(int j, std::vector<double>& w) const {
    w.assign(m_, 0.0);
    const std::pair<int, double>* e = nullptr;
    int cnt = 0, row = 0;
    double coef = 0.0;
    col_entries(j, &e, &cnt, &row, &coef);
    if (cnt < 0) {
      for (int i = 0; i < m_; ++i) w[i] = coef * binv_[i * m_ + row];
    } else {
      for (int k = 0; k < cnt; ++k)
        for (int i = 0; i < m_; ++i) w[i] += e[k].second * binv_[i * m_ + e[k].first];
    }
  }

  double reduced_cost(int j) const {
    double d = cost_[j];
    const std::pair<int, double>* e = nullptr;
    int cnt = 0, row = 0;
    double coef = 0.0;
    col_entries(j, &e, &cnt, &row, &coef);
    if (cnt < 0)
      d -= coef * pi_[row];
    else
      for (int k = 0; k < cnt; ++k) d -= e[k].second * pi_[e[k].first];
    return d;
  }

  void refactor() {
    ws_.pivots = 0;
    binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
    std::vector<double> b(static_cast<size_t>(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      int j = basis_[i];
      const std::pair<int, double>* e = nullptr;
      int cnt = 0, row = 0;
      double coef = 0.0;
      col_entries(j, &e, &cnt, &row, &coef);
      if (cnt < 0)
        b[static_cast<size_t>(row) * m_ + i] = coef;
      else
        for (int k = 0; k < cnt; ++k) b[static_cast<size_t>(e[k].first) * m_ + i] = e[k].second;
      binv_[static_cast<size_t>(i) * m_ + i] = 1.0;
    }
    // Gauss-Jordan with partial pivoting, b -> I and binv -> B^{-1}
    for (int c = 0; c < m_; ++c) {
      int piv = c;
      for (int r = c + 1; r < m_; ++r)
        if (std::fabs(b[static_cast<size_t>(r) * m_ + c]) >
            std::fabs(b[static_cast<size_t>(piv) * m_ + c]))
          piv = r;
      if (std::fabs(b[static_cast<size_t>(piv) * m_ + c]) < 1e-12)
        fail(errc::internal, "singular simplex basis");
      if (piv != c)
        for (int k = 0; k < m_; ++k) {
          std::swap(b[static_cast<size_t>(piv) * m_ + k], b[static_cast<size_t>(c) * m_ + k]);
          std::swap(binv_[static_cast<size_t>(piv) * m_ + k],
                    binv_[static_cast<size_t>(c) * m_ + k]);
        }
      double inv = 1.0 / b[static_cast<size_t>(c) * m_ + c];
      for (int k = 0; k < m_; ++k) {
        b[static_cast<size_t>(c) * m_ + k] *= inv;
        binv_[static_cast<size_t>(c) * m_ + k] *= inv;
      }
      for (int r = 0; r < m_; ++r) {
        if (r == c) continue;
        double f = b[static_cast<size_t>(r) * m_ + c];
        if (f == 0.0) continue;
        for (int k = 0; k < m_; ++k) {
          b[static_cast<size_t>(r) * m_ + k] -= f * b[static_cast<size_t>(c) * m_ + k];
          binv_[static_cast<size_t>(r) * m_ + k] -= f * binv_[static_cast<size_t>(c) * m_ + k];
        }
      }
    }
    recompute_basics();
  }

  void recompute_basics() {
    ws_.q.assign(m_, 0.0);
    for (int j = 0; j < ncol_; ++j) {
      if (state_[j] == kBasic || value_[j] == 0.0) continue;
      const std::pair<int, double>* e = nullptr;
      int cnt = 0, row = 0;
      double coef = 0.0;
      col_entries(j, &e, &cnt, &row, &coef);
      if (cnt < 0)
        ws_.q[row] -= coef * value_[j];
      else
        for (int k = 0; k < cnt; ++k) ws_.q[e[k].first] -= e[k].second * value_[j];
    }
    xb_.assign(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      double s = 0.0;
      for (int r = 0; r < m_; ++r) s += binv_[static_cast<size_t>(i) * m_ + r] * ws_.q[r];
      xb_[i] = s;
    }
  }

  void compute_pi() {
    pi_.assign(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      double cb = cost_[basis_[i]];
      if (cb == 0.0) continue;
      for (int r = 0; r < m_; ++r) pi_[r] += cb * binv_[static_cast<size_t>(i) * m_ + r];
    }
  }

  // returns -1 at optimality, or the entering column of an unbounded ray
  int run() {
    bool bland = false;
    int degenerate_run = 0;
    long iter_cap = 10000 + 500L * ncol_;
    std::vector<double> w;
    for (long iter = 0;; ++iter) {
      if (iter > iter_cap) fail(errc::nonconvergence, "simplex iteration limit reached");
      if (ws_.pivots >= 128) refactor();
      compute_pi();

      int enter = -1;
      double best = kDualTol;
      double enter_d = 0.0;
      for (int j = 0; j < ncol_; ++j) {
        signed char st = state_[j];
        if (st == kBasic) continue;
        if (col_lb(j) == col_ub(j)) continue;
        double d = reduced_cost(j);
        double viol = 0.0;
        if (st == kAtLower && d < -kDualTol)
          viol = -d;
        else if (st == kAtUpper && d > kDualTol)
          viol = d;
        else if (st == kFree && std::fabs(d) > kDualTol)
          viol = std::fabs(d);
        if (viol > 0.0) {
          if (bland) {
            enter = j;
            enter_d = d;
            break;
          }
          if (viol > best) {
            best = viol;
            enter = j;
            enter_d = d;
          }
        }
      }
      if (enter < 0) return -1;

      double sigma =
          (state_[enter] == kAtLower || (state_[enter] == kFree && enter_d < 0.0)) ? 1.0 : -1.0;
      column_w(enter, w);

      double t_best = kInf;
      double lo_e = col_lb(enter), hi_e = col_ub(enter);
      if (std::isfinite(lo_e) && std::isfinite(hi_e)) t_best = hi_e - lo_e;
      int leave = -1;
      signed char leave_state = kAtLower;
      for (int i = 0; i < m_; ++i) {
        double delta = sigma * w[i];
        if (std::fabs(delta) <= kPivotTol) continue;
        int jb = basis_[i];
        double ratio;
        signed char hit;
        if (delta > 0.0) {
          double lo = col_lb(jb);
          if (!std::isfinite(lo)) continue;
          ratio = (xb_[i] - lo) / delta;
          hit = kAtLower;
        } else {
          double hi = col_ub(jb);
          if (!std::isfinite(hi)) continue;
          ratio = (xb_[i] - hi) / delta;
          hit = kAtUpper;
        }
        if (ratio < 0.0) ratio = 0.0;
        bool better = ratio < t_best - 1e-12;
        bool tie = !better && leave >= 0 && ratio <= t_best + 1e-12 && basis_[i] < basis_[leave];
        if (better || tie) {
          t_best = std::min(t_best, ratio);
          leave = i;
          leave_state = hit;
        }
      }

      if (!std::isfinite(t_best)) return enter;

      if (t_best <= 1e-11) {
        if (++degenerate_run > 64) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      if (leave < 0) {
        // entering variable flips to its opposite bound
        for (int i = 0; i < m_; ++i) xb_[i] -= sigma * t_best * w[i];
        value_[enter] = sigma > 0.0 ? hi_e : lo_e;
        state_[enter] = sigma > 0.0 ? kAtUpper : kAtLower;
        continue;
      }

      int jb = basis_[leave];
      for (int i = 0; i < m_; ++i) xb_[i] -= sigma * t_best * w[i];
      xb_[leave] = value_[enter] + sigma * t_best;
      value_[jb] = leave_state == kAtLower ? col_lb(jb) : col_ub(jb);
      state_[jb] = leave_state;
      state_[enter] = kBasic;
      basis_[leave] = enter;

      double p = w[leave];
      double* rowL = &binv_[static_cast<size_t>(leave) * m_];
      for (int k = 0; k < m_; ++k) rowL[k] /= p;
      for (int i = 0; i < m_; ++i) {
        if (i == leave || w[i] == 0.0) continue;
        double f = w[i];
        double* rowI = &binv_[static_cast<size_t>(i) * m_];
        for (int k = 0; k < m_; ++k) rowI[k] -= f * rowL[k];
      }
      ++ws_.pivots;
    }
  }

  // drives out-of-bounds basic variables from a dual-feasible basis;
  // returns 0 at optimality, 1 when no entering column exists (primal
  // infeasible), 2 on an iteration stall
  int dual_run() {
    const double feas_tol = 1e-9 * (1.0 + scale_);
    long iter_cap = 10000 + 500L * ncol_;
    bool bland = false;
    int degenerate_run = 0;
    std::vector<double> w;
    for (long iter = 0;; ++iter) {
      if (iter > iter_cap) return 2;
      if (ws_.pivots >= 128) refactor();

      int lrow = -1, dir = 0;
      double target = 0.0, worst = feas_tol;
      for (int i = 0; i < m_; ++i) {
        int jb = basis_[i];
        double lo = col_lb(jb), hi = col_ub(jb);
        if (std::isfinite(lo) && lo - xb_[i] > worst) {
          worst = lo - xb_[i];
          lrow = i;
          dir = 1;
          target = lo;
        }
        if (std::isfinite(hi) && xb_[i] - hi > worst) {
          worst = xb_[i] - hi;
          lrow = i;
          dir = -1;
          target = hi;
        }
      }
      if (lrow < 0) return 0;

      compute_pi();
      const double* brow = &binv_[static_cast<size_t>(lrow) * m_];
      int enter = -1, enter_sigma = 0;
      double best_ratio = kInf;
      for (int j = 0; j < ncol_; ++j) {
        signed char st = state_[j];
        if (st == kBasic) continue;
        if (col_lb(j) == col_ub(j)) continue;
        const std::pair<int, double>* e = nullptr;
        int cnt = 0, row = 0;
        double coef = 0.0;
        col_entries(j, &e, &cnt, &row, &coef);
        double alpha = 0.0;
        if (cnt < 0)
          alpha = coef * brow[row];
        else
          for (int k = 0; k < cnt; ++k) alpha += e[k].second * brow[e[k].first];
        if (std::fabs(alpha) <= kPivotTol) continue;
        int sigma;
        if (st == kAtLower)
          sigma = 1;
        else if (st == kAtUpper)
          sigma = -1;
        else
          sigma = alpha * dir < 0 ? 1 : -1;
        if (sigma * alpha * dir >= 0) continue;
        if (bland) {
          enter = j;
          enter_sigma = sigma;
          break;
        }
        double ratio = std::fabs(reduced_cost(j)) / std::fabs(alpha);
        if (ratio < best_ratio - 1e-12) {
          best_ratio = ratio;
          enter = j;
          enter_sigma = sigma;
        }
      }
      if (enter < 0) return 1;

      column_w(enter, w);
      double t = (xb_[lrow] - target) / (w[lrow] * enter_sigma);
      if (t < 0.0) t = 0.0;
      if (t <= 1e-11) {
        if (++degenerate_run > 64) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      int jb = basis_[lrow];
      for (int i = 0; i < m_; ++i) xb_[i] -= enter_sigma * t * w[i];
      xb_[lrow] = value_[enter] + enter_sigma * t;
      value_[jb] = target;
      state_[jb] = dir > 0 ? kAtLower : kAtUpper;
      state_[enter] = kBasic;
      basis_[lrow] = enter;

      double p = w[lrow];
      double* rowL = &binv_[static_cast<size_t>(lrow) * m_];
      for (int k = 0; k < m_; ++k) rowL[k] /= p;
      for (int i = 0; i < m_; ++i) {
        if (i == lrow || w[i] == 0.0) continue;
        double f = w[i];
        double* rowI = &binv_[static_cast<size_t>(i) * m_];
        for (int k = 0; k < m_; ++k) rowI[k] -= f * rowL[k];
      }
      ++ws_.pivots;
    }
  }

  void pivot_out_artificials() {
    std::vector<double> w;
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_ + m_) continue;
      int found = -1;
      for (int j = 0; j < n_ + m_ && found < 0; ++j) {
        if (state_[j] == kBasic) continue;
        const std::pair<int, double>* e = nullptr;
        int cnt = 0, row = 0;
        double coef = 0.0;
        col_entries(j, &e, &cnt, &row, &coef);
        double wij = 0.0;
        if (cnt < 0)
          wij = coef * binv_[static_cast<size_t>(i) * m_ + row];
        else
          for (int k = 0; k < cnt; ++k)
            wij += e[k].second * binv_[static_cast<size_t>(i) * m_ + e[k].first];
        if (std::fabs(wij) > 1e-7) found = j;
      }
      if (found < 0) continue;  // redundant row, artificial stays basic at zero
      int old = basis_[i];
      column_w(found, w);
      double p = w[i];
      xb_[i] = value_[found];
      state_[old] = kAtLower;
      value_[old] = 0.0;
      state_[found] = kBasic;
      basis_[i] = found;
      double* rowI = &binv_[static_cast<size_t>(i) * m_];
      for (int k = 0; k < m_; ++k) rowI[k] /= p;
      for (int r = 0; r < m_; ++r) {
        if (r == i || w[r] == 0.0) continue;
        double f = w[r];
        double* rowR = &binv_[static_cast<size_t>(r) * m_];
        for (int k = 0; k < m_; ++k) rowR[k] -= f * rowI[k];
      }
      ++ws_.pivots;
    }
  }

  void extract(LpResult& res) const {
    res.x.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j)
      if (state_[j] != kBasic) res.x[j] = value_[j];
    for (int i = 0; i < m_; ++i)
      if (basis_[i] < n_) res.x[basis_[i]] = xb_[i];
    // a variable pinned by equal bounds takes that value exactly, even when
    // it sits in the basis and its computed coordinate carries pivot rounding
    for (int j = 0; j < n_; ++j)
      if (lp_.lb[j] == lp_.ub[j]) res.x[j] = lp_.lb[j];
    res.objective = 0.0;
    for (int j = 0; j < n_; ++j) res.objective += lp_.cost[j] * res.x[j];
  }
};

}  // namespace

LpResult solve_lp(const EpigraphLp& lp, SimplexWorkspace* ws) {
  SimplexWorkspace local;
  Simplex solver(lp, ws ? *ws : local);
  return solver.solve();
}

LpResult resolve_lp(const EpigraphLp& lp, SimplexWorkspace* ws) {
  if (ws == nullptr) return solve_lp(lp, nullptr);
  Simplex solver(lp, *ws);
  return solver.resolve();
}

}  // namespace omgrid
