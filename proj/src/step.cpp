#include "omgrid/step.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace omgrid {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TieBreak check_thresholds(const AlgorithmParams& p, const StorageParams& sp,
                          const SubgradBounds& sg, double s) {
  double pressure = sp.lambda * (s + p.gamma);
  if (pressure >= -p.w * sg.d_lo) return TieBreak::force_min;
  if (pressure <= -p.w * sg.d_hi) return TieBreak::force_max;
  return TieBreak::least_action;
}

StepSolver::StepSolver(Grid grid, std::vector<BusSpec> buses, std::vector<AlgorithmParams> params)
    : grid_(std::move(grid)), buses_(std::move(buses)), params_(std::move(params)) {
  validate_grid(grid_);
  if (buses_.size() != static_cast<size_t>(grid_.n))
    fail(errc::parameter, "one bus spec per node required");
  if (params_.size() != buses_.size())
    fail(errc::parameter, "one parameter set per bus required");

  int n = grid_.n, m = grid_.m();
  inc_ = incident_edges(grid_);
  tree_ = is_forest(grid_);

  double slope_big = 0.0, kappa_big = 0.0;
  sg_.reserve(n);
  for (int i = 0; i < n; ++i) {
    validate_bus(buses_[i]);
    const StorageParams& sp = buses_[i].storage;
    sg_.push_back(subgradient_bounds(buses_[i].cost, sp));
    validate_params(params_[i], sp, sg_[i]);
    lossy_ = lossy_ || 1.0 / sp.mu_c - sp.mu_d > 1e-15;
    slope_big = std::max({slope_big, std::fabs(sg_[i].d_lo), std::fabs(sg_[i].d_hi)});
    double g = params_[i].gamma;
    kappa_big = std::max(kappa_big, sp.lambda / params_[i].w *
                                        std::max(std::fabs(sp.s_min + g), std::fabs(sp.s_max + g)));
  }
  eps_ = 1e-7 * (1.0 + slope_big + kappa_big);

  // LP skeleton; per-step calls only touch bounds, costs, and epigraph slopes
  up_.resize(n);
  um_.resize(n);
  rv_.resize(n);
  tv_.resize(n);
  bal_row_.resize(n);
  net_row_.resize(n);
  epi_row_.resize(n);
  fv_.resize(m);
  sum_f_.assign(n, 0.0);
  cached_price_.assign(n, std::numeric_limits<double>::quiet_NaN());
  line_cache_.resize(n);

  for (int i = 0; i < n; ++i) {
    const StorageParams& sp = buses_[i].storage;
    up_[i] = lp_.add_var(0.0, sp.u_max);
    um_[i] = lp_.add_var(sp.u_min, 0.0);
    rv_[i] = lp_.add_var(-kInf, kInf);
    tv_[i] = lp_.add_var(-kInf, kInf, 1.0);
  }
  for (int e = 0; e < m; ++e)
    fv_[e] = lp_.add_var(-grid_.flow_limit[e], grid_.flow_limit[e]);
  if (!tree_) {
    std::vector<int> comp = components(grid_);
    std::vector<signed char> pinned(1 + *std::max_element(comp.begin(), comp.end()), 0);
    th_.resize(n);
    for (int i = 0; i < n; ++i) {
      bool root = !pinned[comp[i]];
      pinned[comp[i]] = 1;
      th_[i] = root ? lp_.add_var(0.0, 0.0) : lp_.add_var(-kInf, kInf);
    }
  }

  for (int i = 0; i < n; ++i) {
    const StorageParams& sp = buses_[i].storage;
    bal_row_[i] = lp_.add_row(0.0, 0.0);
    // the r column must start with its balance entry; epigraph slopes follow
    lp_.add_term(bal_row_[i], rv_[i], -1.0);
    lp_.add_term(bal_row_[i], up_[i], 1.0 / sp.mu_c);
    lp_.add_term(bal_row_[i], um_[i], sp.mu_d);
    for (size_t k = 0; k < inc_.edge[i].size(); ++k) {
      lp_.add_term(bal_row_[i], fv_[inc_.edge[i][k]], static_cast<double>(inc_.sign[i][k]));
      sum_f_[i] += grid_.flow_limit[inc_.edge[i][k]];
    }
    net_row_[i] = lp_.add_row(sp.u_min, sp.u_max);
    lp_.add_term(net_row_[i], up_[i], 1.0);
    lp_.add_term(net_row_[i], um_[i], 1.0);
    const std::vector<CostLine>& lines = lines_for(i, buses_[i].cost.p_max);
    for (size_t k = 0; k < lines.size(); ++k) {
      int row = lp_.add_row(-kInf, -lines[k].intercept);
      // placed directly: entry k+1 of the r column stays this line's slope
      // slot even when a slope is exactly zero
      lp_.cols[rv_[i]].emplace_back(row, lines[k].slope);
      lp_.add_term(row, tv_[i], -1.0);
      epi_row_[i].push_back(row);
    }
    cached_price_[i] = buses_[i].cost.p_max;
  }
  if (!tree_) {
    for (int e = 0; e < m; ++e) {
      int row = lp_.add_row(0.0, 0.0);
      lp_.add_term(row, fv_[e], 1.0);
      lp_.add_term(row, th_[grid_.edges[e].head], -grid_.susceptance[e]);
      lp_.add_term(row, th_[grid_.edges[e].tail], grid_.susceptance[e]);
    }
  }
}

const std::vector<CostLine>& StepSolver::lines_for(int bus, double price) {
  for (const auto& [p, lines] : line_cache_[bus])
    if (p == price) return lines;
  line_cache_[bus].emplace_back(price, cost_linearization(buses_[bus].cost, price));
  return line_cache_[bus].back().second;
}

void StepSolver::set_prices(const std::vector<double>& price) {
  for (int i = 0; i < grid_.n; ++i) {
    if (price[i] == cached_price_[i]) continue;
    const std::vector<CostLine>& lines = lines_for(i, price[i]);
    for (size_t k = 0; k < lines.size(); ++k) {
      lp_.cols[rv_[i]][1 + k].second = lines[k].slope;
      lp_.row_hi[epi_row_[i][k]] = -lines[k].intercept;
    }
    cached_price_[i] = price[i];
  }
}

LpResult StepSolver::solve_with_commitments(int* lp_solves) {
  LpResult res = resolve_lp(lp_, &ws_);
  *lp_solves = 1;
  if (res.status == LpResult::Status::infeasible)
    fail(errc::infeasible, "per-step problem infeasible; a level left its box");
  if (res.status == LpResult::Status::unbounded)
    fail(errc::internal, "per-step problem cannot be unbounded");
  if (!lossy_) return res;

  auto overlap = [&](const LpResult& r, const std::vector<int>& skip) {
    std::vector<int> out;
    for (int i = 0; i < grid_.n; ++i) {
      const StorageParams& sp = buses_[i].storage;
      if (1.0 / sp.mu_c - sp.mu_d <= 1e-15) continue;
      if (std::find(skip.begin(), skip.end(), i) != skip.end()) continue;
      if (r.x[up_[i]] > 1e-9 && r.x[um_[i]] < -1e-9) out.push_back(i);
    }
    return out;
  };

  if (overlap(res, {}).empty()) return res;

  // The split relaxation profits from charging and discharging at once when
  // conversion is lossy. Search sign commitments depth-first for the buses
  // that show it: each node's solve relaxes every completion below it, so a
  // node at or above the incumbent cannot improve on it, and a solution with
  // no overlap anywhere is physical. The best physical leaf attains its own
  // relaxation, which makes it exact.
  struct Saved {
    int var;
    double lo, hi;
  };
  std::vector<Saved> saved;
  auto pin = [&](int var) {
    saved.push_back({var, lp_.lb[var], lp_.ub[var]});
    lp_.lb[var] = 0.0;
    lp_.ub[var] = 0.0;
  };
  auto unpin = [&]() {
    lp_.lb[saved.back().var] = saved.back().lo;
    lp_.ub[saved.back().var] = saved.back().hi;
    saved.pop_back();
  };

  bool have_best = false;
  LpResult best;
  std::vector<int> pinned;
  auto dfs = [&](auto&& dfs, const LpResult& node) -> void {
    if (have_best && node.objective >= best.objective - 1e-12) return;
    std::vector<int> fresh = overlap(node, pinned);
    if (fresh.empty()) {
      best = node;
      have_best = true;
      return;
    }
    if (pinned.size() >= 12)
      fail(errc::size_guard, "sign-commitment search exceeds 12 buses");
    const int bus = fresh.front();
    pinned.push_back(bus);
    const bool charge_first = node.x[up_[bus]] >= -node.x[um_[bus]];
    for (int side = 0; side < 2; ++side) {
      const bool keep_charge = (side == 0) == charge_first;
      pin(keep_charge ? um_[bus] : up_[bus]);
      LpResult child = resolve_lp(lp_, &ws_);
      ++*lp_solves;
      if (child.status == LpResult::Status::optimal) dfs(dfs, child);
      unpin();
    }
    pinned.pop_back();
  };
  dfs(dfs, res);
  if (!have_best) fail(errc::internal, "all sign commitments were infeasible");
  return best;
}

StepSolution StepSolver::run(const StepInput& in, Policy policy) {
  int n = grid_.n, m = grid_.m();
  if (in.s.size() != static_cast<size_t>(n) || in.delta.size() != static_cast<size_t>(n) ||
      in.price.size() != static_cast<size_t>(n))
    fail(errc::parameter, "step input arrays must have one entry per bus");

  set_prices(in.price);

  StepSolution sol;
  bool online = policy == Policy::omg || policy == Policy::omg_clean;
  double eps = policy == Policy::omg_clean || policy == Policy::no_storage ? 0.0 : eps_;
  std::vector<double> kappa(n, 0.0);
  if (online) sol.modes.resize(n);

  for (int i = 0; i < n; ++i) {
    const StorageParams& sp = buses_[i].storage;
    lp_.row_lo[bal_row_[i]] = in.delta[i];
    lp_.row_hi[bal_row_[i]] = in.delta[i];
    lp_.lb[rv_[i]] = sp.mu_d * sp.u_min - sum_f_[i] - in.delta[i];
    lp_.ub[rv_[i]] = sp.u_max / sp.mu_c + sum_f_[i] - in.delta[i];

    double up_lo = 0.0, up_hi = sp.u_max, um_lo = sp.u_min, um_hi = 0.0;
    double net_lo = sp.u_min, net_hi = sp.u_max;
    switch (policy) {
      case Policy::omg:
      case Policy::omg_clean: {
        kappa[i] = sp.lambda / params_[i].w * (in.s[i] + params_[i].gamma);
        TieBreak mode = check_thresholds(params_[i], sp, sg_[i], in.s[i]);
        sol.modes[i] = mode;
        if (mode == TieBreak::force_min) {
          up_hi = 0.0;
          um_hi = sp.u_min;
        } else if (mode == TieBreak::force_max) {
          up_lo = sp.u_max;
          um_lo = 0.0;
        }
        break;
      }
      case Policy::greedy: {
        net_lo = std::max(sp.u_min, sp.s_min - sp.lambda * in.s[i]);
        net_hi = std::min(sp.u_max, sp.s_max - sp.lambda * in.s[i]);
        if (net_lo > net_hi + 1e-9)
          fail(errc::contract, "level at bus " + std::to_string(i) +
                                   " leaves no feasible charge");
        net_hi = std::max(net_hi, net_lo);
        up_hi = std::max(0.0, net_hi);
        um_lo = std::min(0.0, net_lo);
        break;
      }
      case Policy::no_storage:
        up_hi = 0.0;
        um_lo = 0.0;
        net_lo = 0.0;
        net_hi = 0.0;
        break;
    }
    lp_.lb[up_[i]] = up_lo;
    lp_.ub[up_[i]] = up_hi;
    lp_.lb[um_[i]] = um_lo;
    lp_.ub[um_[i]] = um_hi;
    lp_.row_lo[net_row_[i]] = net_lo;
    lp_.row_hi[net_row_[i]] = net_hi;
    lp_.cost[up_[i]] = kappa[i] + eps;
    lp_.cost[um_[i]] = kappa[i] - eps;
  }

  LpResult res = solve_with_commitments(&sol.lp_solves);

  sol.u.resize(n);
  sol.r.resize(n);
  sol.f.resize(m);
  for (int e = 0; e < m; ++e) sol.f[e] = res.x[fv_[e]];
  for (int i = 0; i < n; ++i) {
    const StorageParams& sp = buses_[i].storage;
    sol.u[i] = res.x[up_[i]] + res.x[um_[i]];
    double h = sol.u[i] >= 0.0 ? sol.u[i] / sp.mu_c : sp.mu_d * sol.u[i];
    sol.r[i] = h - in.delta[i];
    for (size_t k = 0; k < inc_.edge[i].size(); ++k)
      sol.r[i] += inc_.sign[i][k] * sol.f[inc_.edge[i][k]];
    sol.stage_cost += eval_cost(buses_[i].cost, sol.r[i], in.price[i]);
  }
  if (tree_) {
    sol.theta = angles_from_flows_forest(grid_, sol.f);
  } else {
    sol.theta.resize(n);
    for (int i = 0; i < n; ++i) sol.theta[i] = res.x[th_[i]];
  }
  sol.objective = sol.stage_cost;
  if (online)
    for (int i = 0; i < n; ++i) sol.objective += kappa[i] * sol.u[i];
  return sol;
}

StepSolution StepSolver::omg_step(const StepInput& in) { return run(in, Policy::omg); }
StepSolution StepSolver::omg_step_clean(const StepInput& in) {
  return run(in, Policy::omg_clean);
}
StepSolution StepSolver::greedy_step(const StepInput& in) { return run(in, Policy::greedy); }
StepSolution StepSolver::no_storage_step(const StepInput& in) {
  return run(in, Policy::no_storage);
}

}  // namespace omgrid
