#include "omgrid/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "omgrid/rng.hpp"

namespace omgrid {

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::omg: return "omg";
    case Policy::greedy: return "greedy";
    case Policy::no_storage: return "no_storage";
    case Policy::offline: return "offline";
  }
  return "?";
}

Policy policy_from_name(const std::string& name) {
  if (name == "omg") return Policy::omg;
  if (name == "greedy") return Policy::greedy;
  if (name == "no_storage") return Policy::no_storage;
  if (name == "offline") return Policy::offline;
  fail(errc::parse, "unknown policy '" + name + "'");
}

void validate_scenario(const Scenario& sc, const std::vector<BusSpec>& buses) {
  if (sc.T < 1) fail(errc::schema, "scenario needs at least one period");
  if (sc.n != static_cast<int>(buses.size()))
    fail(errc::schema, "scenario covers " + std::to_string(sc.n) + " buses, the network has " +
                           std::to_string(buses.size()));
  const size_t want = static_cast<size_t>(sc.T) * sc.n;
  if (sc.delta.size() != want || sc.price.size() != want)
    fail(errc::schema, "scenario matrices do not match T x n");
  for (int t = 0; t < sc.T; ++t)
    for (int i = 0; i < sc.n; ++i) {
      const double p = sc.price[static_cast<size_t>(t) * sc.n + i];
      if (!(p >= buses[i].cost.p_min && p <= buses[i].cost.p_max))
        fail(errc::schema, "price at period " + std::to_string(t) + ", bus " + std::to_string(i) +
                               " is outside the bus's support");
    }
}

Scenario sample_laplace_scenario(const std::vector<BusSpec>& buses, int T, double sigma,
                                 std::uint64_t seed) {
  if (T < 1) fail(errc::parameter, "horizon must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    fail(errc::parameter, "disturbance deviation must be positive");
  Scenario sc;
  sc.T = T;
  sc.n = static_cast<int>(buses.size());
  sc.seed = seed;
  sc.delta.resize(static_cast<size_t>(T) * sc.n);
  sc.price.resize(static_cast<size_t>(T) * sc.n);
  for (int i = 0; i < sc.n; ++i) {
    Rng rng = Rng::stream(seed, "delta", static_cast<std::uint64_t>(i));
    for (int t = 0; t < T; ++t) {
      sc.delta[static_cast<size_t>(t) * sc.n + i] = rng.laplace_with_std(sigma);
      sc.price[static_cast<size_t>(t) * sc.n + i] = buses[i].price.at(t);
    }
  }
  return sc;
}

double apply_dynamics(const StorageParams& sp, double s, double u, double* violation) {
  const double over_u = std::max({sp.u_min - u, u - sp.u_max, 0.0});
  const double uc = std::clamp(u, sp.u_min, sp.u_max);
  const double next = step_storage(sp, s, uc);
  const double over_s = std::max({sp.s_min - next, next - sp.s_max, 0.0});
  const double v = std::max(over_u, over_s);
  if (violation != nullptr) *violation = v;
  if (v > 1e-9)
    fail(errc::feasibility_breach,
         "level or control left its box by " + std::to_string(v) + "; the policy's feasibility "
         "guarantee is broken");
  return std::clamp(next, sp.s_min, sp.s_max);
}

RunResult simulate(const Grid& g, const std::vector<BusSpec>& buses,
                   const std::vector<AlgorithmParams>& params, const Scenario& sc, Policy policy,
                   const SimOptions& opt) {
  if (policy == Policy::offline)
    fail(errc::parameter, "the hindsight optimum has its own entry point");
  validate_scenario(sc, buses);
  StepSolver solver(g, buses, params);
  const int n = sc.n;

  RunResult out;
  out.policy = policy;
  out.T = sc.T;

  StepInput in;
  in.s.resize(n);
  in.delta.resize(n);
  in.price.resize(n);
  for (int i = 0; i < n; ++i) in.s[i] = buses[i].s_init;

  for (int t = 0; t < sc.T; ++t) {
    for (int i = 0; i < n; ++i) {
      in.delta[i] = sc.delta[static_cast<size_t>(t) * n + i];
      in.price[i] = sc.price[static_cast<size_t>(t) * n + i];
    }
    StepSolution sol;
    switch (policy) {
      case Policy::omg: sol = solver.omg_step(in); break;
      case Policy::greedy: sol = solver.greedy_step(in); break;
      default: sol = solver.no_storage_step(in); break;
    }
    out.total_cost += sol.stage_cost;
    for (int e = 0; e < g.m(); ++e)
      out.max_flow_violation =
          std::max(out.max_flow_violation, std::abs(sol.f[e]) - g.flow_limit[e]);
    if (opt.keep_steps) out.steps.push_back({in.s, sol});
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      in.s[i] = apply_dynamics(buses[i].storage, in.s[i], sol.u[i], &v);
      out.max_level_violation = std::max(out.max_level_violation, v);
    }
  }
  out.max_flow_violation = std::max(out.max_flow_violation, 0.0);
  out.avg_cost = out.total_cost / sc.T;
  out.final_s = in.s;
  return out;
}

RunResult offline_clairvoyant(const Grid& g, const std::vector<BusSpec>& buses, const Scenario& sc,
                              const SimOptions& opt) {
  validate_scenario(sc, buses);
  const long cells = static_cast<long>(sc.T) * sc.n;
  if (cells > 20000)
    fail(errc::size_guard, "hindsight solve covers " + std::to_string(cells) +
                               " bus-periods; the dense-solve limit is 20000");
  std::vector<double> s0(sc.n);
  for (int i = 0; i < sc.n; ++i) s0[i] = buses[i].s_init;
  HorizonSolve h = solve_horizon(g, buses, s0, sc.delta, sc.price, sc.T);

  RunResult out;
  out.policy = Policy::offline;
  out.T = sc.T;
  out.total_cost = h.total_cost;
  out.avg_cost = h.total_cost / sc.T;
  out.final_s.assign(h.s.end() - sc.n, h.s.end());
  if (opt.keep_steps) {
    std::vector<double> level = s0;
    const int n = sc.n, m = g.m();
    for (int t = 0; t < sc.T; ++t) {
      StepRecord rec;
      rec.s = level;
      rec.sol.u.assign(h.u.begin() + static_cast<size_t>(t) * n,
                       h.u.begin() + static_cast<size_t>(t + 1) * n);
      rec.sol.r.assign(h.r.begin() + static_cast<size_t>(t) * n,
                       h.r.begin() + static_cast<size_t>(t + 1) * n);
      rec.sol.theta.assign(h.theta.begin() + static_cast<size_t>(t) * n,
                           h.theta.begin() + static_cast<size_t>(t + 1) * n);
      rec.sol.f.assign(h.f.begin() + static_cast<size_t>(t) * m,
                       h.f.begin() + static_cast<size_t>(t + 1) * m);
      rec.sol.lp_solves = 0;
      for (int i = 0; i < n; ++i) {
        rec.sol.stage_cost += eval_cost(buses[i].cost, rec.sol.r[i],
                                        sc.price[static_cast<size_t>(t) * n + i]);
        level[i] = h.s[static_cast<size_t>(t) * n + i];
      }
      rec.sol.objective = rec.sol.stage_cost;
      out.steps.push_back(std::move(rec));
    }
  }
  return out;
}

std::vector<PolicySummary> metrics(const std::vector<RunResult>& results,
                                   const std::vector<AlgorithmParams>& params) {
  const RunResult* reference = nullptr;
  const RunResult* online = nullptr;
  const RunResult* offline = nullptr;
  for (const RunResult& r : results) {
    if (r.policy == Policy::no_storage) reference = &r;
    if (r.policy == Policy::omg) online = &r;
    if (r.policy == Policy::offline) offline = &r;
  }
  if (reference == nullptr) fail(errc::contract, "metrics need the no-storage reference run");
  for (const RunResult& r : results)
    if (r.T != reference->T) fail(errc::contract, "metrics need runs over one scenario");

  double bound = 0.0;
  for (const AlgorithmParams& p : params) bound += p.bound;

  double lower = -std::numeric_limits<double>::infinity();
  if (online != nullptr) lower = online->avg_cost - bound;
  if (offline != nullptr) lower = std::max(lower, offline->avg_cost);

  std::vector<PolicySummary> rows;
  for (const RunResult& r : results) {
    PolicySummary row;
    row.policy = policy_name(r.policy);
    row.total_cost = r.total_cost;
    row.avg_cost = r.avg_cost;
    row.savings_pct = std::abs(reference->total_cost) > 1e-300
                          ? (reference->total_cost - r.total_cost) / reference->total_cost * 100.0
                          : 0.0;
    row.bound = bound;
    row.lower_bound = lower;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace omgrid
