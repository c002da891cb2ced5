// Shared test fixtures: the reference bus and the experiment star network,
// plus generators for random grids, bus specs, and step inputs.
#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "omgrid/devices.hpp"
#include "omgrid/errors.hpp"
#include "omgrid/grid.hpp"
#include "omgrid/params.hpp"
#include "omgrid/rng.hpp"
#include "omgrid/step.hpp"

namespace omgrid::testing {

// error category thrown by fn, or empty when it returns normally
template <class Fn>
std::optional<errc> thrown_code(Fn&& fn) {
  try {
    std::forward<Fn>(fn)();
  } catch (const error& e) {
    return e.code();
  }
  return std::nullopt;
}

// reference storage: s in [0, 10], u in [-1, 1]
inline StorageParams storage_fixture(double lambda = 1.0, double mu = 1.0) {
  StorageParams sp;
  sp.lambda = lambda;
  sp.s_min = 0.0;
  sp.s_max = 10.0;
  sp.u_min = -1.0;
  sp.u_max = 1.0;
  sp.mu_c = mu;
  sp.mu_d = mu;
  return sp;
}

inline BusSpec bus_fixture(double lambda = 1.0, double mu = 1.0) {
  BusSpec b;
  b.storage = storage_fixture(lambda, mu);
  b.cost = CostModel::negative_part();
  b.support = {-5.0, 5.0};
  b.s_init = 0.0;
  return b;
}

// hub-and-spoke network: edges i -> 0 for i = 1..n-1
inline Grid star(int n, double b = 1.0, double fmax = 0.149) {
  Grid g;
  g.n = n;
  for (int i = 1; i < n; ++i) {
    g.edges.push_back({i, 0});
    g.susceptance.push_back(b);
    g.flow_limit.push_back(fmax);
  }
  return g;
}

inline std::vector<BusSpec> star_buses(int n, double lambda, double mu = 1.0) {
  return std::vector<BusSpec>(static_cast<size_t>(n), bus_fixture(lambda, mu));
}

// random tree on n nodes (node i > 0 attaches to a lower-numbered node),
// optionally closed into one cycle by an extra edge
inline Grid random_grid(Rng& rng, int n, bool add_cycle) {
  Grid g;
  g.n = n;
  auto add_edge = [&](int a, int b) {
    if (rng.uniform01() < 0.5) std::swap(a, b);
    g.edges.push_back({a, b});
    g.susceptance.push_back(rng.uniform(0.5, 2.0));
    g.flow_limit.push_back(rng.uniform(0.3, 1.5));
  };
  for (int i = 1; i < n; ++i) add_edge(static_cast<int>(rng.uniform_int(0, i - 1)), i);
  if (add_cycle && n >= 3) {
    int a = static_cast<int>(rng.uniform_int(0, n - 1));
    int b = static_cast<int>(rng.uniform_int(0, n - 2));
    if (b >= a) ++b;
    add_edge(a, b);
  }
  return g;
}

// random valid bus: ideal conversion, negative-part cost, constant price
inline std::vector<BusSpec> random_buses(Rng& rng, int n) {
  static const double lambdas[3] = {1.0, 0.999, 0.9};
  std::vector<BusSpec> buses;
  for (int i = 0; i < n; ++i) {
    BusSpec b = bus_fixture();
    StorageParams& sp = b.storage;
    sp.lambda = lambdas[rng.uniform_int(0, 2)];
    sp.s_max = rng.uniform(5.0, 15.0);
    sp.u_max = rng.uniform(0.6, 1.5);
    sp.u_min = -rng.uniform(0.6, 1.5);
    // keep controllability to the top: u_max >= (1 - lambda) * s_max
    if (sp.u_max < (1.0 - sp.lambda) * sp.s_max + 0.05)
      sp.u_max = (1.0 - sp.lambda) * sp.s_max + 0.05;
    buses.push_back(b);
  }
  return buses;
}

inline StepInput random_step_input(Rng& rng, const std::vector<BusSpec>& buses,
                                   double delta_range = 2.0) {
  StepInput in;
  for (const BusSpec& b : buses) {
    in.s.push_back(rng.uniform(b.storage.s_min, b.storage.s_max));
    in.delta.push_back(rng.uniform(-delta_range, delta_range));
    in.price.push_back(b.price.at(0));
  }
  return in;
}

inline std::vector<AlgorithmParams> max_w_params(const std::vector<BusSpec>& buses) {
  std::vector<AlgorithmParams> out;
  for (const BusSpec& b : buses)
    out.push_back(select_max_w(b.storage, subgradient_bounds(b.cost, b.storage)));
  return out;
}

}  // namespace omgrid::testing
