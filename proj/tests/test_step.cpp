#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "omgrid/grid.hpp"
#include "omgrid/params.hpp"
#include "omgrid/rng.hpp"
#include "omgrid/step.hpp"

using namespace omgrid;
using omgrid::testing::bus_fixture;
using omgrid::testing::max_w_params;
using omgrid::testing::random_buses;
using omgrid::testing::random_step_input;
using omgrid::testing::star;
using omgrid::testing::star_buses;
using omgrid::testing::thrown_code;

namespace {

StepSolver one_bus_solver(double lambda = 1.0) {
  Grid g = star(1);
  std::vector<BusSpec> buses = {bus_fixture(lambda, 1.0)};
  return StepSolver(g, buses, max_w_params(buses));
}

StepInput one_bus_input(double s, double delta = 0.0, double price = 1.0) {
  StepInput in;
  in.s = {s};
  in.delta = {delta};
  in.price = {price};
  return in;
}

}  // namespace

TEST_CASE("a full storage is forced to discharge") {
  StepSolver solver = one_bus_solver();
  StepSolution sol = solver.omg_step(one_bus_input(10.0));
  CHECK(sol.modes[0] == TieBreak::force_min);
  CHECK(sol.u[0] == -1.0);
  CHECK(sol.r[0] == doctest::Approx(-1.0));
  CHECK(sol.stage_cost == doctest::Approx(1.0));
  CHECK(sol.objective == doctest::Approx(-0.125));
}

TEST_CASE("an empty storage is forced to charge") {
  StepSolver solver = one_bus_solver();
  StepSolution sol = solver.omg_step(one_bus_input(0.0));
  CHECK(sol.modes[0] == TieBreak::force_max);
  CHECK(sol.u[0] == 1.0);
  CHECK(sol.r[0] == doctest::Approx(1.0));
  CHECK(sol.stage_cost == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sol.objective == doctest::Approx(-0.125));
}

TEST_CASE("a mid-range storage rests") {
  StepSolver solver = one_bus_solver();
  StepSolution sol = solver.omg_step(one_bus_input(5.0));
  CHECK(sol.modes[0] == TieBreak::least_action);
  CHECK(sol.u[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("the exact threshold pins the extreme control") {
  // at s = 9 every u <= 0 is optimal; feasibility needs the extreme choice
  StepSolver solver = one_bus_solver();
  StepSolution sol = solver.omg_step(one_bus_input(9.0));
  CHECK(sol.modes[0] == TieBreak::force_min);
  CHECK(sol.u[0] == -1.0);
}

TEST_CASE("when both thresholds fire the discharge case wins") {
  CostModel flat;
  flat.pieces = {{-std::numeric_limits<double>::infinity(), 0.0, false}};
  BusSpec bus = bus_fixture(1.0, 1.0);
  bus.cost = flat;
  AlgorithmParams p{-5.0, 1.0, 0.0};
  p.bound = suboptimality_M(bus.storage, p.gamma) / p.w;

  CHECK(check_thresholds(p, bus.storage, subgradient_bounds(flat), 5.0) == TieBreak::force_min);

  StepSolver solver(star(1), {bus}, {p});
  StepSolution sol = solver.omg_step(one_bus_input(5.0));
  CHECK(sol.modes[0] == TieBreak::force_min);
  CHECK(sol.u[0] == -1.0);
}

TEST_CASE("a vanishing weight makes the pressure term dominate") {
  BusSpec bus = bus_fixture(1.0, 1.0);
  AlgorithmParams p{-4.0, 1e-6, 0.0};
  p.bound = suboptimality_M(bus.storage, p.gamma) / p.w;
  StepSolver solver(star(1), {bus}, {p});
  StepSolution sol = solver.omg_step(one_bus_input(6.0));
  CHECK(sol.u[0] == -1.0);
}

TEST_CASE("the myopic step spends storage to absorb a penalized surplus") {
  StepSolver solver = one_bus_solver();
  // empty storage, surplus 0.5: charging exactly 0.5 zeroes the curtailment
  StepSolution sol = solver.greedy_step(one_bus_input(0.0, 0.5));
  CHECK(sol.u[0] == doctest::Approx(0.5));
  CHECK(sol.r[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(sol.stage_cost == doctest::Approx(0.0).epsilon(1e-9));

  // full storage cannot charge: the surplus is curtailed at the unit price
  sol = solver.greedy_step(one_bus_input(10.0, 0.5));
  CHECK(sol.u[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(sol.r[0] == doctest::Approx(-0.5));
  CHECK(sol.stage_cost == doctest::Approx(0.5));

  // no disturbance, interior level: least action keeps everything at zero
  sol = solver.greedy_step(one_bus_input(5.0, 0.0));
  CHECK(sol.u[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(sol.stage_cost == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("the storage-free reference absorbs the whole disturbance") {
  StepSolver solver = one_bus_solver();
  StepSolution sol = solver.no_storage_step(one_bus_input(5.0, 0.7));
  CHECK(sol.u[0] == 0.0);
  CHECK(sol.r[0] == doctest::Approx(-0.7));
  CHECK(sol.stage_cost == doctest::Approx(0.7));
  sol = solver.no_storage_step(one_bus_input(5.0, -0.7));
  CHECK(sol.r[0] == doctest::Approx(0.7));
  CHECK(sol.stage_cost == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("a capacity-starved line decouples the buses") {
  Grid g;
  g.n = 2;
  g.edges = {{1, 0}};
  g.susceptance = {1.0};
  g.flow_limit = {1e-9};
  std::vector<BusSpec> buses = {bus_fixture(1.0, 1.0), bus_fixture(1.0, 1.0)};
  StepSolver joint(g, buses, max_w_params(buses));
  StepSolver iso = one_bus_solver();

  StepInput in;
  in.s = {10.0, 0.0};
  in.delta = {0.4, -0.6};
  in.price = {1.0, 1.0};
  StepSolution sol = joint.omg_step(in);

  StepSolution a = iso.omg_step(one_bus_input(10.0, 0.4));
  StepSolution b = iso.omg_step(one_bus_input(0.0, -0.6));
  CHECK(std::fabs(sol.u[0] - a.u[0]) <= 1e-6);
  CHECK(std::fabs(sol.u[1] - b.u[0]) <= 1e-6);
  CHECK(std::fabs(sol.objective - (a.objective + b.objective)) <= 1e-6);
  CHECK(std::fabs(sol.f[0]) <= 1e-9 + 1e-12);
}

TEST_CASE("random network steps satisfy every solution identity") {
  Rng rng = Rng::stream(61, "step-random");
  for (int k = 0; k < 50; ++k) {
    int n = rng.uniform_int(2, 5);
    Grid g = star(n, 1.0, rng.uniform(0.2, 1.0));
    std::vector<BusSpec> buses = random_buses(rng, n);
    std::vector<AlgorithmParams> params = max_w_params(buses);
    StepSolver solver(g, buses, params);
    StepInput in = random_step_input(rng, buses);

    StepSolution sol = solver.omg_step(in);
    StepSolution clean = solver.omg_step_clean(in);
    double scale = 1.0 + std::fabs(clean.objective);
    CHECK(std::fabs(sol.objective - clean.objective) <= 1e-5 * scale);

    double stage = 0.0;
    for (int i = 0; i < n; ++i) {
      const StorageParams& sp = buses[i].storage;
      CHECK(sol.u[i] >= sp.u_min - 1e-12);
      CHECK(sol.u[i] <= sp.u_max + 1e-12);
      CHECK(sol.modes[i] == check_thresholds(params[i], sp, solver.bounds(i), in.s[i]));

      double h = sol.u[i] >= 0.0 ? sol.u[i] / sp.mu_c : sp.mu_d * sol.u[i];
      double bal = h - in.delta[i] - sol.r[i];
      for (int e = 0; e < g.m(); ++e) {
        double a = g.edges[e].head == i ? 1.0 : (g.edges[e].tail == i ? -1.0 : 0.0);
        bal += a * sol.f[e];
      }
      CHECK(std::fabs(bal) <= 1e-8);
      stage += eval_cost(buses[i].cost, sol.r[i], in.price[i]);
    }
    CHECK(sol.stage_cost == doctest::Approx(stage).epsilon(1e-12));
    for (int e = 0; e < g.m(); ++e) {
      CHECK(std::fabs(sol.f[e]) <= g.flow_limit[e] + 1e-9);
      double dth = sol.theta[g.edges[e].head] - sol.theta[g.edges[e].tail];
      CHECK(std::fabs(sol.f[e] - g.susceptance[e] * dth) <= 1e-8);
    }
  }
}

TEST_CASE("fired thresholds always pin the control exactly") {
  Rng rng = Rng::stream(62, "step-thresholds");
  for (int k = 0; k < 200; ++k) {
    int n = rng.uniform_int(1, 4);
    Grid g = star(n);
    std::vector<BusSpec> buses = random_buses(rng, n);
    std::vector<AlgorithmParams> params = max_w_params(buses);
    StepSolver solver(g, buses, params);
    StepInput in = random_step_input(rng, buses, 3.0);
    StepSolution sol = solver.omg_step(in);
    for (int i = 0; i < n; ++i) {
      if (sol.modes[i] == TieBreak::force_min) CHECK(sol.u[i] == buses[i].storage.u_min);
      if (sol.modes[i] == TieBreak::force_max) CHECK(sol.u[i] == buses[i].storage.u_max);
    }
  }
}

TEST_CASE("the myopic step never leaves the level box") {
  Rng rng = Rng::stream(63, "step-greedy-box");
  for (int k = 0; k < 100; ++k) {
    int n = rng.uniform_int(1, 4);
    Grid g = star(n);
    std::vector<BusSpec> buses = random_buses(rng, n);
    StepSolver solver(g, buses, max_w_params(buses));
    StepInput in = random_step_input(rng, buses, 3.0);
    StepSolution sol = solver.greedy_step(in);
    for (int i = 0; i < n; ++i) {
      const StorageParams& sp = buses[i].storage;
      double next = sp.lambda * in.s[i] + sol.u[i];
      CHECK(next >= sp.s_min - 1e-12);
      CHECK(next <= sp.s_max + 1e-12);
    }
  }
}

TEST_CASE("construction and inputs are validated") {
  Grid g = star(2);
  std::vector<BusSpec> buses = star_buses(2, 1.0);
  std::vector<AlgorithmParams> params = max_w_params(buses);

  std::vector<BusSpec> one_bus(buses.begin(), buses.begin() + 1);
  CHECK(thrown_code([&] { StepSolver(g, one_bus, params); }) == errc::parameter);
  std::vector<AlgorithmParams> one_param = {params[0]};
  CHECK(thrown_code([&] { StepSolver(g, buses, one_param); }) == errc::parameter);

  StepSolver solver(g, buses, params);
  StepInput bad;
  bad.s = {1.0};
  bad.delta = {0.0, 0.0};
  bad.price = {1.0, 1.0};
  CHECK(thrown_code([&] { solver.omg_step(bad); }) == errc::parameter);

  StepInput in;
  in.s = {5.0, 5.0};
  in.delta = {0.0, 0.0};
  in.price = {1.0, 9.0};  // outside the price support
  CHECK(thrown_code([&] { solver.omg_step(in); }) == errc::contract);

  StepInput stuck;
  stuck.s = {11.5, 5.0};  // even a full discharge cannot reenter the box
  stuck.delta = {0.0, 0.0};
  stuck.price = {1.0, 1.0};
  CHECK(thrown_code([&] { solver.greedy_step(stuck); }) == errc::contract);
}
