#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "omgrid/csv.hpp"
#include "omgrid/rng.hpp"
#include "omgrid/sim.hpp"
#include "oracles.hpp"

using namespace omgrid;
using omgrid::testing::bus_fixture;
using omgrid::testing::max_w_params;
using omgrid::testing::star;
using omgrid::testing::star_buses;
using omgrid::testing::thrown_code;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("omgrid_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

std::vector<BusSpec> day_night_buses(int n) {
  std::vector<BusSpec> buses = star_buses(n, 0.999);
  for (BusSpec& b : buses) {
    b.price.kind = PriceSchedule::Kind::day_night;
    b.cost.p_max = 3.0;
  }
  return buses;
}

}  // namespace

TEST_CASE("scenario sampling is reproducible and prefix-stable") {
  std::vector<BusSpec> buses = day_night_buses(3);
  Scenario a = sample_laplace_scenario(buses, 50, 0.149, 11);
  Scenario b = sample_laplace_scenario(buses, 50, 0.149, 11);
  CHECK(a.delta == b.delta);
  CHECK(a.price == b.price);

  Scenario longer = sample_laplace_scenario(buses, 100, 0.149, 11);
  for (int t = 0; t < 50; ++t)
    for (int i = 0; i < 3; ++i)
      CHECK(a.delta[static_cast<size_t>(t) * 3 + i] ==
            longer.delta[static_cast<size_t>(t) * 3 + i]);

  for (int t = 0; t < 50; ++t) {
    double want = t % 24 >= 7 && t % 24 <= 18 ? 3.0 : 1.0;
    for (int i = 0; i < 3; ++i) CHECK(a.price[static_cast<size_t>(t) * 3 + i] == want);
  }

  Scenario other = sample_laplace_scenario(buses, 50, 0.149, 12);
  CHECK(a.delta != other.delta);
}

TEST_CASE("sampled disturbances have the requested spread") {
  std::vector<BusSpec> buses = star_buses(1, 0.999);
  int T = 100000;
  Scenario sc = sample_laplace_scenario(buses, T, 0.149, 3);
  double mean = 0.0;
  for (double d : sc.delta) mean += d;
  mean /= T;
  double var = 0.0;
  for (double d : sc.delta) var += (d - mean) * (d - mean);
  double sd = std::sqrt(var / (T - 1));
  CHECK(std::fabs(sd - 0.149) <= 0.01 * 0.149);
  CHECK(std::fabs(mean) <= 3.0 * 0.149 / std::sqrt(static_cast<double>(T)));
}

TEST_CASE("scenarios are validated against the bus list") {
  std::vector<BusSpec> buses = star_buses(2, 0.999);
  Scenario sc = sample_laplace_scenario(buses, 10, 0.1, 1);
  validate_scenario(sc, buses);

  Scenario bad = sc;
  bad.delta.pop_back();
  CHECK(thrown_code([&] { validate_scenario(bad, buses); }) == errc::schema);

  Scenario wrong_n = sc;
  wrong_n.n = 3;
  CHECK(thrown_code([&] { validate_scenario(wrong_n, buses); }) == errc::schema);

  Scenario hot = sc;
  hot.price[0] = 9.0;  // outside the support
  CHECK(thrown_code([&] { validate_scenario(hot, buses); }) == errc::schema);
}

TEST_CASE("a quiet scenario costs nothing under every policy") {
  Grid g = star(3);
  std::vector<BusSpec> buses = star_buses(3, 0.999);
  for (BusSpec& b : buses) b.s_init = 2.0;
  std::vector<AlgorithmParams> params = max_w_params(buses);
  Scenario sc;
  sc.T = 20;
  sc.n = 3;
  sc.delta.assign(60, 0.0);
  sc.price.assign(60, 1.0);

  for (Policy p : {Policy::no_storage, Policy::greedy, Policy::omg}) {
    RunResult run = simulate(g, buses, params, sc, p);
    CHECK(run.total_cost == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(run.max_level_violation <= 1e-9);
  }
  RunResult off = offline_clairvoyant(g, buses, sc);
  CHECK(off.total_cost == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("storage absorbs an alternating surplus that the bare grid curtails") {
  Grid g = star(1);
  std::vector<BusSpec> buses = {bus_fixture(1.0, 1.0)};
  buses[0].s_init = 5.0;
  std::vector<AlgorithmParams> params = max_w_params(buses);
  Scenario sc;
  sc.T = 2;
  sc.n = 1;
  sc.delta = {1.0, -1.0};  // surplus then deficit
  sc.price = {1.0, 1.0};

  RunResult bare = simulate(g, buses, params, sc, Policy::no_storage);
  CHECK(bare.total_cost == doctest::Approx(1.0));

  RunResult omg = simulate(g, buses, params, sc, Policy::omg);
  RunResult greedy = simulate(g, buses, params, sc, Policy::greedy);
  RunResult off = offline_clairvoyant(g, buses, sc);
  CHECK(omg.total_cost == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(greedy.total_cost == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(off.total_cost <= 1e-7);
}

TEST_CASE("seeded star runs respect the policy-relative bound") {
  Grid g = star(5);
  std::vector<BusSpec> buses = star_buses(5, 0.999, 0.995);
  std::vector<AlgorithmParams> params = max_w_params(buses);
  double bound_sum = 0.0;
  for (const AlgorithmParams& p : params) bound_sum += p.bound;

  for (std::uint64_t seed : {101, 202}) {
    Scenario sc = sample_laplace_scenario(buses, 1000, 0.149, seed);
    RunResult omg = simulate(g, buses, params, sc, Policy::omg);
    RunResult greedy = simulate(g, buses, params, sc, Policy::greedy);
    CHECK(omg.total_cost <= greedy.total_cost + sc.T * bound_sum + 1e-7);
    CHECK(omg.max_level_violation <= 1e-9);
    CHECK(greedy.max_level_violation <= 1e-9);
  }
}

TEST_CASE("the clairvoyant reference is never beaten on a sample path") {
  Grid g = star(3);
  std::vector<BusSpec> buses = star_buses(3, 0.999);
  std::vector<AlgorithmParams> params = max_w_params(buses);
  for (std::uint64_t seed : {5, 6}) {
    Scenario sc = sample_laplace_scenario(buses, 60, 0.149, seed);
    RunResult off = offline_clairvoyant(g, buses, sc);
    RunResult omg = simulate(g, buses, params, sc, Policy::omg);
    RunResult greedy = simulate(g, buses, params, sc, Policy::greedy);
    CHECK(off.total_cost <= omg.total_cost + 1e-7);
    CHECK(off.total_cost <= greedy.total_cost + 1e-7);
  }
}

TEST_CASE("kept steps replay the exact storage dynamics") {
  Grid g = star(3);
  std::vector<BusSpec> buses = star_buses(3, 0.999);
  std::vector<AlgorithmParams> params = max_w_params(buses);
  Scenario sc = sample_laplace_scenario(buses, 40, 0.149, 9);
  SimOptions opt;
  opt.keep_steps = true;
  RunResult run = simulate(g, buses, params, sc, Policy::omg, opt);
  REQUIRE(run.steps.size() == 40);

  std::vector<double> s(3);
  for (int i = 0; i < 3; ++i) s[i] = buses[i].s_init;
  for (int t = 0; t < 40; ++t) {
    const StepRecord& rec = run.steps[t];
    for (int i = 0; i < 3; ++i) {
      CHECK(rec.s[i] == s[i]);
      double violation = 0.0;
      s[i] = apply_dynamics(buses[i].storage, s[i], rec.sol.u[i], &violation);

      double bal = rec.sol.u[i] - sc.delta[static_cast<size_t>(t) * 3 + i] - rec.sol.r[i];
      for (size_t j = 0; j < g.edges.size(); ++j) {
        double a = g.edges[j].head == i ? 1.0 : (g.edges[j].tail == i ? -1.0 : 0.0);
        bal += a * rec.sol.f[j];
      }
      CHECK(std::fabs(bal) <= 1e-8);
    }
    for (int e = 0; e < g.m(); ++e) {
      double dth = rec.sol.theta[g.edges[e].head] - rec.sol.theta[g.edges[e].tail];
      CHECK(std::fabs(rec.sol.f[e] - g.susceptance[e] * dth) <= 1e-8);
    }
  }
  for (int i = 0; i < 3; ++i) CHECK(run.final_s[i] == s[i]);
}

TEST_CASE("simulation totals are bitwise reproducible") {
  Grid g = star(3);
  std::vector<BusSpec> buses = star_buses(3, 0.999);
  std::vector<AlgorithmParams> params = max_w_params(buses);
  Scenario sc = sample_laplace_scenario(buses, 100, 0.149, 17);
  RunResult a = simulate(g, buses, params, sc, Policy::omg);
  RunResult b = simulate(g, buses, params, sc, Policy::omg);
  CHECK(a.total_cost == b.total_cost);
  CHECK(a.final_s == b.final_s);
}

TEST_CASE("the dynamics guard clamps dust and rejects real violations") {
  StorageParams sp = omgrid::testing::storage_fixture();
  double violation = 0.0;
  CHECK(thrown_code([&] { apply_dynamics(sp, 10.0, 0.5, &violation); }) ==
        errc::feasibility_breach);

  double v2 = 0.0;
  double s = apply_dynamics(sp, 10.0, 1e-12, &v2);
  CHECK(s == 10.0);
  CHECK(v2 >= 1e-12);
  CHECK(v2 <= 1e-9);
}

TEST_CASE("metrics report savings against the storage-free reference") {
  std::vector<AlgorithmParams> params = {{-1.0, 8.0, 0.02}, {-1.0, 8.0, 0.03}};

  RunResult ref;
  ref.policy = Policy::no_storage;
  ref.T = 10;
  ref.total_cost = 100.0;
  ref.avg_cost = 10.0;
  RunResult omg;
  omg.policy = Policy::omg;
  omg.T = 10;
  omg.total_cost = 90.0;
  omg.avg_cost = 9.0;
  RunResult off;
  off.policy = Policy::offline;
  off.T = 10;
  off.total_cost = 85.0;
  off.avg_cost = 8.5;

  std::vector<PolicySummary> rows = metrics({ref, omg, off}, params);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].policy == std::string("omg"));
  CHECK(rows[1].savings_pct == doctest::Approx(10.0));
  CHECK(rows[1].bound == doctest::Approx(0.05));
  CHECK(rows[1].lower_bound == doctest::Approx(std::max(8.5, 9.0 - 0.05)));

  // without the hindsight run the bound term carries the estimate
  rows = metrics({ref, omg}, params);
  CHECK(rows[1].lower_bound == doctest::Approx(9.0 - 0.05));

  // a zero bound collapses the estimate onto the online average
  std::vector<AlgorithmParams> tight = {{-1.0, 8.0, 0.0}, {-1.0, 8.0, 0.0}};
  rows = metrics({ref, omg}, tight);
  CHECK(rows[1].lower_bound == doctest::Approx(9.0));

  CHECK(thrown_code([&] { metrics({omg}, params); }) == errc::contract);
}

TEST_CASE("the hindsight solver refuses oversized instances") {
  Grid g = star(3);
  std::vector<BusSpec> buses = star_buses(3, 0.999);
  Scenario sc;
  sc.T = 7000;
  sc.n = 3;
  sc.delta.assign(21000, 0.0);
  sc.price.assign(21000, 1.0);
  CHECK(thrown_code([&] { offline_clairvoyant(g, buses, sc); }) == errc::size_guard);
}

TEST_CASE("scenario files round-trip exactly") {
  std::vector<BusSpec> buses = day_night_buses(2);
  Scenario sc = sample_laplace_scenario(buses, 25, 0.149, 21);

  TempFile f("scenario.csv");
  write_scenario_csv(f.path, sc);
  Scenario back = load_csv_scenario(f.path, buses);
  CHECK(back.T == sc.T);
  CHECK(back.n == sc.n);
  CHECK(back.delta == sc.delta);
  CHECK(back.price == sc.price);
}

TEST_CASE("a scenario file without prices takes them from the schedule") {
  std::vector<BusSpec> buses = day_night_buses(1);
  TempFile f("schedule.csv");
  {
    std::ofstream out(f.path);
    out << "t,bus,delta\n";
    for (int t = 0; t < 30; ++t) out << t << ",0," << 0.01 * t << "\n";
  }
  Scenario sc = load_csv_scenario(f.path, buses);
  REQUIRE(sc.T == 30);
  for (int t = 0; t < 30; ++t) {
    CHECK(sc.delta[t] == doctest::Approx(0.01 * t));
    CHECK(sc.price[t] == buses[0].price.at(t));
  }
}

TEST_CASE("scenario ingestion reports broken files precisely") {
  std::vector<BusSpec> buses = star_buses(2, 0.999);

  TempFile bad("bad_number.csv");
  {
    std::ofstream out(bad.path);
    out << "t,bus,delta\n0,0,0.1\n0,1,oops\n1,0,0.2\n1,1,0.3\n";
  }
  try {
    load_csv_scenario(bad.path, buses);
    FAIL("expected a parse error");
  } catch (const error& e) {
    CHECK(e.code() == errc::parse);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);  // file line
  }

  TempFile dup("dup_cell.csv");
  {
    std::ofstream out(dup.path);
    out << "t,bus,delta\n0,0,0.1\n0,1,0.2\n0,0,0.3\n1,0,0.1\n1,1,0.1\n";
  }
  CHECK(thrown_code([&] { load_csv_scenario(dup.path, buses); }) == errc::schema);

  TempFile hole("missing_cell.csv");
  {
    std::ofstream out(hole.path);
    out << "t,bus,delta\n0,0,0.1\n0,1,0.2\n1,0,0.3\n";
  }
  CHECK(thrown_code([&] { load_csv_scenario(hole.path, buses); }) == errc::schema);
}

TEST_CASE("result tables round-trip through their writers and readers") {
  Grid g = star(2);
  std::vector<BusSpec> buses = star_buses(2, 0.999);
  std::vector<AlgorithmParams> params = max_w_params(buses);
  Scenario sc = sample_laplace_scenario(buses, 12, 0.149, 33);
  SimOptions opt;
  opt.keep_steps = true;
  RunResult run = simulate(g, buses, params, sc, Policy::omg, opt);

  TempFile traj("trajectory.csv");
  write_trajectory_csv(traj.path, run);
  std::vector<TrajectoryRow> rows = read_trajectory_csv(traj.path);
  REQUIRE(rows.size() == static_cast<size_t>(12 * 2));
  for (int t = 0; t < 12; ++t) {
    for (int i = 0; i < 2; ++i) {
      const TrajectoryRow& row = rows[static_cast<size_t>(t) * 2 + i];
      CHECK(row.t == t);
      CHECK(row.bus == i);
      CHECK(row.s == run.steps[t].s[i]);
      CHECK(row.u == run.steps[t].sol.u[i]);
      CHECK(row.r == run.steps[t].sol.r[i]);
      CHECK(row.theta == run.steps[t].sol.theta[i]);
    }
  }

  TempFile edges("edges.csv");
  write_edges_csv(edges.path, g, run);
  std::vector<EdgeFlowRow> efr = read_edges_csv(edges.path);
  REQUIRE(efr.size() == static_cast<size_t>(12 * 1));
  for (int t = 0; t < 12; ++t) CHECK(efr[t].f == run.steps[t].sol.f[0]);

  RunResult bare = simulate(g, buses, params, sc, Policy::no_storage);
  std::vector<PolicySummary> summary = metrics({bare, run}, params);
  TempFile sum("summary.csv");
  write_summary_csv(sum.path, summary);
  std::vector<PolicySummary> back = read_summary_csv(sum.path);
  REQUIRE(back.size() == summary.size());
  for (size_t k = 0; k < summary.size(); ++k) {
    CHECK(back[k].policy == summary[k].policy);
    CHECK(back[k].total_cost == summary[k].total_cost);
    CHECK(back[k].savings_pct == summary[k].savings_pct);
    CHECK(back[k].lower_bound == summary[k].lower_bound);
  }

  TempFile par("params.csv");
  write_params_csv(par.path, params);
  std::ifstream in(par.path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "bus,gamma,w,bound");
  int lines = 0;
  for (std::string line; std::getline(in, line) && !line.empty();) ++lines;
  CHECK(lines == 2);
}
