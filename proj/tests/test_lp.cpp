#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "omgrid/devices.hpp"
#include "omgrid/lp.hpp"
#include "omgrid/rng.hpp"
#include "oracles.hpp"

using namespace omgrid;
using omgrid::testing::lp_vertex_enumeration;
using omgrid::testing::VertexLp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double row_value(const EpigraphLp& lp, int row, const std::vector<double>& x) {
  double v = 0.0;
  for (int j = 0; j < lp.num_vars(); ++j)
    for (const auto& [r, a] : lp.cols[j])
      if (r == row) v += a * x[j];
  return v;
}

void check_feasible(const EpigraphLp& lp, const std::vector<double>& x, double tol) {
  for (int j = 0; j < lp.num_vars(); ++j) {
    CHECK(x[j] >= lp.lb[j] - tol);
    CHECK(x[j] <= lp.ub[j] + tol);
  }
  for (int i = 0; i < lp.num_rows(); ++i) {
    double v = row_value(lp, i, x);
    if (std::isfinite(lp.row_lo[i])) CHECK(v >= lp.row_lo[i] - tol);
    if (std::isfinite(lp.row_hi[i])) CHECK(v <= lp.row_hi[i] + tol);
  }
}

// bounded LP with an interior-feasible point by construction
EpigraphLp random_lp(Rng& rng) {
  EpigraphLp lp;
  int n = rng.uniform_int(2, 4);
  std::vector<double> x0(n);
  for (int j = 0; j < n; ++j) {
    double lo = rng.uniform(-3.0, -0.5), hi = rng.uniform(0.5, 3.0);
    lp.add_var(lo, hi, rng.uniform(-2.0, 2.0));
    x0[j] = rng.uniform(lo, hi);
  }
  int rows = rng.uniform_int(1, 4);
  for (int i = 0; i < rows; ++i) {
    int row = lp.add_row(-kInf, kInf);
    double v = 0.0;
    for (int j = 0; j < n; ++j) {
      double a = rng.uniform(-2.0, 2.0);
      lp.add_term(row, j, a);
      v += a * x0[j];
    }
    double lo = v - rng.uniform(0.1, 2.0), hi = v + rng.uniform(0.1, 2.0);
    double pick = rng.uniform01();
    lp.row_lo[row] = pick < 0.3 ? -kInf : lo;
    lp.row_hi[row] = pick >= 0.3 && pick < 0.45 ? kInf : hi;
  }
  return lp;
}

}  // namespace

TEST_CASE("a single bounded variable lands on its cheaper bound") {
  EpigraphLp lp;
  lp.add_var(2.0, 5.0, 1.0);
  LpResult res = solve_lp(lp);
  REQUIRE(res.status == LpResult::Status::optimal);
  CHECK(res.objective == doctest::Approx(2.0));
  CHECK(res.x[0] == doctest::Approx(2.0));
}

TEST_CASE("an epigraph of the shortfall cost is minimized at zero") {
  EpigraphLp lp;
  int x = lp.add_var(-3.0, 3.0);
  lp.add_epigraph(x, cost_linearization(CostModel::negative_part(), 1.0));
  LpResult res = solve_lp(lp);
  REQUIRE(res.status == LpResult::Status::optimal);
  CHECK(res.objective == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(res.x[x] >= -1e-9);
}

TEST_CASE("equality rows and fixed variables are respected") {
  EpigraphLp lp;
  int x = lp.add_var(-10.0, 10.0, 1.0);
  int y = lp.add_var(0.5, 0.5, 0.0);  // fixed
  int row = lp.add_row(2.0, 2.0);     // x + y == 2
  lp.add_term(row, x, 1.0);
  lp.add_term(row, y, 1.0);
  LpResult res = solve_lp(lp);
  REQUIRE(res.status == LpResult::Status::optimal);
  CHECK(res.x[y] == doctest::Approx(0.5));
  CHECK(res.x[x] == doctest::Approx(1.5));
  CHECK(res.objective == doctest::Approx(1.5));
}

TEST_CASE("an unreachable row reports infeasibility") {
  EpigraphLp lp;
  int x = lp.add_var(0.0, 1.0, 1.0);
  int row = lp.add_row(2.0, kInf);
  lp.add_term(row, x, 1.0);
  LpResult res = solve_lp(lp);
  CHECK(res.status == LpResult::Status::infeasible);
  CHECK(res.infeasibility > 0.0);
}

TEST_CASE("a free improving ray reports unboundedness") {
  EpigraphLp lp;
  lp.add_var(0.0, kInf, -1.0);
  LpResult res = solve_lp(lp);
  CHECK(res.status == LpResult::Status::unbounded);
  CHECK(res.unbounded_var == 0);
}

TEST_CASE("random bounded programs match vertex enumeration") {
  Rng rng = Rng::stream(31, "lp-random");
  SimplexWorkspace ws;
  for (int k = 0; k < 100; ++k) {
    EpigraphLp lp = random_lp(rng);
    LpResult res = solve_lp(lp, &ws);
    REQUIRE(res.status == LpResult::Status::optimal);
    VertexLp oracle = lp_vertex_enumeration(lp);
    REQUIRE(oracle.feasible);
    CHECK(std::fabs(res.objective - oracle.objective) <=
          1e-8 * std::max(1.0, std::fabs(res.objective)));
    check_feasible(lp, res.x, 1e-9);
  }
}

TEST_CASE("rows pushed past the reachable range are flagged by both solvers") {
  Rng rng = Rng::stream(32, "lp-infeasible");
  for (int k = 0; k < 20; ++k) {
    EpigraphLp lp = random_lp(rng);
    // raise the first row floor above the interval-arithmetic maximum
    double reach = 0.0;
    for (int j = 0; j < lp.num_vars(); ++j)
      for (const auto& [r, a] : lp.cols[j])
        if (r == 0) reach += a > 0.0 ? a * lp.ub[j] : a * lp.lb[j];
    lp.row_lo[0] = reach + 1.0;
    lp.row_hi[0] = kInf;
    CHECK(solve_lp(lp).status == LpResult::Status::infeasible);
    CHECK_FALSE(lp_vertex_enumeration(lp).feasible);
  }
}

TEST_CASE("warm restarts after edits match cold solves") {
  Rng rng = Rng::stream(34, "lp-resolve");
  for (int k = 0; k < 40; ++k) {
    EpigraphLp lp = random_lp(rng);
    SimplexWorkspace ws;
    REQUIRE(solve_lp(lp, &ws).status == LpResult::Status::optimal);
    for (int edit = 0; edit < 8; ++edit) {
      int j = rng.uniform_int(0, lp.num_vars() - 1);
      double pick = rng.uniform01();
      if (pick < 0.35) {
        lp.cost[j] = rng.uniform(-2.0, 2.0);
      } else if (pick < 0.55) {
        // pin to one of its bounds, as a sign commitment would
        double b = rng.uniform01() < 0.5 ? lp.lb[j] : lp.ub[j];
        lp.lb[j] = b;
        lp.ub[j] = b;
      } else if (pick < 0.75) {
        int r = rng.uniform_int(0, lp.num_rows() - 1);
        double shift = rng.uniform(-0.5, 0.5);
        if (std::isfinite(lp.row_lo[r])) lp.row_lo[r] += shift;
        if (std::isfinite(lp.row_hi[r])) lp.row_hi[r] += shift;
      } else {
        lp.lb[j] = rng.uniform(-3.0, -0.5);
        lp.ub[j] = rng.uniform(0.5, 3.0);
      }
      LpResult warm = resolve_lp(lp, &ws);
      LpResult cold = solve_lp(lp);
      REQUIRE(warm.status == cold.status);
      if (cold.status != LpResult::Status::optimal) continue;
      CHECK(std::fabs(warm.objective - cold.objective) <=
            1e-9 * (1.0 + std::fabs(cold.objective)));
      check_feasible(lp, warm.x, 1e-8);
    }
  }
}

TEST_CASE("repeated solves are bitwise identical") {
  Rng rng = Rng::stream(33, "lp-determinism");
  EpigraphLp lp = random_lp(rng);
  LpResult a = solve_lp(lp);
  SimplexWorkspace ws;
  LpResult b = solve_lp(lp, &ws);
  LpResult c = solve_lp(lp, &ws);  // reused workspace
  REQUIRE(a.status == LpResult::Status::optimal);
  CHECK(a.objective == b.objective);
  CHECK(b.objective == c.objective);
  for (int j = 0; j < lp.num_vars(); ++j) {
    CHECK(a.x[j] == b.x[j]);
    CHECK(b.x[j] == c.x[j]);
  }
}
