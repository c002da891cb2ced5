#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "omgrid/devices.hpp"
#include "omgrid/rng.hpp"

using namespace omgrid;
using omgrid::testing::bus_fixture;
using omgrid::testing::storage_fixture;
using omgrid::testing::thrown_code;

TEST_CASE("storage validation checks the assumption inequalities") {
  StorageCheck ok = validate_storage(storage_fixture());
  CHECK(ok.all());

  StorageParams weak = storage_fixture(0.5);
  StorageCheck c = validate_storage(weak);
  CHECK(!c.controllable_to_max);  // 0.5*10 + 1 = 6 < 10
  CHECK(c.boxes_ok);
  CHECK(!c.all());
  CHECK(thrown_code([&] { require_valid_storage(weak); }) == errc::model);

  StorageParams wide = storage_fixture();
  wide.u_min = -5.0;
  wide.u_max = 5.0;
  CHECK(!validate_storage(wide).frequent_acting);  // span 10 is not < 10

  StorageParams inverted = storage_fixture();
  inverted.s_min = 11.0;
  CHECK(!validate_storage(inverted).boxes_ok);

  StorageParams bad_u = storage_fixture();
  bad_u.u_min = 0.2;
  CHECK(!validate_storage(bad_u).boxes_ok);
}

TEST_CASE("storage dynamics are exact and unclamped") {
  CHECK(step_storage(storage_fixture(1.0), 5.0, 0.5) == doctest::Approx(5.5));
  CHECK(step_storage(storage_fixture(0.999), 10.0, 0.0) == doctest::Approx(9.99));
  CHECK(step_storage(storage_fixture(0.9), 0.0, -0.1) == doctest::Approx(-0.1));
  CHECK(step_storage(storage_fixture(1.0), 5.0, 0.0) == 5.0);
  CHECK(thrown_code([] { step_storage(storage_fixture(), 5.0, 1.5); }) == errc::contract);
}

TEST_CASE("grid-side power applies the conversion coefficients") {
  StorageParams sp = storage_fixture(1.0, 0.5);
  CHECK(grid_side_power(sp, 1.0) == doctest::Approx(2.0));
  CHECK(grid_side_power(sp, -1.0) == doctest::Approx(-0.5));
  CHECK(grid_side_power(sp, 0.0) == 0.0);
  CHECK(grid_side_power(storage_fixture(), 0.7) == doctest::Approx(0.7));
}

TEST_CASE("negative-part cost evaluates exactly") {
  CostModel cm = CostModel::negative_part();
  CHECK(eval_cost(cm, 2.0, 1.0) == 0.0);
  cm.p_max = 3.0;
  CHECK(eval_cost(cm, -2.0, 3.0) == doctest::Approx(6.0));
  CHECK(eval_cost(cm, 0.0, 1.0) == 0.0);
  CHECK(thrown_code([&] { eval_cost(cm, 1.0, 4.0); }) == errc::contract);

  CostModel gen = CostModel::positive_part();
  CHECK(eval_cost(gen, 2.0, 1.0) == doctest::Approx(2.0));
  CHECK(eval_cost(gen, -2.0, 1.0) == 0.0);
}

TEST_CASE("cost validation enforces convexity over the whole price support") {
  CostModel cm = CostModel::negative_part();
  CHECK(thrown_code([&] { validate_cost(cm); }) == std::nullopt);

  // fixed slope -0.5 followed by price-scaled -1: convex only below p = 0.5
  CostModel bad;
  bad.pieces = {{-std::numeric_limits<double>::infinity(), -0.5, false}, {0.0, -1.0, true}};
  bad.p_min = 1.0;
  bad.p_max = 3.0;
  CHECK(thrown_code([&] { validate_cost(bad); }) == errc::model);

  // the mirrored order is convex for every price in [1, 3]
  CostModel good;
  good.pieces = {{-std::numeric_limits<double>::infinity(), -1.0, true}, {0.0, -0.5, false}};
  good.p_min = 1.0;
  good.p_max = 3.0;
  CHECK(thrown_code([&] { validate_cost(good); }) == std::nullopt);

  CostModel unordered = CostModel::negative_part();
  unordered.pieces.push_back({-1.0, 1.0, false});
  CHECK(thrown_code([&] { validate_cost(unordered); }) == errc::model);
}

TEST_CASE("cost is convex and its slopes stay inside the subgradient bounds") {
  CostModel cm;
  cm.pieces = {{-std::numeric_limits<double>::infinity(), -2.0, true},
               {-1.0, -1.0, true},
               {0.5, 0.25, false},
               {2.0, 0.75, false}};
  cm.p_min = 1.0;
  cm.p_max = 2.0;
  validate_cost(cm);
  SubgradBounds sg = subgradient_bounds(cm);
  CHECK(sg.d_lo == doctest::Approx(-4.0));
  CHECK(sg.d_hi == doctest::Approx(0.75));

  Rng rng = Rng::stream(9, "cost-convexity");
  for (int k = 0; k < 500; ++k) {
    double p = rng.uniform(cm.p_min, cm.p_max);
    double r1 = rng.uniform(-4.0, 4.0), r2 = rng.uniform(-4.0, 4.0);
    double t = rng.uniform01();
    double lhs = eval_cost(cm, t * r1 + (1.0 - t) * r2, p);
    double rhs = t * eval_cost(cm, r1, p) + (1.0 - t) * eval_cost(cm, r2, p);
    CHECK(lhs <= rhs + 1e-9);

    double h = 1e-4;
    double slope = (eval_cost(cm, r1 + h, p) - eval_cost(cm, r1, p)) / h;
    CHECK(slope >= sg.d_lo - 1e-9);
    CHECK(slope <= sg.d_hi + 1e-9);
  }
}

TEST_CASE("subgradient bounds scale with the worst-case price") {
  CostModel cm = CostModel::negative_part();
  SubgradBounds sg = subgradient_bounds(cm);
  CHECK(sg.d_lo == doctest::Approx(-1.0));
  CHECK(sg.d_hi == 0.0);

  cm.p_max = 3.0;
  sg = subgradient_bounds(cm);
  CHECK(sg.d_lo == doctest::Approx(-3.0));
  CHECK(sg.d_hi == 0.0);

  CostModel flat;
  flat.pieces = {{-std::numeric_limits<double>::infinity(), 0.0, false}};
  sg = subgradient_bounds(flat);
  CHECK(sg.d_lo == 0.0);
  CHECK(sg.d_hi == 0.0);
}

TEST_CASE("conversion widens the subgradient bounds") {
  CostModel cm = CostModel::negative_part();
  StorageParams sp = storage_fixture(1.0, 0.5);
  SubgradBounds sg = subgradient_bounds(cm, sp);
  CHECK(sg.d_lo == doctest::Approx(-2.0));  // slope -1 through h'(u) = 1/mu_c
  CHECK(sg.d_hi == 0.0);

  CostModel gen = CostModel::positive_part();
  sg = subgradient_bounds(gen, sp);
  CHECK(sg.d_lo == 0.0);
  CHECK(sg.d_hi == doctest::Approx(2.0));
}

TEST_CASE("price schedules follow the day window") {
  PriceSchedule flat;
  CHECK(flat.at(0) == 1.0);
  CHECK(flat.at(1000) == 1.0);

  PriceSchedule dn;
  dn.kind = PriceSchedule::Kind::day_night;
  CHECK(dn.at(0) == 1.0);
  CHECK(dn.at(6) == 1.0);
  CHECK(dn.at(7) == 3.0);
  CHECK(dn.at(18) == 3.0);
  CHECK(dn.at(19) == 1.0);
  CHECK(dn.at(24) == 1.0);
  CHECK(dn.at(24 + 7) == 3.0);
  CHECK(dn.at(48 + 12) == 3.0);
}

TEST_CASE("bus validation ties the schedule to the price support") {
  BusSpec b = bus_fixture();
  CHECK(thrown_code([&] { validate_bus(b); }) == std::nullopt);

  BusSpec day = b;
  day.price.kind = PriceSchedule::Kind::day_night;
  CHECK(thrown_code([&] { validate_bus(day); }) == errc::model);  // 3 outside [1, 1]
  day.cost.p_max = 3.0;
  CHECK(thrown_code([&] { validate_bus(day); }) == std::nullopt);

  BusSpec bad_support = b;
  bad_support.support = {2.0, -2.0};
  CHECK(thrown_code([&] { validate_bus(bad_support); }) == errc::model);
}

TEST_CASE("linearization reproduces the cost") {
  CostModel cm;
  cm.pieces = {{-std::numeric_limits<double>::infinity(), -2.0, true},
               {-1.0, 0.0, false},
               {1.0, 0.5, true}};
  cm.p_min = 1.0;
  cm.p_max = 2.0;
  validate_cost(cm);
  Rng rng = Rng::stream(10, "cost-lines");
  for (double p : {1.0, 1.5, 2.0}) {
    auto lines = cost_linearization(cm, p);
    for (int k = 0; k < 200; ++k) {
      double r = rng.uniform(-5.0, 5.0);
      CHECK(eval_cost_lines(lines, r) == doctest::Approx(eval_cost(cm, r, p)).epsilon(1e-12));
    }
  }
}
