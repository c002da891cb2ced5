// Full-horizon hindsight problem: one LP over all periods with storage
// dynamics chaining adjacent periods. Solved by a primal-dual interior-point
// method whose normal equations are block tridiagonal in time, so the cost is
// linear in the horizon length.
//
// With lossy conversion the charge/discharge split is solved without the
// complementarity restriction, which makes the result a valid lower bound on
// the true hindsight cost; the two coincide for lossless conversion.
#pragma once

#include <vector>

#include "omgrid/devices.hpp"
#include "omgrid/errors.hpp"
#include "omgrid/grid.hpp"

namespace omgrid {

// min c'x  s.t.  Ax = b,  lb <= x <= ub  (all bounds finite, lb < ub),
// with every row and variable assigned to a time block such that each
// variable's rows span at most two adjacent blocks.
struct StaircaseLp {
  int blocks = 0;
  std::vector<double> cost, lb, ub;
  std::vector<int> var_block;
  std::vector<double> rhs;
  std::vector<int> row_block;
  struct Entry {
    int row, var;
    double val;
  };
  std::vector<Entry> entries;

  int num_vars() const { return static_cast<int>(cost.size()); }
  int num_rows() const { return static_cast<int>(rhs.size()); }
  int add_var(int block, double lo, double hi, double c);
  int add_row(int block, double b);
  void add_term(int row, int var, double val);
};

struct StaircaseResult {
  std::vector<double> x;
  double objective = 0;
  int iterations = 0;
};

StaircaseResult solve_staircase(const StaircaseLp& lp);

// Hindsight-optimal operation for a fixed disturbance and price path.
// delta and price are row-major T x n; s0 gives each bus's initial level.
struct HorizonSolve {
  double total_cost = 0;
  std::vector<double> u, r, s;  // row-major T x n; s holds the post-step level
  std::vector<double> theta;    // row-major T x n, zero at each component root
  std::vector<double> f;        // row-major T x m
  int iterations = 0;
};

HorizonSolve solve_horizon(const Grid& g, const std::vector<BusSpec>& buses,
                           const std::vector<double>& s0, const std::vector<double>& delta,
                           const std::vector<double>& price, int T);

}  // namespace omgrid
