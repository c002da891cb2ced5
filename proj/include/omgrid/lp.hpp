// Dense linear programs with ranged rows and variable bounds, solved by a
// bounded-variable two-phase primal simplex. Sized for the per-step network
// problems (tens of variables); the full-horizon solver lives elsewhere.
#pragma once

#include <utility>
#include <vector>

#include "omgrid/devices.hpp"
#include "omgrid/errors.hpp"

namespace omgrid {

// min c'x  s.t.  row_lo <= Ax <= row_hi,  lb <= x <= ub
// Rows and bounds may be infinite on either side; lb == ub fixes a variable
// and row_lo == row_hi makes an equality row.
struct EpigraphLp {
  std::vector<double> cost, lb, ub;
  std::vector<double> row_lo, row_hi;
  // column-major storage: cols[j] lists (row, coefficient) for variable j
  std::vector<std::vector<std::pair<int, double>>> cols;

  int num_vars() const { return static_cast<int>(cost.size()); }
  int num_rows() const { return static_cast<int>(row_lo.size()); }

  int add_var(double lo, double hi, double c = 0.0);
  int add_row(double lo, double hi);
  void add_term(int row, int var, double coef);
  void set_cost(int var, double c);

  // epigraph of a piecewise-linear convex cost on variable r_var, scaled by
  // weight: adds variable t with cost `weight` and one row per line,
  //   slope * r - t <= -intercept
  // and returns the index of t
  int add_epigraph(int r_var, const std::vector<CostLine>& lines, double weight = 1.0);
};

struct LpResult {
  enum class Status { optimal, infeasible, unbounded };
  Status status = Status::optimal;
  std::vector<double> x;
  double objective = 0.0;
  // phase-1 residual left when status is infeasible
  double infeasibility = 0.0;
  // structural variable whose ray proves unboundedness, -1 if a logical
  int unbounded_var = -1;
};

// scratch buffers reused across solves; after a completed solve they also
// hold the final basis, which resolve_lp can restart from
struct SimplexWorkspace {
  std::vector<double> binv, xb, value, pi, colw, q;
  std::vector<double> cost;
  std::vector<int> basis, col_row, art_row;
  std::vector<signed char> state;
  // problem shape the stored basis belongs to; n < 0 marks it unusable
  int n = -1, m = -1;
  // pivots applied to binv since the last refactorization
  int pivots = 0;
};

LpResult solve_lp(const EpigraphLp& lp, SimplexWorkspace* ws = nullptr);

// re-solve after bound or cost edits to the same problem shape, restarting
// from the basis left in the workspace by a previous solve; falls back to a
// cold solve_lp when the stored basis is missing or cannot be repaired
LpResult resolve_lp(const EpigraphLp& lp, SimplexWorkspace* ws);

}  // namespace omgrid
