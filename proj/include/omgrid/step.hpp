// One-period network solves. The online policy weighs each bus's charge by
// its storage pressure and adds the stage cost; the myopic baseline minimizes
// the stage cost alone inside a state-tightened charge box; the no-storage
// reference pins every charge to zero.
#pragma once

#include <vector>

#include "omgrid/devices.hpp"
#include "omgrid/grid.hpp"
#include "omgrid/lp.hpp"
#include "omgrid/params.hpp"

namespace omgrid {

// per-bus resolution of degenerate optima, decided before the solve
enum class TieBreak { force_min, force_max, least_action };

// Charge pinning rule: a high enough level forces a full discharge, a low
// enough one a full charge; between the two the tie preference is least
// action. When both comparisons fire (flat cost), force_min wins.
TieBreak check_thresholds(const AlgorithmParams& p, const StorageParams& sp,
                          const SubgradBounds& sg, double s);

struct StepInput {
  std::vector<double> s, delta, price;  // one entry per bus
};

struct StepSolution {
  std::vector<double> u, r, f, theta;
  std::vector<TieBreak> modes;  // per bus; filled by the online policy only
  double objective = 0;         // the policy's own objective
  double stage_cost = 0;        // sum of stage costs g_i(r_i; p_i)
  int lp_solves = 1;            // above 1 when sign commitments were enumerated
};

class StepSolver {
 public:
  StepSolver(Grid grid, std::vector<BusSpec> buses, std::vector<AlgorithmParams> params);

  int n() const { return grid_.n; }
  int m() const { return grid_.m(); }
  const Grid& grid() const { return grid_; }
  const BusSpec& bus(int i) const { return buses_[i]; }
  const AlgorithmParams& params(int i) const { return params_[i]; }
  const SubgradBounds& bounds(int i) const { return sg_[i]; }

  StepSolution omg_step(const StepInput& in);
  // identical problem without the tie perturbation; reference for the
  // distributed solver, whose fixed point is any exact optimum
  StepSolution omg_step_clean(const StepInput& in);
  StepSolution greedy_step(const StepInput& in);
  StepSolution no_storage_step(const StepInput& in);

 private:
  enum class Policy { omg, omg_clean, greedy, no_storage };

  Grid grid_;
  std::vector<BusSpec> buses_;
  std::vector<AlgorithmParams> params_;
  std::vector<SubgradBounds> sg_;
  IncidentEdges inc_;
  bool tree_ = true;
  bool lossy_ = false;
  double eps_ = 0;

  EpigraphLp lp_;
  SimplexWorkspace ws_;
  std::vector<int> up_, um_, rv_, tv_, fv_, th_;
  std::vector<int> bal_row_, net_row_;
  std::vector<std::vector<int>> epi_row_;
  std::vector<double> sum_f_;
  std::vector<double> cached_price_;
  std::vector<std::vector<std::pair<double, std::vector<CostLine>>>> line_cache_;

  const std::vector<CostLine>& lines_for(int bus, double price);
  void set_prices(const std::vector<double>& price);
  StepSolution run(const StepInput& in, Policy policy);
  LpResult solve_with_commitments(int* lp_solves);
};

}  // namespace omgrid
