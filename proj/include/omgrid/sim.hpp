// Multi-period rollout harness: disturbance scenarios (synthetic Laplace or
// replayed), policy rollouts with exact storage dynamics, the hindsight
// optimum as a reference, and summary metrics with the per-period
// sub-optimality bound.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "omgrid/devices.hpp"
#include "omgrid/errors.hpp"
#include "omgrid/grid.hpp"
#include "omgrid/horizon_lp.hpp"
#include "omgrid/params.hpp"
#include "omgrid/step.hpp"

namespace omgrid {

enum class Policy { omg, greedy, no_storage, offline };

const char* policy_name(Policy p);
Policy policy_from_name(const std::string& name);  // throws errc::parse

struct Scenario {
  int T = 0, n = 0;
  std::vector<double> delta, price;  // row-major T x n
  std::uint64_t seed = 0;            // 0 when replayed from a file
};

// Dimension and price-support checks; throws errc::schema on failure.
void validate_scenario(const Scenario& sc, const std::vector<BusSpec>& buses);

// Independent Laplace net supply with the given standard deviation at every
// bus; prices follow each bus's schedule. One derived stream per bus, so the
// draw at (t, i) does not depend on T or on the other buses.
Scenario sample_laplace_scenario(const std::vector<BusSpec>& buses, int T, double sigma,
                                 std::uint64_t seed);

struct StepRecord {
  std::vector<double> s;  // level entering the period
  StepSolution sol;
};

struct RunResult {
  Policy policy = Policy::omg;
  int T = 0;
  double total_cost = 0, avg_cost = 0;
  std::vector<double> final_s;
  double max_level_violation = 0;  // worst excursion outside a box, pre-clamp
  double max_flow_violation = 0;   // worst |f| excess over a line limit
  std::vector<StepRecord> steps;   // kept only on request
};

struct SimOptions {
  bool keep_steps = false;
};

// One exact dynamics step with the rollout guard: clamps sub-1e-9 rounding
// dust back into the boxes and records it in *violation; anything larger is a
// broken feasibility promise and raises errc::feasibility_breach.
double apply_dynamics(const StorageParams& sp, double s, double u, double* violation);

RunResult simulate(const Grid& g, const std::vector<BusSpec>& buses,
                   const std::vector<AlgorithmParams>& params, const Scenario& sc, Policy policy,
                   const SimOptions& opt = {});

// Hindsight-optimal run over the whole scenario. Dense solve; refuses
// instances with T*n above 20000 (errc::size_guard).
RunResult offline_clairvoyant(const Grid& g, const std::vector<BusSpec>& buses, const Scenario& sc,
                              const SimOptions& opt = {});

struct PolicySummary {
  std::string policy;
  double total_cost = 0, avg_cost = 0;
  double savings_pct = 0;  // vs the no-storage reference
  double bound = 0;        // sum_i M_i/w_i, per period
  double lower_bound = 0;  // best lower estimate of the optimal average cost
};

// One row per result, in the given order. Requires a no_storage run as the
// savings reference. The optimal-cost lower bound is the larger of the
// hindsight optimum (when present) and the online average minus the bound.
std::vector<PolicySummary> metrics(const std::vector<RunResult>& results,
                                   const std::vector<AlgorithmParams>& params);

}  // namespace omgrid
