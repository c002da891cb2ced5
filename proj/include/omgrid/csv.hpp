// CSV ingestion and emission. Writers print doubles with enough digits to
// round-trip exactly; readers report parse failures with line numbers and
// content inconsistencies as schema errors.
#pragma once

#include <string>
#include <vector>

#include "omgrid/admm.hpp"
#include "omgrid/sim.hpp"

namespace omgrid {

// Replay file with header "t,bus,delta" or "t,bus,delta,price"; without a
// price column the bus's schedule fills it in. Every (t, bus) cell must
// appear exactly once, for t in 0..max and every bus.
Scenario load_csv_scenario(const std::string& path, const std::vector<BusSpec>& buses);

void write_scenario_csv(const std::string& path, const Scenario& sc);

// header t,bus,s,u,r,theta; one row per period and bus; needs kept steps
void write_trajectory_csv(const std::string& path, const RunResult& run);

// header t,edge,f
void write_edges_csv(const std::string& path, const Grid& g, const RunResult& run);

// header policy,total_cost,avg_cost,savings_pct,bound,lower_bound
void write_summary_csv(const std::string& path, const std::vector<PolicySummary>& rows);

// header iteration,objective,residual,messages,inter_cluster
void write_trace_csv(const std::string& path, const std::vector<AdmmIterationStats>& trace);

// header bus,gamma,w,bound
void write_params_csv(const std::string& path, const std::vector<AlgorithmParams>& params);

struct TrajectoryRow {
  long t = 0;
  int bus = 0;
  double s = 0, u = 0, r = 0, theta = 0;
};

struct EdgeFlowRow {
  long t = 0;
  int edge = 0;
  double f = 0;
};

std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path);
std::vector<EdgeFlowRow> read_edges_csv(const std::string& path);
std::vector<PolicySummary> read_summary_csv(const std::string& path);

}  // namespace omgrid
