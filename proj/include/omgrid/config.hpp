// Experiment configuration: a line-oriented text format with [section]
// headers and key = value pairs. '#' starts a comment. Sections: [grid],
// [bus *] (defaults for every bus), [bus N] (per-bus overrides), [params],
// [scenario], [run], [admm]. Unknown keys are errors, not warnings.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "omgrid/admm.hpp"
#include "omgrid/devices.hpp"
#include "omgrid/grid.hpp"
#include "omgrid/params.hpp"
#include "omgrid/sim.hpp"

namespace omgrid {

struct ParamsSpec {
  enum class Strategy { max_w, min_s, explicit_pairs } strategy = Strategy::max_w;
  double min_s_tol = 1e-8;
  std::vector<double> gamma, w;  // per bus, explicit strategy only
};

struct ScenarioSpec {
  enum class Kind { laplace, csv } kind = Kind::laplace;
  double sigma = 0.1;
  int T = 100;
  std::uint64_t seed = 1;
  std::string path;  // csv kind
};

struct AdmmSpec {
  double rho = 100.0, tol_primal = 1e-6, tol_obj = 1e-8;
  long max_iter = 20000;
  int clusters = 1;
  std::vector<int> node_owner, edge_owner;  // empty: everything in cluster 0
};

struct RunSpec {
  std::vector<Policy> policies;  // default: no_storage, greedy, omg, offline
  std::string out = "out";
};

struct ExperimentConfig {
  Grid grid;
  std::vector<BusSpec> buses;
  ParamsSpec params;
  ScenarioSpec scenario;
  AdmmSpec admm;
  RunSpec run;
};

// Parses and validates; every error names the file, line, and key path.
ExperimentConfig parse_config(const std::string& path);

// Applies the configured selection strategy; the result is validated per bus.
std::vector<AlgorithmParams> resolve_params(const ExperimentConfig& cfg);

// Samples or loads the configured scenario.
Scenario resolve_scenario(const ExperimentConfig& cfg);

// Partition from the [admm] owner lists; everything in one cluster when the
// lists are absent.
ClusterPartition resolve_partition(const ExperimentConfig& cfg);

}  // namespace omgrid
