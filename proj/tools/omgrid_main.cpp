// Command-line driver: offline parameter selection, single-step debugging,
// policy rollouts, policy comparison, and distributed-solve tracing, all
// driven by one config file.
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "omgrid/admm.hpp"
#include "omgrid/config.hpp"
#include "omgrid/csv.hpp"
#include "omgrid/sim.hpp"

namespace {

using namespace omgrid;

const char* tie_name(TieBreak t) {
  switch (t) {
    case TieBreak::force_min: return "force_min";
    case TieBreak::force_max: return "force_max";
    case TieBreak::least_action: return "least_action";
  }
  return "?";
}

std::string out_file(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

std::vector<Policy> requested_policies(const ExperimentConfig& cfg,
                                       const std::vector<std::string>& flags) {
  if (flags.empty()) return cfg.run.policies;
  std::vector<Policy> out;
  for (const std::string& name : flags) out.push_back(policy_from_name(name));
  return out;
}

StepInput first_period_input(const ExperimentConfig& cfg, const Scenario& sc) {
  StepInput in;
  for (int i = 0; i < sc.n; ++i) {
    in.s.push_back(cfg.buses[i].s_init);
    in.delta.push_back(sc.delta[i]);
    in.price.push_back(sc.price[i]);
  }
  return in;
}

int cmd_params(const ExperimentConfig& cfg, const std::string& out_dir) {
  std::vector<AlgorithmParams> params = resolve_params(cfg);
  std::printf("%-5s %-22s %-22s %-22s\n", "bus", "gamma", "w", "bound");
  for (size_t i = 0; i < params.size(); ++i)
    std::printf("%-5zu %-22.10g %-22.10g %-22.10g\n", i, params[i].gamma, params[i].w,
                params[i].bound);
  if (!out_dir.empty()) {
    const std::string path = out_file(out_dir, "params.csv");
    write_params_csv(path, params);
    std::printf("written %s\n", path.c_str());
  }
  return 0;
}

int cmd_step(const ExperimentConfig& cfg, const std::string& policy_flag) {
  const Policy policy = policy_flag.empty() ? Policy::omg : policy_from_name(policy_flag);
  if (policy == Policy::offline)
    fail(errc::parameter, "step drives one period; use simulate for the hindsight optimum");
  std::vector<AlgorithmParams> params = resolve_params(cfg);
  Scenario sc = resolve_scenario(cfg);
  StepInput in = first_period_input(cfg, sc);

  StepSolver solver(cfg.grid, cfg.buses, params);
  StepSolution sol;
  switch (policy) {
    case Policy::omg: sol = solver.omg_step(in); break;
    case Policy::greedy: sol = solver.greedy_step(in); break;
    default: sol = solver.no_storage_step(in); break;
  }

  std::printf("policy %s: objective %.10g, stage cost %.10g, solves %d\n", policy_name(policy),
              sol.objective, sol.stage_cost, sol.lp_solves);
  for (int i = 0; i < solver.n(); ++i) {
    std::printf("bus %d: s=%.10g delta=%.10g u=%.10g r=%.10g theta=%.10g", i, in.s[i],
                in.delta[i], sol.u[i], sol.r[i], sol.theta[i]);
    if (!sol.modes.empty()) std::printf(" mode=%s", tie_name(sol.modes[i]));
    std::printf("\n");
  }
  for (int e = 0; e < solver.m(); ++e)
    std::printf("edge %d: f=%.10g of %.10g\n", e, sol.f[e], cfg.grid.flow_limit[e]);
  return 0;
}

RunResult run_policy(const ExperimentConfig& cfg, const std::vector<AlgorithmParams>& params,
                     const Scenario& sc, Policy policy, bool keep_steps) {
  SimOptions opt;
  opt.keep_steps = keep_steps;
  if (policy == Policy::offline) return offline_clairvoyant(cfg.grid, cfg.buses, sc, opt);
  return simulate(cfg.grid, cfg.buses, params, sc, policy, opt);
}

int cmd_simulate(const ExperimentConfig& cfg, const std::vector<std::string>& policy_flags) {
  std::vector<AlgorithmParams> params = resolve_params(cfg);
  Scenario sc = resolve_scenario(cfg);
  std::vector<RunResult> runs;
  bool have_reference = false;
  for (Policy policy : requested_policies(cfg, policy_flags)) {
    RunResult run = run_policy(cfg, params, sc, policy, true);
    std::printf("%s: total %.10g, avg %.10g\n", policy_name(policy), run.total_cost,
                run.avg_cost);
    const std::string tag = policy_name(policy);
    const std::string tpath = out_file(cfg.run.out, "trajectory_" + tag + ".csv");
    write_trajectory_csv(tpath, run);
    write_edges_csv(out_file(cfg.run.out, "edges_" + tag + ".csv"), cfg.grid, run);
    std::printf("written %s\n", tpath.c_str());
    have_reference = have_reference || policy == Policy::no_storage;
    runs.push_back(std::move(run));
  }
  if (have_reference) {
    const std::string spath = out_file(cfg.run.out, "summary.csv");
    write_summary_csv(spath, metrics(runs, params));
    std::printf("written %s\n", spath.c_str());
  }
  return 0;
}

int cmd_compare(const ExperimentConfig& cfg, const std::vector<std::string>& policy_flags) {
  std::vector<AlgorithmParams> params = resolve_params(cfg);
  Scenario sc = resolve_scenario(cfg);
  std::vector<Policy> policies = requested_policies(cfg, policy_flags);
  bool have_reference = false;
  for (Policy p : policies) have_reference = have_reference || p == Policy::no_storage;
  if (!have_reference) policies.insert(policies.begin(), Policy::no_storage);

  std::vector<RunResult> runs;
  for (Policy policy : policies) runs.push_back(run_policy(cfg, params, sc, policy, false));
  std::vector<PolicySummary> rows = metrics(runs, params);

  std::printf("%-12s %-16s %-16s %-12s %-14s %-14s\n", "policy", "total_cost", "avg_cost",
              "savings_pct", "bound", "lower_bound");
  for (const PolicySummary& row : rows)
    std::printf("%-12s %-16.8g %-16.8g %-12.4f %-14.8g %-14.8g\n", row.policy.c_str(),
                row.total_cost, row.avg_cost, row.savings_pct, row.bound, row.lower_bound);

  const std::string spath = out_file(cfg.run.out, "summary.csv");
  write_summary_csv(spath, rows);
  std::printf("written %s\n", spath.c_str());
  return 0;
}

int cmd_admm_trace(const ExperimentConfig& cfg) {
  std::vector<AlgorithmParams> params = resolve_params(cfg);
  Scenario sc = resolve_scenario(cfg);
  StepInput in = first_period_input(cfg, sc);

  ClusterPartition partition = resolve_partition(cfg);
  AdmmOptions opt;
  opt.rho = cfg.admm.rho;
  opt.tol_primal = cfg.admm.tol_primal;
  opt.tol_obj = cfg.admm.tol_obj;
  opt.max_iter = cfg.admm.max_iter;
  opt.partition = &partition;
  opt.keep_trace = true;
  AdmmResult res = run_admm(cfg.grid, cfg.buses, params, in, opt);

  StepSolver solver(cfg.grid, cfg.buses, params);
  StepSolution reference = solver.omg_step_clean(in);

  std::printf("iterations %ld (%s), objective %.12g, reference %.12g, difference %.3g\n",
              res.iterations, res.converged ? "converged" : "iteration cap",
              res.solution.objective, reference.objective,
              res.solution.objective - reference.objective);
  std::printf("messages %ld, inter-cluster %ld over %d clusters\n", res.messages_total,
              res.inter_cluster_total, partition.clusters);
  const std::string tpath = out_file(cfg.run.out, "admm_trace.csv");
  write_trace_csv(tpath, res.trace);
  std::printf("written %s\n", tpath.c_str());
  return res.converged ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"networked energy-storage operation: parameter selection, online policies, "
               "distributed per-step solves"};
  app.require_subcommand(1);

  std::string config_path, out_dir, step_policy;
  std::vector<std::string> policy_flags;
  long long seed = -1;
  double rho = 0.0, tol = 0.0;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides run.out)");
    sub->add_option("--seed", seed, "scenario seed override");
  };

  CLI::App* sub_params = app.add_subcommand("params", "select and print per-bus parameters");
  add_config(sub_params);
  CLI::App* sub_step = app.add_subcommand("step", "solve and dump the first period");
  add_config(sub_step);
  sub_step->add_option("--policy", step_policy, "omg, greedy, or no_storage");
  CLI::App* sub_sim = app.add_subcommand("simulate", "roll policies and write trajectories");
  add_config(sub_sim);
  sub_sim->add_option("--policy", policy_flags, "policy to run (repeatable)");
  CLI::App* sub_cmp = app.add_subcommand("compare", "run policies on one scenario and summarize");
  add_config(sub_cmp);
  sub_cmp->add_option("--policy", policy_flags, "policy to run (repeatable)");
  CLI::App* sub_trace = app.add_subcommand("admm-trace", "trace the distributed solve");
  add_config(sub_trace);
  sub_trace->add_option("--rho", rho, "penalty parameter override");
  sub_trace->add_option("--tol", tol, "primal tolerance override");

  CLI11_PARSE(app, argc, argv);

  try {
    omgrid::ExperimentConfig cfg = omgrid::parse_config(config_path);
    if (!out_dir.empty()) cfg.run.out = out_dir;
    if (seed >= 0) cfg.scenario.seed = static_cast<std::uint64_t>(seed);
    if (rho > 0.0) cfg.admm.rho = rho;
    if (tol > 0.0) cfg.admm.tol_primal = tol;

    if (sub_params->parsed()) return cmd_params(cfg, out_dir);
    if (sub_step->parsed()) return cmd_step(cfg, step_policy);
    if (sub_sim->parsed()) return cmd_simulate(cfg, policy_flags);
    if (sub_cmp->parsed()) return cmd_compare(cfg, policy_flags);
    return cmd_admm_trace(cfg);
  } catch (const omgrid::error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2 + static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
