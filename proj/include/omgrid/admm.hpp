// Distributed solve of the one-period problem by consensus ADMM. Nodes own
// (u, r, theta) plus a copy of each incident flow; edges own (f, angle
// copies). One iteration runs four barrier-synchronized task families,
//   node primal -> edge primal -> node dual -> edge dual,
// each emitting one message per (node, edge) incidence: 8m messages per
// iteration on m edges. Both endpoints keep replicas of the scaled duals and
// update them through the shared helpers below, so the replicas stay bitwise
// equal and every dual message doubles as a consistency check.
#pragma once

#include <vector>

#include "omgrid/devices.hpp"
#include "omgrid/errors.hpp"
#include "omgrid/grid.hpp"
#include "omgrid/params.hpp"
#include "omgrid/step.hpp"

namespace omgrid {

enum class MessageKind { node_primal, edge_primal, node_dual, edge_dual };

struct Message {
  MessageKind kind = MessageKind::node_primal;
  int src = -1, dst = -1;  // node id or edge id, by the kind's direction
  long iteration = 0;
  double a = 0, b = 0;
};

// shared by node and edge replicas; a single definition keeps them bit-equal
inline double next_flow_dual(double eta, double f_hat, double f) { return eta + (f_hat - f); }
inline double next_angle_dual(double xi, double theta_hat, double theta) {
  return xi + (theta_hat - theta);
}

struct NodeState {
  double u = 0, r = 0, theta = 0;
  std::vector<double> f_hat;                // per incident edge, node's copy
  std::vector<double> eta, xi;              // dual replicas per incident edge
  std::vector<double> f_in, theta_hat_in;   // last values received from edges
};

struct EdgeState {
  // slot 0 is the head endpoint, slot 1 the tail
  double f = 0;
  double theta_hat[2] = {0, 0};
  double eta[2] = {0, 0}, xi[2] = {0, 0};   // dual replicas
  double f_hat_in[2] = {0, 0}, theta_in[2] = {0, 0};
};

struct AdmmView {
  const Grid* grid = nullptr;
  const std::vector<BusSpec>* buses = nullptr;
  const std::vector<AlgorithmParams>* params = nullptr;
  const IncidentEdges* inc = nullptr;
  const StepInput* input = nullptr;
  double rho = 100.0;
};

// Task bodies. Each validates its inbox (exactly one message per incidence,
// right kind, right iteration) and returns the messages it emits; a wrong
// inbox raises a synchronization error. node_primal consumes the previous
// iteration's edge-dual messages (none at iteration 0).
std::vector<Message> node_primal(const AdmmView& v, int node, NodeState& st,
                                 const std::vector<Message>& inbox, long iteration);
std::vector<Message> edge_primal(const AdmmView& v, int edge, EdgeState& st,
                                 const std::vector<Message>& inbox, long iteration);
std::vector<Message> node_dual(const AdmmView& v, int node, NodeState& st,
                               const std::vector<Message>& inbox, long iteration);
std::vector<Message> edge_dual(const AdmmView& v, int edge, EdgeState& st,
                               const std::vector<Message>& inbox, long iteration);

// Ownership map used for message accounting; the iterates themselves are
// partition-invariant because tasks always run in ascending id order.
struct ClusterPartition {
  int clusters = 1;
  std::vector<int> node_owner, edge_owner;
};

void validate_partition(const Grid& g, const ClusterPartition& p);

struct TaskSchedule {
  std::vector<std::vector<int>> cluster_nodes, cluster_edges;
  long messages_per_iteration = 0;
  long inter_cluster_per_iteration = 0;
};

TaskSchedule assign_tasks(const Grid& g, const ClusterPartition& p);

struct AdmmOptions {
  double rho = 100.0;
  double tol_primal = 1e-6;  // max consensus mismatch over flows and angles
  double tol_obj = 1e-8;     // change of the exact objective between iterations
  long max_iter = 20000;
  const ClusterPartition* partition = nullptr;  // counting only, may be null
  bool keep_trace = false;
};

struct AdmmIterationStats {
  double objective = 0, residual = 0;
  long messages = 0, inter_cluster = 0;  // cumulative
};

struct AdmmResult {
  StepSolution solution;  // consensus extraction with exactly recomputed costs
  long iterations = 0;
  bool converged = false;
  long messages_total = 0, inter_cluster_total = 0;
  std::vector<AdmmIterationStats> trace;  // filled when keep_trace is set
};

AdmmResult run_admm(const Grid& g, const std::vector<BusSpec>& buses,
                    const std::vector<AlgorithmParams>& params, const StepInput& input,
                    const AdmmOptions& opt = {});

}  // namespace omgrid
