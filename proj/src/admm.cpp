#include "omgrid/admm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "omgrid/qp.hpp"

namespace omgrid {

namespace {

const char* kind_name(MessageKind k) {
  switch (k) {
    case MessageKind::node_primal: return "node primal";
    case MessageKind::edge_primal: return "edge primal";
    case MessageKind::node_dual: return "node dual";
    case MessageKind::edge_dual: return "edge dual";
  }
  return "?";
}

// Matches the inbox against the expected senders: one message per sender with
// the right kind, iteration, and recipient. Returns, for each expected
// sender, the index of its message.
std::vector<int> match_inbox(const std::vector<Message>& inbox, MessageKind kind, long iteration,
                             int dst, const int* src, int count, const std::string& who) {
  if (static_cast<int>(inbox.size()) != count)
    fail(errc::synchronization, who + " expected " + std::to_string(count) + " messages, got " +
                                    std::to_string(inbox.size()));
  std::vector<int> slot(count, -1);
  for (int t = 0; t < count; ++t) {
    const Message& msg = inbox[t];
    if (msg.kind != kind)
      fail(errc::synchronization,
           who + " received a " + std::string(kind_name(msg.kind)) + " message");
    if (msg.iteration != iteration)
      fail(errc::synchronization, who + " received a message from iteration " +
                                      std::to_string(msg.iteration) + " during iteration " +
                                      std::to_string(iteration));
    if (msg.dst != dst)
      fail(errc::synchronization, who + " received a message addressed to " +
                                      std::to_string(msg.dst));
    int j = -1;
    for (int q = 0; q < count; ++q)
      if (src[q] == msg.src) { j = q; break; }
    if (j < 0)
      fail(errc::synchronization,
           who + " received a message from unexpected sender " + std::to_string(msg.src));
    if (slot[j] >= 0)
      fail(errc::synchronization,
           who + " received two messages from sender " + std::to_string(msg.src));
    slot[j] = t;
  }
  return slot;
}

}  // namespace

std::vector<Message> node_primal(const AdmmView& v, int node, NodeState& st,
                                 const std::vector<Message>& inbox, long iteration) {
  const std::vector<int>& edges = v.inc->edge[node];
  const std::vector<int>& signs = v.inc->sign[node];
  const int deg = static_cast<int>(edges.size());
  const std::string who = "node primal at bus " + std::to_string(node);

  if (iteration == 0) {
    if (!inbox.empty())
      fail(errc::synchronization, who + " expected an empty inbox at iteration 0");
    st.f_hat.assign(deg, 0.0);
    st.eta.assign(deg, 0.0);
    st.xi.assign(deg, 0.0);
    st.f_in.assign(deg, 0.0);
    st.theta_hat_in.assign(deg, 0.0);
  } else {
    // previous iteration's edge duals; must agree bitwise with our replicas
    std::vector<int> slot =
        match_inbox(inbox, MessageKind::edge_dual, iteration - 1, node, edges.data(), deg, who);
    for (int j = 0; j < deg; ++j) {
      const Message& msg = inbox[slot[j]];
      if (msg.a != st.eta[j] || msg.b != st.xi[j])
        fail(errc::synchronization, "dual replicas diverged between bus " + std::to_string(node) +
                                        " and line " + std::to_string(edges[j]));
    }
  }

  double th = 0.0;
  for (int j = 0; j < deg; ++j) th += st.theta_hat_in[j] + st.xi[j];
  st.theta = deg > 0 ? th / deg : 0.0;

  const BusSpec& bus = (*v.buses)[node];
  const AlgorithmParams& ap = (*v.params)[node];
  ProxNodeProblem p;
  p.kappa = bus.storage.lambda / ap.w * (v.input->s[node] + ap.gamma);
  p.cost = bus.cost;
  p.price = v.input->price[node];
  p.u_lo = bus.storage.u_min;
  p.u_hi = bus.storage.u_max;
  p.mu_c = bus.storage.mu_c;
  p.mu_d = bus.storage.mu_d;
  p.delta = v.input->delta[node];
  p.rho = v.rho;
  p.sign.resize(deg);
  p.center.resize(deg);
  for (int j = 0; j < deg; ++j) {
    p.sign[j] = signs[j];
    p.center[j] = st.f_in[j] - st.eta[j];
  }
  ProxNodeResult res = prox_node(p);
  st.u = res.u;
  st.r = res.r;
  st.f_hat = res.f_hat;

  std::vector<Message> out(deg);
  for (int j = 0; j < deg; ++j)
    out[j] = {MessageKind::node_primal, node, edges[j], iteration, st.f_hat[j], st.theta};
  return out;
}

std::vector<Message> edge_primal(const AdmmView& v, int edge, EdgeState& st,
                                 const std::vector<Message>& inbox, long iteration) {
  const Edge& e = v.grid->edges[edge];
  const int ends[2] = {e.head, e.tail};
  const std::string who = "edge primal at line " + std::to_string(edge);
  std::vector<int> slot =
      match_inbox(inbox, MessageKind::node_primal, iteration, edge, ends, 2, who);
  for (int j = 0; j < 2; ++j) {
    st.f_hat_in[j] = inbox[slot[j]].a;
    st.theta_in[j] = inbox[slot[j]].b;
  }

  // min over angle copies x: sum_j (g_j - b'x)^2 + (x_j - c_j)^2, scaled by
  // rho/2, subject to |b'x| <= F; the line flow is b'x
  const double b0 = v.grid->susceptance[edge], b1 = -b0;
  const double F = v.grid->flow_limit[edge];
  const double g_sum = (st.f_hat_in[0] + st.eta[0]) + (st.f_hat_in[1] + st.eta[1]);
  const double c0 = st.theta_in[0] - st.xi[0], c1 = st.theta_in[1] - st.xi[1];
  BoxQp2 qp;
  qp.q00 = v.rho * (1.0 + 2.0 * b0 * b0);
  qp.q01 = v.rho * 2.0 * b0 * b1;
  qp.q11 = v.rho * (1.0 + 2.0 * b1 * b1);
  qp.l0 = -v.rho * (c0 + g_sum * b0);
  qp.l1 = -v.rho * (c1 + g_sum * b1);
  qp.a0 = b0;
  qp.a1 = b1;
  qp.lo = -F;
  qp.hi = F;
  BoxQp2Result r = solve_box_qp2(qp);
  st.theta_hat[0] = r.x0;
  st.theta_hat[1] = r.x1;
  st.f = std::clamp(b0 * r.x0 + b1 * r.x1, -F, F);

  std::vector<Message> out(2);
  for (int j = 0; j < 2; ++j)
    out[j] = {MessageKind::edge_primal, edge, ends[j], iteration, st.f, st.theta_hat[j]};
  return out;
}

std::vector<Message> node_dual(const AdmmView& v, int node, NodeState& st,
                               const std::vector<Message>& inbox, long iteration) {
  const std::vector<int>& edges = v.inc->edge[node];
  const int deg = static_cast<int>(edges.size());
  const std::string who = "node dual at bus " + std::to_string(node);
  std::vector<int> slot =
      match_inbox(inbox, MessageKind::edge_primal, iteration, node, edges.data(), deg, who);
  std::vector<Message> out(deg);
  for (int j = 0; j < deg; ++j) {
    st.f_in[j] = inbox[slot[j]].a;
    st.theta_hat_in[j] = inbox[slot[j]].b;
    st.eta[j] = next_flow_dual(st.eta[j], st.f_hat[j], st.f_in[j]);
    st.xi[j] = next_angle_dual(st.xi[j], st.theta_hat_in[j], st.theta);
    out[j] = {MessageKind::node_dual, node, edges[j], iteration, st.eta[j], st.xi[j]};
  }
  return out;
}

std::vector<Message> edge_dual(const AdmmView& v, int edge, EdgeState& st,
                               const std::vector<Message>& inbox, long iteration) {
  const Edge& e = v.grid->edges[edge];
  const int ends[2] = {e.head, e.tail};
  const std::string who = "edge dual at line " + std::to_string(edge);
  std::vector<int> slot =
      match_inbox(inbox, MessageKind::node_dual, iteration, edge, ends, 2, who);
  std::vector<Message> out(2);
  for (int j = 0; j < 2; ++j) {
    st.eta[j] = next_flow_dual(st.eta[j], st.f_hat_in[j], st.f);
    st.xi[j] = next_angle_dual(st.xi[j], st.theta_hat[j], st.theta_in[j]);
    const Message& msg = inbox[slot[j]];
    if (msg.a != st.eta[j] || msg.b != st.xi[j])
      fail(errc::synchronization, "dual replicas diverged between line " + std::to_string(edge) +
                                      " and bus " + std::to_string(ends[j]));
    out[j] = {MessageKind::edge_dual, edge, ends[j], iteration, st.eta[j], st.xi[j]};
  }
  return out;
}

void validate_partition(const Grid& g, const ClusterPartition& p) {
  if (p.clusters < 1) fail(errc::parameter, "partition needs at least one cluster");
  if (static_cast<int>(p.node_owner.size()) != g.n)
    fail(errc::parameter, "partition must assign every bus an owner");
  if (p.edge_owner.size() != g.edges.size())
    fail(errc::parameter, "partition must assign every line an owner");
  for (int o : p.node_owner)
    if (o < 0 || o >= p.clusters) fail(errc::parameter, "bus owner out of range");
  for (int o : p.edge_owner)
    if (o < 0 || o >= p.clusters) fail(errc::parameter, "line owner out of range");
}

TaskSchedule assign_tasks(const Grid& g, const ClusterPartition& p) {
  validate_partition(g, p);
  TaskSchedule ts;
  ts.cluster_nodes.assign(p.clusters, {});
  ts.cluster_edges.assign(p.clusters, {});
  for (int i = 0; i < g.n; ++i) ts.cluster_nodes[p.node_owner[i]].push_back(i);
  for (int e = 0; e < g.m(); ++e) ts.cluster_edges[p.edge_owner[e]].push_back(e);
  // every incidence carries one message per task family
  ts.messages_per_iteration = 8L * g.m();
  for (int e = 0; e < g.m(); ++e) {
    if (p.edge_owner[e] != p.node_owner[g.edges[e].head]) ts.inter_cluster_per_iteration += 4;
    if (p.edge_owner[e] != p.node_owner[g.edges[e].tail]) ts.inter_cluster_per_iteration += 4;
  }
  return ts;
}

AdmmResult run_admm(const Grid& g, const std::vector<BusSpec>& buses,
                    const std::vector<AlgorithmParams>& params, const StepInput& input,
                    const AdmmOptions& opt) {
  validate_grid(g);
  const int n = g.n, m = g.m();
  if (static_cast<int>(buses.size()) != n)
    fail(errc::model, "need one bus description per node");
  if (static_cast<int>(params.size()) != n)
    fail(errc::parameter, "need one parameter pair per bus");
  if (static_cast<int>(input.s.size()) != n || static_cast<int>(input.delta.size()) != n ||
      static_cast<int>(input.price.size()) != n)
    fail(errc::contract, "step input must cover every bus");
  if (!(opt.rho > 0.0) || !std::isfinite(opt.rho))
    fail(errc::parameter, "penalty rho must be positive");
  if (!(opt.tol_primal > 0.0) || !(opt.tol_obj > 0.0))
    fail(errc::parameter, "tolerances must be positive");
  if (opt.max_iter < 1) fail(errc::parameter, "iteration cap must be positive");

  std::vector<double> kappa(n, 0.0);
  for (int i = 0; i < n; ++i) {
    validate_bus(buses[i]);
    SubgradBounds sg = subgradient_bounds(buses[i].cost, buses[i].storage);
    validate_params(params[i], buses[i].storage, sg);
    const StorageParams& sp = buses[i].storage;
    if (input.s[i] < sp.s_min - 1e-12 || input.s[i] > sp.s_max + 1e-12)
      fail(errc::contract, "level at bus " + std::to_string(i) + " is outside its box");
    kappa[i] = sp.lambda / params[i].w * (input.s[i] + params[i].gamma);
  }

  long inter_per_iter = 0;
  if (opt.partition != nullptr)
    inter_per_iter = assign_tasks(g, *opt.partition).inter_cluster_per_iteration;

  IncidentEdges inc = incident_edges(g);
  AdmmView v{&g, &buses, &params, &inc, &input, opt.rho};
  std::vector<NodeState> nodes(n);
  std::vector<EdgeState> edges(m);
  std::vector<std::vector<Message>> to_node(n), to_edge(m);

  AdmmResult res;
  double prev_obj = 0.0;
  for (long k = 0; k < opt.max_iter; ++k) {
    // four barrier-synchronized families, each in ascending id order so the
    // iterates never depend on the cluster partition
    for (auto& box : to_edge) box.clear();
    for (int i = 0; i < n; ++i)
      for (const Message& msg : node_primal(v, i, nodes[i], to_node[i], k))
        to_edge[msg.dst].push_back(msg);
    for (auto& box : to_node) box.clear();
    for (int e = 0; e < m; ++e)
      for (const Message& msg : edge_primal(v, e, edges[e], to_edge[e], k))
        to_node[msg.dst].push_back(msg);
    for (auto& box : to_edge) box.clear();
    for (int i = 0; i < n; ++i)
      for (const Message& msg : node_dual(v, i, nodes[i], to_node[i], k))
        to_edge[msg.dst].push_back(msg);
    for (auto& box : to_node) box.clear();
    for (int e = 0; e < m; ++e)
      for (const Message& msg : edge_dual(v, e, edges[e], to_edge[e], k))
        to_node[msg.dst].push_back(msg);

    res.iterations = k + 1;
    res.messages_total += 8L * m;
    res.inter_cluster_total += inter_per_iter;

    // consensus mismatch and the exact objective of the consensus point
    double residual = 0.0;
    for (int e = 0; e < m; ++e) {
      const Edge& ed = g.edges[e];
      residual = std::max(residual, std::abs(edges[e].theta_hat[0] - nodes[ed.head].theta));
      residual = std::max(residual, std::abs(edges[e].theta_hat[1] - nodes[ed.tail].theta));
    }
    for (int i = 0; i < n; ++i)
      for (size_t j = 0; j < inc.edge[i].size(); ++j)
        residual = std::max(residual, std::abs(nodes[i].f_hat[j] - edges[inc.edge[i][j]].f));

    double obj = 0.0;
    for (int i = 0; i < n; ++i) {
      double r = grid_side_power(buses[i].storage, nodes[i].u) - input.delta[i];
      for (size_t j = 0; j < inc.edge[i].size(); ++j)
        r += inc.sign[i][j] * edges[inc.edge[i][j]].f;
      obj += kappa[i] * nodes[i].u + eval_cost(buses[i].cost, r, input.price[i]);
    }

    if (opt.keep_trace)
      res.trace.push_back({obj, residual, res.messages_total, res.inter_cluster_total});
    const bool done =
        k > 0 && residual <= opt.tol_primal && std::abs(obj - prev_obj) <= opt.tol_obj;
    prev_obj = obj;
    if (done) {
      res.converged = true;
      break;
    }
  }

  StepSolution& sol = res.solution;
  sol.u.resize(n);
  sol.r.resize(n);
  sol.theta.resize(n);
  sol.f.resize(m);
  sol.lp_solves = 0;
  for (int e = 0; e < m; ++e) sol.f[e] = edges[e].f;
  std::vector<int> comp = components(g);
  std::vector<double> root_theta(n, 0.0);
  for (int i = n - 1; i >= 0; --i) root_theta[comp[i]] = nodes[i].theta;
  for (int i = 0; i < n; ++i) {
    sol.u[i] = nodes[i].u;
    sol.theta[i] = nodes[i].theta - root_theta[comp[i]];
    double r = grid_side_power(buses[i].storage, sol.u[i]) - input.delta[i];
    for (size_t j = 0; j < inc.edge[i].size(); ++j)
      r += inc.sign[i][j] * edges[inc.edge[i][j]].f;
    sol.r[i] = r;
    sol.stage_cost += eval_cost(buses[i].cost, r, input.price[i]);
    sol.objective += kappa[i] * sol.u[i];
  }
  sol.objective += sol.stage_cost;
  return res;
}

}  // namespace omgrid
