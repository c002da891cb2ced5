#include "omgrid/grid.hpp"

#include <cmath>
#include <string>

namespace omgrid {

void validate_grid(const Grid& g) {
  if (g.n < 1) fail(errc::structural, "grid needs at least one node");
  size_t m = g.edges.size();
  if (g.susceptance.size() != m || g.flow_limit.size() != m)
    fail(errc::structural, "per-edge arrays must match the edge count");
  for (size_t e = 0; e < m; ++e) {
    const Edge& ed = g.edges[e];
    if (ed.tail < 0 || ed.tail >= g.n || ed.head < 0 || ed.head >= g.n)
      fail(errc::structural, "edge " + std::to_string(e) + " references an invalid node id");
    if (ed.tail == ed.head)
      fail(errc::structural, "edge " + std::to_string(e) + " is a self-loop");
    if (!(g.susceptance[e] > 0.0))
      fail(errc::structural, "edge " + std::to_string(e) + " has nonpositive susceptance");
    if (!(g.flow_limit[e] > 0.0))
      fail(errc::structural, "edge " + std::to_string(e) + " has nonpositive flow limit");
  }
}

IncidenceMatrix build_incidence(const Grid& g) {
  validate_grid(g);
  IncidenceMatrix a;
  a.n = g.n;
  a.m = g.m();
  a.a.assign(static_cast<size_t>(a.n) * a.m, 0);
  for (int e = 0; e < a.m; ++e) {
    a.a[static_cast<size_t>(g.edges[e].head) * a.m + e] = 1;
    a.a[static_cast<size_t>(g.edges[e].tail) * a.m + e] = -1;
  }
  return a;
}

std::vector<double> flow_from_angles(const Grid& g, const std::vector<double>& theta) {
  if (static_cast<int>(theta.size()) != g.n)
    fail(errc::contract, "theta must have one entry per node");
  std::vector<double> f(g.edges.size());
  for (size_t e = 0; e < g.edges.size(); ++e)
    f[e] = g.susceptance[e] * (theta[g.edges[e].head] - theta[g.edges[e].tail]);
  return f;
}

std::vector<FlowViolation> check_flow_limits(const Grid& g, const std::vector<double>& f,
                                             double tol) {
  if (f.size() != g.edges.size()) fail(errc::contract, "f must have one entry per edge");
  std::vector<FlowViolation> out;
  for (size_t e = 0; e < f.size(); ++e)
    if (std::fabs(f[e]) > g.flow_limit[e] + tol)
      out.push_back({static_cast<int>(e), f[e], g.flow_limit[e]});
  return out;
}

IncidentEdges incident_edges(const Grid& g) {
  IncidentEdges inc;
  inc.edge.resize(g.n);
  inc.sign.resize(g.n);
  for (int e = 0; e < g.m(); ++e) {
    inc.edge[g.edges[e].head].push_back(e);
    inc.sign[g.edges[e].head].push_back(1);
    inc.edge[g.edges[e].tail].push_back(e);
    inc.sign[g.edges[e].tail].push_back(-1);
  }
  return inc;
}

std::vector<int> components(const Grid& g) {
  std::vector<int> comp(g.n, -1);
  IncidentEdges inc = incident_edges(g);
  int next = 0;
  std::vector<int> stack;
  for (int start = 0; start < g.n; ++start) {
    if (comp[start] >= 0) continue;
    comp[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      for (int e : inc.edge[i]) {
        int j = g.edges[e].tail == i ? g.edges[e].head : g.edges[e].tail;
        if (comp[j] < 0) {
          comp[j] = next;
          stack.push_back(j);
        }
      }
    }
    ++next;
  }
  return comp;
}

bool is_forest(const Grid& g) {
  std::vector<int> comp = components(g);
  int ncomp = 0;
  for (int c : comp) ncomp = std::max(ncomp, c + 1);
  // a forest has exactly n - (#components) edges; anything more closes a cycle
  return g.m() == g.n - ncomp;
}

std::vector<double> angles_from_flows_forest(const Grid& g, const std::vector<double>& f) {
  if (!is_forest(g)) fail(errc::contract, "angle reconstruction from flows needs a forest");
  if (f.size() != g.edges.size()) fail(errc::contract, "f must have one entry per edge");
  IncidentEdges inc = incident_edges(g);
  std::vector<double> theta(g.n, 0.0);
  std::vector<char> seen(g.n, 0);
  std::vector<int> stack;
  for (int root = 0; root < g.n; ++root) {
    if (seen[root]) continue;
    seen[root] = 1;
    theta[root] = 0.0;
    stack.push_back(root);
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      for (size_t k = 0; k < inc.edge[i].size(); ++k) {
        int e = inc.edge[i][k];
        int j = g.edges[e].tail == i ? g.edges[e].head : g.edges[e].tail;
        if (seen[j]) continue;
        seen[j] = 1;
        // f_e = B_e (theta_head - theta_tail)
        double diff = f[e] / g.susceptance[e];
        theta[j] = g.edges[e].head == j ? theta[i] + diff : theta[i] - diff;
        stack.push_back(j);
      }
    }
  }
  return theta;
}

}  // namespace omgrid
