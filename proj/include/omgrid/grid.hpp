// Network topology: directed edges with susceptance and flow limit, the
// node-edge incidence structure, and the DC flow relation f_e = B_e (theta_head - theta_tail).
//
// Sign convention: A[i,e] is +1 when i is the head of e and -1 when i is the
// tail; the node balance reads delta_i + r_i = u_i + sum_e A[i,e] f_e, so
// A[i,e]*f_e is flow out of node i.
#pragma once

#include <cstdint>
#include <vector>

#include "omgrid/errors.hpp"

namespace omgrid {

struct Edge {
  int tail = -1;
  int head = -1;
};

struct Grid {
  int n = 0;
  std::vector<Edge> edges;
  std::vector<double> susceptance;  // B_e > 0, per edge
  std::vector<double> flow_limit;   // F^max_e > 0, per edge (symmetric limit)

  int m() const { return static_cast<int>(edges.size()); }
};

// Throws errc::structural on invalid node ids, self-loops, or nonpositive
// susceptance / flow limits.
void validate_grid(const Grid& g);

struct IncidenceMatrix {
  int n = 0, m = 0;
  std::vector<int8_t> a;  // row-major n x m, entries in {-1, 0, +1}

  int operator()(int i, int e) const { return a[static_cast<size_t>(i) * m + e]; }
};

IncidenceMatrix build_incidence(const Grid& g);

// f_e = B_e * (theta_head - theta_tail)
std::vector<double> flow_from_angles(const Grid& g, const std::vector<double>& theta);

struct FlowViolation {
  int edge;
  double flow;
  double limit;
};

// Edges with |f_e| > F^max_e + tol; empty means feasible.
std::vector<FlowViolation> check_flow_limits(const Grid& g, const std::vector<double>& f,
                                             double tol);

// Edges incident to each node in increasing edge order, with their A[i,e] signs.
struct IncidentEdges {
  std::vector<std::vector<int>> edge;  // node -> edge ids
  std::vector<std::vector<int>> sign;  // node -> A[i,e] for those edges
};

IncidentEdges incident_edges(const Grid& g);

// Connected-component id per node (ids are dense, assigned by lowest member).
std::vector<int> components(const Grid& g);

bool is_forest(const Grid& g);

// Angle reconstruction on a forest from edge flows; theta = 0 at the
// lowest-index node of each component. Requires is_forest(g).
std::vector<double> angles_from_flows_forest(const Grid& g, const std::vector<double>& f);

}  // namespace omgrid
