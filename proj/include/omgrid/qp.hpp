// Small convex solves used by the distributed per-step method: a 2x2 box QP
// for the edge update and an exact proximal solve for one node's share of
// the step problem.
#pragma once

#include <vector>

#include "omgrid/devices.hpp"
#include "omgrid/errors.hpp"

namespace omgrid {

// min (1/2) x'Qx + l'x  s.t.  lo <= a'x <= hi, with Q symmetric PSD
struct BoxQp2 {
  double q00 = 0, q01 = 0, q11 = 0;
  double l0 = 0, l1 = 0;
  double a0 = 0, a1 = 0;
  double lo = 0, hi = 0;
};

struct BoxQp2Result {
  double x0 = 0, x1 = 0;
  double objective = 0;
};

BoxQp2Result solve_box_qp2(const BoxQp2& qp);

// One node's proximal problem:
//   min  kappa*u + g(r; price) + (rho/2) sum_e (f_hat_e - center_e)^2
//   s.t. u_lo <= u <= u_hi,
//        r = h(u) + sum_e sign_e * f_hat_e - delta
// where h(u) = u/mu_c for u >= 0 and mu_d*u for u < 0. Solved exactly by
// enumerating cost pieces and charge/discharge branches; no iteration.
struct ProxNodeProblem {
  double kappa = 0;
  CostModel cost;
  double price = 1;
  double u_lo = 0, u_hi = 0;
  double mu_c = 1, mu_d = 1;
  double delta = 0;
  std::vector<double> sign;    // +1 when the node is the edge head, -1 tail
  std::vector<double> center;  // proximal target per incident edge
  double rho = 1;
};

struct ProxNodeResult {
  double u = 0, r = 0;
  std::vector<double> f_hat;
  double objective = 0;
};

ProxNodeResult prox_node(const ProxNodeProblem& p);

}  // namespace omgrid
