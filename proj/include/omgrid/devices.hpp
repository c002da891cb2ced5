// Per-bus device models: storage with efficiency and conversion coefficients,
// convex piecewise-linear cost of the balancing residual, disturbance support,
// price schedules, and subgradient bounds.
#pragma once

#include <vector>

#include "omgrid/errors.hpp"

namespace omgrid {

struct StorageParams {
  double lambda = 1.0;              // per-period retention, in (0, 1]
  double s_min = 0.0, s_max = 0.0;  // storage-level bounds (energy)
  double u_min = 0.0, u_max = 0.0;  // per-period charge/discharge limits, u_min <= 0 <= u_max
  double mu_c = 1.0, mu_d = 1.0;    // charge/discharge conversion coefficients, in (0, 1]
};

struct StorageCheck {
  bool boxes_ok;            // s_min <= s_max, u_min <= 0 <= u_max, coefficients in range
  bool feasible_from_min;   // lambda*s_min + u_max >= s_min
  bool feasible_from_max;   // lambda*s_max + u_min <= s_max
  bool controllable_to_max; // lambda*s_max + u_max >= s_max
  bool controllable_to_min; // lambda*s_min + u_min <= s_min
  bool frequent_acting;     // u_max - u_min < s_max - s_min (strict)

  bool all() const {
    return boxes_ok && feasible_from_min && feasible_from_max && controllable_to_max &&
           controllable_to_min && frequent_acting;
  }
};

StorageCheck validate_storage(const StorageParams& sp);

// throws errc::model naming the failed checks
void require_valid_storage(const StorageParams& sp);

// s(t+1) = lambda*s + u. Does not clamp; staying inside [s_min, s_max] is the
// controller's obligation. Throws errc::contract when u is outside its box.
double step_storage(const StorageParams& sp, double s, double u);

// Grid-side power of a storage-side control: u/mu_c when charging (u >= 0),
// mu_d*u when discharging (u < 0).
double grid_side_power(const StorageParams& sp, double u);

// One linear piece of the cost, valid on [left, next piece's left).
// The first piece's left must be -infinity. A piece with scaled_by_price
// has effective slope slope*p(t); otherwise just slope.
struct CostPiece {
  double left = 0.0;
  double slope = 0.0;
  bool scaled_by_price = false;
};

// Convex piecewise-linear cost g(r; p), anchored at g(0) = 0.
struct CostModel {
  std::vector<CostPiece> pieces;
  double p_min = 1.0, p_max = 1.0;  // price support

  // cost of the balancing residual r under p(t) = p: g(r) = p*(r)^- = p*max(-r, 0)
  static CostModel negative_part();
  // generation-style cost g(r) = p*(r)^+ = p*max(r, 0)
  static CostModel positive_part();
};

// Throws errc::model unless pieces are ordered, slopes are finite, and the
// effective slopes are nondecreasing for every price in the support.
void validate_cost(const CostModel& cm);

// Exact evaluation; throws errc::contract when p lies outside the support.
double eval_cost(const CostModel& cm, double r, double p);

// g(.; p) as max of lines (slope, intercept), one per piece, for epigraph rows.
struct CostLine {
  double slope = 0.0;
  double intercept = 0.0;
};

std::vector<CostLine> cost_linearization(const CostModel& cm, double p);

// Convex g as max of its lines; exact for validated (convex) cost models and
// cheaper than eval_cost in inner loops that already hold the linearization.
inline double eval_cost_lines(const std::vector<CostLine>& lines, double r) {
  double v = lines[0].slope * r + lines[0].intercept;
  for (size_t k = 1; k < lines.size(); ++k) {
    double w = lines[k].slope * r + lines[k].intercept;
    if (w > v) v = w;
  }
  return v;
}

struct DisturbanceSupport {
  double delta_min = 0.0, delta_max = 0.0;
};

struct SubgradBounds {
  double d_lo = 0.0, d_hi = 0.0;
};

// Bounds on the subgradient of g(.; p) over all r and all p in the support.
SubgradBounds subgradient_bounds(const CostModel& cm);

// Bounds widened over the grid-side conversion map: slopes composed with
// h'(u) in {1/mu_c, mu_d}.
SubgradBounds subgradient_bounds(const CostModel& cm, const StorageParams& sp);

// Price as a function of the period index.
struct PriceSchedule {
  enum class Kind { constant, day_night } kind = Kind::constant;
  double value = 1.0;  // constant schedule
  double day_value = 3.0, night_value = 1.0;
  int periods_per_day = 24;
  int day_start = 7, day_end = 18;  // inclusive indices within the day

  double at(long t) const {
    if (kind == Kind::constant) return value;
    long idx = t % periods_per_day;
    return (idx >= day_start && idx <= day_end) ? day_value : night_value;
  }
};

// Everything the solvers need to know about one bus.
struct BusSpec {
  StorageParams storage;
  CostModel cost;
  DisturbanceSupport support;
  PriceSchedule price;
  double s_init = 0.0;
};

// Validates the storage, cost, support, and that the schedule stays inside the
// price support; throws errc::model on failure.
void validate_bus(const BusSpec& bus);

}  // namespace omgrid
