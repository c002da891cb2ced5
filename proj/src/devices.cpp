#include "omgrid/devices.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace omgrid {

static constexpr double kInf = std::numeric_limits<double>::infinity();

StorageCheck validate_storage(const StorageParams& sp) {
  StorageCheck c;
  c.boxes_ok = sp.s_min <= sp.s_max && sp.u_min <= 0.0 && 0.0 <= sp.u_max &&
               sp.lambda > 0.0 && sp.lambda <= 1.0 && sp.mu_c > 0.0 && sp.mu_c <= 1.0 &&
               sp.mu_d > 0.0 && sp.mu_d <= 1.0;
  c.feasible_from_min = sp.lambda * sp.s_min + sp.u_max >= sp.s_min;
  c.feasible_from_max = sp.lambda * sp.s_max + sp.u_min <= sp.s_max;
  c.controllable_to_max = sp.lambda * sp.s_max + sp.u_max >= sp.s_max;
  c.controllable_to_min = sp.lambda * sp.s_min + sp.u_min <= sp.s_min;
  c.frequent_acting = sp.u_max - sp.u_min < sp.s_max - sp.s_min;
  return c;
}

void require_valid_storage(const StorageParams& sp) {
  StorageCheck c = validate_storage(sp);
  if (c.all()) return;
  std::string what = "storage model invalid:";
  if (!c.boxes_ok) what += " boxes/coefficients";
  if (!c.feasible_from_min) what += " feasibility-from-s_min";
  if (!c.feasible_from_max) what += " feasibility-from-s_max";
  if (!c.controllable_to_max) what += " controllability-to-s_max";
  if (!c.controllable_to_min) what += " controllability-to-s_min";
  if (!c.frequent_acting) what += " frequent-acting";
  fail(errc::model, what);
}

double step_storage(const StorageParams& sp, double s, double u) {
  if (u < sp.u_min || u > sp.u_max)
    fail(errc::contract, "control " + std::to_string(u) + " outside [" +
                             std::to_string(sp.u_min) + ", " + std::to_string(sp.u_max) + "]");
  return sp.lambda * s + u;
}

double grid_side_power(const StorageParams& sp, double u) {
  return u >= 0.0 ? u / sp.mu_c : sp.mu_d * u;
}

CostModel CostModel::negative_part() {
  CostModel cm;
  cm.pieces = {{-kInf, -1.0, true}, {0.0, 0.0, false}};
  return cm;
}

CostModel CostModel::positive_part() {
  CostModel cm;
  cm.pieces = {{-kInf, 0.0, false}, {0.0, 1.0, true}};
  return cm;
}

void validate_cost(const CostModel& cm) {
  if (cm.pieces.empty()) fail(errc::model, "cost needs at least one piece");
  if (cm.pieces.front().left != -kInf) fail(errc::model, "first cost piece must start at -inf");
  if (!(std::isfinite(cm.p_min) && std::isfinite(cm.p_max) && cm.p_min <= cm.p_max))
    fail(errc::model, "price support must be finite with p_min <= p_max");
  for (size_t k = 0; k < cm.pieces.size(); ++k) {
    if (!std::isfinite(cm.pieces[k].slope)) fail(errc::model, "cost slope must be finite");
    if (k > 0) {
      if (!std::isfinite(cm.pieces[k].left)) fail(errc::model, "breakpoints must be finite");
      if (!(cm.pieces[k - 1].left < cm.pieces[k].left))
        fail(errc::model, "breakpoints must be strictly increasing");
    }
  }
  // effective slopes are affine in p, so convexity for all p in the support is
  // equivalent to convexity at both support corners
  for (double p : {cm.p_min, cm.p_max}) {
    for (size_t k = 1; k < cm.pieces.size(); ++k) {
      double lo = cm.pieces[k - 1].slope * (cm.pieces[k - 1].scaled_by_price ? p : 1.0);
      double hi = cm.pieces[k].slope * (cm.pieces[k].scaled_by_price ? p : 1.0);
      if (lo > hi + 0.0)
        fail(errc::model, "cost slopes decrease at piece " + std::to_string(k) +
                              " for price " + std::to_string(p));
    }
  }
}

std::vector<CostLine> cost_linearization(const CostModel& cm, double p) {
  // values at breakpoints by integrating slopes outward from the g(0) = 0 anchor
  std::vector<CostLine> lines(cm.pieces.size());
  size_t k0 = 0;  // piece containing r = 0
  for (size_t k = 0; k < cm.pieces.size(); ++k)
    if (cm.pieces[k].left <= 0.0) k0 = k;
  for (size_t k = 0; k < cm.pieces.size(); ++k)
    lines[k].slope = cm.pieces[k].slope * (cm.pieces[k].scaled_by_price ? p : 1.0);
  // intercept of the anchored piece: g(0) = 0 => intercept = 0
  lines[k0].intercept = 0.0;
  // walk right: continuity at each breakpoint
  for (size_t k = k0 + 1; k < cm.pieces.size(); ++k) {
    double b = cm.pieces[k].left;
    lines[k].intercept = lines[k - 1].slope * b + lines[k - 1].intercept - lines[k].slope * b;
  }
  // walk left
  for (size_t k = k0; k-- > 0;) {
    double b = cm.pieces[k + 1].left;
    lines[k].intercept = lines[k + 1].slope * b + lines[k + 1].intercept - lines[k].slope * b;
  }
  return lines;
}

double eval_cost(const CostModel& cm, double r, double p) {
  if (p < cm.p_min || p > cm.p_max)
    fail(errc::contract, "price " + std::to_string(p) + " outside support [" +
                             std::to_string(cm.p_min) + ", " + std::to_string(cm.p_max) + "]");
  size_t k = 0;
  for (size_t j = 0; j < cm.pieces.size(); ++j)
    if (cm.pieces[j].left <= r) k = j;
  std::vector<CostLine> lines = cost_linearization(cm, p);
  return lines[k].slope * r + lines[k].intercept;
}

SubgradBounds subgradient_bounds(const CostModel& cm) {
  validate_cost(cm);
  SubgradBounds b{kInf, -kInf};
  for (const CostPiece& piece : cm.pieces) {
    for (double p : {cm.p_min, cm.p_max}) {
      double s = piece.slope * (piece.scaled_by_price ? p : 1.0);
      b.d_lo = std::min(b.d_lo, s);
      b.d_hi = std::max(b.d_hi, s);
    }
  }
  return b;
}

SubgradBounds subgradient_bounds(const CostModel& cm, const StorageParams& sp) {
  SubgradBounds b = subgradient_bounds(cm);
  // compose with h'(u) in {1/mu_c, mu_d}
  SubgradBounds w;
  w.d_lo = std::min(b.d_lo / sp.mu_c, b.d_lo * sp.mu_d);
  w.d_hi = std::max(b.d_hi / sp.mu_c, b.d_hi * sp.mu_d);
  return w;
}

void validate_bus(const BusSpec& bus) {
  require_valid_storage(bus.storage);
  validate_cost(bus.cost);
  if (!(bus.support.delta_min <= bus.support.delta_max))
    fail(errc::model, "disturbance support must have delta_min <= delta_max");
  if (bus.s_init < bus.storage.s_min || bus.s_init > bus.storage.s_max)
    fail(errc::model, "initial storage level outside [s_min, s_max]");
  const PriceSchedule& ps = bus.price;
  if (ps.kind == PriceSchedule::Kind::constant) {
    if (ps.value < bus.cost.p_min || ps.value > bus.cost.p_max)
      fail(errc::model, "constant price outside the declared support");
  } else {
    if (ps.periods_per_day < 1 || ps.day_start < 0 || ps.day_end < ps.day_start ||
        ps.day_end >= ps.periods_per_day)
      fail(errc::model, "day/night schedule indices out of range");
    for (double v : {ps.day_value, ps.night_value})
      if (v < bus.cost.p_min || v > bus.cost.p_max)
        fail(errc::model, "schedule price outside the declared support");
  }
}

}  // namespace omgrid
