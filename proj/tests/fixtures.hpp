#pragma once

#include "flock/flock.hpp"

namespace fixtures {

// Two identical clouds 10 ms apart, two VMs exchanging 5 units of demand.
inline flock::Instance pair_instance() {
  flock::Instance inst;
  inst.num_clouds = 2;
  inst.num_vms = 2;
  inst.delta = 1.0;
  inst.tau = {0.0, 10.0, 10.0, 0.0};
  inst.gamma = {100.0, 100.0};
  inst.demand = {0.0, 5.0, 5.0, 0.0};
  inst.self_demand = {0.0, 0.0};
  inst.strategy_sets = {{0, 1}, {0, 1}};
  inst.finalize();
  return inst;
}

// Expected values for pair_instance, derived independently from the
// closed-form definitions and frozen as the binary64 results of the written
// evaluation order. Values that only involve +,*,/ are IEEE-exact on any
// platform and are compared bitwise; values passing through exp() are
// compared within a few ULP to absorb libm variation.
//
// split state sigma = (0, 1):
//   load = (5, 5); rho = 5/95
inline constexpr double kRhoSplit = 0.05263157894736842;
//   l(0,1) = 10 + 2 * 5/95; also each VM's utility and each cloud's weight
inline constexpr double kLat01Split = 10.105263157894736;
//   f(w) = exp(-1/(w+9)): f(0) and f(l(0,1))
inline constexpr double kFAt0 = 0.8948393168143698;
inline constexpr double kFAtL01 = 0.9490046335759984;
//   C = 2 * l(0,1) * f(l(0,1))
inline constexpr double kCostSplit = 19.179883120693862;
// co-located state sigma = (0, 0):
//   load = (10, 0); l(0,0) = 2 * 10/90
inline constexpr double kLat00Col = 0.2222222222222222;
//   utility = (d * l) / d does not round-trip here: one ULP above l(0,0)
inline constexpr double kUtilCol = 0.22222222222222224;
inline constexpr double kWeightCol = 0.4444444444444445;
inline constexpr double kFAtWCol = 0.8995304689650397;
inline constexpr double kCostCol = 0.3997913195400177;
// VM 1's utility on cloud 0 under the unshifted split loads: 2 * 5/95
inline constexpr double kUtil10Split = 0.10526315789473684;
// migration test, VM 1 moving 1 -> 0 out of the split state, eta = 0.9:
//   target side  u_1(0) f(w_0 + u_1(0)) with anticipated u_1(0)
inline constexpr double kTestTarget = 0.2110168723464028;
//   incumbent side  0.9 * u_1(1) * f(w_1 - u_1(1)) = 0.9 * l(0,1) * f(0)
inline constexpr double kTestIncumbent = 8.138328102395953;
// closed_form_lambda(a=9, w_min=w_max=10): eps=1e-6 and eps=0
inline constexpr double kClosedFormA9 = 1.0183135110119885;
inline constexpr double kClosedFormA9Eps0 = 1.0183145110119887;
// adaptive eta landmarks
inline constexpr double kExpNegHalf = 0.6065306597126334;
inline constexpr double kExpNegOne = 0.36787944117144233;
// l(0,0) at co-located loads plus a mover surcharge of 10 * 0.1
inline constexpr double kPenalizedL00 = 1.2222222222222223;

// One mobile VM shuttling between two mirror-image clouds of pinned VMs.
// Each direction of the shuttle passes the migration test at eta = 1 (the
// incumbent side's f(w_x - u) argument stays ahead of the target side's
// f(w_y + u) argument by construction), so the plain protocol oscillates
// until the round cap. The margin is under 1%, so any recency-driven eta
// discount kills the cycle after one move.
inline flock::Instance shuttle_instance() {
  flock::Instance inst;
  inst.num_clouds = 2;
  inst.num_vms = 7;
  inst.delta = 1.0;
  inst.tau = {0.0, 0.0, 0.0, 0.0};
  inst.gamma = {50.0, 50.0};
  inst.demand.assign(49, 0.0);
  inst.self_demand = {12.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0};
  inst.strategy_sets = {{0, 1}, {0}, {0}, {0}, {1}, {1}, {1}};
  inst.finalize();
  return inst;
}

inline flock::Outcome shuttle_start() { return {{0, 0, 0, 0, 1, 1, 1}}; }

}  // namespace fixtures
