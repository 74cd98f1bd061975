#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "flock/model.hpp"

namespace flock {
namespace cost {

// How migration cost feeds back into the migration test.
//   none:        costs tracked nowhere, test unchanged
//   penalty:     target-side latencies get surcharged by both endpoints' costs
//   adaptive_eta: the acceptance threshold tightens for recently mobile VMs
enum class Variant { none, penalty, adaptive_eta };

struct Params {
  double beta = 0.9;    // forgetting factor, weight on history
  double coeff = 10.0;  // linear cost per unit of recency
  // Optional per-VM overrides; empty means the scalar applies to every VM.
  std::vector<double> beta_per_vm;
  std::vector<double> coeff_per_vm;
};

// Per-VM exponential-forgetting trace of migration activity. R_i stays in
// [0, 1]: it is a convex combination of {0, 1} indicators.
struct State {
  std::vector<double> R;
  std::vector<double> beta;
  std::vector<double> coeff;

  static State init(int num_vms, const Params& p) {
    const std::size_t n = static_cast<std::size_t>(num_vms);
    if (!p.beta_per_vm.empty() && p.beta_per_vm.size() != n) {
      throw std::invalid_argument("beta_per_vm length must match VM count");
    }
    if (!p.coeff_per_vm.empty() && p.coeff_per_vm.size() != n) {
      throw std::invalid_argument("coeff_per_vm length must match VM count");
    }
    State s;
    s.R.assign(n, 0.0);
    s.beta = p.beta_per_vm.empty() ? std::vector<double>(n, p.beta) : p.beta_per_vm;
    s.coeff = p.coeff_per_vm.empty() ? std::vector<double>(n, p.coeff) : p.coeff_per_vm;
    for (double b : s.beta) {
      if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
    }
    for (double c : s.coeff) {
      if (!(c >= 0.0)) throw std::invalid_argument("cost coefficient must be non-negative");
    }
    return s;
  }
};

// End-of-round update: R_i <- beta_i R_i + (1 - beta_i) g_i with g_i = 1 iff
// VM i migrated during the round.
inline void update_recency(State& s, const std::vector<std::uint8_t>& migrated) {
  if (migrated.size() != s.R.size()) {
    throw std::invalid_argument("migration indicator length must match VM count");
  }
  for (std::size_t i = 0; i < s.R.size(); ++i) {
    const double g = migrated[i] ? 1.0 : 0.0;
    s.R[i] = s.beta[i] * s.R[i] + (1.0 - s.beta[i]) * g;
  }
}

// Linear migration cost C_i = coeff_i * R_i.
inline double migration_cost(const State& s, int vm) {
  return s.coeff[static_cast<std::size_t>(vm)] * s.R[static_cast<std::size_t>(vm)];
}

// Per-VM acceptance threshold eta_i = exp(-R_i), in [exp(-1), 1]. A VM that
// migrates every round converges to the most conservative threshold.
inline double adaptive_eta(const State& s, int vm) {
  return std::exp(-s.R[static_cast<std::size_t>(vm)]);
}

// Latency VM i would see toward peer j after moving to cloud y, surcharged by
// both endpoints' migration costs. Loads are those of the hypothetical outcome
// with i alone moved (so the move's feasibility is enforced here too).
inline double penalized_latency(const Instance& inst, const Outcome& out, const State& s, int vm,
                                int target, int peer) {
  std::vector<double> load = cloud_loads(inst, out);
  const int cur = out.assignment[static_cast<std::size_t>(vm)];
  if (cur != target) {
    const double d = inst.vm_demand[static_cast<std::size_t>(vm)];
    load[static_cast<std::size_t>(cur)] -= d;
    load[static_cast<std::size_t>(target)] += d;
  }
  const int pc = out.assignment[static_cast<std::size_t>(peer)];
  return pair_latency_from_loads(inst, target, pc, load) + migration_cost(s, vm) +
         migration_cost(s, peer);
}

}  // namespace cost
}  // namespace flock
