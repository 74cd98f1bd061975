#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "flock/errors.hpp"
#include "flock/regularize.hpp"

namespace flock {

// Placement of every VM: assignment[i] is the cloud index hosting VM i.
struct Outcome {
  std::vector<int> assignment;

  bool operator==(const Outcome&) const = default;
};

// Immutable problem instance.
//
// tau and demand are stored as dense row-major matrices; both are symmetric
// with zero diagonal. Fill the primary fields, then call finalize() once: it
// validates every invariant and builds the derived caches (peer lists, total
// demand per VM). Instances must not be mutated afterwards.
struct Instance {
  int num_clouds = 0;
  int num_vms = 0;
  double delta = 1.0;           // processing-delay scale
  std::vector<double> tau;      // m*m network latency between cloud pairs
  std::vector<double> gamma;    // m capacities
  std::vector<double> demand;   // n*n pairwise communication demand
  std::vector<double> self_demand;                // n
  std::vector<std::vector<int>> strategy_sets;    // n; admissible clouds per VM

  struct Peer {
    int vm;
    double demand;
    bool operator==(const Peer&) const = default;
  };
  // Derived by finalize().
  std::vector<std::vector<Peer>> peers;  // n; ascending by vm id
  std::vector<double> vm_demand;         // n; self_demand[i] + sum of peer demands

  bool operator==(const Instance&) const = default;

  double tau_at(int x, int y) const { return tau[static_cast<std::size_t>(x) * num_clouds + y]; }
  double demand_at(int i, int j) const { return demand[static_cast<std::size_t>(i) * num_vms + j]; }

  void finalize() {
    const auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    if (num_clouds < 1) fail("need at least one cloud");
    if (num_vms < 0) fail("negative VM count");
    if (!(delta > 0.0)) fail("delta must be positive");
    const std::size_t m = static_cast<std::size_t>(num_clouds);
    const std::size_t n = static_cast<std::size_t>(num_vms);
    if (tau.size() != m * m) fail("tau must be num_clouds x num_clouds");
    if (gamma.size() != m) fail("gamma must have num_clouds entries");
    if (demand.size() != n * n) fail("demand must be num_vms x num_vms");
    if (self_demand.size() != n) fail("self_demand must have num_vms entries");
    if (strategy_sets.size() != n) fail("strategy_sets must have num_vms entries");
    for (int x = 0; x < num_clouds; ++x) {
      if (!(gamma[static_cast<std::size_t>(x)] > 0.0)) fail("capacities must be positive");
      if (tau_at(x, x) != 0.0) fail("tau diagonal must be zero");
      for (int y = 0; y < num_clouds; ++y) {
        if (tau_at(x, y) < 0.0) fail("tau must be non-negative");
        if (tau_at(x, y) != tau_at(y, x)) fail("tau must be symmetric");
      }
    }
    for (int i = 0; i < num_vms; ++i) {
      if (self_demand[static_cast<std::size_t>(i)] < 0.0) fail("self_demand must be non-negative");
      if (demand_at(i, i) != 0.0) fail("demand diagonal must be zero");
      for (int j = 0; j < num_vms; ++j) {
        if (demand_at(i, j) < 0.0) fail("demand must be non-negative");
        if (demand_at(i, j) != demand_at(j, i)) fail("demand must be symmetric");
      }
      auto& set = strategy_sets[static_cast<std::size_t>(i)];
      if (set.empty()) fail("every VM needs a non-empty strategy set");
      std::sort(set.begin(), set.end());
      set.erase(std::unique(set.begin(), set.end()), set.end());
      if (set.front() < 0 || set.back() >= num_clouds) fail("strategy set entry out of range");
    }
    peers.assign(n, {});
    vm_demand.assign(n, 0.0);
    for (int i = 0; i < num_vms; ++i) {
      double total = self_demand[static_cast<std::size_t>(i)];
      for (int j = 0; j < num_vms; ++j) {
        const double d = demand_at(i, j);
        if (j != i && d > 0.0) {
          peers[static_cast<std::size_t>(i)].push_back({j, d});
          total += d;
        }
      }
      vm_demand[static_cast<std::size_t>(i)] = total;
    }
  }
};

// Load a VM contributes to its host: own demand plus all pairwise demand.
inline double total_demand(const Instance& inst, int vm) {
  return inst.vm_demand[static_cast<std::size_t>(vm)];
}

// Per-cloud load sums, accumulated in ascending VM order (summation order is
// part of the determinism contract).
inline std::vector<double> cloud_loads(const Instance& inst, const Outcome& out) {
  std::vector<double> load(static_cast<std::size_t>(inst.num_clouds), 0.0);
  for (int i = 0; i < inst.num_vms; ++i) {
    load[static_cast<std::size_t>(out.assignment[static_cast<std::size_t>(i)])] +=
        inst.vm_demand[static_cast<std::size_t>(i)];
  }
  return load;
}

// Queueing delay delta * L / (gamma - L). Defined only for L < gamma; the
// strict inequality keeps the pole out of reach.
inline double processing_delay_from_load(const Instance& inst, int cloud, double load) {
  const double cap = inst.gamma[static_cast<std::size_t>(cloud)];
  if (load >= cap) throw OverloadedCloud(cloud, load, cap);
  return inst.delta * load / (cap - load);
}

inline double processing_delay(const Instance& inst, const Outcome& out, int cloud) {
  return processing_delay_from_load(inst, cloud, cloud_loads(inst, out)[static_cast<std::size_t>(cloud)]);
}

// l(x, y) = tau(x, y) + rho(x) + rho(y). The processing delays are added to
// each other first; with symmetric tau storage this makes l(x, y) and l(y, x)
// bit-identical, not merely equal up to rounding.
inline double pair_latency_from_loads(const Instance& inst, int x, int y,
                                      const std::vector<double>& load) {
  const double rx = processing_delay_from_load(inst, x, load[static_cast<std::size_t>(x)]);
  const double ry = processing_delay_from_load(inst, y, load[static_cast<std::size_t>(y)]);
  return inst.tau_at(x, y) + (rx + ry);
}

inline double pair_latency(const Instance& inst, const Outcome& out, int x, int y) {
  return pair_latency_from_loads(inst, x, y, cloud_loads(inst, out));
}

// Demand-weighted mean latency of VM i if hosted on `cloud`, evaluated against
// the peers' positions in `assignment` under the given loads. Peers are
// visited in ascending id order. A VM with no positive-demand peers falls back
// to the processing delay of its own cloud.
//
// mover_penalty / peer_penalty hook in per-migration surcharges; both default
// to zero, and adding 0.0 is exact, so the plain path and a zero-cost
// penalized path produce identical bits.
inline double utility_from_loads(const Instance& inst, const std::vector<int>& assignment, int vm,
                                 int cloud, const std::vector<double>& load,
                                 double mover_penalty = 0.0,
                                 const std::vector<double>* peer_penalty = nullptr) {
  const auto& ps = inst.peers[static_cast<std::size_t>(vm)];
  if (ps.empty()) {
    const double rho =
        processing_delay_from_load(inst, cloud, load[static_cast<std::size_t>(cloud)]);
    return rho + mover_penalty;
  }
  double num = 0.0;
  double den = 0.0;
  for (const auto& p : ps) {
    const int pc = assignment[static_cast<std::size_t>(p.vm)];
    double l = pair_latency_from_loads(inst, cloud, pc, load);
    l += mover_penalty;
    if (peer_penalty != nullptr) l += (*peer_penalty)[static_cast<std::size_t>(p.vm)];
    num += p.demand * l;
    den += p.demand;
  }
  return num / den;
}

// Utility u_i(cloud). With anticipate set, the loads are those of the
// hypothetical outcome in which i alone has moved to `cloud` (peers stay put);
// the move's feasibility is enforced through the processing-delay evaluation.
// Without it, the current outcome's loads are used as-is.
inline double vm_utility(const Instance& inst, const Outcome& out, int vm, int cloud,
                         bool anticipate) {
  std::vector<double> load = cloud_loads(inst, out);
  if (anticipate) {
    const int cur = out.assignment[static_cast<std::size_t>(vm)];
    if (cur != cloud) {
      const double d = inst.vm_demand[static_cast<std::size_t>(vm)];
      load[static_cast<std::size_t>(cur)] -= d;
      load[static_cast<std::size_t>(cloud)] += d;
    }
  }
  return utility_from_loads(inst, out.assignment, vm, cloud, load);
}

// Weight of a cloud: sum of the hosted VMs' utilities at the current outcome,
// in ascending VM order. Every summand is non-negative, so w_x - u_i(x) >= 0
// holds exactly in floating point for any hosted i.
inline std::vector<double> cloud_weights(const Instance& inst, const Outcome& out) {
  const std::vector<double> load = cloud_loads(inst, out);
  std::vector<double> w(static_cast<std::size_t>(inst.num_clouds), 0.0);
  for (int i = 0; i < inst.num_vms; ++i) {
    const int x = out.assignment[static_cast<std::size_t>(i)];
    w[static_cast<std::size_t>(x)] += utility_from_loads(inst, out.assignment, i, x, load);
  }
  return w;
}

inline double cloud_weight(const Instance& inst, const Outcome& out, int cloud) {
  return cloud_weights(inst, out)[static_cast<std::size_t>(cloud)];
}

inline double social_cost_from_weights(const std::vector<double>& w, const RegFn& reg) {
  double c = 0.0;
  for (double wx : w) c += wx * reg(wx);
  return c;
}

// C(sigma) = sum_x w_x f(w_x), clouds in ascending index order. Idle clouds
// contribute exactly zero.
inline double social_cost(const Instance& inst, const Outcome& out, const RegFn& reg) {
  return social_cost_from_weights(cloud_weights(inst, out), reg);
}

inline bool is_feasible(const Instance& inst, const Outcome& out) {
  if (out.assignment.size() != static_cast<std::size_t>(inst.num_vms)) return false;
  const std::vector<double> load = cloud_loads(inst, out);
  for (int x = 0; x < inst.num_clouds; ++x) {
    if (load[static_cast<std::size_t>(x)] >= inst.gamma[static_cast<std::size_t>(x)]) return false;
  }
  return true;
}

inline void require_feasible(const Instance& inst, const Outcome& out) {
  if (out.assignment.size() != static_cast<std::size_t>(inst.num_vms)) {
    throw std::invalid_argument("assignment length does not match VM count");
  }
  const std::vector<double> load = cloud_loads(inst, out);
  for (int x = 0; x < inst.num_clouds; ++x) {
    const double cap = inst.gamma[static_cast<std::size_t>(x)];
    if (load[static_cast<std::size_t>(x)] >= cap) {
      throw OverloadedCloud(x, load[static_cast<std::size_t>(x)], cap);
    }
  }
}

}  // namespace flock
