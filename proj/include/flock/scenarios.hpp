#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "flock/errors.hpp"
#include "flock/model.hpp"
#include "flock/rng.hpp"

namespace flock {

// Random-instance family. Latencies and capacities are uniform; the
// communication graph is binomial with pairwise demand uniform on d_range.
// When mean_degree > 0 the edge probability becomes
// min(1, mean_degree / (n - 1)), which keeps expected load flat as n grows
// instead of quadratic.
struct GenParams {
  int num_clouds = 5;
  int num_vms = 8;
  std::array<double, 2> tau_range{10.0, 100.0};
  std::array<double, 2> gamma_range{50.0, 100.0};
  std::array<double, 2> d_range{1.0, 10.0};
  double edge_prob = 0.5;
  double mean_degree = 0.0;
  double delta = 1.0;
  std::uint64_t seed = 1;
};

namespace detail {

inline void check_gen(const GenParams& p) {
  if (p.num_clouds < 1 || p.num_vms < 0) throw std::invalid_argument("bad instance dimensions");
  const auto ordered = [](const std::array<double, 2>& r) { return r[0] <= r[1]; };
  if (!ordered(p.tau_range) || p.tau_range[0] < 0.0) throw std::invalid_argument("bad tau range");
  if (!ordered(p.gamma_range) || !(p.gamma_range[0] > 0.0)) {
    throw std::invalid_argument("bad gamma range");
  }
  if (!ordered(p.d_range) || p.d_range[0] < 0.0) throw std::invalid_argument("bad demand range");
  if (!(p.edge_prob >= 0.0 && p.edge_prob <= 1.0)) throw std::invalid_argument("bad edge probability");
  if (p.mean_degree < 0.0) throw std::invalid_argument("bad mean degree");
  if (!(p.delta > 0.0)) throw std::invalid_argument("bad delta");
}

inline Instance blank(const GenParams& p) {
  Instance inst;
  inst.num_clouds = p.num_clouds;
  inst.num_vms = p.num_vms;
  inst.delta = p.delta;
  const std::size_t m = static_cast<std::size_t>(p.num_clouds);
  const std::size_t n = static_cast<std::size_t>(p.num_vms);
  inst.tau.assign(m * m, 0.0);
  inst.gamma.assign(m, 0.0);
  inst.demand.assign(n * n, 0.0);
  inst.self_demand.assign(n, 0.0);
  std::vector<int> all(m);
  std::iota(all.begin(), all.end(), 0);
  inst.strategy_sets.assign(n, all);
  return inst;
}

}  // namespace detail

// Draw order (fixed, part of the seed contract): latencies for pairs (x, y)
// with x < y in row order, then capacities, then for each VM pair (i, j) with
// i < j one edge draw followed by one demand draw when the edge exists.
inline Instance gen_random_instance(const GenParams& p) {
  detail::check_gen(p);
  Rng rng(p.seed);
  Instance inst = detail::blank(p);
  for (int x = 0; x < p.num_clouds; ++x) {
    for (int y = x + 1; y < p.num_clouds; ++y) {
      const double t = rng.uniform(p.tau_range[0], p.tau_range[1]);
      inst.tau[static_cast<std::size_t>(x) * p.num_clouds + y] = t;
      inst.tau[static_cast<std::size_t>(y) * p.num_clouds + x] = t;
    }
  }
  for (int x = 0; x < p.num_clouds; ++x) {
    inst.gamma[static_cast<std::size_t>(x)] = rng.uniform(p.gamma_range[0], p.gamma_range[1]);
  }
  double prob = p.edge_prob;
  if (p.mean_degree > 0.0 && p.num_vms > 1) {
    prob = std::min(1.0, p.mean_degree / (p.num_vms - 1));
  }
  for (int i = 0; i < p.num_vms; ++i) {
    for (int j = i + 1; j < p.num_vms; ++j) {
      if (!rng.bernoulli(prob)) continue;
      const double d = rng.uniform(p.d_range[0], p.d_range[1]);
      inst.demand[static_cast<std::size_t>(i) * p.num_vms + j] = d;
      inst.demand[static_cast<std::size_t>(j) * p.num_vms + i] = d;
    }
  }
  inst.finalize();
  return inst;
}

// Isolated VMs with private demand on zero-latency clouds: load balancing in
// its pure form. Draw order: capacities, then per-VM demand.
inline Instance preset_load_balancing(const GenParams& p) {
  detail::check_gen(p);
  Rng rng(p.seed);
  Instance inst = detail::blank(p);
  for (int x = 0; x < p.num_clouds; ++x) {
    inst.gamma[static_cast<std::size_t>(x)] = rng.uniform(p.gamma_range[0], p.gamma_range[1]);
  }
  for (int i = 0; i < p.num_vms; ++i) {
    inst.self_demand[static_cast<std::size_t>(i)] = rng.uniform(p.d_range[0], p.d_range[1]);
  }
  inst.finalize();
  return inst;
}

// Complete unit-demand communication graph with network latencies so large
// that consolidation dominates: VMs herd onto few clouds and the rest idle.
// Draw order: capacities only.
inline Instance preset_energy(const GenParams& p, double tau_big = 1e6) {
  detail::check_gen(p);
  if (!(tau_big > 0.0)) throw std::invalid_argument("tau_big must be positive");
  Rng rng(p.seed);
  Instance inst = detail::blank(p);
  for (int x = 0; x < p.num_clouds; ++x) {
    for (int y = x + 1; y < p.num_clouds; ++y) {
      inst.tau[static_cast<std::size_t>(x) * p.num_clouds + y] = tau_big;
      inst.tau[static_cast<std::size_t>(y) * p.num_clouds + x] = tau_big;
    }
  }
  for (int x = 0; x < p.num_clouds; ++x) {
    inst.gamma[static_cast<std::size_t>(x)] = rng.uniform(p.gamma_range[0], p.gamma_range[1]);
  }
  for (int i = 0; i < p.num_vms; ++i) {
    for (int j = i + 1; j < p.num_vms; ++j) {
      inst.demand[static_cast<std::size_t>(i) * p.num_vms + j] = 1.0;
      inst.demand[static_cast<std::size_t>(j) * p.num_vms + i] = 1.0;
    }
  }
  inst.finalize();
  return inst;
}

// Feasible starting point: VMs in a random permutation each pick a uniformly
// random cloud among the feasible ones; retried across permutations, then a
// deterministic first-fit-decreasing pass as a last resort.
inline Outcome initial_assignment(const Instance& inst, Rng& rng, int max_attempts = 32) {
  const int n = inst.num_vms;
  Outcome out;
  out.assignment.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> load(static_cast<std::size_t>(inst.num_clouds), 0.0);
  std::vector<int> feas;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::fill(load.begin(), load.end(), 0.0);
    const std::vector<int> perm = rng.permutation(n);
    bool ok = true;
    for (int i : perm) {
      const double d = inst.vm_demand[static_cast<std::size_t>(i)];
      feas.clear();
      for (int y : inst.strategy_sets[static_cast<std::size_t>(i)]) {
        if (load[static_cast<std::size_t>(y)] + d < inst.gamma[static_cast<std::size_t>(y)]) feas.push_back(y);
      }
      if (feas.empty()) {
        ok = false;
        break;
      }
      const int y = feas[static_cast<std::size_t>(rng.index(static_cast<int>(feas.size())))];
      out.assignment[static_cast<std::size_t>(i)] = y;
      load[static_cast<std::size_t>(y)] += d;
    }
    if (ok) return out;
  }
  // First-fit decreasing: heaviest VMs first, clouds scanned in descending
  // capacity order.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return inst.vm_demand[static_cast<std::size_t>(a)] > inst.vm_demand[static_cast<std::size_t>(b)];
  });
  std::vector<int> clouds(static_cast<std::size_t>(inst.num_clouds));
  std::iota(clouds.begin(), clouds.end(), 0);
  std::stable_sort(clouds.begin(), clouds.end(), [&](int a, int b) {
    return inst.gamma[static_cast<std::size_t>(a)] > inst.gamma[static_cast<std::size_t>(b)];
  });
  std::fill(load.begin(), load.end(), 0.0);
  for (int i : order) {
    const double d = inst.vm_demand[static_cast<std::size_t>(i)];
    const auto& set = inst.strategy_sets[static_cast<std::size_t>(i)];
    int placed = -1;
    for (int y : clouds) {
      if (std::find(set.begin(), set.end(), y) == set.end()) continue;
      if (load[static_cast<std::size_t>(y)] + d < inst.gamma[static_cast<std::size_t>(y)]) {
        placed = y;
        break;
      }
    }
    if (placed < 0) throw NoFeasibleAssignment("initial placement failed for VM " + std::to_string(i));
    out.assignment[static_cast<std::size_t>(i)] = placed;
    load[static_cast<std::size_t>(placed)] += d;
  }
  return out;
}

// Per-cloud utilization if total load were spread proportionally to capacity:
// every cloud sits at total_demand / total_capacity.
inline std::vector<double> ideal_balanced_utilization(const Instance& inst) {
  double total_d = 0.0;
  for (double d : inst.vm_demand) total_d += d;
  double total_g = 0.0;
  for (double g : inst.gamma) total_g += g;
  return std::vector<double>(static_cast<std::size_t>(inst.num_clouds), total_d / total_g);
}

struct IdleBound {
  int idle = 0;
  bool exact = true;  // false when the packing search fell back to first-fit
};

namespace detail {

// Can the items (descending) be packed into the `k` largest capacities with
// strict per-bin slack? Any packing into some k clouds maps onto the k largest
// ones, so restricting to them loses nothing.
struct PackSearch {
  const std::vector<double>& items;
  std::vector<double> caps;  // k largest, descending
  std::vector<double> load;
  std::int64_t nodes = 0;
  std::int64_t budget;

  bool fits(std::size_t t) {
    if (t == items.size()) return true;
    if (++nodes > budget) throw BudgetExceeded("packing search budget exhausted");
    for (std::size_t b = 0; b < caps.size(); ++b) {
      // identical (capacity, load) bins are interchangeable; try one
      bool dup = false;
      for (std::size_t o = 0; o < b; ++o) {
        if (caps[o] == caps[b] && load[o] == load[b]) {
          dup = true;
          break;
        }
      }
      if (dup) continue;
      const double prev = load[b];  // exact restore, no subtraction drift
      if (prev + items[t] >= caps[b]) continue;
      load[b] = prev + items[t];
      if (fits(t + 1)) return true;
      load[b] = prev;
    }
    return false;
  }
};

}  // namespace detail

// Largest achievable number of idle clouds: m minus the minimum number of
// clouds that can host every positive load. Exact via packing search at desk
// scale; falls back to a first-fit-decreasing estimate (flagged) when the
// search budget runs out.
inline IdleBound ideal_idle_clouds(const Instance& inst, std::int64_t budget = 2'000'000) {
  std::vector<double> items;
  for (double d : inst.vm_demand) {
    if (d > 0.0) items.push_back(d);
  }
  if (items.empty()) return {inst.num_clouds, true};
  std::sort(items.begin(), items.end(), std::greater<double>());
  std::vector<double> caps = inst.gamma;
  std::sort(caps.begin(), caps.end(), std::greater<double>());

  const double total = std::accumulate(items.begin(), items.end(), 0.0);
  double cap_sum = 0.0;
  int lower = inst.num_clouds + 1;
  for (int k = 1; k <= inst.num_clouds; ++k) {
    cap_sum += caps[static_cast<std::size_t>(k - 1)];
    if (total < cap_sum) {
      lower = k;
      break;
    }
  }

  std::int64_t nodes_left = budget;
  for (int k = lower; k <= inst.num_clouds; ++k) {
    detail::PackSearch ps{items,
                          std::vector<double>(caps.begin(), caps.begin() + k),
                          std::vector<double>(static_cast<std::size_t>(k), 0.0),
                          0,
                          nodes_left};
    try {
      if (ps.fits(0)) return {inst.num_clouds - k, true};
    } catch (const BudgetExceeded&) {
      break;  // give up on exactness, estimate below
    }
    nodes_left -= ps.nodes;
  }

  // First-fit decreasing over all clouds, descending capacity.
  std::vector<double> load(caps.size(), 0.0);
  for (double item : items) {
    bool placed = false;
    for (std::size_t b = 0; b < caps.size(); ++b) {
      if (load[b] + item < caps[b]) {
        load[b] += item;
        placed = true;
        break;
      }
    }
    if (!placed) throw NoFeasibleAssignment("loads do not fit even using every cloud");
  }
  int used = 0;
  for (double l : load) {
    if (l > 0.0) ++used;
  }
  return {inst.num_clouds - used, false};
}

}  // namespace flock
