#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "flock/errors.hpp"
#include "flock/model.hpp"
#include "flock/regularize.hpp"

namespace flock {

struct OptimumResult {
  Outcome best_outcome;
  double best_cost = std::numeric_limits<double>::infinity();
  double best_sum_utility = std::numeric_limits<double>::infinity();  // sum_i u_i at best_outcome
  std::int64_t feasible_count = 0;
  std::int64_t enumerated_count = 0;  // product of strategy-set sizes
  // Smallest and largest nonzero cloud weight seen across all feasible
  // outcomes; an empirical bracket for bound construction. Zero when no
  // feasible outcome produced a nonzero weight.
  double weight_min_nonzero = 0.0;
  double weight_max_nonzero = 0.0;
};

namespace detail {

struct BruteForce {
  const Instance& inst;
  const RegFn& reg;
  std::vector<int> assign;
  std::vector<double> load;
  OptimumResult result;
  double wmin = std::numeric_limits<double>::infinity();
  double wmax = 0.0;

  explicit BruteForce(const Instance& i, const RegFn& r)
      : inst(i), reg(r),
        assign(static_cast<std::size_t>(i.num_vms), 0),
        load(static_cast<std::size_t>(i.num_clouds), 0.0) {}

  void leaf() {
    ++result.feasible_count;
    std::vector<double> w(static_cast<std::size_t>(inst.num_clouds), 0.0);
    double sum_u = 0.0;
    for (int i = 0; i < inst.num_vms; ++i) {
      const int x = assign[static_cast<std::size_t>(i)];
      const double u = utility_from_loads(inst, assign, i, x, load);
      w[static_cast<std::size_t>(x)] += u;
      sum_u += u;
    }
    double c = 0.0;
    for (double wx : w) {
      c += wx * reg(wx);
      if (wx > 0.0) {
        wmin = std::min(wmin, wx);
        wmax = std::max(wmax, wx);
      }
    }
    // Strict improvement keeps the lexicographically first argmin: the DFS
    // visits assignments in lexicographic order.
    if (c < result.best_cost) {
      result.best_cost = c;
      result.best_outcome.assignment = assign;
      result.best_sum_utility = sum_u;
    }
  }

  void dfs(int vm) {
    if (vm == inst.num_vms) {
      leaf();
      return;
    }
    const double d = inst.vm_demand[static_cast<std::size_t>(vm)];
    for (int y : inst.strategy_sets[static_cast<std::size_t>(vm)]) {
      // save/restore instead of += / -=: subtraction would leave rounding
      // drift on the backtracked load, so leaves match cloud_loads bitwise
      const double prev = load[static_cast<std::size_t>(y)];
      if (prev + d >= inst.gamma[static_cast<std::size_t>(y)]) continue;
      load[static_cast<std::size_t>(y)] = prev + d;
      assign[static_cast<std::size_t>(vm)] = y;
      dfs(vm + 1);
      load[static_cast<std::size_t>(y)] = prev;
    }
  }
};

}  // namespace detail

// Exhaustive minimum of the social cost over all feasible assignments.
// Prefixes that already overload a cloud are pruned; this loses no feasible
// leaf because loads only grow as the assignment extends. Throws
// BudgetExceeded before enumerating more than `budget` assignments and
// NoFeasibleAssignment when the feasible set is empty.
inline OptimumResult brute_force_optimum(const Instance& inst, const RegFn& reg,
                                         std::int64_t budget = 10'000'000) {
  double space = 1.0;
  for (const auto& set : inst.strategy_sets) space *= static_cast<double>(set.size());
  if (space > static_cast<double>(budget)) {
    throw BudgetExceeded("assignment space of " + std::to_string(space) +
                         " exceeds budget " + std::to_string(budget));
  }
  detail::BruteForce bf(inst, reg);
  bf.result.enumerated_count = static_cast<std::int64_t>(space);
  bf.dfs(0);
  if (bf.result.feasible_count == 0) {
    throw NoFeasibleAssignment("no assignment satisfies the capacity constraints");
  }
  bf.result.weight_min_nonzero = bf.wmax > 0.0 ? bf.wmin : 0.0;
  bf.result.weight_max_nonzero = bf.wmax;
  return bf.result;
}

// Independent equilibrium check, written directly against the model: the
// outcome is an equilibrium iff no VM has a feasible deviation with
// u_i(y) f(w_y + u_i(y)) < eta u_i(x_i) f(w_{x_i} - u_i(x_i)). The default
// eta = 1 is the exact-Nash (no strict improvement) semantics; protocol runs
// that stop under a threshold eta < 1 are certified against that same eta.
inline bool verify_nash(const Instance& inst, const Outcome& out, const RegFn& reg,
                        double eta = 1.0) {
  require_feasible(inst, out);
  const std::vector<double> load = cloud_loads(inst, out);
  const std::vector<double> w = cloud_weights(inst, out);
  for (int i = 0; i < inst.num_vms; ++i) {
    const int x = out.assignment[static_cast<std::size_t>(i)];
    const double ux = utility_from_loads(inst, out.assignment, i, x, load);
    const double incumbent = eta * (ux * reg(w[static_cast<std::size_t>(x)] - ux));
    const double d = inst.vm_demand[static_cast<std::size_t>(i)];
    for (int y : inst.strategy_sets[static_cast<std::size_t>(i)]) {
      if (y == x) continue;
      if (load[static_cast<std::size_t>(y)] + d >= inst.gamma[static_cast<std::size_t>(y)]) continue;
      const double uy = vm_utility(inst, out, i, y, true);
      if (uy * reg(w[static_cast<std::size_t>(y)] + uy) < incumbent) return false;
    }
  }
  return true;
}

// Realized inefficiency of an outcome against the exhaustive optimum. Both
// zero (an all-idle system) reads as 1.
inline double price_of_anarchy(const Instance& inst, const Outcome& out, const RegFn& reg,
                               std::int64_t budget = 10'000'000) {
  const double c = social_cost(inst, out, reg);
  const OptimumResult opt = brute_force_optimum(inst, reg, budget);
  if (opt.best_cost == 0.0) {
    return c == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return c / opt.best_cost;
}

}  // namespace flock
