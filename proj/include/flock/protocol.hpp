#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "flock/cost.hpp"
#include "flock/errors.hpp"
#include "flock/model.hpp"
#include "flock/regularize.hpp"
#include "flock/rng.hpp"

namespace flock {

// Decreasing step sizes b_k = b0 / k^exponent for round k >= 1. exponent = 0
// gives a constant step; the default is the harmonic schedule 1/k.
struct StepSchedule {
  double b0 = 1.0;
  double exponent = 1.0;

  double at(int k) const {
    if (k < 1) throw std::invalid_argument("round index starts at 1");
    if (!(b0 > 0.0) || exponent < 0.0) throw std::invalid_argument("invalid step schedule");
    return b0 / std::pow(static_cast<double>(k), exponent);
  }
};

// How a measurement-driven VM folds new information into its utility estimate.
//   additive:   u^ <- u^ + b_k f(w_x)            (stochastic-approximation form)
//   innovation: u^ <- u^ + b_k (u_measured - u^)  (tracks the measured utility)
enum class UpdateRule { additive, innovation };

struct ProtocolConfig {
  double eta = 0.9;   // acceptance threshold in (0, 1]
  RegFn reg{9.0};
  int max_rounds = 0;  // 0 means 10 * num_vms * num_clouds

  // Measurement-driven variant: per-VM scalar utility estimates replace the
  // incumbent-side utility in the migration test.
  bool controlled = false;
  StepSchedule step;
  UpdateRule update_rule = UpdateRule::additive;
  // Relative half-width of the per-round multiplicative perturbation applied
  // to every network latency (drawn fresh from the base values each round).
  double jitter = 0.0;

  cost::Variant cost_variant = cost::Variant::none;
  cost::Params cost;
};

enum class Reject { none, infeasible, insufficient_gain };

struct MigrationDecision {
  bool accept = false;
  Reject reason = Reject::none;
  double target_value = 0.0;     // u_i(y) f(w_y + u_i(y)), anticipated
  double incumbent_value = 0.0;  // eta u_i(x) f(w_x - u_i(x)), current
};

struct Migration {
  int round;
  int vm;
  int from_cloud;
  int to_cloud;
  double cost_after;     // social cost right after the move applied
  double mover_recency;  // mover's R at decision time (0 when costs are off)
};

struct RoundStat {
  int round;
  int migrations;
  double social_cost;           // at end of round
  std::vector<double> weights;  // per-cloud weights at end of round
};

enum class Terminal { equilibrium, round_cap };

struct Trace {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int rounds_elapsed = 0;
  Terminal terminal = Terminal::round_cap;
  Outcome final_outcome;
  std::vector<Migration> migrations;
  std::vector<RoundStat> rounds;

  // Diagnostics. Estimate increments apply to the measurement-driven variant;
  // recency/eta bounds to the cost variants; messages counts the pairwise
  // recency exchanges the penalty variant needs.
  double max_estimate_increment = 0.0;
  double max_increment_step_ratio = 0.0;
  double min_adaptive_eta = 1.0;
  double max_adaptive_eta = 1.0;
  double min_recency = 0.0;
  double max_recency = 0.0;
  std::int64_t cost_messages = 0;
};

// State carried across measurement-driven rounds: the estimates and the count
// of rounds already performed (the next round uses step b_{rounds+1}).
struct UtilityState {
  std::vector<double> estimate;
  int rounds = 0;
};

struct EquilibriumScan {
  bool is_equilibrium = true;
  int vm = -1;  // first (vm, target) pair whose migration test accepts, if any
  int target = -1;
};

namespace detail {

// Measured view of the current outcome: loads, per-VM utilities at their own
// clouds, per-cloud weights, social cost. Rebuilt after every applied change.
struct Snapshot {
  std::vector<double> load;
  std::vector<double> utility;
  std::vector<double> weight;
  double social = 0.0;

  void rebuild(const Instance& inst, const Outcome& out, const RegFn& reg) {
    load = cloud_loads(inst, out);
    const std::size_t n = static_cast<std::size_t>(inst.num_vms);
    utility.assign(n, 0.0);
    weight.assign(static_cast<std::size_t>(inst.num_clouds), 0.0);
    for (int i = 0; i < inst.num_vms; ++i) {
      const int x = out.assignment[static_cast<std::size_t>(i)];
      const double u = utility_from_loads(inst, out.assignment, i, x, load);
      utility[static_cast<std::size_t>(i)] = u;
      weight[static_cast<std::size_t>(x)] += u;
    }
    social = social_cost_from_weights(weight, reg);
  }
};

// One migration test against a prepared snapshot. estimates, when given,
// replace the measured incumbent-side utility; cs supplies recency for the
// cost variants (null reads as all-zero recency).
inline MigrationDecision test_move(const Instance& inst, const Outcome& out, const Snapshot& snap,
                                   const ProtocolConfig& cfg, const cost::State* cs,
                                   const std::vector<double>* estimates,
                                   const std::vector<double>* peer_penalty, int vm, int target) {
  const int x = out.assignment[static_cast<std::size_t>(vm)];
  if (target == x) throw std::invalid_argument("target equals current cloud");
  const double d = inst.vm_demand[static_cast<std::size_t>(vm)];

  MigrationDecision dec;
  const double cap = inst.gamma[static_cast<std::size_t>(target)];
  if (snap.load[static_cast<std::size_t>(target)] + d >= cap) {
    dec.reason = Reject::infeasible;
    return dec;
  }

  std::vector<double> hyp = snap.load;
  hyp[static_cast<std::size_t>(x)] -= d;
  hyp[static_cast<std::size_t>(target)] += d;
  const bool penalize = cfg.cost_variant == cost::Variant::penalty && cs != nullptr;
  const double mover_penalty = penalize ? cost::migration_cost(*cs, vm) : 0.0;
  const double uy = utility_from_loads(inst, out.assignment, vm, target, hyp, mover_penalty,
                                       penalize ? peer_penalty : nullptr);

  const double ux =
      estimates != nullptr ? (*estimates)[static_cast<std::size_t>(vm)] : snap.utility[static_cast<std::size_t>(vm)];
  // Measured weights satisfy w_x >= u_i(x) exactly; an estimate can overshoot
  // the measured weight, in which case the remainder clamps to the domain edge.
  double rem = snap.weight[static_cast<std::size_t>(x)] - ux;
  if (rem < 0.0) rem = 0.0;
  const double eta = (cfg.cost_variant == cost::Variant::adaptive_eta && cs != nullptr)
                         ? cost::adaptive_eta(*cs, vm)
                         : cfg.eta;

  dec.target_value = uy * cfg.reg(snap.weight[static_cast<std::size_t>(target)] + uy);
  dec.incumbent_value = eta * ux * cfg.reg(rem);
  dec.accept = dec.target_value <= dec.incumbent_value;
  dec.reason = dec.accept ? Reject::none : Reject::insufficient_gain;
  return dec;
}

class Runner {
 public:
  Runner(const Instance& inst, const ProtocolConfig& cfg, Outcome initial)
      : inst_(inst), base_tau_(inst.tau), cfg_(cfg), out_(std::move(initial)) {
    if (!(cfg_.eta > 0.0 && cfg_.eta <= 1.0)) throw std::invalid_argument("eta must lie in (0, 1]");
    if (!(cfg_.jitter >= 0.0 && cfg_.jitter < 1.0)) {
      throw std::invalid_argument("jitter band must lie in [0, 1)");
    }
    require_feasible(inst_, out_);
    snap_.rebuild(inst_, out_, cfg_.reg);
    if (cfg_.controlled) estimates_ = snap_.utility;
    if (cfg_.cost_variant != cost::Variant::none) {
      cost_ = cost::State::init(inst_.num_vms, cfg_.cost);
    }
    trace_.initial_cost = snap_.social;
  }

  void inject_estimates(UtilityState state) {
    if (state.estimate.size() != static_cast<std::size_t>(inst_.num_vms)) {
      throw std::invalid_argument("estimate length must match VM count");
    }
    estimates_ = std::move(state.estimate);
    rounds_done_ = state.rounds;
  }

  UtilityState utility_state() const { return {estimates_, rounds_done_}; }
  const Outcome& outcome() const { return out_; }
  const Trace& trace() const { return trace_; }

  // One full round: optional jitter refresh, then every VM in a fresh random
  // permutation tests one uniformly drawn alternative target and migrates
  // immediately on acceptance. Returns the number of migrations.
  int do_round(Rng& rng) {
    const int k = ++rounds_done_;
    if (cfg_.jitter > 0.0) {
      apply_jitter(rng);
      snap_.rebuild(inst_, out_, cfg_.reg);
    }
    const std::vector<int> perm = rng.permutation(inst_.num_vms);
    std::vector<std::uint8_t> migrated(static_cast<std::size_t>(inst_.num_vms), 0);
    std::vector<double> penalties;
    if (cfg_.cost_variant == cost::Variant::penalty) penalties = all_costs();

    int count = 0;
    for (int vm : perm) {
      const auto& set = inst_.strategy_sets[static_cast<std::size_t>(vm)];
      const int x = out_.assignment[static_cast<std::size_t>(vm)];
      alts_.clear();
      for (int y : set) {
        if (y != x) alts_.push_back(y);
      }
      if (!alts_.empty()) {
        const int y = alts_[static_cast<std::size_t>(rng.index(static_cast<int>(alts_.size())))];
        const MigrationDecision dec =
            test_move(inst_, out_, snap_, cfg_, cost_ptr(), estimate_ptr(),
                      penalties.empty() ? nullptr : &penalties, vm, y);
        if (cfg_.cost_variant == cost::Variant::penalty) {
          trace_.cost_messages +=
              static_cast<std::int64_t>(inst_.peers[static_cast<std::size_t>(vm)].size());
        }
        if (dec.accept) {
          out_.assignment[static_cast<std::size_t>(vm)] = y;
          snap_.rebuild(inst_, out_, cfg_.reg);
          migrated[static_cast<std::size_t>(vm)] = 1;
          ++count;
          trace_.migrations.push_back(
              {k, vm, x, y, snap_.social, cost_ ? cost_->R[static_cast<std::size_t>(vm)] : 0.0});
        }
      }
      if (cfg_.controlled) update_estimate(vm, k);
    }

    if (cost_) {
      cost::update_recency(*cost_, migrated);
      for (int i = 0; i < inst_.num_vms; ++i) {
        const double r = cost_->R[static_cast<std::size_t>(i)];
        trace_.min_recency = std::min(trace_.min_recency, r);
        trace_.max_recency = std::max(trace_.max_recency, r);
        if (cfg_.cost_variant == cost::Variant::adaptive_eta) {
          const double e = cost::adaptive_eta(*cost_, i);
          trace_.min_adaptive_eta = std::min(trace_.min_adaptive_eta, e);
          trace_.max_adaptive_eta = std::max(trace_.max_adaptive_eta, e);
        }
      }
    }
    trace_.rounds.push_back({k, count, snap_.social, snap_.weight});
    return count;
  }

  // Full deviation scan under the engine's current state (estimates, recency,
  // perturbed latencies). Equilibrium iff no (vm, target) test accepts.
  bool scan(EquilibriumScan* found = nullptr) {
    std::vector<double> penalties;
    if (cfg_.cost_variant == cost::Variant::penalty) penalties = all_costs();
    for (int vm = 0; vm < inst_.num_vms; ++vm) {
      const int x = out_.assignment[static_cast<std::size_t>(vm)];
      for (int y : inst_.strategy_sets[static_cast<std::size_t>(vm)]) {
        if (y == x) continue;
        const MigrationDecision dec =
            test_move(inst_, out_, snap_, cfg_, cost_ptr(), estimate_ptr(),
                      penalties.empty() ? nullptr : &penalties, vm, y);
        if (dec.accept) {
          if (found != nullptr) *found = {false, vm, y};
          return false;
        }
      }
    }
    if (found != nullptr) *found = {true, -1, -1};
    return true;
  }

  Trace run(Rng& rng) {
    const int cap = cfg_.max_rounds > 0
                        ? cfg_.max_rounds
                        : std::max(1, 10 * inst_.num_vms * inst_.num_clouds);
    trace_.terminal = Terminal::round_cap;
    while (rounds_done_ < cap) {
      const int moved = do_round(rng);
      if (moved == 0 && scan()) {
        trace_.terminal = Terminal::equilibrium;
        break;
      }
    }
    trace_.rounds_elapsed = rounds_done_;
    trace_.final_cost = snap_.social;
    trace_.final_outcome = out_;
    return trace_;
  }

 private:
  const cost::State* cost_ptr() const { return cost_ ? &*cost_ : nullptr; }
  const std::vector<double>* estimate_ptr() const {
    return cfg_.controlled ? &estimates_ : nullptr;
  }

  std::vector<double> all_costs() const {
    std::vector<double> c(static_cast<std::size_t>(inst_.num_vms), 0.0);
    if (cost_) {
      for (int i = 0; i < inst_.num_vms; ++i) c[static_cast<std::size_t>(i)] = cost::migration_cost(*cost_, i);
    }
    return c;
  }

  // Fresh multiplicative perturbation of every latency from its base value,
  // symmetric pairs drawn once in (x, y) x < y order.
  void apply_jitter(Rng& rng) {
    for (int x = 0; x < inst_.num_clouds; ++x) {
      for (int y = x + 1; y < inst_.num_clouds; ++y) {
        const double base = base_tau_[static_cast<std::size_t>(x) * inst_.num_clouds + y];
        const double factor = 1.0 + cfg_.jitter * (2.0 * rng.uniform01() - 1.0);
        const double t = std::max(0.0, base * factor);
        inst_.tau[static_cast<std::size_t>(x) * inst_.num_clouds + y] = t;
        inst_.tau[static_cast<std::size_t>(y) * inst_.num_clouds + x] = t;
      }
    }
  }

  void update_estimate(int vm, int k) {
    const double bk = cfg_.step.at(k);
    const std::size_t i = static_cast<std::size_t>(vm);
    double inc;
    if (cfg_.update_rule == UpdateRule::additive) {
      const int x = out_.assignment[i];
      inc = bk * cfg_.reg(snap_.weight[static_cast<std::size_t>(x)]);
    } else {
      inc = bk * (snap_.utility[i] - estimates_[i]);
    }
    estimates_[i] += inc;
    const double mag = std::abs(inc);
    trace_.max_estimate_increment = std::max(trace_.max_estimate_increment, mag);
    trace_.max_increment_step_ratio = std::max(trace_.max_increment_step_ratio, mag / bk);
  }

  Instance inst_;  // private copy; tau is mutated in place when jitter is on
  std::vector<double> base_tau_;
  ProtocolConfig cfg_;
  Outcome out_;
  Snapshot snap_;
  std::vector<double> estimates_;
  std::optional<cost::State> cost_;
  std::vector<int> alts_;
  Trace trace_;
  int rounds_done_ = 0;
};

}  // namespace detail

// Single migration test evaluated from scratch against the current outcome.
// Stateful quantities (estimates, recency) read as their initial values here;
// run() threads real state through the same predicate.
inline MigrationDecision migration_test(const Instance& inst, const Outcome& out,
                                        const ProtocolConfig& cfg, int vm, int target) {
  require_feasible(inst, out);
  detail::Snapshot snap;
  snap.rebuild(inst, out, cfg.reg);
  return detail::test_move(inst, out, snap, cfg, nullptr, nullptr, nullptr, vm, target);
}

struct RoundResult {
  Outcome outcome;
  std::vector<Migration> migrations;
};

// One round of the plain protocol.
inline RoundResult round(const Instance& inst, const Outcome& out, const ProtocolConfig& cfg,
                         Rng& rng) {
  detail::Runner r(inst, cfg, out);
  r.do_round(rng);
  return {r.outcome(), r.trace().migrations};
}

struct ControlledRoundResult {
  Outcome outcome;
  UtilityState state;
  std::vector<Migration> migrations;
};

// One round of the measurement-driven variant. An empty estimate vector means
// "initialize from measured utilities at the given outcome".
inline ControlledRoundResult controlled_round(const Instance& inst, const Outcome& out,
                                              ProtocolConfig cfg, UtilityState state, Rng& rng) {
  cfg.controlled = true;
  detail::Runner r(inst, cfg, out);
  if (!state.estimate.empty()) r.inject_estimates(std::move(state));
  r.do_round(rng);
  return {r.outcome(), r.utility_state(), r.trace().migrations};
}

// Full deviation scan with fresh measured utilities: no VM has an acceptable
// migration iff the outcome is an eta-equilibrium.
inline EquilibriumScan is_eta_nash(const Instance& inst, const Outcome& out,
                                   const ProtocolConfig& cfg) {
  detail::Runner r(inst, cfg, out);
  EquilibriumScan s;
  r.scan(&s);
  return s;
}

// Runs rounds until a migration-free round survives the full deviation scan,
// or the round cap is reached.
inline Trace run(const Instance& inst, const Outcome& initial, const ProtocolConfig& cfg,
                 Rng& rng) {
  detail::Runner r(inst, cfg, initial);
  return r.run(rng);
}

}  // namespace flock
