#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flock/errors.hpp"
#include "flock/model.hpp"
#include "flock/oracle.hpp"
#include "flock/protocol.hpp"
#include "flock/rng.hpp"
#include "flock/scenarios.hpp"
#include "flock/serialize.hpp"
#include "flock/stats.hpp"

namespace flock {

enum class ExperimentKind { convergence, poa, balance, energy, dynamics, cost };

inline const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::poa: return "poa";
    case ExperimentKind::balance: return "balance";
    case ExperimentKind::energy: return "energy";
    case ExperimentKind::dynamics: return "dynamics";
    case ExperimentKind::cost: return "cost";
  }
  return "?";
}

inline ExperimentKind kind_from_name(const std::string& s) {
  if (s == "convergence") return ExperimentKind::convergence;
  if (s == "poa") return ExperimentKind::poa;
  if (s == "balance") return ExperimentKind::balance;
  if (s == "energy") return ExperimentKind::energy;
  if (s == "dynamics") return ExperimentKind::dynamics;
  if (s == "cost") return ExperimentKind::cost;
  throw std::invalid_argument("unknown experiment kind: " + s);
}

struct TrialBudget {
  int min_trials = 10;
  int max_trials = 2000;
};

struct CiRule {
  bool enabled = true;
  double confidence = 0.95;
  double rel_half_width = 0.1;  // stop once half-width <= this fraction of |mean|
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::convergence;
  GenParams gen;
  ProtocolConfig protocol;
  // Sweep variable: "n", "m", "edge_prob", "mean_degree" regenerate instances
  // per point; "eta", "a", "jitter", "b0", "variant" reuse the same instances
  // across points (paired comparison over one seed set).
  std::string sweep_name = "n";
  std::vector<double> sweep_values{8};
  TrialBudget trials;
  CiRule ci;
  std::uint64_t seed = 1;
  double tau_big = 1e6;          // energy preset latency plateau
  std::int64_t oracle_budget = 10'000'000;
};

struct TrialRow {
  double sweep_value;
  int trial;
  std::uint64_t seed;
  std::string metric;
  double value;
};

struct PointReport {
  double sweep_value = 0.0;
  int trials = 0;
  bool ci_met = false;  // false reports a trial budget exhausted before the CI target
  Summary summary;      // of the kind's primary metric
};

struct ExperimentReport {
  ExperimentKind kind = ExperimentKind::convergence;
  std::string sweep_name;
  std::string primary_metric;
  std::vector<PointReport> points;
  std::vector<TrialRow> rows;
  std::vector<std::string> violations;
  // Aggregated over every brute-force enumeration of the poa kind.
  double weight_min_nonzero = std::numeric_limits<double>::infinity();
  double weight_max_nonzero = 0.0;
  std::string trials_csv;
  std::string summary_csv;
};

inline ExperimentConfig make_default_config(ExperimentKind k) {
  ExperimentConfig c;
  c.kind = k;
  switch (k) {
    case ExperimentKind::convergence:
      // Scaling sweep at fixed expected degree: a fixed edge probability makes
      // total load quadratic in n and starves feasibility long before n = 64.
      c.gen.num_clouds = 37;
      c.gen.mean_degree = 4.0;
      c.protocol.eta = 0.9;
      c.sweep_name = "n";
      c.sweep_values = {8, 16, 32, 64};
      break;
    case ExperimentKind::poa:
      c.gen.num_clouds = 5;
      c.gen.num_vms = 8;
      c.protocol.eta = 0.99;
      c.sweep_name = "eta";
      c.sweep_values = {0.99, 0.9, 0.8, 0.7};
      break;
    case ExperimentKind::balance:
      c.gen.num_clouds = 20;
      c.gen.num_vms = 100;
      c.protocol.eta = 0.9;
      c.sweep_name = "n";
      c.sweep_values = {100};
      break;
    case ExperimentKind::energy:
      c.gen.num_clouds = 20;
      c.gen.num_vms = 8;
      // No hysteresis: a lone VM leaving its cloud pays f(0) = e^{-1/9} on the
      // incumbent side, so any eta below ~(n-2)/((n-1) f(0)) freezes the first
      // singleton merge and consolidation never starts at n >= 8.
      c.protocol.eta = 1.0;
      c.sweep_name = "n";
      c.sweep_values = {4, 6, 8, 10};
      break;
    case ExperimentKind::dynamics:
      c.gen.num_clouds = 5;
      c.gen.num_vms = 8;
      c.protocol.eta = 0.9;
      c.protocol.controlled = true;
      c.protocol.jitter = 0.1;
      c.sweep_name = "jitter";
      c.sweep_values = {0.1};
      break;
    case ExperimentKind::cost:
      c.gen.num_clouds = 5;
      c.gen.num_vms = 8;
      c.protocol.eta = 0.9;
      c.sweep_name = "variant";
      c.sweep_values = {0, 1, 2};
      break;
  }
  return c;
}

inline const char* primary_metric(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::convergence: return "rounds";
    case ExperimentKind::poa: return "poa";
    case ExperimentKind::balance: return "util_sd_eq";
    case ExperimentKind::energy: return "idle_eq";
    case ExperimentKind::dynamics: return "rounds";
    case ExperimentKind::cost: return "migrations_total";
  }
  return "?";
}

namespace detail {

inline bool sweep_affects_generation(const std::string& name) {
  return name == "n" || name == "m" || name == "edge_prob" || name == "mean_degree";
}

inline GenParams apply_sweep_gen(GenParams g, const std::string& name, double v) {
  if (name == "n") g.num_vms = static_cast<int>(v);
  else if (name == "m") g.num_clouds = static_cast<int>(v);
  else if (name == "edge_prob") g.edge_prob = v;
  else if (name == "mean_degree") g.mean_degree = v;
  return g;
}

inline ProtocolConfig apply_sweep_protocol(ProtocolConfig c, const std::string& name, double v) {
  if (name == "eta") c.eta = v;
  else if (name == "a") c.reg = RegFn(v);
  else if (name == "jitter") c.jitter = v;
  else if (name == "b0") c.step.b0 = v;
  else if (name == "variant") {
    const int code = static_cast<int>(v);
    if (code == 0) c.cost_variant = cost::Variant::none;
    else if (code == 1) c.cost_variant = cost::Variant::penalty;
    else if (code == 2) c.cost_variant = cost::Variant::adaptive_eta;
    else throw std::invalid_argument("variant sweep values must be 0, 1 or 2");
  } else if (!sweep_affects_generation(name)) {
    throw std::invalid_argument("unknown sweep variable: " + name);
  }
  return c;
}

// population standard deviation (the spread across the fixed set of clouds)
inline double population_sd(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

inline std::vector<double> utilization(const Instance& inst, const Outcome& out) {
  const std::vector<double> load = cloud_loads(inst, out);
  std::vector<double> u(load.size());
  for (std::size_t x = 0; x < load.size(); ++x) u[x] = load[x] / inst.gamma[x];
  return u;
}

inline int idle_count(const Instance& inst, const Outcome& out) {
  const std::vector<double> load = cloud_loads(inst, out);
  int idle = 0;
  for (double l : load) {
    if (l == 0.0) ++idle;
  }
  return idle;
}

}  // namespace detail

struct TrialSetup {
  Instance inst;
  Outcome initial;
  std::uint64_t base_seed = 0;
};

// Deterministic seed chain: per-point scoping only when the sweep variable
// changes the generated instance, so protocol sweeps replay one instance set
// across every point.
inline std::uint64_t trial_base_seed(const ExperimentConfig& cfg, int point, int trial) {
  const std::uint64_t scope = detail::sweep_affects_generation(cfg.sweep_name)
                                  ? mix_seed(cfg.seed, 0x706full + static_cast<std::uint64_t>(point))
                                  : cfg.seed;
  return mix_seed(scope, 0x7472ull + static_cast<std::uint64_t>(trial));
}

// Infeasible draws are resampled with an attempt-salted seed (bounded), which
// keeps the chain reproducible.
inline TrialSetup materialize_trial(const ExperimentConfig& cfg, int point, int trial) {
  const double v = cfg.sweep_values[static_cast<std::size_t>(point)];
  GenParams g = detail::apply_sweep_gen(cfg.gen, cfg.sweep_name, v);
  const std::uint64_t base = trial_base_seed(cfg, point, trial);
  for (int attempt = 0; attempt < 10; ++attempt) {
    g.seed = mix_seed(base, 0x100ull + static_cast<std::uint64_t>(attempt));
    Instance inst;
    switch (cfg.kind) {
      case ExperimentKind::balance: inst = preset_load_balancing(g); break;
      case ExperimentKind::energy: inst = preset_energy(g, cfg.tau_big); break;
      default: inst = gen_random_instance(g); break;
    }
    Rng init_rng(mix_seed(base, 0x200ull + static_cast<std::uint64_t>(attempt)));
    try {
      Outcome initial = initial_assignment(inst, init_rng);
      return {std::move(inst), std::move(initial), base};
    } catch (const NoFeasibleAssignment&) {
      continue;
    }
  }
  throw NoFeasibleAssignment("no feasible instance within the resample budget at sweep point " +
                             std::to_string(point) + ", trial " + std::to_string(trial));
}

namespace detail {

struct TrialCache {
  std::map<int, TrialSetup> setups;
  std::map<int, OptimumResult> optima;
};

// No accepted migration may raise the social cost under the plain protocol.
inline void check_monotone(const Trace& t, double sweep_value, int trial,
                           std::vector<std::string>& violations) {
  double prev = t.initial_cost;
  for (const auto& mv : t.migrations) {
    if (mv.cost_after - prev > 1e-9) {
      std::ostringstream os;
      os << "social cost rose by " << (mv.cost_after - prev) << " at sweep " << sweep_value
         << " trial " << trial << " round " << mv.round;
      violations.push_back(os.str());
    }
    prev = mv.cost_after;
  }
}

inline std::vector<std::pair<std::string, double>> run_trial(
    const ExperimentConfig& cfg, const ProtocolConfig& proto, double sweep_value, int point,
    int trial, TrialCache* cache, ExperimentReport& rep) {
  const bool cacheable = cache != nullptr && !sweep_affects_generation(cfg.sweep_name);
  TrialSetup local;
  const TrialSetup* setup = nullptr;
  if (cacheable) {
    auto it = cache->setups.find(trial);
    if (it == cache->setups.end()) {
      it = cache->setups.emplace(trial, materialize_trial(cfg, point, trial)).first;
    }
    setup = &it->second;
  } else {
    local = materialize_trial(cfg, point, trial);
    setup = &local;
  }
  const Instance& inst = setup->inst;

  Rng run_rng(mix_seed(setup->base_seed, 0x300ull));
  const Trace t = run(inst, setup->initial, proto, run_rng);
  const bool plain = proto.jitter == 0.0 && !proto.controlled &&
                     proto.cost_variant == cost::Variant::none;
  if (plain) check_monotone(t, sweep_value, trial, rep.violations);

  std::vector<std::pair<std::string, double>> m;
  const double rounds = static_cast<double>(t.rounds_elapsed);
  const double terminal_eq = t.terminal == Terminal::equilibrium ? 1.0 : 0.0;
  switch (cfg.kind) {
    case ExperimentKind::convergence: {
      m = {{"rounds", rounds},
           {"terminal_equilibrium", terminal_eq},
           {"migrations", static_cast<double>(t.migrations.size())}};
      break;
    }
    case ExperimentKind::poa: {
      const OptimumResult* opt = nullptr;
      OptimumResult local_opt;
      // The optimum depends on the regularization, so an "a" sweep cannot
      // share it across points even though the instances are shared.
      const bool cacheable_opt = cacheable && cfg.sweep_name != "a";
      if (cacheable_opt) {
        auto it = cache->optima.find(trial);
        if (it == cache->optima.end()) {
          it = cache->optima.emplace(trial, brute_force_optimum(inst, proto.reg, cfg.oracle_budget))
                   .first;
        }
        opt = &it->second;
      } else {
        local_opt = brute_force_optimum(inst, proto.reg, cfg.oracle_budget);
        opt = &local_opt;
      }
      double poa;
      if (opt->best_cost == 0.0) {
        poa = t.final_cost == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
      } else {
        poa = t.final_cost / opt->best_cost;
      }
      if (!(poa >= 1.0 - 1e-9)) {
        std::ostringstream os;
        os << "PoA " << poa << " below 1 at sweep " << sweep_value << " trial " << trial;
        rep.violations.push_back(os.str());
      }
      if (opt->weight_max_nonzero > 0.0) {
        rep.weight_min_nonzero = std::min(rep.weight_min_nonzero, opt->weight_min_nonzero);
        rep.weight_max_nonzero = std::max(rep.weight_max_nonzero, opt->weight_max_nonzero);
      }
      const std::vector<double> w = cloud_weights(inst, t.final_outcome);
      double ne_sum = 0.0;
      for (double wx : w) ne_sum += wx;
      m = {{"poa", poa},
           {"ne_cost", t.final_cost},
           {"opt_cost", opt->best_cost},
           {"ne_sum_utility", ne_sum},
           {"opt_sum_utility", opt->best_sum_utility},
           {"rounds", rounds}};
      break;
    }
    case ExperimentKind::balance: {
      const std::vector<double> u0 = utilization(inst, setup->initial);
      const std::vector<double> u1 = utilization(inst, t.final_outcome);
      const std::vector<double> ideal = ideal_balanced_utilization(inst);
      const double sd0 = population_sd(u0);
      const double sd1 = population_sd(u1);
      double dev = 0.0;
      for (std::size_t x = 0; x < u1.size(); ++x) dev = std::max(dev, std::abs(u1[x] - ideal[x]));
      if (sd1 > sd0) {
        std::ostringstream os;
        os << "utilization spread grew from " << sd0 << " to " << sd1 << " at sweep "
           << sweep_value << " trial " << trial;
        rep.violations.push_back(os.str());
      }
      m = {{"util_sd_eq", sd1}, {"util_sd_init", sd0}, {"util_dev_max", dev}, {"rounds", rounds}};
      break;
    }
    case ExperimentKind::energy: {
      const int idle0 = idle_count(inst, setup->initial);
      const int idle1 = idle_count(inst, t.final_outcome);
      const IdleBound ideal = ideal_idle_clouds(inst);
      if (idle1 < idle0) {
        std::ostringstream os;
        os << "idle clouds fell from " << idle0 << " to " << idle1 << " at sweep " << sweep_value
           << " trial " << trial;
        rep.violations.push_back(os.str());
      }
      m = {{"idle_eq", static_cast<double>(idle1)},
           {"idle_init", static_cast<double>(idle0)},
           {"idle_ideal", static_cast<double>(ideal.idle)},
           {"ideal_exact", ideal.exact ? 1.0 : 0.0},
           {"rounds", rounds}};
      break;
    }
    case ExperimentKind::dynamics: {
      m = {{"rounds", rounds},
           {"terminal_equilibrium", terminal_eq},
           {"max_increment_step_ratio", t.max_increment_step_ratio},
           {"migrations", static_cast<double>(t.migrations.size())}};
      break;
    }
    case ExperimentKind::cost: {
      const int half = (t.rounds_elapsed + 1) / 2;
      double first = 0.0;
      double second = 0.0;
      for (const auto& mv : t.migrations) {
        if (mv.round <= half) first += 1.0;
        else second += 1.0;
      }
      m = {{"migrations_total", first + second},
           {"migrations_first_half", first},
           {"migrations_second_half", second},
           {"rounds", rounds},
           {"cost_messages", static_cast<double>(t.cost_messages)}};
      break;
    }
  }
  return m;
}

}  // namespace detail

// Trial farm with confidence-interval stopping. Per sweep point, trials run in
// index order until the Student-t half-width of the primary metric drops to
// the target fraction of the mean (never before min_trials, never past
// max_trials). Everything downstream of the master seed is deterministic, so
// repeated runs emit byte-identical CSVs.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                       const std::string& out_dir = "") {
  if (cfg.sweep_values.empty()) throw std::invalid_argument("sweep values must be non-empty");
  if (cfg.trials.min_trials < 2 || cfg.trials.max_trials < cfg.trials.min_trials) {
    throw std::invalid_argument("bad trial budget");
  }
  if (!(cfg.ci.confidence > 0.0 && cfg.ci.confidence < 1.0) || !(cfg.ci.rel_half_width > 0.0)) {
    throw std::invalid_argument("bad CI rule");
  }

  ExperimentReport rep;
  rep.kind = cfg.kind;
  rep.sweep_name = cfg.sweep_name;
  rep.primary_metric = primary_metric(cfg.kind);
  detail::TrialCache cache;

  for (int point = 0; point < static_cast<int>(cfg.sweep_values.size()); ++point) {
    const double v = cfg.sweep_values[static_cast<std::size_t>(point)];
    const ProtocolConfig proto = detail::apply_sweep_protocol(cfg.protocol, cfg.sweep_name, v);
    std::vector<double> primary;
    PointReport pr;
    pr.sweep_value = v;
    for (int trial = 0; trial < cfg.trials.max_trials; ++trial) {
      const auto metrics = detail::run_trial(cfg, proto, v, point, trial, &cache, rep);
      const std::uint64_t base = trial_base_seed(cfg, point, trial);
      for (const auto& [name, value] : metrics) {
        rep.rows.push_back({v, trial, base, name, value});
      }
      primary.push_back(metrics.front().second);
      pr.trials = trial + 1;
      if (pr.trials >= cfg.trials.min_trials) {
        const Summary s = summarize(primary, cfg.ci.confidence);
        const bool met = s.half_width <= cfg.ci.rel_half_width * std::abs(s.mean) ||
                         (s.mean == 0.0 && s.half_width == 0.0);
        if (!cfg.ci.enabled || met) {
          pr.ci_met = met;
          break;
        }
      }
    }
    pr.summary = summarize(primary, cfg.ci.confidence);
    if (!cfg.ci.enabled) pr.ci_met = true;
    rep.points.push_back(std::move(pr));
  }

  // trials.csv: every metric of every trial; summary.csv: the primary metric
  // per sweep point.
  std::ostringstream tcsv;
  tcsv << "experiment,sweep_value,trial,seed,metric,value\n";
  for (const auto& r : rep.rows) {
    tcsv << kind_name(cfg.kind) << ',' << format_number(r.sweep_value) << ',' << r.trial << ','
         << r.seed << ',' << r.metric << ',' << format_number(r.value) << '\n';
  }
  rep.trials_csv = tcsv.str();

  std::ostringstream scsv;
  scsv << "experiment,sweep_value,n,mean,sd,ci_half_width,min,q25,q50,q75,max\n";
  for (const auto& p : rep.points) {
    const Summary& s = p.summary;
    scsv << kind_name(cfg.kind) << ',' << format_number(p.sweep_value) << ',' << s.n << ','
         << format_number(s.mean) << ',' << format_number(s.sd) << ','
         << format_number(s.half_width) << ',' << format_number(s.min) << ','
         << format_number(s.q25) << ',' << format_number(s.q50) << ',' << format_number(s.q75)
         << ',' << format_number(s.max) << '\n';
  }
  rep.summary_csv = scsv.str();

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream tf(out_dir + "/trials.csv", std::ios::binary);
    tf << rep.trials_csv;
    std::ofstream sf(out_dir + "/summary.csv", std::ios::binary);
    sf << rep.summary_csv;
    if (!tf || !sf) throw std::runtime_error("cannot write CSV outputs to " + out_dir);
  }
  return rep;
}

// Experiment config document: every field optional on top of the kind's
// defaults. See the README for the schema.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c = make_default_config(kind_from_name(j.at("kind").get<std::string>()));
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("tau_big")) c.tau_big = j.at("tau_big").get<double>();
  if (j.contains("oracle_budget")) c.oracle_budget = j.at("oracle_budget").get<std::int64_t>();
  if (j.contains("gen")) {
    const auto& g = j.at("gen");
    if (g.contains("num_clouds")) c.gen.num_clouds = g.at("num_clouds").get<int>();
    if (g.contains("num_vms")) c.gen.num_vms = g.at("num_vms").get<int>();
    if (g.contains("tau_range")) c.gen.tau_range = g.at("tau_range").get<std::array<double, 2>>();
    if (g.contains("gamma_range")) c.gen.gamma_range = g.at("gamma_range").get<std::array<double, 2>>();
    if (g.contains("d_range")) c.gen.d_range = g.at("d_range").get<std::array<double, 2>>();
    if (g.contains("edge_prob")) c.gen.edge_prob = g.at("edge_prob").get<double>();
    if (g.contains("mean_degree")) c.gen.mean_degree = g.at("mean_degree").get<double>();
    if (g.contains("delta")) c.gen.delta = g.at("delta").get<double>();
  }
  if (j.contains("protocol")) {
    const auto& p = j.at("protocol");
    if (p.contains("eta")) c.protocol.eta = p.at("eta").get<double>();
    if (p.contains("a")) c.protocol.reg = RegFn(p.at("a").get<double>());
    if (p.contains("max_rounds")) c.protocol.max_rounds = p.at("max_rounds").get<int>();
    if (p.contains("controlled")) c.protocol.controlled = p.at("controlled").get<bool>();
    if (p.contains("step_b0")) c.protocol.step.b0 = p.at("step_b0").get<double>();
    if (p.contains("step_exponent")) c.protocol.step.exponent = p.at("step_exponent").get<double>();
    if (p.contains("update_rule")) {
      const std::string r = p.at("update_rule").get<std::string>();
      if (r == "additive") c.protocol.update_rule = UpdateRule::additive;
      else if (r == "innovation") c.protocol.update_rule = UpdateRule::innovation;
      else throw std::invalid_argument("unknown update rule: " + r);
    }
    if (p.contains("jitter")) c.protocol.jitter = p.at("jitter").get<double>();
    if (p.contains("cost_variant")) {
      const std::string s = p.at("cost_variant").get<std::string>();
      if (s == "none") c.protocol.cost_variant = cost::Variant::none;
      else if (s == "penalty") c.protocol.cost_variant = cost::Variant::penalty;
      else if (s == "adaptive_eta") c.protocol.cost_variant = cost::Variant::adaptive_eta;
      else throw std::invalid_argument("unknown cost variant: " + s);
    }
    if (p.contains("cost_beta")) c.protocol.cost.beta = p.at("cost_beta").get<double>();
    if (p.contains("cost_coeff")) c.protocol.cost.coeff = p.at("cost_coeff").get<double>();
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    if (s.contains("name")) c.sweep_name = s.at("name").get<std::string>();
    if (s.contains("values")) c.sweep_values = s.at("values").get<std::vector<double>>();
  }
  if (j.contains("trials")) {
    const auto& t = j.at("trials");
    if (t.contains("min")) c.trials.min_trials = t.at("min").get<int>();
    if (t.contains("max")) c.trials.max_trials = t.at("max").get<int>();
  }
  if (j.contains("ci")) {
    const auto& ci = j.at("ci");
    if (ci.contains("enabled")) c.ci.enabled = ci.at("enabled").get<bool>();
    if (ci.contains("confidence")) c.ci.confidence = ci.at("confidence").get<double>();
    if (ci.contains("rel_half_width")) c.ci.rel_half_width = ci.at("rel_half_width").get<double>();
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  f >> j;
  return config_from_json(j);
}

}  // namespace flock
