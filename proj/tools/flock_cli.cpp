// Command-line front end: instance generation, single protocol runs, the
// brute-force oracle, the regularization condition checker, and one
// subcommand per experiment kind. Every run is pinned by an explicit seed.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flock/flock.hpp"

namespace {

using namespace flock;

cost::Variant variant_from_name(const std::string& s) {
  if (s == "none") return cost::Variant::none;
  if (s == "penalty") return cost::Variant::penalty;
  if (s == "adaptive_eta") return cost::Variant::adaptive_eta;
  throw std::invalid_argument("unknown cost variant: " + s);
}

UpdateRule rule_from_name(const std::string& s) {
  if (s == "additive") return UpdateRule::additive;
  if (s == "innovation") return UpdateRule::innovation;
  throw std::invalid_argument("unknown update rule: " + s);
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

// ---- gen ----

struct GenOpts {
  std::string family = "random";
  GenParams p;
  double tau_big = 1e6;
  std::string out;
};

void add_gen(CLI::App& app, GenOpts& o) {
  CLI::App* sub = app.add_subcommand("gen", "Generate an instance document");
  sub->add_option("--family", o.family, "Instance family")
      ->check(CLI::IsMember({"random", "balance", "energy"}))
      ->capture_default_str();
  sub->add_option("-m,--clouds", o.p.num_clouds, "Cloud count")->capture_default_str();
  sub->add_option("-n,--vms", o.p.num_vms, "VM count")->capture_default_str();
  sub->add_option("--tau-min", o.p.tau_range[0], "Latency range lower end")->capture_default_str();
  sub->add_option("--tau-max", o.p.tau_range[1], "Latency range upper end")->capture_default_str();
  sub->add_option("--gamma-min", o.p.gamma_range[0], "Capacity range lower end")->capture_default_str();
  sub->add_option("--gamma-max", o.p.gamma_range[1], "Capacity range upper end")->capture_default_str();
  sub->add_option("--d-min", o.p.d_range[0], "Demand range lower end")->capture_default_str();
  sub->add_option("--d-max", o.p.d_range[1], "Demand range upper end")->capture_default_str();
  sub->add_option("--edge-prob", o.p.edge_prob, "Communication edge probability")->capture_default_str();
  sub->add_option("--mean-degree", o.p.mean_degree,
                  "Expected peer count; overrides --edge-prob when positive")
      ->capture_default_str();
  sub->add_option("--delta", o.p.delta, "Processing delay scale")->capture_default_str();
  sub->add_option("--tau-big", o.tau_big, "Latency plateau of the energy family")
      ->capture_default_str();
  sub->add_option("--seed", o.p.seed, "Generator seed")->capture_default_str();
  sub->add_option("-o,--out", o.out, "Output path (stdout when omitted)");
}

int run_gen(const GenOpts& o) {
  Instance inst;
  if (o.family == "balance") inst = preset_load_balancing(o.p);
  else if (o.family == "energy") inst = preset_energy(o.p, o.tau_big);
  else inst = gen_random_instance(o.p);
  if (o.out.empty()) {
    std::cout << instance_to_json(inst).dump(2) << '\n';
  } else {
    save_instance(inst, o.out);
    std::cerr << "wrote " << o.out << '\n';
  }
  return 0;
}

// ---- run ----

struct RunOpts {
  std::string instance;
  std::uint64_t seed = 1;
  ProtocolConfig proto;
  double a = 9.0;
  std::string update_rule = "additive";
  std::string cost_variant = "none";
  std::vector<int> initial;
  std::string trace_path;
  bool recency = false;
};

void add_run(CLI::App& app, RunOpts& o) {
  CLI::App* sub = app.add_subcommand("run", "Run the migration protocol on an instance");
  sub->add_option("instance", o.instance, "Instance document")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "Seed for initial placement and round order")
      ->capture_default_str();
  sub->add_option("--eta", o.proto.eta, "Acceptance threshold in (0, 1]")->capture_default_str();
  sub->add_option("--a", o.a, "Regularization shift")->capture_default_str();
  sub->add_option("--max-rounds", o.proto.max_rounds, "Round cap (0 = 10 n m)")
      ->capture_default_str();
  sub->add_flag("--controlled,!--no-controlled", o.proto.controlled,
                "Drive the migration test from per-VM utility estimates");
  sub->add_option("--update-rule", o.update_rule, "Estimate update rule")
      ->check(CLI::IsMember({"additive", "innovation"}))
      ->capture_default_str();
  sub->add_option("--b0", o.proto.step.b0, "Step size numerator")->capture_default_str();
  sub->add_option("--exponent", o.proto.step.exponent, "Step size decay exponent")
      ->capture_default_str();
  sub->add_option("--jitter", o.proto.jitter, "Per-round latency perturbation half-width")
      ->capture_default_str();
  sub->add_option("--cost-variant", o.cost_variant, "Migration cost handling")
      ->check(CLI::IsMember({"none", "penalty", "adaptive_eta"}))
      ->capture_default_str();
  sub->add_option("--cost-beta", o.proto.cost.beta, "Recency forgetting factor")
      ->capture_default_str();
  sub->add_option("--cost-coeff", o.proto.cost.coeff, "Migration cost coefficient")
      ->capture_default_str();
  sub->add_option("--initial", o.initial, "Explicit initial assignment (comma separated)")
      ->delimiter(',');
  sub->add_option("--trace", o.trace_path, "Write the migration log CSV here");
  sub->add_flag("--recency", o.recency, "Append the mover recency column to the trace");
}

int run_run(RunOpts o) {
  const Instance inst = load_instance(o.instance);
  o.proto.reg = RegFn(o.a);
  o.proto.update_rule = rule_from_name(o.update_rule);
  o.proto.cost_variant = variant_from_name(o.cost_variant);

  Outcome initial;
  if (!o.initial.empty()) {
    initial.assignment = o.initial;
  } else {
    Rng init_rng(mix_seed(o.seed, 0x200ull));
    initial = initial_assignment(inst, init_rng);
  }
  Rng run_rng(mix_seed(o.seed, 0x300ull));
  const Trace t = run(inst, initial, o.proto, run_rng);

  if (!o.trace_path.empty()) {
    std::ofstream f(o.trace_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + o.trace_path);
    f << trace_to_csv(t, o.recency);
  }

  const EquilibriumScan scan = is_eta_nash(inst, t.final_outcome, o.proto);
  std::cout << "initial_cost=" << format_number(t.initial_cost) << '\n'
            << "final_cost=" << format_number(t.final_cost) << '\n'
            << "rounds=" << t.rounds_elapsed << '\n'
            << "migrations=" << t.migrations.size() << '\n'
            << "terminal=" << (t.terminal == Terminal::equilibrium ? "equilibrium" : "round_cap")
            << '\n'
            << "eta_equilibrium=" << (scan.is_equilibrium ? "true" : "false") << '\n'
            << "assignment=" << join_ints(t.final_outcome.assignment) << '\n';
  if (o.proto.cost_variant != cost::Variant::none) {
    std::cout << "cost_messages=" << t.cost_messages << '\n'
              << "recency_max=" << format_number(t.max_recency) << '\n';
  }
  return 0;
}

// ---- oracle ----

struct OracleOpts {
  std::vector<std::string> instances;
  std::uint64_t seed = 1;
  double eta = 0.99;
  double a = 9.0;
  int max_rounds = 0;
  std::int64_t budget = 10'000'000;
};

void add_oracle(CLI::App& app, OracleOpts& o) {
  CLI::App* sub = app.add_subcommand(
      "oracle", "Brute-force optimum vs protocol equilibrium, one CSV row per instance");
  sub->add_option("instances", o.instances, "Instance documents")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "Seed for initial placement and round order")
      ->capture_default_str();
  sub->add_option("--eta", o.eta, "Protocol acceptance threshold")->capture_default_str();
  sub->add_option("--a", o.a, "Regularization shift")->capture_default_str();
  sub->add_option("--max-rounds", o.max_rounds, "Round cap (0 = 10 n m)")->capture_default_str();
  sub->add_option("--budget", o.budget, "Enumeration budget")->capture_default_str();
}

int run_oracle(const OracleOpts& o) {
  ProtocolConfig proto;
  proto.eta = o.eta;
  proto.reg = RegFn(o.a);
  proto.max_rounds = o.max_rounds;
  std::cout << "instance,optimum_cost,ne_cost,poa\n";
  for (std::size_t k = 0; k < o.instances.size(); ++k) {
    const Instance inst = load_instance(o.instances[k]);
    Rng init_rng(mix_seed(o.seed, 0x200ull + k));
    const Outcome initial = initial_assignment(inst, init_rng);
    Rng run_rng(mix_seed(o.seed, 0x300ull + k));
    const Trace t = run(inst, initial, proto, run_rng);
    const OptimumResult opt = brute_force_optimum(inst, proto.reg, o.budget);
    const double poa = opt.best_cost == 0.0
                           ? (t.final_cost == 0.0 ? 1.0 : std::numeric_limits<double>::infinity())
                           : t.final_cost / opt.best_cost;
    std::cout << o.instances[k] << ',' << format_number(opt.best_cost) << ','
              << format_number(t.final_cost) << ',' << format_number(poa) << '\n';
  }
  return 0;
}

// ---- reg ----

struct RegOpts {
  double a = 9.0;
  double eps = 1e-3;
  double lambda = 0.0;  // 0 means derive from the bracket
  double w_min = 0.0;
  double w_max = 0.0;
  double grid_w_max = 0.0;  // 0 means bracket top, else 100
  int points = 400;
};

void add_reg(CLI::App& app, RegOpts& o) {
  CLI::App* sub = app.add_subcommand(
      "reg", "Check the regularization smoothness condition and report the efficiency bound");
  sub->add_option("--a", o.a, "Regularization shift")->capture_default_str();
  sub->add_option("--eps", o.eps, "Epsilon of the smoothness condition")->capture_default_str();
  sub->add_option("--lambda", o.lambda,
                  "Lambda to check; derived from the bracket when omitted");
  sub->add_option("--w-min", o.w_min, "Weight bracket lower end");
  sub->add_option("--w-max", o.w_max, "Weight bracket upper end");
  sub->add_option("--grid-w-max", o.grid_w_max, "Grid top (defaults to the bracket top)");
  sub->add_option("--points", o.points, "Grid resolution per axis")->capture_default_str();
}

int run_reg(const RegOpts& o) {
  const RegFn f(o.a);
  double lambda = o.lambda;
  if (o.w_min > 0.0 && o.w_max > 0.0) {
    // The closed form degenerates on wide brackets; with an explicit lambda
    // that is informational, not fatal.
    try {
      const double closed = closed_form_lambda(f, o.eps, o.w_min, o.w_max);
      std::cout << "closed_form_lambda=" << format_number(closed) << '\n';
      if (lambda == 0.0) lambda = closed;
    } catch (const InvalidBound& e) {
      if (lambda == 0.0) throw;
      std::cout << "closed_form_lambda=unavailable (" << e.what() << ")\n";
    }
  }
  if (lambda == 0.0) {
    throw std::invalid_argument("give --lambda or a bracket (--w-min and --w-max)");
  }

  ConditionGrid grid;
  grid.points = o.points;
  if (o.grid_w_max > 0.0) grid.w_max = o.grid_w_max;
  else if (o.w_max > 0.0) grid.w_max = o.w_max;
  if (o.w_min > 0.0) grid.floor_frac = o.w_min / grid.w_max;

  const ConditionReport rep = check_condition(f, lambda, o.eps, grid);
  std::cout << "a=" << format_number(o.a) << '\n'
            << "lambda=" << format_number(lambda) << '\n'
            << "eps=" << format_number(o.eps) << '\n'
            << "bound=" << format_number(poa_bound({lambda, o.eps, o.w_min, o.w_max})) << '\n'
            << "condition_holds=" << (rep.holds ? "true" : "false") << '\n'
            << "worst_margin=" << format_number(rep.worst_margin) << '\n'
            << "worst_w=" << format_number(rep.worst_w) << '\n'
            << "worst_w_star=" << format_number(rep.worst_w_star) << '\n';
  return rep.holds ? 0 : 1;
}

// ---- experiment kinds ----

struct ExpOpts {
  std::string config_path;
  std::string out_dir;
  std::string emit;  // "point:trial"
  std::uint64_t seed = 0;
  int trials_min = 0, trials_max = 0;
  bool no_ci = false;
  double confidence = 0.0, rel_half_width = 0.0;
  std::vector<double> sweep;
  std::string sweep_name;
  int clouds = 0, vms = 0;
  double eta = -1.0, a = 0.0, jitter = -1.0;
  int max_rounds = -1;
  double edge_prob = -1.0, mean_degree = -1.0;
  std::int64_t oracle_budget = 0;
  double tau_big = 0.0;
  bool controlled = false;
  std::string update_rule, cost_variant;
  double b0 = 0.0, exponent = -1.0, cost_beta = -1.0, cost_coeff = -1.0;
};

CLI::App* add_experiment(CLI::App& app, ExperimentKind kind, ExpOpts& o) {
  static const std::map<ExperimentKind, std::string> blurb = {
      {ExperimentKind::convergence, "Rounds to equilibrium as the system scales"},
      {ExperimentKind::poa, "Equilibrium cost against the brute-force optimum"},
      {ExperimentKind::balance, "Utilization spread on the load-balancing preset"},
      {ExperimentKind::energy, "Idle clouds on the consolidation preset"},
      {ExperimentKind::dynamics, "Estimate-driven runs under latency jitter"},
      {ExperimentKind::cost, "Migration counts under the cost variants"}};
  CLI::App* sub = app.add_subcommand(kind_name(kind), blurb.at(kind));
  sub->add_option("--config", o.config_path, "Experiment config document (flags win)")
      ->check(CLI::ExistingFile);
  sub->add_option("--out", o.out_dir, "Directory for trials.csv and summary.csv");
  sub->add_option("--emit-instance", o.emit,
                  "Dump one trial's instance as point:trial and exit");
  sub->add_option("--seed", o.seed, "Master seed");
  sub->add_option("--trials-min", o.trials_min, "Minimum trials per sweep point");
  sub->add_option("--trials-max", o.trials_max, "Trial budget per sweep point");
  sub->add_flag("--no-ci", o.no_ci, "Always run exactly the minimum trials");
  sub->add_option("--confidence", o.confidence, "CI confidence level");
  sub->add_option("--rel-half-width", o.rel_half_width, "CI stopping target");
  sub->add_option("--sweep", o.sweep, "Sweep values")->delimiter(',');
  sub->add_option("--sweep-name", o.sweep_name, "Sweep variable");
  sub->add_option("-m,--clouds", o.clouds, "Cloud count");
  sub->add_option("-n,--vms", o.vms, "VM count");
  sub->add_option("--eta", o.eta, "Acceptance threshold");
  sub->add_option("--a", o.a, "Regularization shift");
  sub->add_option("--jitter", o.jitter, "Latency perturbation half-width");
  sub->add_option("--max-rounds", o.max_rounds, "Round cap (0 = 10 n m)");
  sub->add_option("--edge-prob", o.edge_prob, "Communication edge probability");
  sub->add_option("--mean-degree", o.mean_degree, "Expected peer count");
  sub->add_option("--oracle-budget", o.oracle_budget, "Enumeration budget");
  sub->add_option("--tau-big", o.tau_big, "Energy preset latency plateau");
  sub->add_flag("--controlled,!--no-controlled", o.controlled, "Estimate-driven migration tests");
  sub->add_option("--update-rule", o.update_rule, "Estimate update rule")
      ->check(CLI::IsMember({"additive", "innovation"}));
  sub->add_option("--cost-variant", o.cost_variant, "Migration cost handling")
      ->check(CLI::IsMember({"none", "penalty", "adaptive_eta"}));
  sub->add_option("--b0", o.b0, "Step size numerator");
  sub->add_option("--exponent", o.exponent, "Step size decay exponent");
  sub->add_option("--cost-beta", o.cost_beta, "Recency forgetting factor");
  sub->add_option("--cost-coeff", o.cost_coeff, "Migration cost coefficient");
  return sub;
}

int run_experiment_cmd(ExperimentKind kind, const CLI::App* sub, const ExpOpts& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    std::ifstream f(o.config_path);
    if (!f) throw std::runtime_error("cannot read " + o.config_path);
    nlohmann::json j;
    f >> j;
    if (j.contains("kind")) {
      if (kind_from_name(j.at("kind").get<std::string>()) != kind) {
        throw std::invalid_argument("config kind '" + j.at("kind").get<std::string>() +
                                    "' does not match subcommand '" + kind_name(kind) + "'");
      }
    } else {
      j["kind"] = kind_name(kind);
    }
    cfg = config_from_json(j);
  } else {
    cfg = make_default_config(kind);
  }

  const auto given = [&](const std::string& name) { return sub->count(name) > 0; };
  if (given("--seed")) cfg.seed = o.seed;
  if (given("--trials-min")) cfg.trials.min_trials = o.trials_min;
  if (given("--trials-max")) cfg.trials.max_trials = o.trials_max;
  if (given("--no-ci")) cfg.ci.enabled = false;
  if (given("--confidence")) cfg.ci.confidence = o.confidence;
  if (given("--rel-half-width")) cfg.ci.rel_half_width = o.rel_half_width;
  if (given("--sweep")) cfg.sweep_values = o.sweep;
  if (given("--sweep-name")) cfg.sweep_name = o.sweep_name;
  if (given("--clouds")) cfg.gen.num_clouds = o.clouds;
  if (given("--vms")) cfg.gen.num_vms = o.vms;
  if (given("--eta")) cfg.protocol.eta = o.eta;
  if (given("--a")) cfg.protocol.reg = RegFn(o.a);
  if (given("--jitter")) cfg.protocol.jitter = o.jitter;
  if (given("--max-rounds")) cfg.protocol.max_rounds = o.max_rounds;
  if (given("--edge-prob")) cfg.gen.edge_prob = o.edge_prob;
  if (given("--mean-degree")) cfg.gen.mean_degree = o.mean_degree;
  if (given("--oracle-budget")) cfg.oracle_budget = o.oracle_budget;
  if (given("--tau-big")) cfg.tau_big = o.tau_big;
  if (given("--controlled")) cfg.protocol.controlled = o.controlled;
  if (given("--update-rule")) cfg.protocol.update_rule = rule_from_name(o.update_rule);
  if (given("--cost-variant")) cfg.protocol.cost_variant = variant_from_name(o.cost_variant);
  if (given("--b0")) cfg.protocol.step.b0 = o.b0;
  if (given("--exponent")) cfg.protocol.step.exponent = o.exponent;
  if (given("--cost-beta")) cfg.protocol.cost.beta = o.cost_beta;
  if (given("--cost-coeff")) cfg.protocol.cost.coeff = o.cost_coeff;

  if (!o.emit.empty()) {
    const auto colon = o.emit.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("--emit-instance expects point:trial");
    }
    const int point = std::stoi(o.emit.substr(0, colon));
    const int trial = std::stoi(o.emit.substr(colon + 1));
    if (point < 0 || point >= static_cast<int>(cfg.sweep_values.size()) || trial < 0) {
      throw std::invalid_argument("emit target out of range");
    }
    const TrialSetup setup = materialize_trial(cfg, point, trial);
    const std::string dir = o.out_dir.empty() ? "." : o.out_dir;
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/instance_p" + std::to_string(point) + "_t" +
                             std::to_string(trial) + ".json";
    save_instance(setup.inst, path);
    std::cout << "instance=" << path << '\n'
              << "base_seed=" << setup.base_seed << '\n'
              << "initial=" << join_ints(setup.initial.assignment) << '\n';
    return 0;
  }

  const ExperimentReport rep = run_experiment(cfg, o.out_dir);
  std::cout << rep.summary_csv;
  if (kind == ExperimentKind::poa && rep.weight_max_nonzero > 0.0) {
    std::cerr << "nonzero weight bracket: [" << format_number(rep.weight_min_nonzero) << ", "
              << format_number(rep.weight_max_nonzero) << "]\n";
  }
  for (const auto& v : rep.violations) std::cerr << "violation: " << v << '\n';
  return rep.violations.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Greedy VM-migration simulator and analysis toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "flock 0.1.0");

  GenOpts gen_opts;
  add_gen(app, gen_opts);
  RunOpts run_opts;
  add_run(app, run_opts);
  OracleOpts oracle_opts;
  add_oracle(app, oracle_opts);
  RegOpts reg_opts;
  add_reg(app, reg_opts);

  const ExperimentKind kinds[] = {ExperimentKind::convergence, ExperimentKind::poa,
                                  ExperimentKind::balance,     ExperimentKind::energy,
                                  ExperimentKind::dynamics,    ExperimentKind::cost};
  std::map<ExperimentKind, ExpOpts> exp_opts;
  std::map<ExperimentKind, CLI::App*> exp_subs;
  for (ExperimentKind k : kinds) exp_subs[k] = add_experiment(app, k, exp_opts[k]);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("gen")) return run_gen(gen_opts);
    if (app.got_subcommand("run")) return run_run(run_opts);
    if (app.got_subcommand("oracle")) return run_oracle(oracle_opts);
    if (app.got_subcommand("reg")) return run_reg(reg_opts);
    for (ExperimentKind k : kinds) {
      if (app.got_subcommand(kind_name(k))) return run_experiment_cmd(k, exp_subs[k], exp_opts[k]);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
