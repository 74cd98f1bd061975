#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "flock/model.hpp"
#include "flock/protocol.hpp"

namespace flock {

// Shortest decimal form that parses back to the same double. Used everywhere
// numbers hit disk so that emitted files are lossless and reproducible
// byte-for-byte.
inline std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_number(std::int64_t v) { return std::to_string(v); }
inline std::string format_number(std::uint64_t v) { return std::to_string(v); }
inline std::string format_number(int v) { return std::to_string(v); }

// Instance document layout:
//   num_clouds, num_vms, delta   scalars
//   tau_lower                    latencies for pairs (x, y), x > y, row-major
//   gamma                        capacities
//   demand                       positive pairwise entries as [i, j, value], i < j
//   self_demand                  per-VM private demand
//   strategy_sets                per-VM cloud lists, or null for "all clouds"
// Symmetric matrices store each value once, so a round-trip reproduces the
// in-memory instance exactly.
inline nlohmann::json instance_to_json(const Instance& inst) {
  nlohmann::json j;
  j["num_clouds"] = inst.num_clouds;
  j["num_vms"] = inst.num_vms;
  j["delta"] = inst.delta;
  std::vector<double> tl;
  for (int x = 1; x < inst.num_clouds; ++x) {
    for (int y = 0; y < x; ++y) tl.push_back(inst.tau_at(x, y));
  }
  j["tau_lower"] = tl;
  j["gamma"] = inst.gamma;
  nlohmann::json dm = nlohmann::json::array();
  for (int i = 0; i < inst.num_vms; ++i) {
    for (int jv = i + 1; jv < inst.num_vms; ++jv) {
      const double d = inst.demand_at(i, jv);
      if (d != 0.0) dm.push_back({i, jv, d});
    }
  }
  j["demand"] = dm;
  j["self_demand"] = inst.self_demand;
  bool all_full = true;
  for (const auto& set : inst.strategy_sets) {
    if (static_cast<int>(set.size()) != inst.num_clouds) {
      all_full = false;
      break;
    }
  }
  if (all_full) {
    j["strategy_sets"] = nullptr;
  } else {
    j["strategy_sets"] = inst.strategy_sets;
  }
  return j;
}

inline Instance instance_from_json(const nlohmann::json& j) {
  Instance inst;
  inst.num_clouds = j.at("num_clouds").get<int>();
  inst.num_vms = j.at("num_vms").get<int>();
  inst.delta = j.value("delta", 1.0);
  const std::size_t m = inst.num_clouds < 0 ? 0 : static_cast<std::size_t>(inst.num_clouds);
  const std::size_t n = inst.num_vms < 0 ? 0 : static_cast<std::size_t>(inst.num_vms);
  inst.tau.assign(m * m, 0.0);
  const auto tl = j.at("tau_lower").get<std::vector<double>>();
  std::size_t pos = 0;
  for (int x = 1; x < inst.num_clouds; ++x) {
    for (int y = 0; y < x; ++y) {
      if (pos >= tl.size()) throw std::invalid_argument("tau_lower too short");
      inst.tau[static_cast<std::size_t>(x) * inst.num_clouds + y] = tl[pos];
      inst.tau[static_cast<std::size_t>(y) * inst.num_clouds + x] = tl[pos];
      ++pos;
    }
  }
  if (pos != tl.size()) throw std::invalid_argument("tau_lower too long");
  inst.gamma = j.at("gamma").get<std::vector<double>>();
  inst.demand.assign(n * n, 0.0);
  for (const auto& entry : j.at("demand")) {
    const int a = entry.at(0).get<int>();
    const int b = entry.at(1).get<int>();
    const double d = entry.at(2).get<double>();
    if (a < 0 || b < 0 || a >= inst.num_vms || b >= inst.num_vms || a == b) {
      throw std::invalid_argument("demand entry out of range");
    }
    inst.demand[static_cast<std::size_t>(a) * inst.num_vms + b] = d;
    inst.demand[static_cast<std::size_t>(b) * inst.num_vms + a] = d;
  }
  inst.self_demand = j.at("self_demand").get<std::vector<double>>();
  const auto& sets = j.at("strategy_sets");
  if (sets.is_null()) {
    std::vector<int> all(m);
    std::iota(all.begin(), all.end(), 0);
    inst.strategy_sets.assign(n, all);
  } else {
    inst.strategy_sets = sets.get<std::vector<std::vector<int>>>();
  }
  inst.finalize();
  return inst;
}

inline void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << instance_to_json(inst).dump(2) << '\n';
}

inline Instance load_instance(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  f >> j;
  return instance_from_json(j);
}

// Migration log: one row per applied migration plus a terminal summary row
// with vm = -1 carrying the final social cost. The optional recency column
// appends the mover's migration-cost state at decision time.
inline std::string trace_to_csv(const Trace& trace, bool include_recency = false) {
  std::ostringstream os;
  os << "round,vm,from_cloud,to_cloud,social_cost";
  if (include_recency) os << ",mover_recency";
  os << '\n';
  for (const auto& mv : trace.migrations) {
    os << mv.round << ',' << mv.vm << ',' << mv.from_cloud << ',' << mv.to_cloud << ','
       << format_number(mv.cost_after);
    if (include_recency) os << ',' << format_number(mv.mover_recency);
    os << '\n';
  }
  os << trace.rounds_elapsed << ",-1,-1,-1," << format_number(trace.final_cost);
  if (include_recency) os << ',';
  os << '\n';
  return os.str();
}

}  // namespace flock
